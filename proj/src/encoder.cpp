#include "mep/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

namespace mep {
namespace {

DenseLayer make_layer(std::mt19937_64& rng, std::size_t out, std::size_t in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  // Explicit bit mapping so weights do not depend on the standard library's
  // distribution implementation.
  const auto uniform = [&] {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return -bound + 2.0 * bound * u;
  };
  DenseLayer layer{Matrix(out, in), std::vector<double>(out)};
  for (double& w : layer.weights.flat()) w = uniform();
  for (double& b : layer.bias) b = uniform();
  return layer;
}

// out[m, o] = act(sum_i in[m, i] * W[o, i] + b[o])
Matrix dense_tanh(const Matrix& in, const DenseLayer& layer) {
  const std::size_t out_dim = layer.weights.rows();
  Matrix out(in.rows(), out_dim);
  for (std::size_t m = 0; m < in.rows(); ++m) {
    const auto x = in.row(m);
    auto y = out.row(m);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const auto w = layer.weights.row(o);
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
      y[o] = std::tanh(acc);
    }
  }
  return out;
}

// Back through y = tanh(x W^T + b): returns dL/dx given dL/dy and y.
Matrix dense_tanh_backward(const Matrix& grad_out, const Matrix& activations, const DenseLayer& layer) {
  const std::size_t in_dim = layer.weights.cols();
  Matrix grad_in(grad_out.rows(), in_dim);
  for (std::size_t m = 0; m < grad_out.rows(); ++m) {
    const auto g = grad_out.row(m);
    const auto a = activations.row(m);
    auto dx = grad_in.row(m);
    for (std::size_t o = 0; o < g.size(); ++o) {
      const double pre = g[o] * (1.0 - a[o] * a[o]);
      if (pre == 0.0) continue;
      const auto w = layer.weights.row(o);
      for (std::size_t i = 0; i < in_dim; ++i) dx[i] += pre * w[i];
    }
  }
  return grad_in;
}

}  // namespace

EncoderState::EncoderState(std::uint64_t seed, std::size_t input_channels) : seed_(seed) {
  std::mt19937_64 rng(seed);
  frame1_ = make_layer(rng, kHidden, input_channels);
  frame2_ = make_layer(rng, kHidden, kHidden);
  projection_ = make_layer(rng, kEmbedding, 2 * kHidden);
}

std::uint64_t EncoderState::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&](std::span<const double> values) {
    for (double v : values) {
      unsigned char bytes[sizeof v];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
      }
    }
  };
  for (const DenseLayer* layer : {&frame1_, &frame2_, &projection_}) {
    mix(layer->weights.flat());
    mix(layer->bias);
  }
  return h;
}

ForwardTrace forward_trace(const EncoderState& enc, const Matrix& log_mel) {
  const std::size_t frames = log_mel.rows();
  if (frames < 2) {
    throw Error(ErrorCode::kTooFewFrames, "statistics pooling needs at least 2 frames, got " +
                                              std::to_string(frames));
  }
  if (log_mel.cols() != enc.input_channels()) {
    throw Error(ErrorCode::kShapeMismatch, "log-mel channels do not match the encoder input");
  }

  ForwardTrace t;
  t.hidden1 = dense_tanh(log_mel, enc.frame_layer1());
  t.hidden2 = dense_tanh(t.hidden1, enc.frame_layer2());

  const std::size_t h = EncoderState::kHidden;
  const double inv_frames = 1.0 / static_cast<double>(frames);
  t.mean.assign(h, 0.0);
  t.stddev.assign(h, 0.0);
  for (std::size_t m = 0; m < frames; ++m) {
    const auto row = t.hidden2.row(m);
    for (std::size_t j = 0; j < h; ++j) t.mean[j] += row[j];
  }
  for (double& v : t.mean) v *= inv_frames;
  for (std::size_t m = 0; m < frames; ++m) {
    const auto row = t.hidden2.row(m);
    for (std::size_t j = 0; j < h; ++j) {
      const double d = row[j] - t.mean[j];
      t.stddev[j] += d * d;
    }
  }
  for (double& v : t.stddev) v = std::sqrt(v * inv_frames + EncoderState::kVarianceFloor);

  const auto& proj = enc.projection();
  t.projected.assign(EncoderState::kEmbedding, 0.0);
  for (std::size_t o = 0; o < EncoderState::kEmbedding; ++o) {
    const auto w = proj.weights.row(o);
    double acc = proj.bias[o];
    for (std::size_t j = 0; j < h; ++j) acc += w[j] * t.mean[j];
    for (std::size_t j = 0; j < h; ++j) acc += w[h + j] * t.stddev[j];
    t.projected[o] = acc;
  }

  double sq = 0.0;
  for (double v : t.projected) sq += v * v;
  t.norm = std::sqrt(sq);
  if (!(t.norm > 0.0) || !std::isfinite(t.norm)) {
    throw Error(ErrorCode::kDegenerateEmbedding, "projected embedding has zero or non-finite norm");
  }
  t.embedding.resize(t.projected.size());
  for (std::size_t o = 0; o < t.projected.size(); ++o) t.embedding[o] = t.projected[o] / t.norm;
  return t;
}

Embedding forward(const EncoderState& enc, const Matrix& log_mel) {
  return forward_trace(enc, log_mel).embedding;
}

Embedding forward(const EncoderState& enc, const MelFeatures& features) {
  return forward(enc, features.log_mel);
}

Embedding embed(const EncoderState& enc, const Matrix& energy, const MelFilterbank& fb) {
  return forward(enc, mel_apply(energy, fb).log_mel);
}

Embedding normalize(std::span<const double> y) {
  double sq = 0.0;
  for (double v : y) sq += v * v;
  const double n = std::sqrt(sq);
  if (!(n > 0.0)) throw Error(ErrorCode::kDegenerateEmbedding, "cannot normalize a zero vector");
  Embedding out(y.begin(), y.end());
  for (double& v : out) v /= n;
  return out;
}

double loss(std::span<const double> e, std::span<const double> y) {
  if (e.size() != y.size()) throw Error(ErrorCode::kShapeMismatch, "embedding dimensions differ");
  double dot = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) dot += e[i] * y[i];
  return std::clamp(1.0 - dot, 0.0, 2.0);
}

Matrix grad_log_mel(const EncoderState& enc, const ForwardTrace& t, std::span<const double> y) {
  if (y.size() != EncoderState::kEmbedding) {
    throw Error(ErrorCode::kShapeMismatch, "target embedding has the wrong dimension");
  }
  const std::size_t h = EncoderState::kHidden;
  const std::size_t d = EncoderState::kEmbedding;

  // L = 1 - e.y with e = z / |z|  =>  dL/dz = -(y - e (e.y)) / |z|
  double ey = 0.0;
  for (std::size_t o = 0; o < d; ++o) ey += t.embedding[o] * y[o];
  std::vector<double> grad_z(d);
  for (std::size_t o = 0; o < d; ++o) grad_z[o] = -(y[o] - t.embedding[o] * ey) / t.norm;

  std::vector<double> grad_mean(h, 0.0), grad_std(h, 0.0);
  const auto& proj = enc.projection();
  for (std::size_t o = 0; o < d; ++o) {
    const auto w = proj.weights.row(o);
    for (std::size_t j = 0; j < h; ++j) {
      grad_mean[j] += grad_z[o] * w[j];
      grad_std[j] += grad_z[o] * w[h + j];
    }
  }

  const std::size_t frames = t.hidden2.rows();
  const double inv_frames = 1.0 / static_cast<double>(frames);
  Matrix grad_h2(frames, h);
  for (std::size_t m = 0; m < frames; ++m) {
    const auto a = t.hidden2.row(m);
    auto g = grad_h2.row(m);
    for (std::size_t j = 0; j < h; ++j) {
      g[j] = inv_frames * (grad_mean[j] + grad_std[j] * (a[j] - t.mean[j]) / t.stddev[j]);
    }
  }

  const Matrix grad_h1 = dense_tanh_backward(grad_h2, t.hidden2, enc.frame_layer2());
  return dense_tanh_backward(grad_h1, t.hidden1, enc.frame_layer1());
}

LossGradient grad_power(const EncoderState& enc, const Matrix& energy, std::span<const double> y,
                        const MelFilterbank& fb) {
  const MelFeatures features = mel_apply(energy, fb);
  const ForwardTrace trace = forward_trace(enc, features.log_mel);
  LossGradient out;
  out.loss = loss(trace.embedding, y);
  out.grad = mel_backward(grad_log_mel(enc, trace, y), features, fb);
  return out;
}

}  // namespace mep
