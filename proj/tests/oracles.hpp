#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "mep/encoder.hpp"
#include "mep/matrix.hpp"
#include "mep/spectral.hpp"

namespace oracle {

class Rand {
 public:
  explicit Rand(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  double normal() { return std::normal_distribution<double>()(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

 private:
  std::mt19937_64 rng_;
};

inline mep::Matrix random_matrix(Rand& r, std::size_t rows, std::size_t cols, double lo, double hi) {
  mep::Matrix m(rows, cols);
  for (double& v : m.flat()) v = r.log_uniform(lo, hi);
  return m;
}

inline mep::WaveBuffer random_wave(Rand& r, std::size_t n) {
  mep::WaveBuffer w;
  w.samples.resize(n);
  for (double& s : w.samples) s = r.uniform(-1.0, 1.0);
  return w;
}

inline std::vector<double> random_unit(Rand& r, std::size_t n) {
  std::vector<double> v(n);
  double sq = 0;
  for (double& x : v) {
    x = r.normal();
    sq += x * x;
  }
  for (double& x : v) x /= std::sqrt(sq);
  return v;
}

/// Central difference of f at x[i] with step 1e-6 * max(x[i], 1).
inline double central_difference(const std::function<double(const mep::Matrix&)>& f, mep::Matrix x, std::size_t i) {
  const double orig = x.flat()[i];
  const double h = 1e-6 * std::max(orig, 1.0);
  x.flat()[i] = orig + h;
  const double fp = f(x);
  x.flat()[i] = orig - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// Straight transcription of the mel front end and encoder.
inline std::vector<double> naive_embedding(const mep::EncoderState& enc, const mep::Matrix& energy,
                                           const mep::MelFilterbank& fb) {
  const mep::Matrix w = fb.dense();
  const std::size_t frames = energy.rows(), channels = w.rows();
  std::vector<std::vector<double>> logmel(frames, std::vector<double>(channels));
  for (std::size_t m = 0; m < frames; ++m)
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0;
      for (std::size_t k = 0; k < energy.cols(); ++k) s += w(c, k) * energy(m, k);
      logmel[m][c] = std::log(std::max(s, fb.config().log_floor));
    }
  const auto layer = [](const mep::DenseLayer& L, const std::vector<double>& in) {
    std::vector<double> out(L.bias);
    for (std::size_t o = 0; o < out.size(); ++o) {
      for (std::size_t i = 0; i < in.size(); ++i) out[o] += L.weights(o, i) * in[i];
    }
    return out;
  };
  std::vector<std::vector<double>> h(frames);
  for (std::size_t m = 0; m < frames; ++m) {
    auto a = layer(enc.frame_layer1(), logmel[m]);
    for (double& v : a) v = std::tanh(v);
    auto b = layer(enc.frame_layer2(), a);
    for (double& v : b) v = std::tanh(v);
    h[m] = b;
  }
  const std::size_t H = h[0].size();
  std::vector<double> pooled(2 * H, 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    double mean = 0;
    for (std::size_t m = 0; m < frames; ++m) mean += h[m][j];
    mean /= static_cast<double>(frames);
    double var = 0;
    for (std::size_t m = 0; m < frames; ++m) var += (h[m][j] - mean) * (h[m][j] - mean);
    var /= static_cast<double>(frames);
    pooled[j] = mean;
    pooled[H + j] = std::sqrt(var + mep::EncoderState::kVarianceFloor);
  }
  auto z = layer(enc.projection(), pooled);
  double n = 0;
  for (double v : z) n += v * v;
  for (double& v : z) v /= std::sqrt(n);
  return z;
}

/// Loss 1 - cos(f(x), y) evaluated in the arithmetic type Real. With long
/// double the finite-difference round-off sits far below the gradients
/// being checked. Perturbing one energy only touches its frame, so the
/// other frames are cached.
template <typename Real>
class CachedLoss {
 public:
  CachedLoss(const mep::EncoderState& enc, const mep::MelFilterbank& fb, const mep::Matrix& x,
               const std::vector<double>& y)
      : enc_(enc), w_(fb.dense()), floor_(fb.config().log_floor), x_(x), y_(y.begin(), y.end()) {
    mel_.assign(x.rows(), std::vector<Real>(w_.rows(), Real(0)));
    hidden_.resize(x.rows());
    for (std::size_t m = 0; m < x.rows(); ++m) {
      for (std::size_t c = 0; c < w_.rows(); ++c)
        for (std::size_t k = 0; k < x.cols(); ++k) mel_[m][c] += static_cast<Real>(w_(c, k)) * x(m, k);
      hidden_[m] = frame(mel_[m]);
    }
  }

  /// Loss with x[m,k] replaced by value.
  Real operator()(std::size_t m, std::size_t k, Real value) const {
    std::vector<Real> mel = mel_[m];
    for (std::size_t c = 0; c < w_.rows(); ++c) mel[c] += static_cast<Real>(w_(c, k)) * (value - x_(m, k));
    std::vector<std::vector<Real>> h = hidden_;
    h[m] = frame(mel);
    return loss(h);
  }

  /// Central difference with the same step rule as central_difference().
  Real derivative(std::size_t m, std::size_t k) const {
    const Real orig = x_(m, k);
    const Real h = Real(1e-6) * std::max(orig, Real(1));
    return ((*this)(m, k, orig + h) - (*this)(m, k, orig - h)) / (Real(2) * h);
  }

 private:
  static std::vector<Real> layer(const mep::DenseLayer& L, const std::vector<Real>& in) {
    std::vector<Real> out(L.bias.begin(), L.bias.end());
    for (std::size_t o = 0; o < out.size(); ++o)
      for (std::size_t i = 0; i < in.size(); ++i) out[o] += static_cast<Real>(L.weights(o, i)) * in[i];
    return out;
  }

  std::vector<Real> frame(const std::vector<Real>& mel) const {
    std::vector<Real> logmel(mel.size());
    for (std::size_t c = 0; c < mel.size(); ++c) logmel[c] = std::log(std::max(mel[c], static_cast<Real>(floor_)));
    auto a = layer(enc_.frame_layer1(), logmel);
    for (Real& v : a) v = std::tanh(v);
    auto b = layer(enc_.frame_layer2(), a);
    for (Real& v : b) v = std::tanh(v);
    return b;
  }

  Real loss(const std::vector<std::vector<Real>>& h) const {
    const std::size_t frames = h.size(), H = h[0].size();
    std::vector<Real> pooled(2 * H);
    for (std::size_t j = 0; j < H; ++j) {
      Real mean = 0, var = 0;
      for (std::size_t m = 0; m < frames; ++m) mean += h[m][j];
      mean /= static_cast<Real>(frames);
      for (std::size_t m = 0; m < frames; ++m) var += (h[m][j] - mean) * (h[m][j] - mean);
      var /= static_cast<Real>(frames);
      pooled[j] = mean;
      pooled[H + j] = std::sqrt(var + static_cast<Real>(mep::EncoderState::kVarianceFloor));
    }
    const auto z = layer(enc_.projection(), pooled);
    Real zz = 0, zy = 0, yy = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      zz += z[i] * z[i];
      zy += z[i] * y_[i];
      yy += y_[i] * y_[i];
    }
    return Real(1) - zy / std::sqrt(zz * yy);
  }

  const mep::EncoderState& enc_;
  mep::Matrix w_;
  double floor_;
  const mep::Matrix& x_;
  std::vector<Real> y_;
  std::vector<std::vector<Real>> mel_;
  std::vector<std::vector<Real>> hidden_;
};

/// Mask recomputed from a flattened, descending sort of the energies.
inline mep::Matrix brute_force_mask(const mep::Matrix& x, double eta_th, double fraction, double* peak_out = nullptr) {
  std::vector<double> v(x.flat().begin(), x.flat().end());
  std::sort(v.begin(), v.end(), [](double a, double b) { return a > b; });
  const std::size_t drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(v.size())));
  const double peak = v[drop];
  const double th = peak * std::pow(10.0, eta_th / 10.0);
  if (peak_out) *peak_out = peak;
  mep::Matrix mask(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mask(r, c) = x(r, c) >= th ? 1.0 : 0.0;
  return mask;
}

/// O(n^2) EER: FAR/FRR counted from scratch at each candidate threshold,
/// first sign change of FAR - FRR interpolated linearly.
inline double brute_force_eer(const std::vector<double>& genuine, const std::vector<double>& imposter) {
  std::vector<double> cands;
  for (double s : genuine) cands.push_back(s);
  for (double s : imposter) cands.push_back(s);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  cands.push_back(std::numeric_limits<double>::infinity());
  double prev_far = 0, prev_d = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    double far = 0, frr = 0;
    for (double s : imposter) far += (s >= cands[i]) ? 1 : 0;
    for (double s : genuine) frr += (s < cands[i]) ? 1 : 0;
    far /= static_cast<double>(imposter.size());
    frr /= static_cast<double>(genuine.size());
    const double d = far - frr;
    if (d == 0) return 100 * far;
    if (i > 0 && prev_d > 0 && d < 0) return 100 * (prev_far + prev_d / (prev_d - d) * (far - prev_far));
    prev_far = far;
    prev_d = d;
  }
  return -1;
}

}  // namespace oracle
