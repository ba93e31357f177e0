#include "mep/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"

namespace mep {

std::vector<double> StftConfig::window() const {
  std::vector<double> w(window_length);
  const double n = static_cast<double>(window_length);
  for (std::size_t i = 0; i < window_length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  }
  return w;
}

void StftConfig::validate() const {
  if (fft_size < 2 || fft_size % 2 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "fft_size must be even");
  }
  if (window_length == 0 || window_length > fft_size) {
    throw Error(ErrorCode::kInvalidConfig, "window_length must be in [1, fft_size]");
  }
  if (hop_length == 0 || hop_length > window_length) {
    throw Error(ErrorCode::kInvalidConfig, "hop_length must be in [1, window_length]");
  }
  // Constant overlap-add: sum of shifted windows is flat over one hop.
  const auto w = window();
  std::vector<double> sum(hop_length, 0.0);
  for (std::size_t i = 0; i < window_length; ++i) sum[i % hop_length] += w[i];
  const auto [lo, hi] = std::minmax_element(sum.begin(), sum.end());
  if (*hi <= 0.0 || (*hi - *lo) / *hi > 1e-6) {
    throw Error(ErrorCode::kInvalidConfig, "window/hop pair violates the overlap-add constraint");
  }
}

std::size_t frame_count(std::size_t signal_length, const StftConfig& config) {
  const std::size_t padded = signal_length + 2 * (config.window_length / 2);
  if (padded < config.window_length) return 0;
  return 1 + (padded - config.window_length) / config.hop_length;
}

ComplexSpectrogram stft(const WaveBuffer& wave, const StftConfig& config) {
  config.validate();
  const auto& x = wave.samples;
  const std::size_t n = x.size();
  const std::size_t pad = config.window_length / 2;
  if (n < config.window_length || n <= pad) {
    throw Error(ErrorCode::kTooShort, std::to_string(n) + " samples is shorter than one window");
  }

  std::vector<double> padded(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    padded[pad - 1 - i] = x[i + 1];
    padded[pad + n + i] = x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));

  ComplexSpectrogram spec;
  spec.config = config;
  spec.original_length = n;
  spec.frames = frame_count(n, config);
  spec.bins = config.bins();
  spec.coeffs.resize(spec.frames * spec.bins);

  const auto window = config.window();
  std::vector<double> frame(config.window_length);
  detail::RealFft fft(config.fft_size);
  for (std::size_t m = 0; m < spec.frames; ++m) {
    const double* src = padded.data() + m * config.hop_length;
    for (std::size_t i = 0; i < config.window_length; ++i) frame[i] = src[i] * window[i];
    fft.forward(frame, std::span(spec.coeffs).subspan(m * spec.bins, spec.bins));
  }
  return spec;
}

WaveBuffer istft(const ComplexSpectrogram& spec) {
  const auto& config = spec.config;
  config.validate();
  if (spec.bins != config.bins() || spec.coeffs.size() != spec.frames * spec.bins ||
      spec.frames != frame_count(spec.original_length, config)) {
    throw Error(ErrorCode::kInvalidShape, "spectrogram shape does not match its configuration");
  }

  const std::size_t pad = config.window_length / 2;
  const std::size_t padded_length = (spec.frames - 1) * config.hop_length + config.window_length;
  std::vector<double> out(padded_length, 0.0);
  std::vector<double> norm(padded_length, 0.0);

  const auto window = config.window();
  std::vector<double> frame(config.fft_size);
  detail::RealFft fft(config.fft_size);
  for (std::size_t m = 0; m < spec.frames; ++m) {
    fft.inverse(std::span(spec.coeffs).subspan(m * spec.bins, spec.bins), frame);
    const std::size_t start = m * config.hop_length;
    for (std::size_t i = 0; i < config.window_length; ++i) {
      out[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  WaveBuffer wave;
  wave.samples.resize(spec.original_length);
  for (std::size_t i = 0; i < spec.original_length; ++i) {
    const double w = norm[pad + i];
    wave.samples[i] = w > 1e-12 ? out[pad + i] / w : 0.0;
  }
  return wave;
}

PowerSpectrum power(const ComplexSpectrogram& spec) {
  PowerSpectrum p;
  p.config = spec.config;
  p.original_length = spec.original_length;
  p.energy = Matrix(spec.frames, spec.bins);
  auto flat = p.energy.flat();
  for (std::size_t i = 0; i < spec.coeffs.size(); ++i) flat[i] = std::norm(spec.coeffs[i]);
  return p;
}

WaveBuffer resynthesize(const Matrix& perturbed_energy, const ComplexSpectrogram& phase_source) {
  if (perturbed_energy.rows() != phase_source.frames || perturbed_energy.cols() != phase_source.bins) {
    throw Error(ErrorCode::kShapeMismatch, "perturbed energy does not match the phase source");
  }
  ComplexSpectrogram rebuilt = phase_source;
  const auto energy = perturbed_energy.flat();
  for (std::size_t i = 0; i < rebuilt.coeffs.size(); ++i) {
    const double magnitude = std::sqrt(std::max(energy[i], 0.0));
    const double phase = std::arg(phase_source.coeffs[i]);
    rebuilt.coeffs[i] = std::polar(magnitude, phase);
  }
  return istft(rebuilt);
}

WaveBuffer resynthesize(const PowerSpectrum& perturbed, const ComplexSpectrogram& phase_source) {
  return resynthesize(perturbed.energy, phase_source);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(const MelConfig& config, const StftConfig& stft)
    : config_(config), bins_(stft.bins()) {
  if (config.channels == 0 || !(config.max_hz > config.min_hz) || config.min_hz < 0.0 ||
      config.max_hz > config.sample_rate / 2.0 || !(config.log_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid mel filterbank configuration");
  }
  const double lo = hz_to_mel(config.min_hz);
  const double hi = hz_to_mel(config.max_hz);
  const double bin_hz = static_cast<double>(config.sample_rate) / static_cast<double>(stft.fft_size);

  bands_.resize(config.channels);
  for (std::size_t c = 0; c < config.channels; ++c) {
    const auto edge = [&](std::size_t i) {
      if (i == 0) return config.min_hz;
      if (i == config.channels + 1) return config.max_hz;
      return mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(config.channels + 1));
    };
    const double left = edge(c), center = edge(c + 1), right = edge(c + 2);

    std::vector<double> dense(bins_, 0.0);
    for (std::size_t k = 0; k < bins_; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      dense[k] = std::max(0.0, std::min(up, down));
    }
    // Channels narrower than one bin would otherwise be empty.
    if (std::all_of(dense.begin(), dense.end(), [](double v) { return v == 0.0; })) {
      const auto nearest = static_cast<std::size_t>(std::lround(center / bin_hz));
      dense[std::min(nearest, bins_ - 1)] = 1.0;
    }

    const auto first = std::find_if(dense.begin(), dense.end(), [](double v) { return v > 0.0; });
    const auto last = std::find_if(dense.rbegin(), dense.rend(), [](double v) { return v > 0.0; }).base();
    bands_[c].first_bin = static_cast<std::size_t>(first - dense.begin());
    bands_[c].weights.assign(first, last);
  }
}

double MelFilterbank::weight(std::size_t channel, std::size_t bin) const {
  const auto& b = bands_.at(channel);
  if (bin < b.first_bin || bin >= b.first_bin + b.weights.size()) return 0.0;
  return b.weights[bin - b.first_bin];
}

Matrix MelFilterbank::dense() const {
  Matrix m(channels(), bins_);
  for (std::size_t c = 0; c < channels(); ++c) {
    const auto& b = bands_[c];
    for (std::size_t i = 0; i < b.weights.size(); ++i) m(c, b.first_bin + i) = b.weights[i];
  }
  return m;
}

MelFeatures mel_apply(const Matrix& energy, const MelFilterbank& fb) {
  if (energy.cols() != fb.bins()) {
    throw Error(ErrorCode::kShapeMismatch, "power spectrum bins do not match the filterbank");
  }
  MelFeatures out;
  out.log_floor = fb.config().log_floor;
  out.mel = Matrix(energy.rows(), fb.channels());
  out.log_mel = Matrix(energy.rows(), fb.channels());
  for (std::size_t m = 0; m < energy.rows(); ++m) {
    const auto row = energy.row(m);
    for (std::size_t c = 0; c < fb.channels(); ++c) {
      const auto& band = fb.band(c);
      double acc = 0.0;
      for (std::size_t i = 0; i < band.weights.size(); ++i) acc += band.weights[i] * row[band.first_bin + i];
      out.mel(m, c) = acc;
      out.log_mel(m, c) = std::log(std::max(acc, out.log_floor));
    }
  }
  return out;
}

MelFeatures mel_apply(const PowerSpectrum& power, const MelFilterbank& fb) {
  return mel_apply(power.energy, fb);
}

Matrix mel_backward(const Matrix& grad_log_mel, const MelFeatures& features, const MelFilterbank& fb) {
  require_same_shape(grad_log_mel, features.mel, "gradient does not match mel features");
  if (grad_log_mel.cols() != fb.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient channels do not match the filterbank");
  }
  Matrix grad(grad_log_mel.rows(), fb.bins());
  for (std::size_t m = 0; m < grad.rows(); ++m) {
    auto out = grad.row(m);
    for (std::size_t c = 0; c < fb.channels(); ++c) {
      const double mel = features.mel(m, c);
      if (!(mel > features.log_floor)) continue;
      const double upstream = grad_log_mel(m, c) / mel;
      const auto& band = fb.band(c);
      for (std::size_t i = 0; i < band.weights.size(); ++i) out[band.first_bin + i] += upstream * band.weights[i];
    }
  }
  return grad;
}

Matrix mel_backward(const Matrix& grad_log_mel, const Matrix& energy, const MelFilterbank& fb) {
  return mel_backward(grad_log_mel, mel_apply(energy, fb), fb);
}

}  // namespace mep
