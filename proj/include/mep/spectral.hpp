#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "mep/audio_io.hpp"
#include "mep/matrix.hpp"

namespace mep {

/// Framing parameters. Defaults give 25 ms periodic-Hann frames with a
/// 12.5 ms hop at 16 kHz, zero-padded to a 512-point FFT (257 bins).
struct StftConfig {
  std::size_t fft_size = 512;
  std::size_t window_length = 400;
  std::size_t hop_length = 200;

  std::size_t bins() const noexcept { return fft_size / 2 + 1; }
  /// Periodic Hann window of window_length samples.
  std::vector<double> window() const;
  /// Throws kInvalidConfig unless the window/hop pair is overlap-add
  /// constant to 1e-6 and window_length <= fft_size.
  void validate() const;
};

/// One-sided STFT, frames x bins, row-major.
struct ComplexSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> coeffs;
  StftConfig config;
  std::size_t original_length = 0;

  std::complex<double>& at(std::size_t m, std::size_t k) { return coeffs[m * bins + k]; }
  const std::complex<double>& at(std::size_t m, std::size_t k) const { return coeffs[m * bins + k]; }
};

/// Energies |S[m,k]|^2.
struct PowerSpectrum {
  Matrix energy;
  StftConfig config;
  std::size_t original_length = 0;
};

std::size_t frame_count(std::size_t signal_length, const StftConfig& config);

/// Center-aligned frames: the signal is reflect-padded by window_length/2
/// on both sides.
ComplexSpectrogram stft(const WaveBuffer& wave, const StftConfig& config = {});

/// Weighted overlap-add inverse with window-square normalization.
WaveBuffer istft(const ComplexSpectrogram& spec);

PowerSpectrum power(const ComplexSpectrogram& spec);

/// Magnitude sqrt(max(energy, 0)) combined with the phase of phase_source,
/// then inverted.
WaveBuffer resynthesize(const Matrix& perturbed_energy, const ComplexSpectrogram& phase_source);
WaveBuffer resynthesize(const PowerSpectrum& perturbed, const ComplexSpectrogram& phase_source);

struct MelConfig {
  std::size_t channels = 80;
  double min_hz = 0.0;
  double max_hz = 8000.0;
  double log_floor = 1e-10;
  int sample_rate = kSampleRate;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular HTK-scale filterbank stored as one contiguous band of
/// non-zero weights per channel.
class MelFilterbank {
 public:
  explicit MelFilterbank(const MelConfig& config = {}, const StftConfig& stft = {});

  const MelConfig& config() const noexcept { return config_; }
  std::size_t channels() const noexcept { return bands_.size(); }
  std::size_t bins() const noexcept { return bins_; }
  double weight(std::size_t channel, std::size_t bin) const;
  Matrix dense() const;

  struct Band {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };
  const Band& band(std::size_t channel) const { return bands_[channel]; }

 private:
  MelConfig config_;
  std::size_t bins_;
  std::vector<Band> bands_;
};

struct MelFeatures {
  Matrix mel;      ///< frames x channels, linear filterbank energies
  Matrix log_mel;  ///< log(max(mel, log_floor))
  double log_floor = 1e-10;
};

MelFeatures mel_apply(const Matrix& energy, const MelFilterbank& fb);
MelFeatures mel_apply(const PowerSpectrum& power, const MelFilterbank& fb);

/// Pulls a gradient w.r.t. log-mel features back to the power spectrum.
/// Entries whose mel energy sits at or below the floor pass no gradient.
Matrix mel_backward(const Matrix& grad_log_mel, const MelFeatures& features, const MelFilterbank& fb);
Matrix mel_backward(const Matrix& grad_log_mel, const Matrix& energy, const MelFilterbank& fb);

}  // namespace mep
