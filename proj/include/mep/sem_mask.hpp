#pragma once

#include <cstdint>
#include <optional>

#include "mep/matrix.hpp"
#include "mep/spectral.hpp"

namespace mep {

/// Draws the threshold uniformly from [low_db, high_db] instead of using
/// eta_th. Off unless explicitly configured.
struct RandomThreshold {
  double low_db = -30.0;
  double high_db = -10.0;
  std::uint64_t seed = 0;
};

struct MaskConfig {
  double eta_th = -20.0;                  ///< dB relative to the percentile peak
  double peak_exclusion_fraction = 0.05;  ///< share of largest energies ignored for the peak
  bool rescale_unmasked = false;
  std::optional<RandomThreshold> random_threshold;

  void validate() const;
  /// eta_th, or the seeded uniform draw when random_threshold is set.
  double resolved_eta_th() const;
};

struct EnergyMask {
  Matrix mask;  ///< 0.0 / 1.0 entries
  double x_peak = 0.0;
  double x_th = 0.0;
  double eta_th = 0.0;

  std::size_t kept() const;
  double masked_fraction() const;
};

/// 10 log10(x / x_peak). Diagnostic only; masking uses the energy comparison.
double db_ratio(double x, double x_peak);

/// Largest energy left after dropping the top floor(fraction * count)
/// entries of the whole utterance.
double compute_peak(const Matrix& energy, const MaskConfig& cfg);

/// x_peak * 10^(eta_th / 10).
double threshold(double x_peak, double eta_th);

/// Entry is 1 where energy >= x_th.
Matrix mask_from_threshold(const Matrix& energy, double x_th);

EnergyMask build_mask(const Matrix& energy, const MaskConfig& cfg);
EnergyMask build_mask(const PowerSpectrum& power, const MaskConfig& cfg);

/// mask * energy, optionally rescaled so the total energy is unchanged.
Matrix apply_mask(const Matrix& energy, const Matrix& mask, const MaskConfig& cfg);
PowerSpectrum apply_mask(const PowerSpectrum& power, const EnergyMask& mask, const MaskConfig& cfg);

}  // namespace mep
