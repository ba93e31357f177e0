#include "mep/sem_mask.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace mep {

void MaskConfig::validate() const {
  if (!(eta_th < 0.0)) throw Error(ErrorCode::kInvalidConfig, "eta_th must be negative");
  if (!(peak_exclusion_fraction >= 0.0 && peak_exclusion_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "peak_exclusion_fraction must be in [0, 1)");
  }
  if (random_threshold) {
    const auto& r = *random_threshold;
    if (!(r.low_db <= r.high_db && r.high_db < 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "random threshold range must satisfy low <= high < 0");
    }
  }
}

double MaskConfig::resolved_eta_th() const {
  if (!random_threshold) return eta_th;
  std::mt19937_64 rng(random_threshold->seed);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return random_threshold->low_db + u * (random_threshold->high_db - random_threshold->low_db);
}

std::size_t EnergyMask::kept() const {
  return static_cast<std::size_t>(std::count(mask.flat().begin(), mask.flat().end(), 1.0));
}

double EnergyMask::masked_fraction() const {
  if (mask.empty()) return 0.0;
  return 1.0 - static_cast<double>(kept()) / static_cast<double>(mask.size());
}

double db_ratio(double x, double x_peak) {
  if (!(x > 0.0) || !(x_peak > 0.0)) {
    throw Error(ErrorCode::kNonPositiveEnergy, "dB ratio needs positive energies");
  }
  return 10.0 * std::log10(x / x_peak);
}

double compute_peak(const Matrix& energy, const MaskConfig& cfg) {
  cfg.validate();
  if (energy.empty()) throw Error(ErrorCode::kAllZeroEnergy, "empty power spectrum");
  std::vector<double> sorted(energy.flat().begin(), energy.flat().end());
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto excluded = static_cast<std::size_t>(
      std::floor(cfg.peak_exclusion_fraction * static_cast<double>(sorted.size())));
  const double peak = sorted[excluded];
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::kAllZeroEnergy, "no positive energy below the excluded top fraction");
  }
  return peak;
}

double threshold(double x_peak, double eta_th) {
  if (!(x_peak > 0.0)) throw Error(ErrorCode::kNonPositivePeak, "peak energy must be positive");
  return x_peak * std::pow(10.0, eta_th / 10.0);
}

Matrix mask_from_threshold(const Matrix& energy, double x_th) {
  Matrix mask(energy.rows(), energy.cols());
  auto out = mask.flat();
  const auto in = energy.flat();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] >= x_th ? 1.0 : 0.0;
  return mask;
}

EnergyMask build_mask(const Matrix& energy, const MaskConfig& cfg) {
  EnergyMask result;
  result.eta_th = cfg.resolved_eta_th();
  result.x_peak = compute_peak(energy, cfg);
  result.x_th = threshold(result.x_peak, result.eta_th);
  result.mask = mask_from_threshold(energy, result.x_th);
  return result;
}

EnergyMask build_mask(const PowerSpectrum& power, const MaskConfig& cfg) {
  return build_mask(power.energy, cfg);
}

Matrix apply_mask(const Matrix& energy, const Matrix& mask, const MaskConfig& cfg) {
  require_same_shape(energy, mask, "mask does not match the power spectrum");
  Matrix out(energy.rows(), energy.cols());
  const auto x = energy.flat();
  const auto mu = mask.flat();
  auto sem = out.flat();
  for (std::size_t i = 0; i < x.size(); ++i) sem[i] = mu[i] * x[i];
  if (cfg.rescale_unmasked) {
    const double total = std::accumulate(x.begin(), x.end(), 0.0);
    const double kept = std::accumulate(sem.begin(), sem.end(), 0.0);
    if (!(kept > 0.0)) throw Error(ErrorCode::kRescaleUndefined, "masked spectrum has zero energy");
    const double scale = total / kept;
    for (double& v : sem) v *= scale;
  }
  return out;
}

PowerSpectrum apply_mask(const PowerSpectrum& power, const EnergyMask& mask, const MaskConfig& cfg) {
  PowerSpectrum out = power;
  out.energy = apply_mask(power.energy, mask.mask, cfg);
  return out;
}

}  // namespace mep
