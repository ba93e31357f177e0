#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mep/audio_io.hpp"
#include "mep/encoder.hpp"
#include "mep/matrix.hpp"
#include "mep/sem_mask.hpp"
#include "mep/spectral.hpp"

namespace mep {

enum class AttackMethod { kFgsm, kIFgsm, kMiFgsm, kPgd, kMep, kIMep };

/// How MEP turns the mask into a perturbation. kGradientMask multiplies the
/// sign step by the binary mask; kFeatureProduct weights it by the masked
/// energies, normalized so the largest step equals alpha.
enum class MepMode { kGradientMask, kFeatureProduct };

std::string_view to_string(AttackMethod method);
std::string_view to_string(MepMode mode);
AttackMethod parse_method(std::string_view name);
MepMode parse_mep_mode(std::string_view name);
const std::vector<AttackMethod>& all_methods();
bool uses_mask(AttackMethod method);

struct AttackConfig {
  AttackMethod method = AttackMethod::kIMep;
  double epsilon = 0.0002;
  int iterations = 20;
  std::optional<double> alpha;  ///< defaults to epsilon / iterations
  double momentum_decay = 1.0;
  bool random_start = true;
  MepMode mep_mode = MepMode::kGradientMask;
  std::uint64_t rng_seed = 0;

  double step() const { return alpha.value_or(epsilon / iterations); }
  /// epsilon == 0 is accepted as a no-op attack.
  void validate() const;
};

/// Loss and gradient with respect to the power spectrum at a given point.
using GradientFn = std::function<LossGradient(const Matrix& energy)>;

GradientFn encoder_gradient(const EncoderState& enc, const MelFilterbank& fb, std::span<const double> target);

struct AttackResult {
  Matrix delta;
  Matrix perturbed;                 ///< max(x + delta, 0)
  std::vector<double> loss_trace;   ///< loss at each gradient evaluation
  double final_loss = 0.0;          ///< loss at the perturbed spectrum
  std::optional<EnergyMask> mask;
  WaveBuffer adversarial;           ///< filled by attack_utterance
};

double sign(double v);
Matrix floored_sum(const Matrix& x, const Matrix& delta);

AttackResult fgsm(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg);
AttackResult i_fgsm(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg);
AttackResult mi_fgsm(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg);
AttackResult pgd(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg);
AttackResult mep(const Matrix& x, const GradientFn& grad, const Matrix& mask, const AttackConfig& cfg);
AttackResult i_mep(const Matrix& x, const GradientFn& grad, const Matrix& mask, const AttackConfig& cfg);

/// Dispatches on cfg.method. mask is required for MEP and I-MEP.
AttackResult run_attack(const Matrix& x, const GradientFn& grad, const std::optional<EnergyMask>& mask,
                        const AttackConfig& cfg);

/// Attacks the power spectrum of one utterance and resynthesizes it with the
/// original phase. An all-zero delta returns the input waveform unchanged.
AttackResult attack_utterance(const WaveBuffer& wave, const EncoderState& enc, const MelFilterbank& fb,
                              std::span<const double> target, const AttackConfig& cfg,
                              const MaskConfig& mask_cfg, const StftConfig& stft_cfg = {});

}  // namespace mep
