#include "mep/attacks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace mep {
namespace {

constexpr std::array kMethodNames = {
    std::pair{AttackMethod::kFgsm, std::string_view("FGSM")},
    std::pair{AttackMethod::kIFgsm, std::string_view("I-FGSM")},
    std::pair{AttackMethod::kMiFgsm, std::string_view("MI-FGSM")},
    std::pair{AttackMethod::kPgd, std::string_view("PGD")},
    std::pair{AttackMethod::kMep, std::string_view("MEP")},
    std::pair{AttackMethod::kIMep, std::string_view("I-MEP")},
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

void clip(Matrix& delta, double epsilon) {
  for (double& d : delta.flat()) d = std::clamp(d, -epsilon, epsilon);
}

AttackResult finish(const Matrix& x, Matrix delta, std::vector<double> trace, const GradientFn& grad) {
  AttackResult r;
  r.perturbed = floored_sum(x, delta);
  r.delta = std::move(delta);
  r.loss_trace = std::move(trace);
  r.final_loss = grad(r.perturbed).loss;
  return r;
}

void check_inputs(const Matrix& x, const AttackConfig& cfg) {
  cfg.validate();
  if (x.empty()) throw Error(ErrorCode::kInvalidShape, "empty power spectrum");
}

// Sign step scaled by alpha and shaped by the MEP mode.
Matrix masked_step(const Matrix& grad, const Matrix& mask, const Matrix& x, const AttackConfig& cfg) {
  const double alpha = cfg.step();
  Matrix step(grad.rows(), grad.cols());
  auto out = step.flat();
  const auto g = grad.flat();
  const auto mu = mask.flat();
  if (cfg.mep_mode == MepMode::kGradientMask) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * sign(g[i]) * mu[i];
    return step;
  }
  const auto energy = x.flat();
  double peak = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) peak = std::max(peak, mu[i] * energy[i]);
  if (peak == 0.0) return step;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * sign(g[i]) * (mu[i] * energy[i] / peak);
  return step;
}

// Shared loop for the iterative methods. direction() returns the update
// before clipping; it sees the current gradient.
template <typename Direction>
AttackResult iterate(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg, Matrix delta,
                     Direction direction) {
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int i = 0; i < cfg.iterations; ++i) {
    const LossGradient lg = grad(floored_sum(x, delta));
    trace.push_back(lg.loss);
    const Matrix step = direction(lg.grad);
    auto d = delta.flat();
    const auto s = step.flat();
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += s[j];
    clip(delta, cfg.epsilon);
  }
  return finish(x, std::move(delta), std::move(trace), grad);
}

Matrix sign_step(const Matrix& g, double scale) {
  Matrix step(g.rows(), g.cols());
  auto out = step.flat();
  const auto in = g.flat();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * sign(in[i]);
  return step;
}

}  // namespace

std::string_view to_string(AttackMethod method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::string_view to_string(MepMode mode) {
  return mode == MepMode::kGradientMask ? "gradient-mask" : "feature-product";
}

AttackMethod parse_method(std::string_view name) {
  const std::string key = upper(name);
  for (const auto& [m, n] : kMethodNames) {
    if (n == key) return m;
  }
  if (key == "IFGSM") return AttackMethod::kIFgsm;
  if (key == "MIFGSM") return AttackMethod::kMiFgsm;
  if (key == "IMEP") return AttackMethod::kIMep;
  throw Error(ErrorCode::kInvalidConfig, "unknown attack method '" + std::string(name) + "'");
}

MepMode parse_mep_mode(std::string_view name) {
  const std::string key = upper(name);
  if (key == "GRADIENT-MASK") return MepMode::kGradientMask;
  if (key == "FEATURE-PRODUCT") return MepMode::kFeatureProduct;
  throw Error(ErrorCode::kInvalidConfig, "unknown MEP mode '" + std::string(name) + "'");
}

const std::vector<AttackMethod>& all_methods() {
  static const std::vector<AttackMethod> methods = {AttackMethod::kFgsm, AttackMethod::kIFgsm,
                                                    AttackMethod::kMiFgsm, AttackMethod::kPgd,
                                                    AttackMethod::kMep, AttackMethod::kIMep};
  return methods;
}

bool uses_mask(AttackMethod method) {
  return method == AttackMethod::kMep || method == AttackMethod::kIMep;
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidConfig, "epsilon must be a finite non-negative number");
  }
  if (iterations < 1) throw Error(ErrorCode::kInvalidConfig, "iterations must be >= 1");
  const double a = step();
  if (epsilon == 0.0) {
    if (a != 0.0) throw Error(ErrorCode::kInvalidConfig, "alpha must be 0 when epsilon is 0");
  } else if (!(a > 0.0) || a > epsilon) {
    throw Error(ErrorCode::kInvalidConfig, "alpha must satisfy 0 < alpha <= epsilon");
  }
  if (!(momentum_decay >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "momentum decay must be >= 0");
}

GradientFn encoder_gradient(const EncoderState& enc, const MelFilterbank& fb, std::span<const double> target) {
  return [&enc, &fb, target](const Matrix& energy) { return grad_power(enc, energy, target, fb); };
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Matrix floored_sum(const Matrix& x, const Matrix& delta) {
  require_same_shape(x, delta, "perturbation does not match the power spectrum");
  Matrix out(x.rows(), x.cols());
  auto o = out.flat();
  const auto a = x.flat();
  const auto d = delta.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::max(a[i] + d[i], 0.0);
  return out;
}

AttackResult fgsm(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg) {
  check_inputs(x, cfg);
  const LossGradient lg = grad(x);
  return finish(x, sign_step(lg.grad, cfg.epsilon), {lg.loss}, grad);
}

AttackResult i_fgsm(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg) {
  check_inputs(x, cfg);
  const double alpha = cfg.step();
  return iterate(x, grad, cfg, Matrix(x.rows(), x.cols()),
                 [alpha](const Matrix& g) { return sign_step(g, alpha); });
}

AttackResult mi_fgsm(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg) {
  check_inputs(x, cfg);
  const double alpha = cfg.step();
  Matrix momentum(x.rows(), x.cols());
  return iterate(x, grad, cfg, Matrix(x.rows(), x.cols()), [&](const Matrix& g) {
    double l1 = 0.0;
    for (double v : g.flat()) l1 += std::abs(v);
    auto acc = momentum.flat();
    const auto gv = g.flat();
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] = cfg.momentum_decay * acc[i] + (l1 > 0.0 ? gv[i] / l1 : 0.0);
    }
    return sign_step(momentum, alpha);
  });
}

AttackResult pgd(const Matrix& x, const GradientFn& grad, const AttackConfig& cfg) {
  check_inputs(x, cfg);
  Matrix start(x.rows(), x.cols());
  if (cfg.random_start) {
    std::mt19937_64 rng(cfg.rng_seed);
    for (double& d : start.flat()) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      d = cfg.epsilon * (2.0 * u - 1.0);
    }
  }
  const double alpha = cfg.step();
  return iterate(x, grad, cfg, std::move(start), [alpha](const Matrix& g) { return sign_step(g, alpha); });
}

AttackResult mep(const Matrix& x, const GradientFn& grad, const Matrix& mask, const AttackConfig& cfg) {
  check_inputs(x, cfg);
  require_same_shape(x, mask, "mask does not match the power spectrum");
  const LossGradient lg = grad(x);
  Matrix delta = masked_step(lg.grad, mask, x, cfg);
  clip(delta, cfg.epsilon);
  return finish(x, std::move(delta), {lg.loss}, grad);
}

AttackResult i_mep(const Matrix& x, const GradientFn& grad, const Matrix& mask, const AttackConfig& cfg) {
  check_inputs(x, cfg);
  require_same_shape(x, mask, "mask does not match the power spectrum");
  return iterate(x, grad, cfg, Matrix(x.rows(), x.cols()),
                 [&](const Matrix& g) { return masked_step(g, mask, x, cfg); });
}

AttackResult run_attack(const Matrix& x, const GradientFn& grad, const std::optional<EnergyMask>& mask,
                        const AttackConfig& cfg) {
  if (uses_mask(cfg.method) && !mask) {
    throw Error(ErrorCode::kInvalidConfig, std::string(to_string(cfg.method)) + " needs an energy mask");
  }
  AttackResult r;
  switch (cfg.method) {
    case AttackMethod::kFgsm: r = fgsm(x, grad, cfg); break;
    case AttackMethod::kIFgsm: r = i_fgsm(x, grad, cfg); break;
    case AttackMethod::kMiFgsm: r = mi_fgsm(x, grad, cfg); break;
    case AttackMethod::kPgd: r = pgd(x, grad, cfg); break;
    case AttackMethod::kMep: r = mep(x, grad, mask->mask, cfg); break;
    case AttackMethod::kIMep: r = i_mep(x, grad, mask->mask, cfg); break;
  }
  if (uses_mask(cfg.method)) r.mask = mask;
  return r;
}

AttackResult attack_utterance(const WaveBuffer& wave, const EncoderState& enc, const MelFilterbank& fb,
                              std::span<const double> target, const AttackConfig& cfg,
                              const MaskConfig& mask_cfg, const StftConfig& stft_cfg) {
  validate(wave);
  const ComplexSpectrogram spec = stft(wave, stft_cfg);
  const PowerSpectrum x = power(spec);
  std::optional<EnergyMask> mask;
  if (uses_mask(cfg.method)) mask = build_mask(x.energy, mask_cfg);

  AttackResult r = run_attack(x.energy, encoder_gradient(enc, fb, target), mask, cfg);
  const auto d = r.delta.flat();
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
    r.adversarial = wave;
  } else {
    r.adversarial = resynthesize(r.perturbed, spec);
  }
  return r;
}

}  // namespace mep
