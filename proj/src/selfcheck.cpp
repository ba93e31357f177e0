#include "mep/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "mep/encoder.hpp"
#include "mep/metrics.hpp"
#include "mep/sem_mask.hpp"

namespace mep {
namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53);
  }

 private:
  std::mt19937_64 rng_;
};

Matrix random_energy(Uniform& u, std::size_t frames, std::size_t bins) {
  Matrix x(frames, bins);
  for (double& v : x.flat()) v = u(1.0, 10.0);
  return x;
}

SuiteResult stft_round_trip() {
  SuiteResult r;
  r.name = "stft_round_trip";
  Uniform u(11);
  for (int trial = 0; trial < 10; ++trial) {
    WaveBuffer w;
    w.samples.resize(16000);
    for (double& s : w.samples) s = u(-1.0, 1.0);
    const WaveBuffer back = istft(stft(w));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      const double d = back.samples[i] - w.samples[i];
      num += d * d;
      den += w.samples[i] * w.samples[i];
    }
    const double rel = std::sqrt(num / den);
    ++r.total;
    if (rel <= 1e-6) {
      ++r.passed;
    } else {
      r.failures.push_back("trial " + std::to_string(trial) + ": relative error " + std::to_string(rel));
    }
  }
  return r;
}

SuiteResult mel_backward_check(const MelBackwardFn& backward) {
  SuiteResult r;
  r.name = "mel_backward_fd";
  const MelFilterbank fb;
  Uniform u(23);
  for (int trial = 0; trial < 2; ++trial) {
    Matrix x = random_energy(u, 4, fb.bins());
    Matrix upstream(4, fb.channels());
    for (double& v : upstream.flat()) v = u(-1.0, 1.0);
    const auto objective = [&](const Matrix& e) {
      const auto f = mel_apply(e, fb);
      double acc = 0.0;
      for (std::size_t i = 0; i < upstream.size(); ++i) acc += upstream.flat()[i] * f.log_mel.flat()[i];
      return acc;
    };
    const Matrix analytic = backward(upstream, mel_apply(x, fb), fb);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < x.size(); i += 7) {
      const double orig = x.flat()[i];
      const double h = 1e-6 * std::max(orig, 1.0);
      x.flat()[i] = orig + h;
      const double fp = objective(x);
      x.flat()[i] = orig - h;
      const double fm = objective(x);
      x.flat()[i] = orig;
      const double fd = (fp - fm) / (2 * h);
      const double a = analytic.flat()[i];
      if (std::abs(a - fd) > 1e-4 * std::max(std::abs(fd), 1e-12)) ++bad;
    }
    ++r.total;
    if (bad == 0) {
      ++r.passed;
    } else {
      r.failures.push_back("trial " + std::to_string(trial) + ": " + std::to_string(bad) + " entries disagree");
    }
  }
  return r;
}

SuiteResult gradient_check(const MelBackwardFn& backward) {
  SuiteResult r;
  r.name = "gradient_fd";
  const MelFilterbank fb;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const EncoderState enc(seed);
    Uniform u(100 + seed);
    Matrix x = random_energy(u, 6, fb.bins());
    std::vector<double> y(EncoderState::kEmbedding);
    for (double& v : y) v = u(-1.0, 1.0);
    y = normalize(y);

    const auto features = mel_apply(x, fb);
    const auto trace = forward_trace(enc, features.log_mel);
    const Matrix analytic = backward(grad_log_mel(enc, trace, y), features, fb);
    const auto objective = [&](const Matrix& e) { return loss(embed(enc, e, fb), y); };

    std::size_t bad = 0, checked = 0;
    for (std::size_t i = 0; i < x.size(); i += 13) {
      const double orig = x.flat()[i];
      const double h = 1e-6 * std::max(orig, 1.0);
      x.flat()[i] = orig + h;
      const double fp = objective(x);
      x.flat()[i] = orig - h;
      const double fm = objective(x);
      x.flat()[i] = orig;
      const double fd = (fp - fm) / (2 * h);
      const double a = analytic.flat()[i];
      if (std::abs(a) <= 1e-8) continue;
      ++checked;
      if (std::abs(a - fd) > 1e-3 * std::abs(a)) ++bad;
    }
    ++r.total;
    if (bad == 0 && checked > 0) {
      ++r.passed;
    } else {
      r.failures.push_back("encoder seed " + std::to_string(seed) + ": " + std::to_string(bad) + " of " +
                           std::to_string(checked) + " entries disagree");
    }
  }
  return r;
}

SuiteResult mask_oracle() {
  SuiteResult r;
  r.name = "mask_oracle";
  Uniform u(37);
  const MaskConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(8, 257);
    for (double& v : x.flat()) v = std::pow(10.0, u(-6.0, 1.0));
    const EnergyMask mask = build_mask(x, cfg);

    std::vector<double> values(x.flat().begin(), x.flat().end());
    std::sort(values.begin(), values.end(), [](double a, double b) { return a > b; });
    const double peak = values[static_cast<std::size_t>(0.05 * static_cast<double>(values.size()))];
    const double x_th = peak * std::pow(10.0, -20.0 / 10.0);
    bool same = peak == mask.x_peak;
    for (std::size_t i = 0; i < x.size(); ++i) {
      same = same && ((x.flat()[i] >= x_th ? 1.0 : 0.0) == mask.mask.flat()[i]);
    }
    ++r.total;
    if (same) {
      ++r.passed;
    } else {
      r.failures.push_back("trial " + std::to_string(trial) + ": mask differs from brute force");
    }
  }
  return r;
}

SuiteResult eer_oracle() {
  SuiteResult r;
  r.name = "eer_oracle";
  Uniform u(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g(5 + trial % 7), im(4 + trial % 5);
    for (double& v : g) v = std::round(u(0.2, 1.0) * 20) / 20;
    for (double& v : im) v = std::round(u(0.0, 0.8) * 20) / 20;
    // Quadratic sweep over candidate thresholds.
    std::vector<double> cands(g);
    cands.insert(cands.end(), im.begin(), im.end());
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    cands.push_back(INFINITY);
    double expected = -1.0, prev_far = 0.0, prev_d = 0.0;
    for (std::size_t c = 0; c < cands.size() && expected < 0; ++c) {
      double fa = 0, fr = 0;
      for (double s : im) fa += s >= cands[c];
      for (double s : g) fr += s < cands[c];
      fa /= static_cast<double>(im.size());
      fr /= static_cast<double>(g.size());
      const double d = fa - fr;
      if (d == 0) expected = fa;
      else if (c > 0 && prev_d > 0 && d < 0) expected = prev_far + prev_d / (prev_d - d) * (fa - prev_far);
      prev_far = fa;
      prev_d = d;
    }
    const double got = eer(g, im) / 100.0;
    ++r.total;
    if (std::abs(got - expected) <= 1e-9) {
      ++r.passed;
    } else {
      r.failures.push_back("trial " + std::to_string(trial) + ": eer " + std::to_string(got) + " vs " +
                           std::to_string(expected));
    }
  }
  return r;
}

}  // namespace

Matrix corrupted_mel_backward(const Matrix& grad_log_mel, const MelFeatures& features, const MelFilterbank& fb) {
  Matrix grad(grad_log_mel.rows(), fb.bins());
  for (std::size_t m = 0; m < grad.rows(); ++m) {
    for (std::size_t c = 0; c < fb.channels(); ++c) {
      if (!(features.mel(m, c) > features.log_floor)) continue;
      const auto& band = fb.band(c);
      for (std::size_t i = 0; i < band.weights.size(); ++i) {
        grad(m, band.first_bin + i) += grad_log_mel(m, c) * band.weights[i];
      }
    }
  }
  return grad;
}

std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& options) {
  const MelBackwardFn backward =
      options.mel_backward_override
          ? options.mel_backward_override
          : MelBackwardFn([](const Matrix& g, const MelFeatures& f, const MelFilterbank& fb) {
              return mel_backward(g, f, fb);
            });
  return {stft_round_trip(), mel_backward_check(backward), gradient_check(backward), mask_oracle(),
          eer_oracle()};
}

}  // namespace mep
