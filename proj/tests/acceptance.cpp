// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "mep/attacks.hpp"
#include "mep/corpus.hpp"
#include "mep/evaluation.hpp"
#include "mep/metrics.hpp"
#include "mep/report.hpp"
#include "mep/sem_mask.hpp"
#include "mep/spectral.hpp"
#include "oracles.hpp"

using namespace mep;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

bool report(int id, const char* name, double budget_s, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool ok = out.ok && in_time;
  std::printf("%s %d %s: %s [%.1fs / %.0fs budget%s]\n", ok ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs,
              budget_s, in_time ? "" : ", over budget");
  std::fflush(stdout);
  return ok;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome reconstruction() {
  oracle::Rand r(101);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const WaveBuffer w = oracle::random_wave(r, kSampleRate);
    const WaveBuffer back = istft(stft(w));
    double num = 0, den = 0;
    for (std::size_t n = 0; n < w.samples.size(); ++n) {
      num += (back.samples[n] - w.samples[n]) * (back.samples[n] - w.samples[n]);
      den += w.samples[n] * w.samples[n];
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return {worst <= 1e-6, fmt("max relative error %.3g over 50 waves (tol 1e-6)", worst)};
}

// The reference derivative is a central difference of an independent
// long double evaluation of the loss. In double precision the loss carries
// round-off near 1e-16, which at a step of 1e-6 already amounts to about
// 1e-10 in the quotient and swamps gradients near 1e-7. The same difference
// in double is still reported for comparison.
Outcome gradient() {
  const MelFilterbank fb;
  oracle::Rand r(202);
  double worst = 0;
  std::size_t checked = 0, failed = 0, double_failed = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EncoderState enc(seed);
    for (int input = 0; input < 5; ++input) {
      const std::size_t frames = 4 + r.index(5);
      const Matrix x = oracle::random_matrix(r, frames, 257, 1e-2, 10.0);
      const Embedding y = oracle::random_unit(r, EncoderState::kEmbedding);
      const LossGradient lg = grad_power(enc, x, y, fb);
      const oracle::CachedLoss<long double> reference(enc, fb, x, y);
      const oracle::CachedLoss<double> plain(enc, fb, x, y);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = lg.grad.flat()[i];
        if (std::abs(a) <= 1e-8) continue;
        const double fd = static_cast<double>(reference.derivative(i / 257, i % 257));
        const double rel = std::abs(a - fd) / std::abs(a);
        worst = std::max(worst, rel);
        ++checked;
        failed += rel > 1e-3;
        double_failed += std::abs(a - plain.derivative(i / 257, i % 257)) > 1e-3 * std::abs(a);
      }
    }
  }
  return {failed == 0 && checked > 0,
          fmt("%.0f entries, %.0f over tol, max relative error %.3g (tol 1e-3); double-precision difference: %.0f "
              "over tol",
              static_cast<double>(checked), static_cast<double>(failed), worst, static_cast<double>(double_failed))};
}

Outcome mask_oracle() {
  oracle::Rand r(303);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    Matrix x = oracle::random_matrix(r, 2 + r.index(99), 257, 1e-9, 10.0);
    for (std::size_t z = r.index(x.size() / 10); z > 0; --z) x.flat()[r.index(x.size())] = 0.0;
    if (i % 10 == 0) {
      // Repeated values exercise the tie rule.
      for (double& v : x.flat()) v = std::round(v * 4.0) / 4.0;
      x.flat()[0] = 1.0;
    }
    MaskConfig cfg;
    cfg.eta_th = i % 2 ? -20.0 : -r.uniform(1.0, 60.0);
    double peak = 0;
    const Matrix expected = oracle::brute_force_mask(x, cfg.eta_th, cfg.peak_exclusion_fraction, &peak);
    const EnergyMask m = build_mask(x, cfg);
    mismatches += !(m.mask == expected) || m.x_peak != peak;
  }
  return {mismatches == 0, fmt("%.0f of 100 spectra differ from the brute-force mask", mismatches)};
}

Outcome budget() {
  const MelFilterbank fb;
  oracle::Rand r(404);
  int budget_violations = 0, leak_violations = 0, runs = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const Matrix x = oracle::random_matrix(r, 4 + r.index(5), 257, 1e-7, 1e-2);
    const EncoderState enc(static_cast<std::uint64_t>(inst));
    const Embedding y = oracle::random_unit(r, EncoderState::kEmbedding);
    const GradientFn grad = encoder_gradient(enc, fb, y);
    const EnergyMask mask = build_mask(x, MaskConfig{});
    for (AttackMethod m : all_methods()) {
      AttackConfig cfg;
      cfg.method = m;
      cfg.epsilon = inst % 2 ? 2e-4 : r.log_uniform(1e-6, 1e-2);
      cfg.iterations = 20;
      cfg.rng_seed = static_cast<std::uint64_t>(inst);
      const AttackResult res = run_attack(x, grad, mask, cfg);
      ++runs;
      budget_violations += max_abs(res.delta) > cfg.epsilon;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (res.perturbed.flat()[i] != std::max(x.flat()[i] + res.delta.flat()[i], 0.0)) ++budget_violations;
      }
      if (uses_mask(m)) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          leak_violations += mask.mask.flat()[i] == 0.0 && res.delta.flat()[i] != 0.0;
        }
      }
    }
  }
  return {budget_violations == 0 && leak_violations == 0,
          fmt("%.0f attack runs, %.0f budget violations, %.0f masked-bin leaks", runs, budget_violations,
              leak_violations)};
}

Outcome quality() {
  CorpusSpec spec;
  spec.speakers = 4;
  spec.utterances_per_speaker = 6;  // 20 test utterances
  const auto corpus = generate_corpus(spec);
  const EncoderState enc(0);
  const MelFilterbank fb;
  const EvaluationContext ctx = prepare_evaluation(corpus, enc, fb, jobs());
  AttackConfig cfg;
  cfg.epsilon = 2e-4;
  cfg.iterations = 20;
  cfg.method = AttackMethod::kIMep;
  const MethodReport masked = evaluate_attack(ctx, cfg, MaskConfig{}, jobs());
  cfg.method = AttackMethod::kIFgsm;
  const MethodReport plain = evaluate_attack(ctx, cfg, MaskConfig{}, jobs());
  std::size_t wins = 0;
  const std::size_t n = masked.snr_db_per_utterance.size();
  for (std::size_t i = 0; i < n; ++i) wins += masked.snr_db_per_utterance[i] > plain.snr_db_per_utterance[i];
  const double share = static_cast<double>(wins) / static_cast<double>(n);
  return {n == 20 && masked.snr_db_mean > plain.snr_db_mean && share >= 0.9,
          fmt("I-MEP %.2f dB vs I-FGSM %.2f dB mean SNR, I-MEP higher on %.0f%% of %.0f utterances", masked.snr_db_mean,
              plain.snr_db_mean, 100.0 * share, static_cast<double>(n))};
}

EvaluationSpec table_spec(std::size_t job_count) {
  EvaluationSpec spec;
  spec.methods = {"baseline", "FGSM", "I-FGSM", "MI-FGSM", "PGD", "MEP", "I-MEP"};
  spec.jobs = job_count;
  return spec;
}

MetricReport first_table;
std::string first_json;

Outcome effectiveness() {
  const EvaluationSpec spec = table_spec(jobs());
  first_table = evaluate(spec);
  first_json = report_to_json(first_table, spec.attack);
  const double base = first_table.baseline_eer_percent;
  bool ok = true;
  std::string detail = fmt("baseline %.2f%%;", base);
  for (const auto& row : first_table.rows) {
    if (row.method == "baseline") continue;
    const bool row_ok = row.eer_percent >= 5.0 * base && row.eer_percent >= base + 10.0;
    ok = ok && row_ok;
    detail += " " + row.method + fmt(" %.2f%%", row.eer_percent) + (row_ok ? "" : "(low)");
  }
  return {ok && first_table.rows.size() == 7, detail};
}

Outcome determinism() {
  // Second run with a different worker count; the merge order is fixed.
  const EvaluationSpec spec = table_spec(jobs() > 1 ? 1 : 2);
  if (first_json.empty()) first_json = report_to_json(evaluate(table_spec(jobs())), spec.attack);
  const std::string second = report_to_json(evaluate(spec), spec.attack);
  return {second == first_json,
          fmt("%.0f bytes, ", static_cast<double>(second.size())) + (second == first_json ? "identical" : "differ")};
}

Outcome eer_oracle() {
  oracle::Rand r(808);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t ng = 1 + r.index(25), ni = 1 + r.index(25);
    std::vector<double> g(ng), im(ni);
    const double overlap = r.uniform(0.0, 1.0);
    for (double& v : g) v = r.uniform(-overlap, 1.0);
    for (double& v : im) v = r.uniform(-1.0, overlap);
    if (i % 4 == 0) {
      for (double& v : g) v = std::round(v * 8.0) / 8.0;
      for (double& v : im) v = std::round(v * 8.0) / 8.0;
    }
    worst = std::max(worst, std::abs(eer(g, im) - oracle::brute_force_eer(g, im)));
  }
  return {worst <= 1e-6, fmt("max deviation %.3g points over 100 score sets (tol 1e-6)", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments pick criteria by number; all run by default.
  std::vector<int> picked;
  for (int i = 1; i < argc; ++i) picked.push_back(std::atoi(argv[i]));
  const auto wanted = [&](int id) { return picked.empty() || std::find(picked.begin(), picked.end(), id) != picked.end(); };

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {1, "stft reconstruction", 10, reconstruction},
      {2, "gradient vs finite differences", 60, gradient},
      {3, "mask oracle equivalence", 10, mask_oracle},
      {4, "budget and mask confinement", 120, budget},
      {5, "quality ordering", 300, quality},
      {6, "attack effectiveness", 600, effectiveness},
      {7, "eer oracle", 10, eer_oracle},
      {8, "determinism", 1200, determinism},
  };
  bool ok = true;
  for (const Criterion& c : criteria) {
    if (wanted(c.id)) ok &= report(c.id, c.name, c.budget_s, c.check);
  }
  std::printf("%s\n", ok ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED");
  return ok ? 0 : 1;
}
