#include "mep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mep {

double snr(std::span<const double> clean, std::span<const double> adv) {
  if (clean.size() != adv.size()) {
    throw Error(ErrorCode::kLengthMismatch, "signals have different lengths");
  }
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    signal += clean[i] * clean[i];
    const double d = adv[i] - clean[i];
    noise += d * d;
  }
  if (noise == 0.0) return kInfiniteSnr;
  return 10.0 * std::log10(signal / noise);
}

double snr(const WaveBuffer& clean, const WaveBuffer& adv) {
  if (clean.sample_rate != adv.sample_rate) {
    throw Error(ErrorCode::kLengthMismatch, "signals have different sample rates");
  }
  return snr(clean.samples, adv.samples);
}

double lsd(const Matrix& clean_power, const Matrix& adv_power) {
  require_same_shape(clean_power, adv_power, "spectra differ in shape");
  if (clean_power.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < clean_power.rows(); ++m) {
    const auto x = clean_power.row(m);
    const auto y = adv_power.row(m);
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double db = 10.0 * std::log10((y[k] + kLsdFloor) / (x[k] + kLsdFloor));
      acc += db * db;
    }
    total += std::sqrt(acc / static_cast<double>(x.size()));
  }
  return total / static_cast<double>(clean_power.rows());
}

double cosine_score(std::span<const double> e1, std::span<const double> e2) {
  if (e1.size() != e2.size()) throw Error(ErrorCode::kShapeMismatch, "embedding dimensions differ");
  double dot = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) dot += e1[i] * e2[i];
  return std::clamp(dot, -1.0, 1.0);
}

double eer(std::span<const double> genuine, std::span<const double> imposter) {
  if (genuine.empty() || imposter.empty()) {
    throw Error(ErrorCode::kEmptyTrialList, "EER needs genuine and imposter scores");
  }
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(imposter.begin(), imposter.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());

  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double ng = static_cast<double>(g.size());
  const double ni = static_cast<double>(im.size());
  std::size_t gi = 0, ii = 0;  // counts of genuine / imposter scores below t
  double prev_far = 1.0, prev_diff = 0.0;
  bool have_prev = false;

  const auto step = [&](double far, double frr, double* out) {
    const double diff = far - frr;
    if (diff == 0.0) {
      *out = far;
      return true;
    }
    if (have_prev && prev_diff > 0.0 && diff < 0.0) {
      const double w = prev_diff / (prev_diff - diff);
      *out = prev_far + w * (far - prev_far);
      return true;
    }
    prev_far = far;
    prev_diff = diff;
    have_prev = true;
    return false;
  };

  double result = 0.0;
  for (double t : thresholds) {
    while (gi < g.size() && g[gi] < t) ++gi;
    while (ii < im.size() && im[ii] < t) ++ii;
    const double far = static_cast<double>(im.size() - ii) / ni;
    const double frr = static_cast<double>(gi) / ng;
    if (step(far, frr, &result)) return 100.0 * result;
  }
  // Threshold above every score: nothing accepted.
  step(0.0, 1.0, &result);
  return 100.0 * result;
}

void TrialSet::validate() const {
  const std::set<std::size_t> enrolled(enroll_utterance.begin(), enroll_utterance.end());
  for (std::size_t u : test_utterances) {
    if (enrolled.contains(u)) {
      throw Error(ErrorCode::kInvalidConfig, "test utterance " + std::to_string(u) + " is also enrolled");
    }
  }
  const bool any_genuine = std::any_of(trials.begin(), trials.end(), [](const Trial& t) { return t.genuine; });
  const bool any_imposter = std::any_of(trials.begin(), trials.end(), [](const Trial& t) { return !t.genuine; });
  if (!any_genuine || !any_imposter) {
    throw Error(ErrorCode::kEmptyTrialList, "trial set needs genuine and imposter trials");
  }
}

TrialSet full_trial_set(std::span<const std::size_t> speaker_of_utterance,
                        std::span<const std::size_t> enroll_utterance) {
  TrialSet set;
  set.enroll_utterance.assign(enroll_utterance.begin(), enroll_utterance.end());
  const std::set<std::size_t> enrolled(enroll_utterance.begin(), enroll_utterance.end());
  for (std::size_t u = 0; u < speaker_of_utterance.size(); ++u) {
    if (enrolled.contains(u)) continue;
    set.test_utterances.push_back(u);
    for (std::size_t s = 0; s < enroll_utterance.size(); ++s) {
      set.trials.push_back({s, u, speaker_of_utterance[u] == s});
    }
  }
  set.validate();
  return set;
}

TrialScores score_trials(const TrialSet& set, std::span<const Embedding> enroll_embeddings,
                         std::span<const Embedding> test_embeddings) {
  TrialScores scores;
  for (const Trial& t : set.trials) {
    const double s = cosine_score(enroll_embeddings[t.enroll_speaker], test_embeddings[t.test_utterance]);
    (t.genuine ? scores.genuine : scores.imposter).push_back(s);
  }
  return scores;
}

}  // namespace mep
