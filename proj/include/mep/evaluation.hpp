#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mep/attacks.hpp"
#include "mep/corpus.hpp"
#include "mep/encoder.hpp"
#include "mep/metrics.hpp"
#include "mep/sem_mask.hpp"
#include "mep/spectral.hpp"

namespace mep {

/// One row of the comparison table. method == "baseline" is the clean run.
struct MethodReport {
  std::string method;
  double epsilon = 0.0;
  int iterations = 0;
  double alpha = 0.0;
  double eta_th = 0.0;
  std::string mep_mode;
  std::vector<double> snr_db_per_utterance;
  double snr_db_mean = 0.0;
  double lsd_db_mean = 0.0;
  double eer_percent = 0.0;
  double baseline_eer_percent = 0.0;
  double delta_linf_max = 0.0;
  bool budget_ok = true;
  double loss_initial_mean = 0.0;
  double loss_final_mean = 0.0;
};

struct MetricReport {
  CorpusSpec corpus;
  std::uint64_t encoder_seed = 0;
  double baseline_eer_percent = 0.0;
  std::vector<MethodReport> rows;
};

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written to per-index slots so the outcome is independent of scheduling.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Everything evaluate_attack needs about the clean corpus, computed once.
struct EvaluationContext {
  const std::vector<Utterance>* corpus = nullptr;
  const EncoderState* encoder = nullptr;
  const MelFilterbank* filterbank = nullptr;
  StftConfig stft;
  TrialSet trials;
  std::vector<Embedding> clean_embeddings;   ///< indexed by utterance
  std::vector<Embedding> enroll_embeddings;  ///< indexed by speaker
  double baseline_eer_percent = 0.0;
};

/// Enrolls the first utterance of every speaker; all others are tests.
EvaluationContext prepare_evaluation(const std::vector<Utterance>& corpus, const EncoderState& enc,
                                     const MelFilterbank& fb, std::size_t jobs = 1,
                                     const StftConfig& stft = {});

/// Attacks every test utterance away from its speaker's enrollment
/// embedding, re-embeds the resynthesized audio and scores all trials.
/// std::nullopt for attack runs the clean baseline.
MethodReport evaluate_attack(const EvaluationContext& ctx, const std::optional<AttackConfig>& attack,
                             const MaskConfig& mask_cfg, std::size_t jobs = 1);

struct EvaluationSpec {
  CorpusSpec corpus;
  std::vector<std::string> methods;  ///< "baseline" and/or attack names
  AttackConfig attack;               ///< method field ignored
  MaskConfig mask;
  std::uint64_t encoder_seed = 0;
  std::size_t jobs = 1;
};

MetricReport evaluate(const EvaluationSpec& spec);

}  // namespace mep
