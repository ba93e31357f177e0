#include "mep/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace mep {

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

EvaluationContext prepare_evaluation(const std::vector<Utterance>& corpus, const EncoderState& enc,
                                     const MelFilterbank& fb, std::size_t jobs, const StftConfig& stft_cfg) {
  EvaluationContext ctx;
  ctx.corpus = &corpus;
  ctx.encoder = &enc;
  ctx.filterbank = &fb;
  ctx.stft = stft_cfg;

  std::size_t speakers = 0;
  for (const auto& u : corpus) speakers = std::max(speakers, u.speaker + 1);
  std::vector<std::size_t> speaker_of(corpus.size());
  std::vector<std::size_t> enroll(speakers, corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    speaker_of[i] = corpus[i].speaker;
    if (enroll[corpus[i].speaker] == corpus.size()) enroll[corpus[i].speaker] = i;
  }
  ctx.trials = full_trial_set(speaker_of, enroll);

  ctx.clean_embeddings.resize(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    ctx.clean_embeddings[i] = embed(enc, power(stft(corpus[i].wave, stft_cfg)).energy, fb);
  });
  for (std::size_t s = 0; s < speakers; ++s) ctx.enroll_embeddings.push_back(ctx.clean_embeddings[enroll[s]]);

  const TrialScores scores = score_trials(ctx.trials, ctx.enroll_embeddings, ctx.clean_embeddings);
  ctx.baseline_eer_percent = eer(scores.genuine, scores.imposter);
  return ctx;
}

MethodReport evaluate_attack(const EvaluationContext& ctx, const std::optional<AttackConfig>& attack,
                             const MaskConfig& mask_cfg, std::size_t jobs) {
  const auto& corpus = *ctx.corpus;
  MethodReport report;
  report.baseline_eer_percent = ctx.baseline_eer_percent;
  report.eta_th = mask_cfg.resolved_eta_th();
  if (!attack) {
    report.method = "baseline";
    report.eer_percent = ctx.baseline_eer_percent;
    report.snr_db_per_utterance.assign(ctx.trials.test_utterances.size(), kInfiniteSnr);
    report.snr_db_mean = kInfiniteSnr;
    return report;
  }

  attack->validate();
  report.method = std::string(to_string(attack->method));
  report.epsilon = attack->epsilon;
  report.iterations = attack->iterations;
  report.alpha = attack->step();
  report.mep_mode = std::string(to_string(attack->mep_mode));

  const auto& tests = ctx.trials.test_utterances;
  struct Outcome {
    double snr = 0.0, lsd = 0.0, linf = 0.0, loss0 = 0.0, loss1 = 0.0;
    Embedding embedding;
  };
  std::vector<Outcome> outcomes(tests.size());
  parallel_for(tests.size(), jobs, [&](std::size_t t) {
    const Utterance& utt = corpus[tests[t]];
    const Embedding& target = ctx.enroll_embeddings[utt.speaker];
    AttackConfig cfg = *attack;
    cfg.rng_seed = attack->rng_seed + tests[t];
    const AttackResult r = attack_utterance(utt.wave, *ctx.encoder, *ctx.filterbank, target, cfg, mask_cfg, ctx.stft);

    Outcome& o = outcomes[t];
    const Matrix clean_power = power(stft(utt.wave, ctx.stft)).energy;
    const Matrix adv_power = power(stft(r.adversarial, ctx.stft)).energy;
    o.snr = snr(utt.wave, r.adversarial);
    o.lsd = lsd(clean_power, adv_power);
    o.linf = max_abs(r.delta);
    o.loss0 = r.loss_trace.front();
    o.loss1 = r.final_loss;
    o.embedding = embed(*ctx.encoder, adv_power, *ctx.filterbank);
  });

  std::vector<Embedding> embeddings = ctx.clean_embeddings;
  double snr_sum = 0.0, lsd_sum = 0.0, loss0 = 0.0, loss1 = 0.0;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const Outcome& o = outcomes[t];
    embeddings[tests[t]] = o.embedding;
    report.snr_db_per_utterance.push_back(o.snr);
    snr_sum += o.snr;
    lsd_sum += o.lsd;
    loss0 += o.loss0;
    loss1 += o.loss1;
    report.delta_linf_max = std::max(report.delta_linf_max, o.linf);
  }
  const double n = static_cast<double>(tests.size());
  report.snr_db_mean = snr_sum / n;
  report.lsd_db_mean = lsd_sum / n;
  report.loss_initial_mean = loss0 / n;
  report.loss_final_mean = loss1 / n;
  report.budget_ok = report.delta_linf_max <= attack->epsilon;

  const TrialScores scores = score_trials(ctx.trials, ctx.enroll_embeddings, embeddings);
  report.eer_percent = eer(scores.genuine, scores.imposter);
  return report;
}

MetricReport evaluate(const EvaluationSpec& spec) {
  const auto corpus = generate_corpus(spec.corpus);
  const EncoderState enc(spec.encoder_seed);
  const MelFilterbank fb;
  const EvaluationContext ctx = prepare_evaluation(corpus, enc, fb, spec.jobs);

  MetricReport report;
  report.corpus = spec.corpus;
  report.encoder_seed = spec.encoder_seed;
  report.baseline_eer_percent = ctx.baseline_eer_percent;
  for (const auto& name : spec.methods) {
    if (name == "baseline") {
      report.rows.push_back(evaluate_attack(ctx, std::nullopt, spec.mask, spec.jobs));
      continue;
    }
    AttackConfig cfg = spec.attack;
    cfg.method = parse_method(name);
    report.rows.push_back(evaluate_attack(ctx, cfg, spec.mask, spec.jobs));
  }
  return report;
}

}  // namespace mep
