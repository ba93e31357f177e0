// Command-line front end. One subcommand per task, see --help.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mep/attacks.hpp"
#include "mep/audio_io.hpp"
#include "mep/config.hpp"
#include "mep/corpus.hpp"
#include "mep/encoder.hpp"
#include "mep/evaluation.hpp"
#include "mep/metrics.hpp"
#include "mep/report.hpp"
#include "mep/selfcheck.hpp"
#include "mep/sem_mask.hpp"
#include "mep/spectral.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config_path;

  // shared
  std::string out_dir = ".";
  std::string format = "json";
  std::uint64_t seed = 0;
  std::uint64_t encoder_seed = 0;

  // mask
  double eta_th = -20.0;
  double peak_exclusion = 0.05;
  bool rescale = false;
  std::vector<double> random_eta;

  // attack
  std::string input;
  std::string target_wav;
  std::string target_embedding;
  std::string method = "I-MEP";
  double epsilon = 0.0002;
  int iterations = 20;
  double alpha = 0.0;
  double momentum_decay = 1.0;
  bool no_random_start = false;
  std::string mep_mode = "gradient-mask";
  bool float_output = false;

  // evaluate
  std::string methods = "baseline,FGSM,I-FGSM,MI-FGSM,PGD,MEP,I-MEP";
  std::size_t speakers = 8;
  std::size_t utterances = 10;
  double duration = 1.0;
  std::uint64_t corpus_seed = 2024;
  double peak_level = 0.002;
  std::size_t jobs = 0;

  // selfcheck
  std::string inject_fault;
};

// Fills options the user did not pass on the command line from the config
// file. Flags always win.
class ConfigMerger {
 public:
  ConfigMerger(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  template <typename T>
  void apply(const CLI::App& cmd, const std::string& key, T& target) {
    const std::string flag = "--" + dashed(key);
    const CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option(flag);
    } catch (const CLI::OptionNotFound&) {
      return;
    }
    const auto it = values_.find(key);
    if (it == values_.end() || opt->count() > 0) return;
    std::istringstream in(it->second);
    if constexpr (std::is_same_v<T, bool>) {
      const std::string& v = it->second;
      target = v == "1" || v == "true" || v == "yes" || v == "on";
    } else if constexpr (std::is_same_v<T, std::string>) {
      target = it->second;
    } else {
      in >> target;
      if (!in || !in.eof()) throw mep::Error(mep::ErrorCode::kInvalidConfig, "bad value for config key " + key);
    }
  }

 private:
  static std::string dashed(std::string key) {
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    return key;
  }
  std::map<std::string, std::string> values_;
};

void merge_config(const CLI::App& cmd, Options& o) {
  if (o.config_path.empty()) return;
  ConfigMerger m(mep::read_config(o.config_path));
  m.apply(cmd, "out_dir", o.out_dir);
  m.apply(cmd, "format", o.format);
  m.apply(cmd, "seed", o.seed);
  m.apply(cmd, "encoder_seed", o.encoder_seed);
  m.apply(cmd, "eta_th", o.eta_th);
  m.apply(cmd, "peak_exclusion", o.peak_exclusion);
  m.apply(cmd, "method", o.method);
  m.apply(cmd, "epsilon", o.epsilon);
  m.apply(cmd, "iterations", o.iterations);
  m.apply(cmd, "alpha", o.alpha);
  m.apply(cmd, "momentum_decay", o.momentum_decay);
  m.apply(cmd, "mep_mode", o.mep_mode);
  m.apply(cmd, "methods", o.methods);
  m.apply(cmd, "speakers", o.speakers);
  m.apply(cmd, "utterances", o.utterances);
  m.apply(cmd, "duration", o.duration);
  m.apply(cmd, "corpus_seed", o.corpus_seed);
  m.apply(cmd, "peak_level", o.peak_level);
  m.apply(cmd, "jobs", o.jobs);
}

mep::MaskConfig mask_config(const Options& o) {
  mep::MaskConfig cfg;
  cfg.eta_th = o.eta_th;
  cfg.peak_exclusion_fraction = o.peak_exclusion;
  cfg.rescale_unmasked = o.rescale;
  if (!o.random_eta.empty()) {
    if (o.random_eta.size() != 2) throw mep::Error(mep::ErrorCode::kInvalidConfig, "--random-eta takes LOW,HIGH");
    cfg.random_threshold = mep::RandomThreshold{o.random_eta[0], o.random_eta[1], o.seed};
  }
  cfg.validate();
  return cfg;
}

mep::AttackConfig attack_config(const Options& o) {
  mep::AttackConfig cfg;
  cfg.method = mep::parse_method(o.method);
  cfg.epsilon = o.epsilon;
  cfg.iterations = o.iterations;
  if (o.alpha > 0.0) cfg.alpha = o.alpha;
  if (o.epsilon == 0.0) cfg.alpha = 0.0;
  cfg.momentum_decay = o.momentum_decay;
  cfg.random_start = !o.no_random_start;
  cfg.mep_mode = mep::parse_mep_mode(o.mep_mode);
  cfg.rng_seed = o.seed;
  cfg.validate();
  return cfg;
}

void require_format(const Options& o) {
  if (o.format != "json" && o.format != "csv") {
    throw mep::Error(mep::ErrorCode::kInvalidConfig, "--format must be json or csv");
  }
}

fs::path prepare_out_dir(const Options& o) {
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw mep::Error(mep::ErrorCode::kIoFailure, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

Json finite_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

int cmd_mask(const Options& o) {
  require_format(o);
  const mep::MaskConfig cfg = mask_config(o);
  const mep::WaveBuffer wave = mep::read_wav(o.input);
  mep::validate(wave);
  const mep::PowerSpectrum x = mep::power(mep::stft(wave));
  const mep::EnergyMask mask = mep::build_mask(x, cfg);

  const fs::path dir = prepare_out_dir(o);
  mep::write_mepm(mask.mask, dir / "mask.mepm");
  if (o.format == "csv") mep::write_csv(mask.mask, dir / "mask.csv");
  spdlog::info("wrote {}", (dir / "mask.mepm").string());

  std::cout << "x_peak=" << mask.x_peak << '\n'
            << "x_th=" << mask.x_th << '\n'
            << "eta_th=" << mask.eta_th << '\n'
            << "masked_fraction=" << mask.masked_fraction() << '\n';
  return kExitOk;
}

mep::Embedding load_target(const Options& o, const mep::EncoderState& enc, const mep::MelFilterbank& fb) {
  if (!o.target_embedding.empty()) {
    const mep::Matrix m = mep::read_mepm(o.target_embedding);
    if (m.size() != mep::EncoderState::kEmbedding) {
      throw mep::Error(mep::ErrorCode::kShapeMismatch, "target embedding must hold 64 values");
    }
    return mep::normalize(m.flat());
  }
  const mep::WaveBuffer target = mep::read_wav(o.target_wav);
  mep::validate(target);
  return mep::embed(enc, mep::power(mep::stft(target)).energy, fb);
}

int cmd_attack(const Options& o) {
  require_format(o);
  if (o.target_wav.empty() == o.target_embedding.empty()) {
    throw mep::Error(mep::ErrorCode::kInvalidConfig, "give exactly one of --target-wav or --target-embedding");
  }
  const mep::AttackConfig cfg = attack_config(o);
  const mep::MaskConfig mask_cfg = mask_config(o);
  const mep::WaveBuffer wave = mep::read_wav(o.input);
  mep::validate(wave);

  const mep::EncoderState enc(o.encoder_seed);
  const mep::MelFilterbank fb;
  const mep::Embedding target = load_target(o, enc, fb);
  const mep::AttackResult r = mep::attack_utterance(wave, enc, fb, target, cfg, mask_cfg);

  const fs::path dir = prepare_out_dir(o);
  mep::write_wav(r.adversarial, dir / "adversarial.wav",
                 o.float_output ? mep::WavEncoding::kFloat32 : mep::WavEncoding::kPcm16);
  mep::write_mepm(r.delta, dir / "delta.mepm");
  mep::write_mepm(r.perturbed, dir / "perturbed.mepm");
  if (o.format == "csv") mep::write_csv(r.delta, dir / "delta.csv");
  if (r.mask) mep::write_mepm(r.mask->mask, dir / "mask.mepm");

  const double linf = mep::max_abs(r.delta);
  Json summary;
  summary["method"] = std::string(mep::to_string(cfg.method));
  summary["epsilon"] = cfg.epsilon;
  summary["iterations"] = cfg.iterations;
  summary["alpha"] = cfg.step();
  summary["eta_th"] = mask_cfg.resolved_eta_th();
  summary["mep_mode"] = std::string(mep::to_string(cfg.mep_mode));
  summary["seed"] = cfg.rng_seed;
  summary["encoder_seed"] = o.encoder_seed;
  summary["delta_linf"] = linf;
  summary["budget_ok"] = linf <= cfg.epsilon;
  summary["snr_db"] = finite_or_string(mep::snr(wave, r.adversarial));
  summary["loss_trace"] = r.loss_trace;
  summary["final_loss"] = r.final_loss;
  if (r.mask) {
    summary["x_peak"] = r.mask->x_peak;
    summary["x_th"] = r.mask->x_th;
    summary["masked_fraction"] = r.mask->masked_fraction();
  }
  const std::string text = summary.dump(2) + "\n";
  mep::write_text(dir / "summary.json", text);
  std::cout << text;
  return kExitOk;
}

std::vector<std::string> split_methods(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    if (item == "all") {
      out.push_back("baseline");
      for (auto m : mep::all_methods()) out.emplace_back(mep::to_string(m));
      continue;
    }
    if (item != "baseline") item = std::string(mep::to_string(mep::parse_method(item)));
    out.push_back(item);
  }
  if (out.empty()) throw mep::Error(mep::ErrorCode::kInvalidConfig, "--methods is empty");
  return out;
}

int cmd_evaluate(const Options& o) {
  require_format(o);
  mep::EvaluationSpec spec;
  spec.corpus.speakers = o.speakers;
  spec.corpus.utterances_per_speaker = o.utterances;
  spec.corpus.duration_s = o.duration;
  spec.corpus.seed = o.corpus_seed;
  spec.corpus.peak_level = o.peak_level;
  spec.corpus.validate();
  spec.methods = split_methods(o.methods);
  spec.attack = attack_config(o);
  spec.mask = mask_config(o);
  spec.encoder_seed = o.encoder_seed;
  spec.jobs = o.jobs > 0 ? o.jobs : std::max(1u, std::thread::hardware_concurrency());

  spdlog::info("evaluating {} method(s) on {} speakers x {} utterances with {} worker(s)", spec.methods.size(),
               spec.corpus.speakers, spec.corpus.utterances_per_speaker, spec.jobs);
  const mep::MetricReport report = mep::evaluate(spec);

  const std::string json = mep::report_to_json(report, spec.attack);
  const std::string csv = mep::report_to_csv(report);
  const fs::path dir = prepare_out_dir(o);
  mep::write_text(dir / "report.json", json);
  mep::write_text(dir / "report.csv", csv);
  std::cout << (o.format == "csv" ? csv : json);

  for (const auto& row : report.rows) {
    if (!row.budget_ok) {
      spdlog::error("{} exceeded the perturbation budget", row.method);
      return kExitFailure;
    }
  }
  return kExitOk;
}

int cmd_selfcheck(const Options& o) {
  mep::SelfcheckOptions options;
  if (o.inject_fault == "mel_backward") {
    options.mel_backward_override = mep::corrupted_mel_backward;
  } else if (!o.inject_fault.empty()) {
    throw mep::Error(mep::ErrorCode::kInvalidConfig, "unknown fault '" + o.inject_fault + "'");
  }
  bool ok = true;
  for (const auto& suite : mep::run_selfcheck(options)) {
    std::cout << (suite.ok() ? "PASS " : "FAIL ") << suite.name << " " << suite.passed << "/" << suite.total << '\n';
    for (const auto& f : suite.failures) std::cout << "  " << f << '\n';
    ok = ok && suite.ok();
  }
  return ok ? kExitOk : kExitFailure;
}

void add_output_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--out-dir", o.out_dir, "Directory for output files");
  cmd->add_option("--format", o.format, "Report format on stdout / extra CSV dumps")->check(CLI::IsMember({"json", "csv"}));
}

void add_mask_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--eta-th", o.eta_th, "Mask threshold in dB relative to the percentile peak");
  cmd->add_option("--peak-exclusion", o.peak_exclusion, "Fraction of largest energies excluded from the peak");
  cmd->add_flag("--rescale", o.rescale, "Rescale unmasked energies to preserve the total");
  cmd->add_option("--random-eta", o.random_eta, "Draw eta_th uniformly from LOW,HIGH (seeded by --seed)")->delimiter(',');
}

void add_attack_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--epsilon", o.epsilon, "Perturbation budget (max abs change per power bin)");
  cmd->add_option("--iterations", o.iterations, "Iterations for iterative methods");
  cmd->add_option("--alpha", o.alpha, "Step size (default epsilon / iterations)");
  cmd->add_option("--momentum-decay", o.momentum_decay, "MI-FGSM momentum decay");
  cmd->add_flag("--no-random-start", o.no_random_start, "Start PGD from zero");
  cmd->add_option("--mep-mode", o.mep_mode, "gradient-mask or feature-product");
  cmd->add_option("--seed", o.seed, "Seed for PGD starts and random thresholds");
  cmd->add_option("--encoder-seed", o.encoder_seed, "Seed of the speaker encoder weights");
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("mep");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("MEP_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"Energy-masked adversarial perturbations against a speaker encoder"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "key=value file; command-line flags take precedence")->check(CLI::ExistingFile);

  auto* mask = app.add_subcommand("mask", "Build the small-energy mask of a WAV file");
  mask->add_option("--input", o.input, "16 kHz mono WAV")->required();
  add_mask_flags(mask, o);
  add_output_flags(mask, o);
  mask->add_option("--seed", o.seed, "Seed for --random-eta");

  auto* attack = app.add_subcommand("attack", "Attack one utterance and write the adversarial audio");
  attack->add_option("--input", o.input, "16 kHz mono WAV")->required();
  attack->add_option("--target-wav", o.target_wav, "Utterance whose embedding the attack moves away from");
  attack->add_option("--target-embedding", o.target_embedding, "MEPM file with a 64-dim target embedding");
  attack->add_option("--method", o.method, "FGSM, I-FGSM, MI-FGSM, PGD, MEP or I-MEP");
  add_attack_flags(attack, o);
  add_mask_flags(attack, o);
  add_output_flags(attack, o);
  attack->add_flag("--float-output", o.float_output, "Write float-32 instead of PCM-16 audio");

  auto* evaluate = app.add_subcommand("evaluate", "Compare attacks on a synthetic speaker corpus");
  evaluate->add_option("--methods", o.methods, "Comma-separated list, 'baseline' and/or methods, or 'all'");
  evaluate->add_option("--speakers", o.speakers, "Synthetic speakers");
  evaluate->add_option("--utterances", o.utterances, "Utterances per speaker (first one enrolls)");
  evaluate->add_option("--duration", o.duration, "Utterance length in seconds");
  evaluate->add_option("--corpus-seed", o.corpus_seed, "Seed of the synthetic corpus");
  evaluate->add_option("--peak-level", o.peak_level, "Peak amplitude of synthetic utterances");
  evaluate->add_option("--jobs", o.jobs, "Worker threads (0 = hardware concurrency)");
  add_attack_flags(evaluate, o);
  add_mask_flags(evaluate, o);
  add_output_flags(evaluate, o);

  auto* selfcheck = app.add_subcommand("selfcheck", "Run the built-in numerical checks");
  selfcheck->add_option("--inject-fault", o.inject_fault, "Corrupt a component to exercise the checks")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    merge_config(*cmd, o);
    if (cmd == mask) return cmd_mask(o);
    if (cmd == attack) return cmd_attack(o);
    if (cmd == evaluate) return cmd_evaluate(o);
    return cmd_selfcheck(o);
  } catch (const mep::Error& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == mep::ErrorCode::kInvalidConfig ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
