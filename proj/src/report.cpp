#include "mep/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace mep {
namespace {

using Json = nlohmann::ordered_json;

Json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::string report_to_json(const MetricReport& report, const AttackConfig& attack) {
  Json doc;
  doc["schema"] = "mep-report/1";
  doc["corpus"] = {
      {"speakers", report.corpus.speakers},
      {"utterances_per_speaker", report.corpus.utterances_per_speaker},
      {"duration_s", report.corpus.duration_s},
      {"seed", report.corpus.seed},
      {"peak_level", report.corpus.peak_level},
  };
  doc["encoder_seed"] = report.encoder_seed;
  doc["attack"] = {
      {"epsilon", attack.epsilon},
      {"iterations", attack.iterations},
      {"alpha", attack.step()},
      {"momentum_decay", attack.momentum_decay},
      {"random_start", attack.random_start},
      {"mep_mode", std::string(to_string(attack.mep_mode))},
      {"seed", attack.rng_seed},
  };
  doc["baseline_eer_percent"] = report.baseline_eer_percent;

  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json per_utt = Json::array();
    for (double s : r.snr_db_per_utterance) per_utt.push_back(number(s));
    rows.push_back({
        {"method", r.method},
        {"epsilon", r.epsilon},
        {"iterations", r.iterations},
        {"alpha", r.alpha},
        {"eta_th", r.eta_th},
        {"mep_mode", r.mep_mode},
        {"snr_db_mean", number(r.snr_db_mean)},
        {"snr_db_per_utterance", per_utt},
        {"lsd_db_mean", r.lsd_db_mean},
        {"eer_percent", r.eer_percent},
        {"baseline_eer_percent", r.baseline_eer_percent},
        {"pesq", nullptr},
        {"delta_linf_max", r.delta_linf_max},
        {"budget_ok", r.budget_ok},
        {"loss_initial_mean", r.loss_initial_mean},
        {"loss_final_mean", r.loss_final_mean},
    });
  }
  doc["results"] = rows;
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const MetricReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "method,pesq,snr_db,lsd_db,eer_percent\n";
  for (const auto& r : report.rows) {
    out << r.method << ",,";
    if (std::isinf(r.snr_db_mean)) {
      out << "inf";
    } else {
      out << r.snr_db_mean;
    }
    out << ',' << r.lsd_db_mean << ',' << r.eer_percent << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

}  // namespace mep
