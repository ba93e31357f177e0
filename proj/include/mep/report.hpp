#pragma once

#include <filesystem>
#include <string>

#include "mep/evaluation.hpp"

namespace mep {

/// JSON text with a stable key order; non-finite SNR values are written as
/// the string "inf". Equal reports serialize to identical bytes.
std::string report_to_json(const MetricReport& report, const AttackConfig& attack);

/// One row per method: method,pesq,snr_db,lsd_db,eer_percent.
std::string report_to_csv(const MetricReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mep
