#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace mep {

/// Flat key=value file. '#' starts a comment; keys are case-sensitive and
/// '-' is folded to '_' so "eta-th" and "eta_th" name the same key.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

}  // namespace mep
