#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <string>

#include "mep/matrix.hpp"

namespace mep {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kMalformedContainer: return "MalformedContainer";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kInvalidShape: return "InvalidShape";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonPositiveEnergy: return "NonPositiveEnergy";
    case ErrorCode::kNonPositivePeak: return "NonPositivePeak";
    case ErrorCode::kAllZeroEnergy: return "AllZeroEnergy";
    case ErrorCode::kRescaleUndefined: return "RescaleUndefined";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kDegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyTrialList: return "EmptyTrialList";
  }
  return "Unknown";
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.flat()) best = std::max(best, std::abs(v));
  return best;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "MEPM serialization assumes a little-endian host");

constexpr char kMagic[4] = {'M', 'E', 'P', 'M'};

}  // namespace

void write_mepm(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.cols());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (double v : m.flat()) {
    const auto f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

Matrix read_mepm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kMalformedContainer, path.string() + " is not an MEPM matrix");
  }
  std::uint32_t rows, cols;
  std::memcpy(&rows, bytes.data() + 4, 4);
  std::memcpy(&cols, bytes.data() + 8, 4);
  const std::size_t count = std::size_t(rows) * cols;
  if (bytes.size() != 12 + 4 * count) {
    throw Error(ErrorCode::kMalformedContainer, "payload size does not match header");
  }
  Matrix m(rows, cols);
  auto flat = m.flat();
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 12 + 4 * i, 4);
    flat[i] = f;
  }
  return m;
}

void write_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  out << std::setprecision(9);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

}  // namespace mep
