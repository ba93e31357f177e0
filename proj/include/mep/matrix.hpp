#pragma once

#include <cassert>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "mep/error.hpp"

namespace mep {

/// Dense row-major matrix of doubles. Frames index rows throughout the
/// library, so a spectrogram row is one STFT frame.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShapeMismatch, what);
}

double max_abs(const Matrix& m);

// MEPM dump: magic "MEPM", u32 rows, u32 cols, rows*cols float32, all
// little-endian, row-major.
void write_mepm(const Matrix& m, const std::filesystem::path& path);
Matrix read_mepm(const std::filesystem::path& path);
void write_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace mep
