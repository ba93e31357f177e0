#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace mep::detail {

/// Real-input FFT of fixed size backed by FFTW. Each instance owns its plan
/// and scratch buffers; use one instance per thread.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return size_; }

  /// out has size/2 + 1 entries. Unnormalized forward transform.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Inverse of forward, including the 1/size normalization.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t size_;
  double* real_ = nullptr;
  void* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace mep::detail
