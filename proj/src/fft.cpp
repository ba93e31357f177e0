#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <new>

namespace mep::detail {
namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  const int n = static_cast<int>(size);
  real_ = fftw_alloc_real(size);
  auto* spec = fftw_alloc_complex(size / 2 + 1);
  spectrum_ = spec;
  if (real_ == nullptr || spec == nullptr) throw std::bad_alloc();
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real_, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  }
  fftw_free(real_);
  fftw_free(spectrum_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.end(), real_);
  std::fill(real_ + in.size(), real_ + size_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  const auto* spec = static_cast<const fftw_complex*>(spectrum_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec[k][0], spec[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  auto* spec = static_cast<fftw_complex*>(spectrum_);
  for (std::size_t k = 0; k < size_ / 2 + 1; ++k) {
    spec[k][0] = in[k].real();
    spec[k][1] = in[k].imag();
  }
  // c2r assumes a Hermitian input; DC and Nyquist must be real.
  spec[0][1] = 0.0;
  spec[size_ / 2][1] = 0.0;
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(size_);
  const std::size_t n = std::min(out.size(), size_);
  for (std::size_t i = 0; i < n; ++i) out[i] = real_[i] * scale;
}

}  // namespace mep::detail
