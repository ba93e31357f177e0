#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mep/matrix.hpp"
#include "mep/spectral.hpp"

namespace mep {

using MelBackwardFn = std::function<Matrix(const Matrix&, const MelFeatures&, const MelFilterbank&)>;

struct SelfcheckOptions {
  /// Replaces mel_backward inside the gradient suites; used to prove the
  /// checks catch a broken backward pass.
  MelBackwardFn mel_backward_override;
};

struct SuiteResult {
  std::string name;
  std::size_t passed = 0;
  std::size_t total = 0;
  std::vector<std::string> failures;

  bool ok() const { return passed == total; }
};

std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& options = {});

/// A deliberately wrong mel_backward (drops the 1/mel factor).
Matrix corrupted_mel_backward(const Matrix& grad_log_mel, const MelFeatures& features, const MelFilterbank& fb);

}  // namespace mep
