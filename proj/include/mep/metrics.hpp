#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mep/audio_io.hpp"
#include "mep/encoder.hpp"
#include "mep/matrix.hpp"

namespace mep {

/// Returned by snr() when the two signals are identical.
inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

/// 10 log10(sum clean^2 / sum (adv - clean)^2).
double snr(const WaveBuffer& clean, const WaveBuffer& adv);
double snr(std::span<const double> clean, std::span<const double> adv);

inline constexpr double kLsdFloor = 1e-10;

/// Log-spectral distortion in dB, averaged over frames.
double lsd(const Matrix& clean_power, const Matrix& adv_power);

double cosine_score(std::span<const double> e1, std::span<const double> e2);

/// Equal error rate in percent. FAR(t) counts imposter scores >= t, FRR(t)
/// genuine scores < t; t sweeps the sorted union of scores plus +inf and
/// the crossing of FAR - FRR is linearly interpolated between the two
/// bracketing thresholds. An exact zero at a threshold wins over the
/// interpolation, ties resolved toward the lower threshold.
double eer(std::span<const double> genuine, std::span<const double> imposter);

struct Trial {
  std::size_t enroll_speaker;
  std::size_t test_utterance;
  bool genuine;
};

/// Enrollment embeddings per speaker plus the trial list over test
/// utterances. Test utterances never appear in enrollment.
struct TrialSet {
  std::vector<std::size_t> enroll_utterance;  ///< indexed by speaker
  std::vector<std::size_t> test_utterances;
  std::vector<Trial> trials;

  void validate() const;
};

/// Every test utterance against every enrolled speaker.
TrialSet full_trial_set(std::span<const std::size_t> speaker_of_utterance,
                        std::span<const std::size_t> enroll_utterance);

struct TrialScores {
  std::vector<double> genuine;
  std::vector<double> imposter;
};

/// test_embeddings is indexed by utterance; only test utterances are read.
TrialScores score_trials(const TrialSet& set, std::span<const Embedding> enroll_embeddings,
                         std::span<const Embedding> test_embeddings);

}  // namespace mep
