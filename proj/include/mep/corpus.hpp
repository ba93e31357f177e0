#pragma once

#include <cstdint>
#include <vector>

#include "mep/audio_io.hpp"

namespace mep {

/// Small stand-in for a speech corpus. Each synthetic speaker is a harmonic
/// source with its own pitch and formant resonances over low-passed breath
/// noise. Utterances of one speaker differ only in seeded per-utterance
/// variation such as jitter and the syllable envelope.
struct CorpusSpec {
  std::size_t speakers = 8;
  std::size_t utterances_per_speaker = 10;
  double duration_s = 1.0;
  std::uint64_t seed = 2024;
  /// Peak absolute amplitude of every utterance. The attack budget is an
  /// absolute power-domain quantity, so this sets how strong a fixed
  /// epsilon is relative to the speech energy.
  double peak_level = 0.002;

  void validate() const;
};

struct Utterance {
  std::size_t speaker = 0;
  std::size_t index = 0;  ///< position within the speaker
  WaveBuffer wave;
};

/// Speaker-major order: utterance u of speaker s sits at s * per_speaker + u.
std::vector<Utterance> generate_corpus(const CorpusSpec& spec);

WaveBuffer synthesize_utterance(const CorpusSpec& spec, std::size_t speaker, std::size_t index);

}  // namespace mep
