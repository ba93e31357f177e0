#include "mep/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "mep/error.hpp"

namespace mep {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Portable draws on top of mt19937_64; the standard distributions are not
// specified bit-exactly across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = a * 0x9e3779b97f4a7c15ull + b + 0x632be59bd9b4e019ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct Voice {
  double f0;
  std::array<double, 3> formant_hz;
  std::array<double, 3> bandwidth_hz;
  double tilt;
  double noise_cutoff_hz;
};

Voice make_voice(std::uint64_t corpus_seed, std::size_t speaker) {
  Rng rng(mix(corpus_seed, 0x5eed0000ull + speaker));
  Voice v;
  // Geometric pitch ladder keeps speakers apart; wraps after ten voices.
  v.f0 = 95.0 * std::pow(1.14, static_cast<double>(speaker % 10)) * rng.uniform(0.98, 1.02);
  v.formant_hz = {rng.uniform(300, 900), rng.uniform(900, 2200), rng.uniform(2000, 3500)};
  v.bandwidth_hz = {rng.uniform(60, 200), rng.uniform(60, 200), rng.uniform(60, 200)};
  v.tilt = 0.6 + 0.12 * static_cast<double>((speaker * 3) % 8);
  v.noise_cutoff_hz = rng.uniform(500, 6000);
  return v;
}

double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

void CorpusSpec::validate() const {
  if (speakers < 2) throw Error(ErrorCode::kInvalidConfig, "corpus needs at least 2 speakers");
  if (utterances_per_speaker < 2) {
    throw Error(ErrorCode::kInvalidConfig, "corpus needs at least 2 utterances per speaker");
  }
  if (!(duration_s * kSampleRate >= 2.0 * 400)) {
    throw Error(ErrorCode::kInvalidConfig, "utterance duration too short for two frames");
  }
  if (!(peak_level > 0.0 && peak_level <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "peak_level must be in (0, 1]");
  }
}

WaveBuffer synthesize_utterance(const CorpusSpec& spec, std::size_t speaker, std::size_t index) {
  const Voice voice = make_voice(spec.seed, speaker);
  Rng rng(mix(mix(spec.seed, speaker + 1), index + 0x1000));

  const auto n = static_cast<std::size_t>(std::lround(spec.duration_s * kSampleRate));
  const double fs = kSampleRate;

  const double jitter = 1.0 + 0.01 * rng.normal();
  const double vibrato_hz = rng.uniform(2.0, 5.0);
  std::vector<double> phase(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    acc += voice.f0 * (jitter + 0.01 * std::sin(kTwoPi * vibrato_hz * t)) / fs;
    phase[i] = kTwoPi * acc;
  }

  std::vector<double> harmonic(n, 0.0);
  for (int h = 1; h * voice.f0 <= 7500.0; ++h) {
    const double fh = h * voice.f0;
    double gain = 0.0;
    for (std::size_t f = 0; f < 3; ++f) {
      const double r = (fh - voice.formant_hz[f]) / voice.bandwidth_hz[f];
      gain += 1.0 / (1.0 + r * r);
    }
    gain /= std::pow(static_cast<double>(h), voice.tilt);
    const double offset = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) harmonic[i] += gain * std::sin(h * phase[i] + offset);
  }

  std::vector<double> breath(n);
  const double pole = std::exp(-kTwoPi * voice.noise_cutoff_hz / fs);
  double state = 0.0;
  for (double& b : breath) {
    state = (1.0 - pole) * rng.normal() + pole * state;
    b = state;
  }

  const double harmonic_rms = rms(harmonic);
  const double breath_rms = rms(breath);
  const double syllable_hz = rng.uniform(2.0, 4.0);
  const double syllable_phase = rng.uniform(0.0, 6.0);

  WaveBuffer wave;
  wave.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double env = 0.15 + 0.85 * std::sqrt(std::max(0.0, std::sin(kTwoPi * syllable_hz * t + syllable_phase)));
    const double voiced = harmonic[i] / harmonic_rms + 0.1 * breath[i] / breath_rms;
    wave.samples[i] = voiced * env + 0.01 * rng.normal();
    peak = std::max(peak, std::abs(wave.samples[i]));
  }
  for (double& s : wave.samples) s *= spec.peak_level / peak;
  return wave;
}

std::vector<Utterance> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::vector<Utterance> corpus;
  corpus.reserve(spec.speakers * spec.utterances_per_speaker);
  for (std::size_t s = 0; s < spec.speakers; ++s) {
    for (std::size_t u = 0; u < spec.utterances_per_speaker; ++u) {
      corpus.push_back({s, u, synthesize_utterance(spec, s, u)});
    }
  }
  return corpus;
}

}  // namespace mep
