#pragma once

#include <filesystem>
#include <vector>

namespace mep {

inline constexpr int kSampleRate = 16000;
inline constexpr std::size_t kMinSamples = 400;

/// Mono waveform. Samples are nominally in [-1, 1].
struct WaveBuffer {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Throws kUnsupportedFormat, kEmptyAudio or kTooShort when the buffer is
/// not acceptable as attack input.
void validate(const WaveBuffer& wave);

/// Reads a RIFF/WAVE file holding mono 16 kHz PCM-16 or float-32 audio.
/// Other layouts are rejected rather than converted.
WaveBuffer read_wav(const std::filesystem::path& path);

/// Writes the buffer, clamping samples to [-1, 1] first.
void write_wav(const WaveBuffer& wave, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace mep
