#include "mep/audio_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mep/error.hpp"

namespace mep {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV serialization assumes a little-endian host");

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace

void validate(const WaveBuffer& wave) {
  if (wave.sample_rate != kSampleRate) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "sample rate " + std::to_string(wave.sample_rate) + " Hz, expected 16000");
  }
  if (wave.samples.empty()) throw Error(ErrorCode::kEmptyAudio, "no samples");
  if (wave.samples.size() < kMinSamples) {
    throw Error(ErrorCode::kTooShort, std::to_string(wave.samples.size()) +
                                          " samples, need at least one 400-sample window");
  }
  if (!std::all_of(wave.samples.begin(), wave.samples.end(),
                   [](double s) { return std::isfinite(s); })) {
    throw Error(ErrorCode::kInvalidShape, "non-finite sample");
  }
}

WaveBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kMalformedContainer, path.string() + " is not RIFF/WAVE");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* payload = nullptr;
  std::size_t payload_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = data + pos;
    const std::uint32_t chunk_size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (chunk_size > size - body) {
      throw Error(ErrorCode::kMalformedContainer, "chunk overruns file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw Error(ErrorCode::kMalformedContainer, "short fmt chunk");
      format = read_u16(data + body);
      channels = read_u16(data + body + 2);
      rate = read_u32(data + body + 4);
      bits = read_u16(data + body + 14);
      if (format == kFormatExtensible && chunk_size >= 26) {
        // First two bytes of the subformat GUID carry the real format tag.
        format = read_u16(data + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      payload = data + body;
      payload_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt || payload == nullptr) {
    throw Error(ErrorCode::kMalformedContainer, "missing fmt or data chunk");
  }
  if (channels != 1) {
    throw Error(ErrorCode::kUnsupportedFormat, std::to_string(channels) + " channels, expected mono");
  }
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "sample rate " + std::to_string(rate) + " Hz, expected 16000");
  }

  WaveBuffer wave;
  wave.sample_rate = kSampleRate;
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = payload_size / 2;
    wave.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(read_u16(payload + 2 * i));
      wave.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = payload_size / 4;
    wave.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, payload + 4 * i, sizeof f);
      if (!std::isfinite(f)) throw Error(ErrorCode::kMalformedContainer, "non-finite float sample");
      wave.samples[i] = f;
    }
  } else {
    throw Error(ErrorCode::kUnsupportedFormat, "audio format " + std::to_string(format) + " with " +
                                                   std::to_string(bits) + " bits per sample");
  }
  if (wave.samples.empty()) throw Error(ErrorCode::kEmptyAudio, path.string());
  return wave;
}

void write_wav(const WaveBuffer& wave, const std::filesystem::path& path, WavEncoding encoding) {
  if (wave.samples.empty()) throw Error(ErrorCode::kEmptyAudio, "refusing to write empty buffer");
  if (wave.sample_rate != kSampleRate) {
    throw Error(ErrorCode::kUnsupportedFormat, "only 16 kHz output is supported");
  }

  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint16_t block_align = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(wave.samples.size() * block_align);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * block_align);
  put_u16(out, block_align);
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_size);

  for (double s : wave.samples) {
    const double clamped = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
    if (pcm) {
      const long q = std::lround(clamped * 32768.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
    } else {
      const auto f = static_cast<float>(clamped);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put_u32(out, u);
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

}  // namespace mep
