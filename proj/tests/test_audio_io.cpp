#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "mep/audio_io.hpp"
#include "mep/error.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mep;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mep_audio_io_test";
  fs::create_directories(dir);
  return dir / name;
}

// Hand-assembled RIFF file so the reader is not only tested against the writer.
void write_raw_wav(const fs::path& path, std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                   std::uint16_t bits, const std::string& payload) {
  std::string out = "RIFF";
  const auto u32 = [&](std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); };
  const auto u16 = [&](std::uint16_t v) { out.append(reinterpret_cast<const char*>(&v), 2); };
  u32(36 + static_cast<std::uint32_t>(payload.size()));
  out += "WAVEfmt ";
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  out += "data";
  u32(static_cast<std::uint32_t>(payload.size()));
  out += payload;
  std::ofstream(path, std::ios::binary) << out;
}

template <typename T>
std::string pack(const std::vector<T>& values) {
  return std::string(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(T));
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected mep::Error");
  return ErrorCode::kIoFailure;
}

}  // namespace

TEST_CASE("pcm16 samples are normalized by 32768") {
  const auto path = temp_path("pcm.wav");
  write_raw_wav(path, 1, 1, 16000, 16, pack(std::vector<std::int16_t>{0, 16384, -32768}));
  const WaveBuffer w = read_wav(path);
  REQUIRE(w.samples.size() == 3);
  CHECK(w.samples[0] == 0.0);
  CHECK(w.samples[1] == 0.5);
  CHECK(w.samples[2] == -1.0);
  CHECK(w.sample_rate == 16000);
}

TEST_CASE("float32 samples pass through unchanged") {
  const auto path = temp_path("float.wav");
  write_raw_wav(path, 3, 1, 16000, 32, pack(std::vector<float>{0.25f, -0.25f}));
  const WaveBuffer w = read_wav(path);
  REQUIRE(w.samples.size() == 2);
  CHECK(w.samples[0] == 0.25);
  CHECK(w.samples[1] == -0.25);
}

TEST_CASE("unsupported layouts are rejected") {
  const auto path = temp_path("bad.wav");
  const std::string payload = pack(std::vector<std::int16_t>(800, 0));

  write_raw_wav(path, 1, 1, 44100, 16, payload);
  CHECK(code_of([&] { read_wav(path); }) == ErrorCode::kUnsupportedFormat);

  write_raw_wav(path, 1, 2, 16000, 16, payload);
  CHECK(code_of([&] { read_wav(path); }) == ErrorCode::kUnsupportedFormat);

  write_raw_wav(path, 1, 1, 16000, 8, payload);
  CHECK(code_of([&] { read_wav(path); }) == ErrorCode::kUnsupportedFormat);

  write_raw_wav(path, 1, 1, 16000, 16, "");
  CHECK(code_of([&] { read_wav(path); }) == ErrorCode::kEmptyAudio);

  std::ofstream(path, std::ios::binary) << "RIFX0000WAVE";
  CHECK(code_of([&] { read_wav(path); }) == ErrorCode::kMalformedContainer);

  CHECK(code_of([&] { read_wav(temp_path("missing.wav")); }) == ErrorCode::kIoFailure);
}

TEST_CASE("write then read a 440 Hz sine stays within one quantization step") {
  WaveBuffer w;
  for (int i = 0; i < 16000; ++i) w.samples.push_back(0.8 * std::sin(2 * std::numbers::pi * 440 * i / 16000.0));
  const auto path = temp_path("sine.wav");
  write_wav(w, path);
  const WaveBuffer back = read_wav(path);
  REQUIRE(back.samples.size() == w.samples.size());
  double worst = 0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) worst = std::max(worst, std::abs(back.samples[i] - w.samples[i]));
  CHECK(worst <= std::ldexp(1.0, -15));
}

TEST_CASE("out-of-range samples are clamped before quantization") {
  WaveBuffer w;
  w.samples = {0.0, 1.7, -3.0};
  const auto path = temp_path("clamp.wav");
  write_wav(w, path);
  const WaveBuffer back = read_wav(path);
  CHECK(std::abs(back.samples[1] - 1.0) <= std::ldexp(1.0, -15));
  CHECK(back.samples[2] == -1.0);

  write_wav(w, path, WavEncoding::kFloat32);
  CHECK(read_wav(path).samples[1] == 1.0);
}

TEST_CASE("empty buffers cannot be written") {
  CHECK(code_of([&] { write_wav(WaveBuffer{}, temp_path("empty.wav")); }) == ErrorCode::kEmptyAudio);
}

TEST_CASE("write failures surface as IoFailure") {
  WaveBuffer w;
  w.samples = {0.1};
  CHECK(code_of([&] { write_wav(w, "/nonexistent-dir/x.wav"); }) == ErrorCode::kIoFailure);
}

TEST_CASE("round trip property over random buffers") {
  oracle::Rand r(5);
  for (int trial = 0; trial < 20; ++trial) {
    const WaveBuffer w = oracle::random_wave(r, 400 + r.index(2000));
    const auto pcm = temp_path("prop.wav");
    write_wav(w, pcm);
    const WaveBuffer a = read_wav(pcm);
    write_wav(w, pcm, WavEncoding::kFloat32);
    const WaveBuffer b = read_wav(pcm);
    REQUIRE(a.samples.size() == w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      CHECK(std::abs(a.samples[i] - w.samples[i]) <= std::ldexp(1.0, -15));
      CHECK(std::abs(b.samples[i] - w.samples[i]) <= 1e-7);
    }
    CHECK_NOTHROW(validate(a));
  }
}

TEST_CASE("validate enforces the attack-input invariants") {
  WaveBuffer w;
  w.samples.assign(399, 0.1);
  CHECK(code_of([&] { validate(w); }) == ErrorCode::kTooShort);
  w.samples.assign(400, 0.1);
  CHECK_NOTHROW(validate(w));
  w.sample_rate = 8000;
  CHECK(code_of([&] { validate(w); }) == ErrorCode::kUnsupportedFormat);
  w.sample_rate = 16000;
  w.samples[3] = std::nan("");
  CHECK(code_of([&] { validate(w); }) == ErrorCode::kInvalidShape);
  CHECK(code_of([&] { validate(WaveBuffer{}); }) == ErrorCode::kEmptyAudio);
}
