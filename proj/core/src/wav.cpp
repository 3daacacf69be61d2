#include "bindiar/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace bindiar {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open WAV file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in '" + path.string() + "'";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error("not a RIFF/WAVE file" + where);
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const auto len = read_le<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error("truncated fmt chunk" + where);
      format = read_le<std::uint16_t>(chunk + 8);
      channels = read_le<std::uint16_t>(chunk + 10);
      rate = read_le<std::uint32_t>(chunk + 12);
      bits = read_le<std::uint16_t>(chunk + 22);
      if (format == kFormatExtensible && avail >= 26) format = read_le<std::uint16_t>(chunk + 8 + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (format == 0) throw Error("missing fmt chunk" + where);
  if (data == nullptr) throw Error("missing data chunk" + where);
  if (channels != 2) throw Error("expected 2 channels, found " + std::to_string(channels) + where);
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error("unsupported sample format (format " + std::to_string(format) + ", " + std::to_string(bits) +
                " bits)" + where);
  }

  const std::size_t sample_bytes = bits / 8;
  const std::size_t frames = data_len / (sample_bytes * 2);
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.left.resize(frames);
  clip.right.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* p = data + i * sample_bytes * 2;
    if (pcm16) {
      clip.left[i] = read_le<std::int16_t>(p) / 32768.0;
      clip.right[i] = read_le<std::int16_t>(p + 2) / 32768.0;
    } else {
      clip.left[i] = read_le<float>(p);
      clip.right[i] = read_le<float>(p + 4);
    }
  }
  return clip;
}

AudioClip decimate_to(const AudioClip& clip, int target_rate) {
  clip.validate();
  if (target_rate <= 0) throw Error("resample: target rate must be positive");
  if (clip.sample_rate == target_rate) return clip;
  if (clip.sample_rate % target_rate != 0) {
    throw Error("resample: sample rate " + std::to_string(clip.sample_rate) + " Hz is not an integer multiple of " +
                std::to_string(target_rate) + " Hz");
  }
  const auto factor = static_cast<std::size_t>(clip.sample_rate / target_rate);
  AudioClip out;
  out.sample_rate = target_rate;
  const std::size_t n = (clip.size() + factor - 1) / factor;
  out.left.resize(n);
  out.right.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.left[i] = clip.left[i * factor];
    out.right[i] = clip.right[i * factor];
  }
  return out;
}

AudioClip read_wav_resampled(const std::filesystem::path& path, int target_rate) {
  return decimate_to(read_wav(path), target_rate);
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavFormat format) {
  clip.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(2 * bits / 8);
  const auto data_len = static_cast<std::uint32_t>(clip.size() * block);

  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, 2);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * block);
  put_le<std::uint16_t>(out, block);
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_len);

  for (std::size_t i = 0; i < clip.size(); ++i) {
    for (const double v : {clip.left[i], clip.right[i]}) {
      if (format == WavFormat::pcm16) {
        const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put_le<std::int16_t>(out, static_cast<std::int16_t>(s));
      } else {
        put_le<float>(out, static_cast<float>(v));
      }
    }
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace bindiar
