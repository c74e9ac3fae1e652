#include "sonicgrid/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sonicgrid/error.hpp"

namespace sonicgrid {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::vector<std::uint8_t> wav_header(std::uint16_t format, int channels, int sample_rate, int bits,
                                     std::uint32_t data_bytes) {
  std::vector<std::uint8_t> h;
  h.reserve(44);
  const auto block_align = static_cast<std::uint16_t>(channels * bits / 8);
  put_tag(h, "RIFF");
  put_u32(h, 36 + data_bytes);
  put_tag(h, "WAVE");
  put_tag(h, "fmt ");
  put_u32(h, 16);
  put_u16(h, format);
  put_u16(h, static_cast<std::uint16_t>(channels));
  put_u32(h, static_cast<std::uint32_t>(sample_rate));
  put_u32(h, static_cast<std::uint32_t>(sample_rate) * block_align);
  put_u16(h, block_align);
  put_u16(h, static_cast<std::uint16_t>(bits));
  put_tag(h, "data");
  put_u32(h, data_bytes);
  return h;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("short write to " + path.string());
}

}  // namespace

std::vector<double> WavData::channel(int c) const {
  std::vector<double> out(frames());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = samples[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
  }
  return out;
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) { return FormatError(path.string() + ": " + why); };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint8_t* chunk = buf.data() + pos;
    const std::size_t len = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > buf.size()) {
      if (std::memcmp(chunk, "data", 4) == 0) {
        data = buf.data() + body;  // tolerate a truncated final data chunk
        data_len = buf.size() - body;
        break;
      }
      throw fail("chunk overruns file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw fail("fmt chunk too short");
      format = get_u16(buf.data() + body);
      channels = get_u16(buf.data() + body + 2);
      rate = static_cast<int>(get_u32(buf.data() + body + 4));
      bits = get_u16(buf.data() + body + 14);
      if (format == kFormatExtensible) {
        if (len < 26) throw fail("extensible fmt chunk too short");
        format = get_u16(buf.data() + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = buf.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);
  }
  if (channels <= 0 || rate <= 0) throw fail("missing or invalid fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");

  WavData out;
  out.sample_rate = rate;
  out.channels = channels;
  if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_len / 4;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<double>(std::bit_cast<float>(get_u32(data + 4 * i)));
  } else if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_len / 2;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<std::int16_t>(get_u16(data + 2 * i)) / 32768.0;
    }
  } else if (format == kFormatPcm && bits == 24) {
    const std::size_t n = data_len / 3;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t* p = data + 3 * i;
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      out.samples[i] = v / 8388608.0;
    }
  } else {
    throw fail("unsupported sample format (tag " + std::to_string(format) + ", " + std::to_string(bits) + " bits)");
  }
  out.samples.resize(out.samples.size() - out.samples.size() % static_cast<std::size_t>(channels));
  return out;
}

std::int16_t to_pcm16(double sample) {
  const double s = std::clamp(sample, -1.0, 1.0);
  return static_cast<std::int16_t>(std::lround(s * 32767.0));
}

void append_pcm16_le(std::span<const double> left, std::span<const double> right, std::vector<std::uint8_t>& out) {
  const std::size_t n = std::min(left.size(), right.size());
  out.reserve(out.size() + n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    put_u16(out, static_cast<std::uint16_t>(to_pcm16(left[i])));
    put_u16(out, static_cast<std::uint16_t>(to_pcm16(right[i])));
  }
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> left, std::span<const double> right,
                                           int sample_rate) {
  const std::size_t frames = std::min(left.size(), right.size());
  auto bytes = wav_header(kFormatPcm, 2, sample_rate, 16, static_cast<std::uint32_t>(frames * 4));
  append_pcm16_le(left, right, bytes);
  return bytes;
}

void write_wav_pcm16(const std::filesystem::path& path, std::span<const double> left, std::span<const double> right,
                     int sample_rate) {
  write_bytes(path, encode_wav_pcm16(left, right, sample_rate));
}

void write_wav_float32(const std::filesystem::path& path, std::span<const std::vector<double>> planes,
                       int sample_rate) {
  if (planes.empty()) throw InvalidInput("no channels to write");
  const std::size_t frames = planes[0].size();
  for (const auto& p : planes) {
    if (p.size() != frames) throw InvalidInput("channel lengths differ");
  }
  const auto channels = static_cast<int>(planes.size());
  auto bytes = wav_header(kFormatFloat, channels, sample_rate, 32,
                          static_cast<std::uint32_t>(frames * planes.size() * 4));
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& p : planes) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(p[i])));
  }
  write_bytes(path, bytes);
}

}  // namespace sonicgrid
