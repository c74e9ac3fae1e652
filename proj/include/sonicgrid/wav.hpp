#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sonicgrid {

/// Decoded WAV contents, samples interleaved and scaled to [-1, 1].
struct WavData {
  int sample_rate = 0;
  int channels = 0;
  std::vector<double> samples;

  std::size_t frames() const { return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0; }
  /// One channel de-interleaved.
  std::vector<double> channel(int c) const;
};

/// Reads RIFF/WAVE with 16-bit integer PCM or 32-bit IEEE float samples
/// (plain or WAVE_FORMAT_EXTENSIBLE). Throws FormatError.
WavData read_wav(const std::filesystem::path& path);

/// Round-to-nearest 16-bit conversion after clamping to [-1, 1].
std::int16_t to_pcm16(double sample);

/// Appends interleaved little-endian 16-bit samples to out.
void append_pcm16_le(std::span<const double> left, std::span<const double> right,
                     std::vector<std::uint8_t>& out);

/// Integer PCM, format tag 1, 16-bit little-endian, 2 channels.
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> left, std::span<const double> right,
                                           int sample_rate);
void write_wav_pcm16(const std::filesystem::path& path, std::span<const double> left,
                     std::span<const double> right, int sample_rate);

/// IEEE float, format tag 3, channels given as separate planes (1 or 2).
void write_wav_float32(const std::filesystem::path& path, std::span<const std::vector<double>> planes,
                       int sample_rate);

}  // namespace sonicgrid
