#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sonicgrid/grid.hpp"

namespace sonicgrid {

inline constexpr int kDefaultSampleRate = 44100;
inline constexpr int kDefaultBlockFrames = 1024;

/// Stereo head-related impulse response pair.
struct Hrir {
  std::vector<double> left;
  std::vector<double> right;
  int sample_rate = kDefaultSampleRate;

  std::size_t length() const { return left.size(); }
};

/// One Hrir per grid cell, indexed row-major like CellActivations.
class HrirSet {
 public:
  HrirSet() = default;
  /// Throws InvalidInput when a filter has unequal ear lengths, is empty,
  /// or the sample rates differ.
  explicit HrirSet(std::array<Hrir, kGridCells> filters);

  const Hrir& for_cell(int index) const { return filters_[static_cast<std::size_t>(index)]; }
  /// Lookup by direction; throws InvalidInput for a pair outside the grid.
  const Hrir& at(int azimuth_deg, int elevation_deg) const;
  int sample_rate() const { return filters_[0].sample_rate; }
  std::size_t max_length() const;

 private:
  std::array<Hrir, kGridCells> filters_;
};

/// Interaural delay/level only: the contralateral ear is delayed by
/// round(rate * 0.0875 / 343 * |sin(az)|) samples and attenuated by
/// 6 dB * |az| / 90. Elevation is ignored.
Hrir fallback_hrir(double azimuth_deg, double elevation_deg, int sample_rate = kDefaultSampleRate);
HrirSet fallback_hrir_set(int sample_rate = kDefaultSampleRate);

/// Reads `azimuth elevation left.wav right.wav` or `azimuth elevation stereo.wav`
/// lines ('#' starts a comment). Relative paths resolve against the manifest directory.
HrirSet load_hrir_set(const std::filesystem::path& manifest);

struct StereoBlock {
  std::vector<double> left;
  std::vector<double> right;

  std::size_t frames() const { return left.size(); }
};

/// Full linear convolution of each ear, N + M - 1 samples per channel.
StereoBlock convolve_stereo(std::span<const double> mono, const Hrir& hrir);

struct SoundLoop {
  std::vector<double> samples;
  std::size_t loop_length = 0;
  SoundClass sound = SoundClass::trees;
};

using SoundBank = std::array<SoundLoop, 3>;

/// Random-phase multisine loops, one second each, band-limited around
/// 2 kHz (birds), 500 Hz (trees), 125 Hz (waves). Every component has an
/// integer number of cycles per loop, so the loops wrap seamlessly.
SoundBank synthetic_sound_bank(int sample_rate = kDefaultSampleRate, std::uint64_t seed = 1);

/// Reads `sound_class wav_path loop_length_samples` lines.
SoundBank load_sound_bank(const std::filesystem::path& manifest, int sample_rate = kDefaultSampleRate);

struct EngineConfig {
  int sample_rate = kDefaultSampleRate;
  int block_frames = kDefaultBlockFrames;
  double master_gain = 1.0;

  /// master_gain = 1/12 so that twelve full-scale voices cannot clip.
  static EngineConfig headroom() { return {kDefaultSampleRate, kDefaultBlockFrames, 1.0 / kGridCells}; }
};

struct Voice {
  int cell = 0;
  bool playing = false;
  std::size_t position = 0;  // samples into the loop
  std::size_t ringing = 0;   // tail samples still owed after a stop
  std::vector<double> history;  // last (hrir length - 1) loop inputs
};

/// Twelve looping voices, one per grid cell, each spatialized with its cell's
/// HRIR and summed. Owned by one thread; render calls never lock or allocate
/// for frames <= block_frames.
class VoiceEngine {
 public:
  VoiceEngine(HrirSet hrirs, SoundBank bank, EngineConfig cfg = {});

  /// Starts newly active voices at loop position 0, stops deactivated ones
  /// (their convolution tail rings out), leaves the rest untouched.
  void update(const CellActivations& activations);

  /// master_gain * sum of voices, hard-clipped to [-1, 1].
  StereoBlock render_block(int frames);
  /// Same as render_block without the clip.
  StereoBlock mix_block(int frames);
  /// Allocation-free variant; left and right must have equal size.
  void render_into(std::span<double> left, std::span<double> right, bool clip = true);

  const Voice& voice(int index) const { return voices_[static_cast<std::size_t>(index)]; }
  CellActivations activations() const { return current_; }
  /// Voices that are playing or still ringing out.
  int audible_voices() const;
  const EngineConfig& config() const { return cfg_; }
  void set_master_gain(double g);
  const HrirSet& hrirs() const { return hrirs_; }
  std::size_t tail_length() const { return hrirs_.max_length() - 1; }

 private:
  void mix_chunk(std::span<double> left, std::span<double> right);

  HrirSet hrirs_;
  SoundBank bank_;
  EngineConfig cfg_;
  CellActivations current_;
  std::array<Voice, kGridCells> voices_;
  std::vector<double> scratch_;
};

}  // namespace sonicgrid
