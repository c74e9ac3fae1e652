#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "sonicgrid/audio.hpp"
#include "sonicgrid/grid.hpp"
#include "sonicgrid/image.hpp"
#include "sonicgrid/saliency.hpp"

namespace sonicgrid {

struct PipelineConfig {
  FilterConfig filter = FilterConfig::operational();
  GridSpec grid;
  EngineConfig audio;
  double budget_ms = 45.0;
};

struct FrameTiming {
  double filter_ms = 0.0;
  double grid_ms = 0.0;
  double total_ms = 0.0;
};

class TimingStats {
 public:
  explicit TimingStats(double budget_ms = 45.0) : budget_ms_(budget_ms) {}

  void add(const FrameTiming& t);

  std::size_t count() const { return count_; }
  double mean_total_ms() const { return count_ ? sum_total_ / static_cast<double>(count_) : 0.0; }
  double mean_filter_ms() const { return count_ ? sum_filter_ / static_cast<double>(count_) : 0.0; }
  double mean_grid_ms() const { return count_ ? sum_grid_ / static_cast<double>(count_) : 0.0; }
  double max_total_ms() const { return max_total_; }
  std::size_t budget_violations() const { return violations_; }
  double budget_ms() const { return budget_ms_; }

 private:
  double budget_ms_;
  std::size_t count_ = 0;
  std::size_t violations_ = 0;
  double sum_total_ = 0.0;
  double sum_filter_ = 0.0;
  double sum_grid_ = 0.0;
  double max_total_ = 0.0;
};

struct FrameResult {
  CellActivations activations;
  FrameTiming timing;
};

/// mask -> counts -> activations, timed. Throws InvalidInput when the frame
/// size differs from cfg.grid.
FrameResult process_frame(const GrayImage& img, const PipelineConfig& cfg);

/// Latest activation set, written by one producer and read by one consumer
/// without locking.
class ActivationSnapshot {
 public:
  void publish(std::uint64_t bits) {
    bits_.store(bits, std::memory_order_release);
    version_.fetch_add(1, std::memory_order_acq_rel);
  }
  std::uint64_t bits() const { return bits_.load(std::memory_order_acquire); }
  std::uint64_t version() const { return version_.load(std::memory_order_acquire); }

 private:
  std::atomic<std::uint64_t> bits_{0};
  std::atomic<std::uint64_t> version_{0};
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Next frame, or nothing at end of stream. May block; may throw.
  virtual std::optional<GrayImage> next() = 0;
};

class AudioSink {
 public:
  virtual ~AudioSink() = default;
  /// May block for pacing; throws on failure.
  virtual void write(const StereoBlock& block) = 0;
};

struct StreamOptions {
  /// Pace audio blocks against the wall clock instead of free-running.
  bool realtime = false;
  /// Stop after this many blocks regardless of the source.
  std::optional<std::size_t> max_blocks;
  /// Blocks rendered after the source is exhausted and its last snapshot consumed.
  std::size_t drain_blocks = 1;
};

struct StreamSummary {
  std::size_t frames_processed = 0;
  std::size_t blocks_rendered = 0;
  std::size_t snapshots_published = 0;
  TimingStats timing;
  double wall_seconds = 0.0;
  std::string error;  // empty on a clean finish

  std::size_t budget_violations() const { return timing.budget_violations(); }
};

/// Runs frame processing and audio rendering on two threads. Audio never
/// waits for a frame: each block applies whatever snapshot is current.
StreamSummary run_stream(FrameSource& source, AudioSink& sink, VoiceEngine& engine, const PipelineConfig& cfg,
                         const StreamOptions& opts = {});

/// Synchronous render: frame i drives block i, the last frame is held once
/// the sequence runs out. Returns exactly total_frames stereo samples.
StereoBlock render_offline(std::span<const GrayImage> frames, VoiceEngine& engine, const PipelineConfig& cfg,
                           std::size_t total_frames);

}  // namespace sonicgrid
