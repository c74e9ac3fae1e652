#include "sonicgrid/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace sonicgrid {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

void TimingStats::add(const FrameTiming& t) {
  ++count_;
  sum_total_ += t.total_ms;
  sum_filter_ += t.filter_ms;
  sum_grid_ += t.grid_ms;
  max_total_ = std::max(max_total_, t.total_ms);
  if (t.total_ms > budget_ms_) ++violations_;
}

FrameResult process_frame(const GrayImage& img, const PipelineConfig& cfg) {
  if (img.width() != cfg.grid.image_width || img.height() != cfg.grid.image_height) {
    throw InvalidInput("frame is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                       ", pipeline expects " + std::to_string(cfg.grid.image_width) + "x" +
                       std::to_string(cfg.grid.image_height));
  }
  const auto t0 = Clock::now();
  const SalientMask mask = salient_mask(img, cfg.filter);
  const auto t1 = Clock::now();
  const CellCounts counts = cell_counts(mask, cfg.grid);
  FrameResult out;
  out.activations = active_cells(counts, cfg.grid);
  const auto t2 = Clock::now();
  const double filter_ms = ms_between(t0, t1), grid_ms = ms_between(t1, t2);
  out.timing = {filter_ms, grid_ms, filter_ms + grid_ms};
  return out;
}

StreamSummary run_stream(FrameSource& source, AudioSink& sink, VoiceEngine& engine, const PipelineConfig& cfg,
                         const StreamOptions& opts) {
  StreamSummary summary;
  summary.timing = TimingStats(cfg.budget_ms);

  ActivationSnapshot snapshot;
  std::atomic<bool> source_done{false};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::string error;
  const auto fail = [&](std::string what) {
    std::lock_guard lock(error_mutex);
    if (error.empty()) error = std::move(what);
    stop.store(true);
  };

  const auto started = Clock::now();

  std::thread frames([&] {
    try {
      while (!stop.load()) {
        std::optional<GrayImage> img = source.next();
        if (!img) break;
        const FrameResult r = process_frame(*img, cfg);
        summary.timing.add(r.timing);
        ++summary.frames_processed;
        snapshot.publish(r.activations.bits);
        ++summary.snapshots_published;
      }
    } catch (const std::exception& e) {
      fail(std::string("frame source: ") + e.what());
    }
    source_done.store(true);
  });

  const int block = cfg.audio.block_frames;
  const auto block_period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(static_cast<double>(block) / cfg.audio.sample_rate));
  StereoBlock buf{std::vector<double>(static_cast<std::size_t>(block)), std::vector<double>(static_cast<std::size_t>(block))};
  CellActivations act = engine.activations();
  std::uint64_t seen_version = 0;
  std::size_t drained = 0;
  auto deadline = Clock::now();

  try {
    while (!stop.load()) {
      if (opts.max_blocks && summary.blocks_rendered >= *opts.max_blocks) break;
      // Read done before version so a final publish is never missed.
      const bool done = source_done.load();
      const std::uint64_t version = snapshot.version();
      if (version != seen_version) {
        seen_version = version;
        act.bits = snapshot.bits();
        engine.update(act);
      } else if (done) {
        if (drained >= opts.drain_blocks) break;
        ++drained;
      }
      engine.render_into(buf.left, buf.right);
      sink.write(buf);
      ++summary.blocks_rendered;
      if (opts.realtime) {
        deadline += block_period;
        std::this_thread::sleep_until(deadline);
      }
    }
  } catch (const std::exception& e) {
    fail(std::string("audio sink: ") + e.what());
  }
  stop.store(true);
  frames.join();

  summary.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  summary.error = error;
  return summary;
}

StereoBlock render_offline(std::span<const GrayImage> frames, VoiceEngine& engine, const PipelineConfig& cfg,
                           std::size_t total_frames) {
  StereoBlock out{std::vector<double>(total_frames), std::vector<double>(total_frames)};
  const auto block = static_cast<std::size_t>(cfg.audio.block_frames);
  std::size_t index = 0;
  for (std::size_t off = 0; off < total_frames; off += block, ++index) {
    if (!frames.empty() && index < frames.size()) engine.update(process_frame(frames[index], cfg).activations);
    const std::size_t n = std::min(block, total_frames - off);
    engine.render_into(std::span(out.left).subspan(off, n), std::span(out.right).subspan(off, n));
  }
  return out;
}

}  // namespace sonicgrid
