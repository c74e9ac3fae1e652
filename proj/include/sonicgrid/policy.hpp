#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sonicgrid/pipeline.hpp"
#include "sonicgrid/sim.hpp"

namespace sonicgrid {

/// Scripted walker that only listens: stop, sweep the camera, take one
/// stride toward the widest run of silent directions, repeat.
struct PolicyOptions {
  std::uint32_t tick_ms = 50;
  double scan_pitch_deg = -25.0;
  std::vector<double> scan_yaws{-60.0, -45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0, 60.0};
  double stride_m = 1.0;
  int max_strides = 200;
  /// Strides that would end closer than this to a side wall are not taken.
  double wall_margin = 0.5;
};

struct PolicyRun {
  TrialLog log;
  std::optional<TrialMetrics> metrics;  // set when the trial finished
  int strides = 0;
  int frames = 0;
  /// Steps that ended with the agent disc overlapping a wall or obstacle.
  int geometry_violations = 0;
};

PolicyRun run_follow_silence(std::uint64_t seed, const PipelineConfig& cfg, const PolicyOptions& opts = {},
                             const CameraConfig& cam = {});

}  // namespace sonicgrid
