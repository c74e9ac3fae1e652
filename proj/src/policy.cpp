#include "sonicgrid/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace sonicgrid {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Look {
  double yaw = 0.0;
  int loudness = 0;   // active cells in the two middle columns, lower two rows
  bool close = false; // something active in the bottom-middle cells
};

class Walker {
 public:
  Walker(std::uint64_t seed, const PipelineConfig& cfg, const PolicyOptions& opts, const CameraConfig& cam)
      : trial_(seed), cfg_(cfg), opts_(opts), cam_(cam) {}

  PolicyRun run() {
    PolicyRun out;
    while (!trial_.terminated() && strides_ < opts_.max_strides) {
      face(0.0);
      if (trial_.terminated()) break;
      const std::vector<Look> looks = scan();
      if (trial_.terminated()) break;
      mark_close(looks);
      stride(choose(looks));
      ++strides_;
    }
    if (!trial_.terminated()) trial_.abort("stride_limit");
    out.log = trial_.log();
    if (trial_.finished()) out.metrics = trial_metrics(out.log);
    out.strides = strides_;
    out.frames = frames_;
    out.geometry_violations = violations_;
    return out;
  }

 private:
  void tick() {
    trial_.step(opts_.tick_ms);
    const Pose& p = trial_.pose();
    if (disc_collides(trial_.scene(), p.x, p.y, trial_.params().agent_radius)) ++violations_;
  }

  /// Rotates the body to an absolute heading in whole ticks.
  void face(double heading) {
    const double per_tick = trial_.params().turn_rate * opts_.tick_ms / 1000.0;
    for (int guard = 0; guard < 400 && !trial_.terminated(); ++guard) {
      const double diff = heading - trial_.pose().heading_deg;
      if (std::abs(diff) < per_tick / 2) break;
      trial_.set_input({0, diff > 0 ? 1 : -1, 0.0, 0.0});
      tick();
    }
    trial_.set_input({});
  }

  std::vector<Look> scan() {
    std::vector<Look> looks;
    for (double yaw : opts_.scan_yaws) {
      trial_.set_input({});
      trial_.set_camera(yaw, opts_.scan_pitch_deg);
      tick();
      if (trial_.terminated()) break;
      const GrayImage frame = render_camera(trial_.scene(), trial_.pose(), cam_);
      const CellActivations act = process_frame(frame, cfg_).activations;
      ++frames_;
      Look l{yaw, 0, false};
      const int mid0 = act.cols / 2 - 1;
      for (int r = act.rows - 2; r < act.rows; ++r) {
        for (int c = mid0; c <= mid0 + 1; ++c) l.loudness += act.at(r, c) ? 1 : 0;
      }
      l.close = act.at(act.rows - 1, mid0) || act.at(act.rows - 1, mid0 + 1);
      looks.push_back(l);
    }
    return looks;
  }

  /// Reports the nearest look that sounds close, pointing the camera at it.
  void mark_close(const std::vector<Look>& looks) {
    const Look* best = nullptr;
    for (const Look& l : looks) {
      if (l.close && (!best || std::abs(l.yaw) < std::abs(best->yaw))) best = &l;
    }
    if (!best) return;
    trial_.set_camera(best->yaw, opts_.scan_pitch_deg);
    tick();
    trial_.mark();
  }

  bool near_side_wall(double heading) const {
    const double y = trial_.pose().y + opts_.stride_m * std::sin(heading * kDeg);
    return y < opts_.wall_margin + trial_.params().agent_radius ||
           y > Scene::kWidth - opts_.wall_margin - trial_.params().agent_radius;
  }

  double choose(const std::vector<Look>& looks) {
    std::vector<const Look*> usable;
    for (const Look& l : looks) {
      if (!near_side_wall(l.yaw) && !blocked_.contains(l.yaw)) usable.push_back(&l);
    }
    // Widest contiguous run of silent, usable directions.
    std::vector<double> best_run;
    std::vector<double> run;
    const auto consider = [&] {
      if (run.empty()) return;
      const auto closest = [](const std::vector<double>& r) {
        return *std::min_element(r.begin(), r.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
      };
      if (run.size() > best_run.size() ||
          (run.size() == best_run.size() && std::abs(closest(run)) < std::abs(closest(best_run)))) {
        best_run = run;
      }
      run.clear();
    };
    for (const Look& l : looks) {
      const bool ok = l.loudness == 0 && std::find(usable.begin(), usable.end(), &l) != usable.end();
      if (ok) {
        run.push_back(l.yaw);
      } else {
        consider();
      }
    }
    consider();
    if (!best_run.empty()) {
      // Middle of the run; for an even run, the middle member nearer straight ahead.
      const std::size_t n = best_run.size();
      double pick = best_run[n / 2];
      if (n % 2 == 0 && std::abs(best_run[n / 2 - 1]) < std::abs(pick)) pick = best_run[n / 2 - 1];
      return pick;
    }
    if (!usable.empty()) {
      const Look* quietest = *std::min_element(usable.begin(), usable.end(), [](const Look* a, const Look* b) {
        return a->loudness != b->loudness ? a->loudness < b->loudness : std::abs(a->yaw) < std::abs(b->yaw);
      });
      return quietest->yaw;
    }
    // Boxed in: sidestep toward the roomier side.
    blocked_.clear();
    return trial_.pose().y < Scene::kWidth / 2 ? 90.0 : -90.0;
  }

  void stride(double heading) {
    face(heading);
    const double x0 = trial_.pose().x, y0 = trial_.pose().y;
    const double per_tick = trial_.params().walk_speed * opts_.tick_ms / 1000.0;
    const int ticks = static_cast<int>(std::lround(opts_.stride_m / per_tick));
    for (int i = 0; i < ticks && !trial_.terminated(); ++i) {
      trial_.set_input({1, 0, 0.0, 0.0});
      if (i == 0) trial_.set_camera(0.0, opts_.scan_pitch_deg);
      tick();
      if (trial_.pose().contact != kNoContact) break;
    }
    trial_.set_input({});
    const double progress = std::hypot(trial_.pose().x - x0, trial_.pose().y - y0);
    if (progress < opts_.stride_m / 2) {
      blocked_.insert(heading);
    } else {
      blocked_.clear();
    }
  }

  Trial trial_;
  const PipelineConfig& cfg_;
  const PolicyOptions& opts_;
  const CameraConfig& cam_;
  std::set<double> blocked_;
  int strides_ = 0;
  int frames_ = 0;
  int violations_ = 0;
};

}  // namespace

PolicyRun run_follow_silence(std::uint64_t seed, const PipelineConfig& cfg, const PolicyOptions& opts,
                             const CameraConfig& cam) {
  return Walker(seed, cfg, opts, cam).run();
}

}  // namespace sonicgrid
