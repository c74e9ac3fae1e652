#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sonicgrid/image.hpp"

namespace sonicgrid {

/// 64-bit linear congruential generator (Knuth MMIX constants):
///   state = state * 6364136223846793005 + 1442695040888963407
/// uniform() takes the top 53 bits, so sequences match on every platform.
class Lcg64 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ = state_ * kMultiplier + kIncrement;
    return state_;
  }
  /// [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

enum class ObstacleKind { chair, garbage_bin, small_bag, cardboard_box };

std::string_view to_string(ObstacleKind k);

struct Obstacle {
  ObstacleKind kind = ObstacleKind::chair;
  double cx = 0.0;  // footprint center, metres along the corridor
  double cy = 0.0;  // metres across the corridor
  double sx = 0.0;  // footprint extent along x
  double sy = 0.0;  // footprint extent along y
  double height = 0.0;
  std::uint8_t intensity = 5;
  bool seen = false;
  bool missed = false;

  double min_x() const { return cx - sx / 2; }
  double max_x() const { return cx + sx / 2; }
  double min_y() const { return cy - sy / 2; }
  double max_y() const { return cy + sy / 2; }
};

/// Footprint (along x, along y) and height in metres.
struct ObstacleShape {
  double sx;
  double sy;
  double height;
};
ObstacleShape obstacle_shape(ObstacleKind k);

/// Corridor: x in [0, 15] from start to end, y in [0, 6] wall to wall.
struct Scene {
  static constexpr double kLength = 15.0;
  static constexpr double kWidth = 6.0;
  static constexpr double kZoneDepth = 1.0;       // start and end zones
  static constexpr double kZoneClearance = 1.0;   // obstacles keep this far from either zone
  static constexpr double kMinCenterSpacing = 1.5;
  static constexpr int kObstacleCount = 8;

  static constexpr std::uint8_t kFloorIntensity = 250;
  static constexpr std::uint8_t kWallIntensity = 235;
  static constexpr std::uint8_t kObstacleIntensity = 5;
  static constexpr std::uint8_t kBackgroundIntensity = 250;

  std::uint64_t seed = 0;
  std::vector<Obstacle> obstacles;
};

/// Deterministic rejection-sampled layout: two each of chair, garbage bin,
/// small bag, cardboard box.
Scene generate_layout(std::uint64_t seed);

/// Text form used for golden files and hashing: one `kind cx cy sx sy height` line per obstacle.
std::string serialize_layout(const Scene& scene);
/// FNV-1a 64 of serialize_layout, as 16 lowercase hex digits.
std::string layout_hash(const Scene& scene);
/// Returns a description of the first violated layout constraint, or nothing.
std::optional<std::string> check_layout(const Scene& scene);

inline constexpr int kNoContact = -1;
inline constexpr int kWallContact = -2;

struct Pose {
  static constexpr double kCameraHeight = 1.2;

  double x = 0.5;
  double y = 3.0;
  double heading_deg = 0.0;     // body heading, counter-clockwise from +x
  double cam_yaw_deg = 0.0;     // relative to the body, positive to the left
  double cam_pitch_deg = 0.0;   // positive up
  int contact = kNoContact;     // what the last cancelled move ran into, cleared by a successful move
};

struct CameraConfig {
  double hfov_deg = 60.0;
  int width = 192;
  int height = 144;
  double far_clip = 20.0;
};

/// Pinhole ray cast: floor 250, walls 235, obstacles 5, nothing within far clip 250.
GrayImage render_camera(const Scene& scene, const Pose& pose, const CameraConfig& cam = {});

struct ControlInput {
  int forward = 0;  // -1, 0, 1
  int turn = 0;     // -1 right, 0, 1 left
  double cam_yaw_delta_deg = 0.0;
  double cam_pitch_delta_deg = 0.0;
  bool operator==(const ControlInput&) const = default;
};

struct MotionParams {
  double walk_speed = 1.0;   // m/s
  double turn_rate = 60.0;   // deg/s
  double agent_radius = 0.3;
  double detect_range = 2.0;
  double detect_half_angle_deg = 30.0;
};

struct SimEvent {
  enum class Kind { wall_intervention, obstacle_intervention, seen, false_mark };
  Kind kind = Kind::false_mark;
  int obstacle = -1;
  bool first = false;  // obstacle_intervention that set the missed flag
  bool operator==(const SimEvent&) const = default;
};

/// Turn, then walk. A move that would overlap a wall or an obstacle is
/// cancelled; an intervention event is emitted once per contact episode with
/// a wall or an unseen obstacle, and that obstacle's missed flag is set.
std::vector<SimEvent> step_agent(Scene& scene, Pose& pose, const ControlInput& input, double dt,
                                 const MotionParams& params = {});

/// Marks the nearest unseen obstacle whose center is within range and inside
/// the cone around the camera heading, otherwise reports a false mark.
SimEvent mark_detected(Scene& scene, const Pose& pose, const MotionParams& params = {});

/// True when the agent disc overlaps a wall or any obstacle footprint.
bool disc_collides(const Scene& scene, double x, double y, double radius);

// ---------------------------------------------------------------------------
// Trial logs: one record per line, `t_ms event_type key=value ...`.
//
//   start                  seed=<u64> layout=<hex16>
//   input                  forward=<-1|0|1> turn=<-1|0|1> cam_yaw=<deg> cam_pitch=<deg>
//   detection_mark         result=seen obstacle=<id> | result=false_mark
//   collision_intervention target=wall | target=obstacle obstacle=<id>
//   finish
//   abort                  reason=<token>
//
// The first record is start at t_ms 0; times never decrease; the last record
// is the only finish or abort.
// ---------------------------------------------------------------------------

enum class EventType { start, input, detection_mark, collision_intervention, finish, abort };

std::string_view to_string(EventType t);

struct LogRecord {
  std::uint32_t t_ms = 0;
  EventType type = EventType::start;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string* field(std::string_view key) const;
  bool operator==(const LogRecord&) const = default;
};

struct TrialLog {
  std::uint64_t seed = 0;
  std::vector<LogRecord> records;

  bool terminated() const;
  bool operator==(const TrialLog&) const = default;
};

std::string format_log(const TrialLog& log);
/// Throws FormatError on a schema violation.
TrialLog parse_log(std::string_view text);
/// Schema and ordering check; returns the first problem found.
std::optional<std::string> validate_log(const TrialLog& log);

struct TrialMetrics {
  double completion_s = 0.0;
  int objects_seen = 0;
  int objects_missed = 0;
  int false_marks = 0;
  int wall_interventions = 0;
  bool operator==(const TrialMetrics&) const = default;
};

class IncompleteTrial : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws IncompleteTrial when the log has no finish record.
TrialMetrics trial_metrics(const TrialLog& log);

/// One navigation run: scene, agent and log advanced in integer milliseconds.
class Trial {
 public:
  explicit Trial(std::uint64_t seed, MotionParams params = {});

  /// Records an input line when the control vector changes.
  void set_input(const ControlInput& input);
  /// Advances dt_ms with the current control vector; camera deltas apply once.
  std::vector<SimEvent> step(std::uint32_t dt_ms);
  SimEvent mark();
  void abort(std::string_view reason);

  bool finished() const;
  bool terminated() const { return log_.terminated(); }
  std::uint32_t now_ms() const { return now_ms_; }
  const Scene& scene() const { return scene_; }
  const Pose& pose() const { return pose_; }
  const TrialLog& log() const { return log_; }
  const MotionParams& params() const { return params_; }
  /// Camera angles are absolute; the stored input carries them as deltas.
  void set_camera(double yaw_deg, double pitch_deg);

 private:
  void record(EventType type, std::vector<std::pair<std::string, std::string>> fields);
  void record_events(const std::vector<SimEvent>& events);

  Scene scene_;
  Pose pose_;
  MotionParams params_;
  TrialLog log_;
  ControlInput input_;
  ControlInput logged_input_;
  bool input_logged_ = false;
  std::uint32_t now_ms_ = 0;
};

}  // namespace sonicgrid
