#include "sonicgrid/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <set>
#include <sstream>

#include "sonicgrid/error.hpp"
#include "sonicgrid/kernels.hpp"

namespace sonicgrid {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

constexpr ObstacleKind kLayoutKinds[Scene::kObstacleCount] = {
    ObstacleKind::chair,     ObstacleKind::chair,         ObstacleKind::garbage_bin,   ObstacleKind::garbage_bin,
    ObstacleKind::small_bag, ObstacleKind::small_bag, ObstacleKind::cardboard_box, ObstacleKind::cardboard_box};

std::string fixed(double v, int digits) {
  if (std::abs(v) < 0.5 * std::pow(10.0, -digits)) v = 0.0;  // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double distance_to_box(double x, double y, const Obstacle& b) {
  const double dx = x - std::clamp(x, b.min_x(), b.max_x());
  const double dy = y - std::clamp(y, b.min_y(), b.max_y());
  return std::hypot(dx, dy);
}

bool disc_hits_walls(double x, double y, double r) {
  return x - r < 0.0 || x + r > Scene::kLength || y - r < 0.0 || y + r > Scene::kWidth;
}

double wrap_deg(double a) {
  a = std::fmod(a + 180.0, 360.0);
  if (a < 0) a += 360.0;
  return a - 180.0;
}

}  // namespace

std::string_view to_string(ObstacleKind k) {
  switch (k) {
    case ObstacleKind::chair: return "chair";
    case ObstacleKind::garbage_bin: return "garbage_bin";
    case ObstacleKind::small_bag: return "small_bag";
    case ObstacleKind::cardboard_box: return "cardboard_box";
  }
  return "?";
}

ObstacleShape obstacle_shape(ObstacleKind k) {
  switch (k) {
    case ObstacleKind::chair: return {0.45, 0.45, 1.0};
    case ObstacleKind::garbage_bin: return {0.40, 0.40, 0.8};
    case ObstacleKind::small_bag: return {0.35, 0.25, 0.3};
    case ObstacleKind::cardboard_box: return {0.50, 0.40, 0.5};
  }
  return {0.0, 0.0, 0.0};
}

Scene generate_layout(std::uint64_t seed) {
  Lcg64 rng(seed);
  constexpr double kLo = Scene::kZoneDepth + Scene::kZoneClearance;
  constexpr double kHi = Scene::kLength - Scene::kZoneDepth - Scene::kZoneClearance;
  for (;;) {
    Scene scene;
    scene.seed = seed;
    bool ok = true;
    for (ObstacleKind kind : kLayoutKinds) {
      ObstacleShape shape = obstacle_shape(kind);
      // Obstacles may be turned a quarter; the footprint stays axis-aligned.
      if (rng.uniform() < 0.5) std::swap(shape.sx, shape.sy);
      bool placed = false;
      for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        Obstacle o;
        o.kind = kind;
        o.sx = shape.sx;
        o.sy = shape.sy;
        o.height = shape.height;
        o.intensity = Scene::kObstacleIntensity;
        o.cx = rng.uniform(kLo + o.sx / 2, kHi - o.sx / 2);
        o.cy = rng.uniform(o.sy / 2, Scene::kWidth - o.sy / 2);
        placed = std::all_of(scene.obstacles.begin(), scene.obstacles.end(), [&](const Obstacle& p) {
          return std::hypot(p.cx - o.cx, p.cy - o.cy) >= Scene::kMinCenterSpacing;
        });
        if (placed) scene.obstacles.push_back(o);
      }
      if (!placed) {
        ok = false;
        break;
      }
    }
    if (ok) return scene;
  }
}

std::string serialize_layout(const Scene& scene) {
  std::string out;
  for (const Obstacle& o : scene.obstacles) {
    out += std::string(to_string(o.kind)) + ' ' + fixed(o.cx, 6) + ' ' + fixed(o.cy, 6) + ' ' + fixed(o.sx, 3) + ' ' +
           fixed(o.sy, 3) + ' ' + fixed(o.height, 3) + '\n';
  }
  return out;
}

std::string layout_hash(const Scene& scene) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : serialize_layout(scene)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<std::string> check_layout(const Scene& scene) {
  if (scene.obstacles.size() != Scene::kObstacleCount) return "expected 8 obstacles";
  int per_kind[4] = {};
  constexpr double kLo = Scene::kZoneDepth + Scene::kZoneClearance;
  constexpr double kHi = Scene::kLength - Scene::kZoneDepth - Scene::kZoneClearance;
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const Obstacle& o = scene.obstacles[i];
    ++per_kind[static_cast<int>(o.kind)];
    if (o.min_x() < kLo - 1e-9 || o.max_x() > kHi + 1e-9) return "obstacle " + std::to_string(i) + " intrudes on a zone clearance";
    if (o.min_y() < -1e-9 || o.max_y() > Scene::kWidth + 1e-9) return "obstacle " + std::to_string(i) + " outside the corridor";
    for (std::size_t j = 0; j < i; ++j) {
      const Obstacle& p = scene.obstacles[j];
      if (std::hypot(p.cx - o.cx, p.cy - o.cy) < Scene::kMinCenterSpacing) {
        return "obstacles " + std::to_string(j) + " and " + std::to_string(i) + " closer than 1.5 m";
      }
    }
  }
  for (int k = 0; k < 4; ++k) {
    if (per_kind[k] != 2) return std::string("expected two of each kind, ") + std::string(to_string(static_cast<ObstacleKind>(k))) + " differs";
  }
  return std::nullopt;
}

GrayImage render_camera(const Scene& scene, const Pose& pose, const CameraConfig& cam) {
  GrayImage img(cam.width, cam.height);
  kernels::omp::render_camera(scene, pose, cam, img);
  return img;
}

bool disc_collides(const Scene& scene, double x, double y, double radius) {
  if (disc_hits_walls(x, y, radius)) return true;
  return std::any_of(scene.obstacles.begin(), scene.obstacles.end(),
                     [&](const Obstacle& o) { return distance_to_box(x, y, o) < radius; });
}

std::vector<SimEvent> step_agent(Scene& scene, Pose& pose, const ControlInput& input, double dt,
                                 const MotionParams& params) {
  std::vector<SimEvent> events;
  if (!(dt > 0.0)) return events;
  pose.cam_yaw_deg = std::clamp(pose.cam_yaw_deg + input.cam_yaw_delta_deg, -90.0, 90.0);
  pose.cam_pitch_deg = std::clamp(pose.cam_pitch_deg + input.cam_pitch_delta_deg, -90.0, 45.0);
  pose.heading_deg = wrap_deg(pose.heading_deg + std::clamp(input.turn, -1, 1) * params.turn_rate * dt);
  const int fwd = std::clamp(input.forward, -1, 1);
  if (fwd == 0) return events;

  const double step = fwd * params.walk_speed * dt;
  const double nx = pose.x + step * std::cos(pose.heading_deg * kDeg);
  const double ny = pose.y + step * std::sin(pose.heading_deg * kDeg);

  int blocker = kNoContact;
  if (disc_hits_walls(nx, ny, params.agent_radius)) blocker = kWallContact;
  double nearest = params.agent_radius;
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const double d = distance_to_box(nx, ny, scene.obstacles[i]);
    if (d < nearest && blocker != kWallContact) {
      nearest = d;
      blocker = static_cast<int>(i);
    }
  }
  if (blocker == kNoContact) {
    pose.x = nx;
    pose.y = ny;
    pose.contact = kNoContact;
    return events;
  }

  const bool new_episode = pose.contact != blocker;
  pose.contact = blocker;
  if (!new_episode) return events;
  if (blocker == kWallContact) {
    events.push_back({SimEvent::Kind::wall_intervention, -1, false});
  } else {
    Obstacle& o = scene.obstacles[static_cast<std::size_t>(blocker)];
    if (!o.seen) {
      const bool first = !o.missed;
      o.missed = true;
      events.push_back({SimEvent::Kind::obstacle_intervention, blocker, first});
    }
  }
  return events;
}

SimEvent mark_detected(Scene& scene, const Pose& pose, const MotionParams& params) {
  const double heading = pose.heading_deg + pose.cam_yaw_deg;
  int best = -1;
  double best_d = params.detect_range;
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const Obstacle& o = scene.obstacles[i];
    if (o.seen) continue;
    const double d = std::hypot(o.cx - pose.x, o.cy - pose.y);
    if (d > params.detect_range) continue;
    const double bearing = std::atan2(o.cy - pose.y, o.cx - pose.x) / kDeg;
    if (std::abs(wrap_deg(bearing - heading)) > params.detect_half_angle_deg) continue;
    if (best < 0 || d < best_d) {
      best = static_cast<int>(i);
      best_d = d;
    }
  }
  if (best < 0) return {SimEvent::Kind::false_mark, -1, false};
  scene.obstacles[static_cast<std::size_t>(best)].seen = true;
  return {SimEvent::Kind::seen, best, false};
}

// --------------------------------------------------------------------------- logs

std::string_view to_string(EventType t) {
  switch (t) {
    case EventType::start: return "start";
    case EventType::input: return "input";
    case EventType::detection_mark: return "detection_mark";
    case EventType::collision_intervention: return "collision_intervention";
    case EventType::finish: return "finish";
    case EventType::abort: return "abort";
  }
  return "?";
}

namespace {

std::optional<EventType> event_type_from(std::string_view s) {
  for (auto t : {EventType::start, EventType::input, EventType::detection_mark, EventType::collision_intervention,
                 EventType::finish, EventType::abort}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

bool parse_u64(std::string_view s, std::uint64_t& v) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_obstacle_id(const std::string* s) {
  std::uint64_t v = 0;
  return s && parse_u64(*s, v) && v < Scene::kObstacleCount;
}

std::optional<std::string> check_record(const LogRecord& r) {
  const auto need = [&](std::string_view key) { return r.field(key) != nullptr; };
  switch (r.type) {
    case EventType::start: {
      std::uint64_t v = 0;
      if (!need("seed") || !parse_u64(*r.field("seed"), v)) return "start needs seed=<u64>";
      if (!need("layout") || r.field("layout")->size() != 16) return "start needs layout=<hex16>";
      return std::nullopt;
    }
    case EventType::input: {
      for (auto key : {"forward", "turn"}) {
        const std::string* f = r.field(key);
        if (!f || (*f != "-1" && *f != "0" && *f != "1")) return std::string("input needs ") + key + "=-1|0|1";
      }
      for (auto key : {"cam_yaw", "cam_pitch"}) {
        const std::string* f = r.field(key);
        char* end = nullptr;
        if (!f || f->empty() || (std::strtod(f->c_str(), &end), *end != '\0')) return std::string("input needs ") + key + "=<deg>";
      }
      return std::nullopt;
    }
    case EventType::detection_mark: {
      const std::string* res = r.field("result");
      if (!res) return "detection_mark needs result";
      if (*res == "seen") return parse_obstacle_id(r.field("obstacle")) ? std::nullopt : std::optional<std::string>("seen mark needs obstacle=<id>");
      if (*res == "false_mark") return std::nullopt;
      return "detection_mark result must be seen or false_mark";
    }
    case EventType::collision_intervention: {
      const std::string* target = r.field("target");
      if (!target) return "collision_intervention needs target";
      if (*target == "wall") return std::nullopt;
      if (*target == "obstacle") {
        return parse_obstacle_id(r.field("obstacle")) ? std::nullopt : std::optional<std::string>("obstacle intervention needs obstacle=<id>");
      }
      return "collision_intervention target must be wall or obstacle";
    }
    case EventType::finish: return std::nullopt;
    case EventType::abort: return need("reason") ? std::nullopt : std::optional<std::string>("abort needs reason");
  }
  return "unknown record";
}

}  // namespace

const std::string* LogRecord::field(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return &v;
  }
  return nullptr;
}

bool TrialLog::terminated() const {
  return !records.empty() && (records.back().type == EventType::finish || records.back().type == EventType::abort);
}

std::string format_log(const TrialLog& log) {
  std::string out;
  for (const LogRecord& r : log.records) {
    out += std::to_string(r.t_ms);
    out += ' ';
    out += to_string(r.type);
    for (const auto& [k, v] : r.fields) {
      out += ' ';
      out += k;
      out += '=';
      out += v;
    }
    out += '\n';
  }
  return out;
}

std::optional<std::string> validate_log(const TrialLog& log) {
  if (log.records.empty()) return "empty log";
  if (log.records.front().type != EventType::start) return "first record must be start";
  if (log.records.front().t_ms != 0) return "start must be at t_ms 0";
  std::uint32_t prev = 0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const LogRecord& r = log.records[i];
    if (r.t_ms < prev) return "record " + std::to_string(i + 1) + " goes back in time";
    prev = r.t_ms;
    if (i > 0 && r.type == EventType::start) return "record " + std::to_string(i + 1) + ": second start";
    const bool terminal = r.type == EventType::finish || r.type == EventType::abort;
    if (terminal && i + 1 != log.records.size()) return "record " + std::to_string(i + 1) + ": records after the end of the trial";
    if (auto err = check_record(r)) return "record " + std::to_string(i + 1) + ": " + *err;
  }
  return std::nullopt;
}

TrialLog parse_log(std::string_view text) {
  TrialLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string t, type;
    if (!(ls >> t >> type)) throw FormatError("log line " + std::to_string(line_no) + ": expected 't_ms event_type'");
    std::uint64_t t_ms = 0;
    if (!parse_u64(t, t_ms) || t_ms > UINT32_MAX) throw FormatError("log line " + std::to_string(line_no) + ": bad t_ms '" + t + "'");
    auto et = event_type_from(type);
    if (!et) throw FormatError("log line " + std::to_string(line_no) + ": unknown event type '" + type + "'");
    LogRecord r{static_cast<std::uint32_t>(t_ms), *et, {}};
    for (std::string kv; ls >> kv;) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw FormatError("log line " + std::to_string(line_no) + ": bad field '" + kv + "'");
      r.fields.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    log.records.push_back(std::move(r));
  }
  if (auto err = validate_log(log)) throw FormatError("trial log: " + *err);
  parse_u64(*log.records.front().field("seed"), log.seed);
  return log;
}

TrialMetrics trial_metrics(const TrialLog& log) {
  if (log.records.empty() || log.records.back().type != EventType::finish) {
    throw IncompleteTrial("trial log has no finish record");
  }
  TrialMetrics m;
  m.completion_s = (log.records.back().t_ms - log.records.front().t_ms) / 1000.0;
  std::set<std::string> seen, missed;
  for (const LogRecord& r : log.records) {
    if (r.type == EventType::detection_mark) {
      const std::string* res = r.field("result");
      if (res && *res == "seen") seen.insert(*r.field("obstacle"));
      if (res && *res == "false_mark") ++m.false_marks;
    } else if (r.type == EventType::collision_intervention) {
      const std::string* target = r.field("target");
      if (target && *target == "obstacle") missed.insert(*r.field("obstacle"));
      if (target && *target == "wall") ++m.wall_interventions;
    }
  }
  m.objects_seen = static_cast<int>(seen.size());
  m.objects_missed = static_cast<int>(missed.size());
  return m;
}

// --------------------------------------------------------------------------- trial

Trial::Trial(std::uint64_t seed, MotionParams params) : scene_(generate_layout(seed)), params_(params) {
  log_.seed = seed;
  record(EventType::start, {{"seed", std::to_string(seed)}, {"layout", layout_hash(scene_)}});
}

void Trial::record(EventType type, std::vector<std::pair<std::string, std::string>> fields) {
  log_.records.push_back({now_ms_, type, std::move(fields)});
}

void Trial::set_input(const ControlInput& input) { input_ = input; }

void Trial::set_camera(double yaw_deg, double pitch_deg) {
  input_.cam_yaw_delta_deg = yaw_deg - pose_.cam_yaw_deg;
  input_.cam_pitch_delta_deg = pitch_deg - pose_.cam_pitch_deg;
}

void Trial::record_events(const std::vector<SimEvent>& events) {
  for (const SimEvent& e : events) {
    switch (e.kind) {
      case SimEvent::Kind::wall_intervention: record(EventType::collision_intervention, {{"target", "wall"}}); break;
      case SimEvent::Kind::obstacle_intervention:
        record(EventType::collision_intervention, {{"target", "obstacle"}, {"obstacle", std::to_string(e.obstacle)}});
        break;
      case SimEvent::Kind::seen:
        record(EventType::detection_mark, {{"result", "seen"}, {"obstacle", std::to_string(e.obstacle)}});
        break;
      case SimEvent::Kind::false_mark: record(EventType::detection_mark, {{"result", "false_mark"}}); break;
    }
  }
}

std::vector<SimEvent> Trial::step(std::uint32_t dt_ms) {
  if (terminated()) return {};
  now_ms_ += dt_ms;
  const std::vector<SimEvent> events = step_agent(scene_, pose_, input_, dt_ms / 1000.0, params_);
  ControlInput logged = input_;
  logged.cam_yaw_delta_deg = pose_.cam_yaw_deg;  // the log carries absolute camera angles
  logged.cam_pitch_delta_deg = pose_.cam_pitch_deg;
  if (!input_logged_ || !(logged == logged_input_)) {
    record(EventType::input, {{"forward", std::to_string(input_.forward)},
                              {"turn", std::to_string(input_.turn)},
                              {"cam_yaw", fixed(pose_.cam_yaw_deg, 3)},
                              {"cam_pitch", fixed(pose_.cam_pitch_deg, 3)}});
    logged_input_ = logged;
    input_logged_ = true;
  }
  input_.cam_yaw_delta_deg = 0.0;
  input_.cam_pitch_delta_deg = 0.0;
  record_events(events);
  if (pose_.x >= Scene::kLength - Scene::kZoneDepth) record(EventType::finish, {});
  return events;
}

SimEvent Trial::mark() {
  if (terminated()) return {SimEvent::Kind::false_mark, -1, false};
  const SimEvent e = mark_detected(scene_, pose_, params_);
  record_events({e});
  return e;
}

void Trial::abort(std::string_view reason) {
  if (terminated()) return;
  record(EventType::abort, {{"reason", std::string(reason)}});
}

bool Trial::finished() const {
  return !log_.records.empty() && log_.records.back().type == EventType::finish;
}

}  // namespace sonicgrid
