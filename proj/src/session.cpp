#include "sonicgrid/session.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "sonicgrid/error.hpp"
#include "sonicgrid/wav.hpp"

namespace sonicgrid {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

std::uint32_t get_seq(const json& j) {
  const json& v = require(j, "seq");
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffffffffULL)
    throw FormatError("seq must be an unsigned 32-bit integer");
  return v.get<std::uint32_t>();
}

int get_axis(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer()) throw FormatError(std::string(key) + " must be -1, 0 or 1");
  const auto x = v.get<std::int64_t>();
  if (x < -1 || x > 1) throw FormatError(std::string(key) + " must be -1, 0 or 1");
  return static_cast<int>(x);
}

double get_angle(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw FormatError(std::string(key) + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw FormatError(std::string(key) + " must be finite");
  return x;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("message must be a JSON object");
  const json& type = require(j, "type");
  if (!type.is_string()) throw FormatError("type must be a string");
  const std::string t = type.get<std::string>();
  if (t == "start") {
    StartMsg m;
    const json& seed = require(j, "seed");
    if (!seed.is_number_unsigned()) throw FormatError("seed must be an unsigned integer");
    m.seed = seed.get<std::uint64_t>();
    if (auto it = j.find("spectator"); it != j.end()) {
      if (!it->is_boolean()) throw FormatError("spectator must be a boolean");
      m.spectator = it->get<bool>();
    }
    return m;
  }
  if (t == "input") {
    InputMsg m;
    m.seq = get_seq(j);
    m.forward = get_axis(j, "forward");
    m.turn = get_axis(j, "turn");
    m.cam_yaw_deg = get_angle(j, "cam_yaw_deg");
    m.cam_pitch_deg = get_angle(j, "cam_pitch_deg");
    return m;
  }
  if (t == "mark") return MarkMsg{get_seq(j)};
  if (t == "end") return EndMsg{};
  throw FormatError("unknown message type '" + t + "'");
}

std::string to_json(const ClientMessage& msg) {
  json j;
  if (const auto* s = std::get_if<StartMsg>(&msg)) {
    j = {{"type", "start"}, {"seed", s->seed}, {"spectator", s->spectator}};
  } else if (const auto* i = std::get_if<InputMsg>(&msg)) {
    j = {{"type", "input"},         {"seq", i->seq},
         {"forward", i->forward},   {"turn", i->turn},
         {"cam_yaw_deg", i->cam_yaw_deg}, {"cam_pitch_deg", i->cam_pitch_deg}};
  } else if (const auto* m = std::get_if<MarkMsg>(&msg)) {
    j = {{"type", "mark"}, {"seq", m->seq}};
  } else {
    j = {{"type", "end"}};
  }
  return j.dump();
}

std::vector<std::uint8_t> encode_pcm_chunk(std::uint32_t frame_offset, std::span<const double> left,
                                           std::span<const double> right) {
  if (left.size() != right.size()) throw InvalidInput("channel length mismatch");
  std::vector<std::uint8_t> out;
  out.reserve(8 + left.size() * 4);
  out.insert(out.end(), {'P', 'C', 'M', '0'});
  put_u32(out, frame_offset);
  append_pcm16_le(left, right, out);
  return out;
}

PcmChunk decode_pcm_chunk(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "PCM0", 4) != 0) throw FormatError("not a PCM0 chunk");
  if ((bytes.size() - 8) % 4 != 0) throw FormatError("PCM0 payload is not whole stereo frames");
  PcmChunk c;
  c.frame_offset = static_cast<std::uint32_t>(bytes[4]) | static_cast<std::uint32_t>(bytes[5]) << 8 |
                   static_cast<std::uint32_t>(bytes[6]) << 16 | static_cast<std::uint32_t>(bytes[7]) << 24;
  c.samples.resize((bytes.size() - 8) / 2);
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    c.samples[i] = static_cast<std::int16_t>(bytes[8 + 2 * i] | bytes[9 + 2 * i] << 8);
  return c;
}

std::vector<std::uint8_t> encode_preview(const GrayImage& img) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + img.pixels().size());
  out.insert(out.end(), {'P', 'R', 'V', '0'});
  put_u16(out, static_cast<std::uint16_t>(img.width()));
  put_u16(out, static_cast<std::uint16_t>(img.height()));
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::ready: return "ready";
    case Phase::running: return "running";
    case Phase::finished: return "finished";
  }
  return "?";
}

Session::Session(std::shared_ptr<const SessionConfig> cfg, std::string id) : cfg_(std::move(cfg)), id_(std::move(id)) {
  if (!cfg_) throw InvalidInput("session config is null");
  if (cfg_->camera.width != cfg_->pipeline.grid.image_width || cfg_->camera.height != cfg_->pipeline.grid.image_height)
    throw InvalidInput("camera resolution does not match the grid");
}

Outgoing Session::make_text(std::string type, std::string body) {
  json j = json::parse(body.empty() ? "{}" : body);
  j["type"] = std::move(type);
  j["seq"] = ++server_seq_;
  return Outgoing{false, j.dump(), {}};
}

Outgoing Session::error(std::string_view detail, bool fatal) {
  json j = {{"detail", detail}, {"fatal", fatal}, {"phase", to_string(phase_)}};
  if (fatal) close_requested_ = true;
  return make_text("error", j.dump());
}

std::vector<Outgoing> Session::handle_text(std::string_view text) {
  transcript_.push_back({ticks_, std::string(text)});
  ClientMessage msg;
  try {
    msg = parse_client_message(text);
  } catch (const FormatError& e) {
    std::vector<Outgoing> out{error(e.what(), true)};
    disconnect();
    return out;
  }
  return handle(msg);
}

std::vector<Outgoing> Session::handle(const ClientMessage& msg) {
  std::vector<Outgoing> out;
  if (close_requested_) return out;

  const std::uint32_t* seq = nullptr;
  if (const auto* i = std::get_if<InputMsg>(&msg)) seq = &i->seq;
  if (const auto* m = std::get_if<MarkMsg>(&msg)) seq = &m->seq;
  if (seq) {
    if (last_client_seq_ && *seq <= *last_client_seq_) {
      out.push_back(error("seq " + std::to_string(*seq) + " does not increase past " +
                              std::to_string(*last_client_seq_),
                          true));
      disconnect();
      return out;
    }
    last_client_seq_ = *seq;
  }

  if (const auto* s = std::get_if<StartMsg>(&msg)) {
    if (phase_ != Phase::ready) {
      out.push_back(error("start is only valid before a trial", false));
      return out;
    }
    spectator_ = s->spectator;
    trial_.emplace(s->seed, cfg_->motion);
    engine_ = std::make_unique<VoiceEngine>(cfg_->hrirs, cfg_->sounds, cfg_->pipeline.audio);
    control_ = {};
    cam_yaw_ = cam_pitch_ = 0.0;
    phase_ = Phase::running;
    json j = {{"seed", s->seed},
              {"layout_hash", layout_hash(trial_->scene())},
              {"sample_rate", cfg_->pipeline.audio.sample_rate},
              {"block_frames", cfg_->pipeline.audio.block_frames},
              {"tick_ms", cfg_->tick_ms},
              {"spectator", spectator_}};
    out.push_back(make_text("session_ready", j.dump()));
    return out;
  }
  if (const auto* i = std::get_if<InputMsg>(&msg)) {
    if (phase_ != Phase::running) {
      out.push_back(error("input is only valid while a trial runs", false));
      return out;
    }
    control_ = {i->forward, i->turn, 0.0, 0.0};
    cam_yaw_ = i->cam_yaw_deg;
    cam_pitch_ = i->cam_pitch_deg;
    return out;
  }
  if (std::holds_alternative<MarkMsg>(msg)) {
    if (phase_ != Phase::running) {
      out.push_back(error("mark is only valid while a trial runs", false));
      return out;
    }
    emit_events({trial_->mark()}, out);
    return out;
  }
  // end
  if (phase_ == Phase::running) trial_->abort("client_end");
  if (phase_ != Phase::ready) persist();
  phase_ = Phase::finished;
  close_requested_ = true;
  return out;
}

void Session::emit_events(const std::vector<SimEvent>& events, std::vector<Outgoing>& out) {
  for (const SimEvent& e : events) {
    json j = {{"t_ms", trial_->now_ms()}};
    switch (e.kind) {
      case SimEvent::Kind::seen:
        j["kind"] = "seen";
        j["obstacle"] = e.obstacle;
        break;
      case SimEvent::Kind::false_mark: j["kind"] = "false_mark"; break;
      case SimEvent::Kind::wall_intervention:
        j["kind"] = "missed";
        j["target"] = "wall";
        break;
      case SimEvent::Kind::obstacle_intervention:
        j["kind"] = "missed";
        j["target"] = "obstacle";
        j["obstacle"] = e.obstacle;
        j["first"] = e.first;
        break;
    }
    out.push_back(make_text("event", j.dump()));
  }
}

std::vector<Outgoing> Session::tick() {
  std::vector<Outgoing> out;
  if (phase_ != Phase::running || close_requested_) return out;
  ++ticks_;
  trial_->set_input(control_);
  trial_->set_camera(cam_yaw_, cam_pitch_);
  emit_events(trial_->step(cfg_->tick_ms), out);

  const GrayImage frame = render_camera(trial_->scene(), trial_->pose(), cfg_->camera);
  const FrameResult r = process_frame(frame, cfg_->pipeline);
  engine_->update(r.activations);

  if (spectator_) {
    json cells = json::array();
    for (int c = 0; c < r.activations.rows * r.activations.cols; ++c) cells.push_back((r.activations.bits >> c & 1U) != 0);
    json j = {{"t_ms", trial_->now_ms()}, {"cells", cells}, {"bits", r.activations.bits},
              {"frame_ms", r.timing.total_ms}};
    out.push_back(make_text("activations", j.dump()));
    if (cfg_->preview_every_ticks > 0 && (ticks_ - 1) % static_cast<std::uint64_t>(cfg_->preview_every_ticks) == 0)
      out.push_back(Outgoing{true, {}, encode_preview(frame)});
  }

  if (trial_->finished()) finish(out);
  return out;
}

void Session::finish(std::vector<Outgoing>& out) {
  out.push_back(make_text("event", json{{"kind", "finish"}, {"t_ms", trial_->now_ms()}}.dump()));
  const TrialMetrics m = trial_metrics(trial_->log());
  json j = {{"seed", trial_->log().seed},
            {"completion_s", m.completion_s},
            {"objects_seen", m.objects_seen},
            {"objects_missed", m.objects_missed},
            {"false_marks", m.false_marks},
            {"wall_interventions", m.wall_interventions}};
  out.push_back(make_text("trial_summary", j.dump()));
  phase_ = Phase::finished;
  persist();
}

Outgoing Session::audio_chunk() {
  const int n = cfg_->pipeline.audio.block_frames;
  std::vector<double> left(static_cast<std::size_t>(n)), right(static_cast<std::size_t>(n));
  if (engine_) engine_->render_into(left, right, true);
  Outgoing o{true, {}, encode_pcm_chunk(frame_offset_, left, right)};
  frame_offset_ += static_cast<std::uint32_t>(n);
  return o;
}

void Session::disconnect() {
  close_requested_ = true;
  if (phase_ == Phase::running && trial_) {
    trial_->abort("disconnect");
    phase_ = Phase::finished;
    persist();
  }
}

void Session::persist() {
  if (persisted_ || !trial_ || !cfg_->log_dir) return;
  std::filesystem::create_directories(*cfg_->log_dir);
  const std::filesystem::path base =
      *cfg_->log_dir / (id_ + "_seed_" + std::to_string(trial_->log().seed));
  {
    std::ofstream f(base.string() + ".log", std::ios::binary);
    f << format_log(trial_->log());
  }
  {
    std::ofstream f(base.string() + ".transcript", std::ios::binary);
    for (const TranscriptEntry& e : transcript_) f << e.tick << '\t' << e.text << '\n';
  }
  persisted_ = base.string() + ".log";
}

TrialLog replay_transcript(std::span<const TranscriptEntry> transcript, std::shared_ptr<const SessionConfig> cfg,
                           std::uint64_t total_ticks) {
  auto quiet = std::make_shared<SessionConfig>(*cfg);
  quiet->log_dir.reset();
  Session s(quiet, "replay");
  std::size_t next = 0;
  for (;;) {
    while (next < transcript.size() && transcript[next].tick <= s.ticks()) s.handle_text(transcript[next++].text);
    if (s.ticks() >= total_ticks || s.phase() != Phase::running) break;
    s.tick();
  }
  if (s.phase() == Phase::running) s.disconnect();
  return s.trial() ? s.trial()->log() : TrialLog{};
}

}  // namespace sonicgrid
