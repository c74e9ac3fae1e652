#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sonicgrid/audio.hpp"
#include "sonicgrid/pipeline.hpp"
#include "sonicgrid/sim.hpp"

namespace sonicgrid {

// ---------------------------------------------------------------- protocol
//
// Client -> server text frames:
//   {"type":"start","seed":u64,"spectator":bool}
//   {"type":"input","seq":u32,"forward":-1|0|1,"turn":-1|0|1,"cam_yaw_deg":f,"cam_pitch_deg":f}
//   {"type":"mark","seq":u32}
//   {"type":"end"}
//
// Server -> client text frames all carry a strictly increasing "seq":
//   session_ready, activations (spectators), event, trial_summary, error.
//
// Server -> client binary frames:
//   "PCM0" | u32 LE frame offset | interleaved s16 LE stereo, block_frames frames
//   "PRV0" | u16 LE width | u16 LE height | 8-bit gray pixels   (spectators)

struct StartMsg {
  std::uint64_t seed = 0;
  bool spectator = false;
};
struct InputMsg {
  std::uint32_t seq = 0;
  int forward = 0;
  int turn = 0;
  double cam_yaw_deg = 0.0;
  double cam_pitch_deg = 0.0;
};
struct MarkMsg {
  std::uint32_t seq = 0;
};
struct EndMsg {};

using ClientMessage = std::variant<StartMsg, InputMsg, MarkMsg, EndMsg>;

/// Throws FormatError on malformed JSON or a schema violation.
ClientMessage parse_client_message(std::string_view text);
std::string to_json(const ClientMessage& msg);

std::vector<std::uint8_t> encode_pcm_chunk(std::uint32_t frame_offset, std::span<const double> left,
                                           std::span<const double> right);

struct PcmChunk {
  std::uint32_t frame_offset = 0;
  std::vector<std::int16_t> samples;  // interleaved L R
};
/// Throws FormatError on a bad magic or odd payload.
PcmChunk decode_pcm_chunk(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_preview(const GrayImage& img);

// ---------------------------------------------------------------- session

enum class Phase { ready, running, finished };

std::string_view to_string(Phase p);

struct SessionConfig {
  PipelineConfig pipeline;
  CameraConfig camera;
  MotionParams motion;
  std::uint32_t tick_ms = 50;
  int preview_every_ticks = 4;
  HrirSet hrirs = fallback_hrir_set();
  SoundBank sounds = synthetic_sound_bank();
  /// Finished and aborted trial logs are written here when set.
  std::optional<std::filesystem::path> log_dir;
};

struct Outgoing {
  bool binary = false;
  std::string text;
  std::vector<std::uint8_t> bytes;
};

/// A received client frame and the number of ticks that had elapsed when it arrived.
struct TranscriptEntry {
  std::uint64_t tick = 0;
  std::string text;
};

/// One client's trial. Transport-agnostic: the server feeds it frames and
/// ticks, and ships whatever it returns.
class Session {
 public:
  explicit Session(std::shared_ptr<const SessionConfig> cfg, std::string id = "session");

  /// Parses and applies a client text frame. Schema violations and
  /// non-increasing seq numbers produce a fatal error and request close;
  /// messages arriving in the wrong phase produce a non-fatal error.
  std::vector<Outgoing> handle_text(std::string_view text);
  std::vector<Outgoing> handle(const ClientMessage& msg);

  /// One simulation tick: step the agent with the latest input, render,
  /// process the frame and update the voices.
  std::vector<Outgoing> tick();

  /// Next PCM0 chunk. Only meaningful once running.
  Outgoing audio_chunk();

  /// Connection lost: aborts a running trial and persists its log.
  void disconnect();

  Phase phase() const { return phase_; }
  bool close_requested() const { return close_requested_; }
  bool streaming() const { return phase_ != Phase::ready && engine_ != nullptr; }
  const Trial* trial() const { return trial_ ? &*trial_ : nullptr; }
  const VoiceEngine* engine() const { return engine_.get(); }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  std::uint64_t ticks() const { return ticks_; }
  const std::optional<std::filesystem::path>& persisted_log() const { return persisted_; }
  const std::string& id() const { return id_; }

 private:
  Outgoing make_text(std::string type, std::string body);
  Outgoing error(std::string_view detail, bool fatal);
  void emit_events(const std::vector<SimEvent>& events, std::vector<Outgoing>& out);
  void finish(std::vector<Outgoing>& out);
  void persist();

  std::shared_ptr<const SessionConfig> cfg_;
  std::string id_;
  Phase phase_ = Phase::ready;
  bool spectator_ = false;
  bool close_requested_ = false;
  std::optional<Trial> trial_;
  std::unique_ptr<VoiceEngine> engine_;
  ControlInput control_;
  double cam_yaw_ = 0.0;
  double cam_pitch_ = 0.0;
  std::optional<std::uint32_t> last_client_seq_;
  std::uint64_t server_seq_ = 0;
  std::uint64_t ticks_ = 0;
  std::uint32_t frame_offset_ = 0;
  std::vector<TranscriptEntry> transcript_;
  std::optional<std::filesystem::path> persisted_;
};

/// Re-runs a transcript against a fresh session and returns the resulting log.
TrialLog replay_transcript(std::span<const TranscriptEntry> transcript, std::shared_ptr<const SessionConfig> cfg,
                           std::uint64_t total_ticks);

// ---------------------------------------------------------------- server

struct ServeConfig {
  std::string address = "0.0.0.0";
  unsigned short port = 8765;  // 0 picks a free port
  std::shared_ptr<const SessionConfig> session = std::make_shared<SessionConfig>();
};

/// WebSocket endpoint, one Session per connection, single I/O thread.
class Server {
 public:
  /// Binds immediately; throws std::runtime_error when the port is taken.
  explicit Server(ServeConfig cfg);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  /// Serves until stop() is called.
  void run();
  /// run() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sonicgrid
