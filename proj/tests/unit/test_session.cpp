#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <nlohmann/json.hpp>
#include <thread>

#include "sonicgrid/error.hpp"
#include "sonicgrid/session.hpp"
#include "tempdir.hpp"

using namespace sonicgrid;
using nlohmann::json;

namespace {

std::vector<json> texts(const std::vector<Outgoing>& out) {
  std::vector<json> v;
  for (const Outgoing& o : out)
    if (!o.binary) v.push_back(json::parse(o.text));
  return v;
}

std::string input(std::uint32_t seq, int fwd, int turn) {
  return to_json(InputMsg{seq, fwd, turn, 0.0, 0.0});
}

// drives the clear lane of seed 0 through the session protocol
struct LaneDriver {
  Session& s;
  std::uint32_t seq = 0;
  std::vector<json> seen;

  void hold(int fwd, int turn, int ticks) {
    for (const json& j : texts(s.handle_text(input(++seq, fwd, turn)))) seen.push_back(j);
    for (int i = 0; i < ticks && s.phase() == Phase::running; ++i)
      for (const json& j : texts(s.tick())) seen.push_back(j);
  }
  void run() {
    hold(0, -1, 30);
    hold(1, 0, 16);
    hold(0, 1, 30);
    hold(1, 0, 400);
  }
};

}  // namespace

TEST_CASE("client messages round trip") {
  const std::vector<ClientMessage> msgs{StartMsg{123456789012345ULL, true}, InputMsg{4, -1, 1, 12.5, -3.25},
                                        MarkMsg{9}, EndMsg{}};
  for (const ClientMessage& m : msgs) {
    const ClientMessage back = parse_client_message(to_json(m));
    CHECK(back.index() == m.index());
    CHECK(to_json(back) == to_json(m));
  }
  const auto in = std::get<InputMsg>(parse_client_message(
      R"({"type":"input","seq":3,"forward":1,"turn":0,"cam_yaw_deg":10,"cam_pitch_deg":-5})"));
  CHECK(in.seq == 3);
  CHECK(in.forward == 1);
  CHECK(in.cam_yaw_deg == 10.0);
  CHECK(in.cam_pitch_deg == -5.0);
}

TEST_CASE("client message schema errors") {
  for (const char* bad : {"", "{", "[]", "42", R"({"seed":1})", R"({"type":"jump"})", R"({"type":"start"})",
                          R"({"type":"start","seed":-1,"spectator":false})",
                          R"({"type":"start","seed":1,"spectator":"yes"})", R"({"type":"mark"})",
                          R"({"type":"input","seq":1,"forward":2,"turn":0,"cam_yaw_deg":0,"cam_pitch_deg":0})",
                          R"({"type":"input","seq":1,"forward":0,"turn":0,"cam_yaw_deg":0})",
                          R"({"type":"input","seq":1,"forward":0.5,"turn":0,"cam_yaw_deg":0,"cam_pitch_deg":0})"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_client_message(bad), FormatError);
  }
}

TEST_CASE("pcm chunks") {
  const std::vector<double> l{0.0, 0.5, -1.0, 2.0}, r{1.0, -0.5, 0.25, -3.0};
  const std::vector<std::uint8_t> b = encode_pcm_chunk(4096, l, r);
  REQUIRE(b.size() == 8 + 4 * 4);
  CHECK(std::string(b.begin(), b.begin() + 4) == "PCM0");
  CHECK(b[4] == 0x00);
  CHECK(b[5] == 0x10);
  CHECK(b[6] == 0x00);
  CHECK(b[7] == 0x00);
  const PcmChunk c = decode_pcm_chunk(b);
  CHECK(c.frame_offset == 4096);
  CHECK(c.samples == std::vector<std::int16_t>{0, 32767, 16384, -16384, -32767, 8192, 32767, -32767});

  std::vector<std::uint8_t> bad = b;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_pcm_chunk(bad), FormatError);
  bad = b;
  bad.pop_back();
  CHECK_THROWS_AS(decode_pcm_chunk(bad), FormatError);
  CHECK_THROWS_AS(decode_pcm_chunk(std::vector<std::uint8_t>{'P', 'C', 'M'}), FormatError);
}

TEST_CASE("preview frames") {
  GrayImage img(3, 2);
  for (int i = 0; i < 6; ++i) img.pixels()[i] = static_cast<std::uint8_t>(i * 40);
  const std::vector<std::uint8_t> b = encode_preview(img);
  REQUIRE(b.size() == 8 + 6);
  CHECK(std::string(b.begin(), b.begin() + 4) == "PRV0");
  CHECK(b[4] == 3);
  CHECK(b[6] == 2);
  CHECK(b[13] == 200);
}

TEST_CASE("session starts and reports the layout") {
  Session s(std::make_shared<SessionConfig>());
  CHECK(s.phase() == Phase::ready);
  CHECK_FALSE(s.streaming());
  const std::vector<json> r = texts(s.handle_text(R"({"type":"start","seed":7,"spectator":false})"));
  REQUIRE(r.size() == 1);
  CHECK(r[0]["type"] == "session_ready");
  CHECK(r[0]["seed"] == 7);
  CHECK(r[0]["layout_hash"] == layout_hash(generate_layout(7)));
  CHECK(r[0]["sample_rate"] == 44100);
  CHECK(r[0]["tick_ms"] == 50);
  CHECK(s.phase() == Phase::running);
  CHECK(s.streaming());

  // a second start is out of phase but not fatal
  const std::vector<json> again = texts(s.handle_text(to_json(StartMsg{8, false})));
  REQUIRE(again.size() == 1);
  CHECK(again[0]["type"] == "error");
  CHECK(again[0]["fatal"] == false);
  CHECK(again[0]["seq"].get<int>() > r[0]["seq"].get<int>());
  CHECK_FALSE(s.close_requested());
}

TEST_CASE("out of phase messages") {
  Session s(std::make_shared<SessionConfig>());
  for (const std::string& m : {to_json(MarkMsg{1}), input(2, 1, 0)}) {
    const std::vector<json> r = texts(s.handle_text(m));
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "error");
    CHECK(r[0]["fatal"] == false);
    CHECK(r[0]["phase"] == "ready");
  }
  CHECK_FALSE(s.close_requested());
  CHECK(s.phase() == Phase::ready);
  CHECK(s.tick().empty());
}

TEST_CASE("mark with nothing in view is a false mark") {
  Session s(std::make_shared<SessionConfig>());
  s.handle_text(to_json(StartMsg{0, false}));
  s.tick();
  const std::vector<json> r = texts(s.handle_text(to_json(MarkMsg{1})));
  REQUIRE(r.size() == 1);
  CHECK(r[0]["type"] == "event");
  CHECK(r[0]["kind"] == "false_mark");
  CHECK(r[0]["t_ms"] == 50);
}

TEST_CASE("forward input walks about a metre in 20 ticks") {
  Session s(std::make_shared<SessionConfig>());
  s.handle_text(to_json(StartMsg{0, false}));
  s.handle_text(input(1, 1, 0));
  for (int i = 0; i < 20; ++i) s.tick();
  CHECK(s.trial()->pose().x == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(s.trial()->now_ms() == 1000);
  CHECK(s.ticks() == 20);
}

TEST_CASE("camera angles follow the input") {
  Session s(std::make_shared<SessionConfig>());
  s.handle_text(to_json(StartMsg{0, false}));
  s.handle_text(to_json(InputMsg{1, 0, 0, 20.0, -10.0}));
  s.tick();
  CHECK(s.trial()->pose().cam_yaw_deg == doctest::Approx(20.0));
  CHECK(s.trial()->pose().cam_pitch_deg == doctest::Approx(-10.0));
}

TEST_CASE("fatal protocol errors close the session") {
  TempDir dir;
  auto cfg = std::make_shared<SessionConfig>();
  cfg->log_dir = dir.path();

  SUBCASE("non-increasing seq") {
    Session s(cfg, "seq");
    s.handle_text(to_json(StartMsg{1, false}));
    s.handle_text(input(5, 1, 0));
    s.tick();
    const std::vector<json> r = texts(s.handle_text(input(5, 0, 0)));
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "error");
    CHECK(r[0]["fatal"] == true);
    CHECK(s.close_requested());
    CHECK(s.phase() == Phase::finished);
    CHECK(s.handle_text(input(6, 0, 0)).empty());
    CHECK(s.tick().empty());
    REQUIRE(s.persisted_log());
    const TrialLog log = parse_log(slurp(*s.persisted_log()));
    CHECK(log.records.back().type == EventType::abort);
  }
  SUBCASE("malformed json") {
    Session s(cfg, "junk");
    const std::vector<json> r = texts(s.handle_text("{not json"));
    REQUIRE(r.size() == 1);
    CHECK(r[0]["fatal"] == true);
    CHECK(s.close_requested());
    CHECK_FALSE(s.persisted_log());  // no trial yet
  }
}

TEST_CASE("disconnect persists an aborted log and the transcript") {
  TempDir dir;
  auto cfg = std::make_shared<SessionConfig>();
  cfg->log_dir = dir.path();
  Session s(cfg, "drop");
  s.handle_text(to_json(StartMsg{3, false}));
  s.handle_text(input(1, 1, 0));
  for (int i = 0; i < 5; ++i) s.tick();
  s.disconnect();
  REQUIRE(s.persisted_log());
  CHECK(s.persisted_log()->filename() == "drop_seed_3.log");
  const TrialLog log = parse_log(slurp(*s.persisted_log()));
  CHECK_FALSE(validate_log(log));
  CHECK(log.records.back().type == EventType::abort);
  CHECK(*log.records.back().field("reason") == "disconnect");
  CHECK(log.records.back().t_ms == 250);
  const std::string tr = slurp(dir.path() / "drop_seed_3.transcript");
  CHECK(tr == "0\t" + to_json(StartMsg{3, false}) + "\n0\t" + input(1, 1, 0) + "\n");
}

TEST_CASE("end aborts with client_end") {
  Session s(std::make_shared<SessionConfig>());
  s.handle_text(to_json(StartMsg{3, false}));
  s.tick();
  s.handle_text(to_json(EndMsg{}));
  CHECK(s.close_requested());
  CHECK(*s.trial()->log().records.back().field("reason") == "client_end");
}

TEST_CASE("finishing a trial sends a summary matching the log") {
  TempDir dir;
  auto cfg = std::make_shared<SessionConfig>();
  cfg->log_dir = dir.path();
  Session s(cfg, "lane");
  s.handle_text(to_json(StartMsg{0, false}));
  LaneDriver d{s, 0, {}};
  d.run();
  REQUIRE(s.phase() == Phase::finished);
  REQUIRE(d.seen.size() >= 2);
  const json& fin = d.seen[d.seen.size() - 2];
  const json& sum = d.seen.back();
  CHECK(fin["kind"] == "finish");
  CHECK(sum["type"] == "trial_summary");
  const TrialMetrics m = trial_metrics(s.trial()->log());
  CHECK(sum["completion_s"].get<double>() == m.completion_s);
  CHECK(sum["objects_seen"] == m.objects_seen);
  CHECK(sum["objects_missed"] == m.objects_missed);
  CHECK(sum["false_marks"] == m.false_marks);
  CHECK(sum["wall_interventions"] == m.wall_interventions);
  CHECK(m.completion_s == doctest::Approx(17.3).epsilon(0.01));
  REQUIRE(s.persisted_log());
  CHECK(parse_log(slurp(*s.persisted_log())) == s.trial()->log());

  for (std::size_t i = 1; i < d.seen.size(); ++i) CHECK(d.seen[i]["seq"].get<int>() > d.seen[i - 1]["seq"].get<int>());
}

TEST_CASE("transcripts replay to the same log") {
  auto cfg = std::make_shared<SessionConfig>();
  Session s(cfg);
  s.handle_text(to_json(StartMsg{0, false}));
  LaneDriver d{s, 0, {}};
  d.run();
  const TrialLog again = replay_transcript(s.transcript(), cfg, s.ticks());
  CHECK(again == s.trial()->log());

  // an interrupted session with marks and camera moves
  Session t(cfg);
  t.handle_text(to_json(StartMsg{11, false}));
  std::uint32_t seq = 0;
  for (int i = 0; i < 60; ++i) {
    if (i % 7 == 0) t.handle_text(to_json(InputMsg{++seq, i % 2, (i / 7) % 3 - 1, i * 1.5, -5.0}));
    if (i % 13 == 0) t.handle_text(to_json(MarkMsg{++seq}));
    t.tick();
  }
  t.disconnect();
  CHECK(replay_transcript(t.transcript(), cfg, t.ticks()) == t.trial()->log());
}

TEST_CASE("spectators get activations and previews") {
  Session s(std::make_shared<SessionConfig>());
  s.handle_text(to_json(StartMsg{0, true}));
  int previews = 0, acts = 0;
  for (int i = 0; i < 8; ++i) {
    for (const Outgoing& o : s.tick()) {
      if (o.binary) {
        ++previews;
        CHECK(std::string(o.bytes.begin(), o.bytes.begin() + 4) == "PRV0");
        CHECK(o.bytes.size() == 8 + 192 * 144);
      } else {
        const json j = json::parse(o.text);
        if (j["type"] != "activations") continue;
        ++acts;
        REQUIRE(j["cells"].size() == 12);
        std::uint64_t bits = 0;
        for (int c = 0; c < 12; ++c) bits |= std::uint64_t{j["cells"][c].get<bool>()} << c;
        CHECK(bits == j["bits"].get<std::uint64_t>());
        CHECK(j["frame_ms"].get<double>() >= 0.0);
      }
    }
  }
  CHECK(acts == 8);
  CHECK(previews == 2);

  Session plain(std::make_shared<SessionConfig>());
  plain.handle_text(to_json(StartMsg{0, false}));
  CHECK(plain.tick().empty());
}

TEST_CASE("audio chunks advance by one block") {
  Session s(std::make_shared<SessionConfig>());
  s.handle_text(to_json(StartMsg{0, false}));
  for (int i = 0; i < 3; ++i) {
    const Outgoing o = s.audio_chunk();
    REQUIRE(o.binary);
    const PcmChunk c = decode_pcm_chunk(o.bytes);
    CHECK(c.frame_offset == static_cast<std::uint32_t>(i * kDefaultBlockFrames));
    CHECK(c.samples.size() == 2 * kDefaultBlockFrames);
  }
}

namespace beast = boost::beast;
namespace ws = beast::websocket;
using tcp = boost::asio::ip::tcp;

TEST_CASE("websocket endpoint streams audio") {
  ServeConfig sc;
  sc.address = "127.0.0.1";
  sc.port = 0;
  Server server(sc);
  REQUIRE(server.port() != 0);
  server.start();

  boost::asio::io_context ioc;
  tcp::resolver res(ioc);
  ws::stream<tcp::socket> c(ioc);
  boost::asio::connect(c.next_layer(), res.resolve("127.0.0.1", std::to_string(server.port())));
  c.handshake("127.0.0.1", "/");
  c.text(true);
  c.write(boost::asio::buffer(to_json(StartMsg{5, true})));
  c.write(boost::asio::buffer(input(1, 1, 0)));

  int chunks = 0, acts = 0, previews = 0;
  std::int64_t last = -1;
  bool ready = false;
  const auto t0 = std::chrono::steady_clock::now();
  while (chunks < 20 && std::chrono::steady_clock::now() - t0 < std::chrono::seconds(10)) {
    beast::flat_buffer buf;
    c.read(buf);
    const auto* p = static_cast<const std::uint8_t*>(buf.data().data());
    if (c.got_binary()) {
      std::vector<std::uint8_t> bytes(p, p + buf.size());
      if (std::string(bytes.begin(), bytes.begin() + 4) == "PRV0") {
        ++previews;
        continue;
      }
      const PcmChunk ch = decode_pcm_chunk(bytes);
      CHECK(ch.samples.size() == 2 * kDefaultBlockFrames);
      CHECK(static_cast<std::int64_t>(ch.frame_offset) == (last < 0 ? 0 : last + kDefaultBlockFrames));
      last = ch.frame_offset;
      ++chunks;
    } else {
      const json j = json::parse(std::string(reinterpret_cast<const char*>(p), buf.size()));
      if (j["type"] == "session_ready") {
        ready = true;
        CHECK(j["layout_hash"] == layout_hash(generate_layout(5)));
      }
      acts += j["type"] == "activations";
    }
  }
  CHECK(ready);
  CHECK(chunks == 20);
  CHECK(acts > 0);
  CHECK(previews > 0);

  c.write(boost::asio::buffer(std::string("{broken")));
  bool fatal = false;
  try {
    for (int i = 0; i < 200; ++i) {
      beast::flat_buffer buf;
      c.read(buf);
      if (c.got_text()) {
        const json j = json::parse(beast::buffers_to_string(buf.data()));
        if (j["type"] == "error") fatal = j["fatal"].get<bool>();
      }
    }
  } catch (const beast::system_error& e) {
    CHECK(e.code() == ws::error::closed);
  }
  CHECK(fatal);
  server.stop();
}

TEST_CASE("taken port is an error") {
  ServeConfig sc;
  sc.address = "127.0.0.1";
  sc.port = 0;
  Server a(sc);
  sc.port = a.port();
  CHECK_THROWS_AS(Server{sc}, std::runtime_error);
}
