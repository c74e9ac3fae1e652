#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "frames.hpp"
#include "sonicgrid/image_io.hpp"
#include "sonicgrid/wav.hpp"
#include "tempdir.hpp"

using namespace sonicgrid;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(SG_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const fs::path kGolden = fs::path(SG_GOLDEN_DIR) / "cli_sim";

}  // namespace

TEST_CASE("mask of a uniform image is all black") {
  TempDir d;
  write_image(d / "u.pgm", GrayImage(40, 30, 128));
  const Run r = cli("mask " + q(d / "u.pgm") + " " + q(d / "m.png"));
  CHECK(r.status == 0);
  CHECK(r.out.find("0 salient pixels of 1200") != std::string::npos);
  const GrayImage m = read_image(d / "m.png");
  CHECK(m.width() == 40);
  for (std::uint8_t v : m.pixels()) REQUIRE(v == 0);
}

TEST_CASE("mask marks dots") {
  TempDir d;
  write_image(d / "dots.pgm", dot_lattice_frame());
  const Run r = cli("mask " + q(d / "dots.pgm") + " " + q(d / "m.pgm") + " --thresh 0.112");
  CHECK(r.status == 0);
  const GrayImage m = read_image(d / "m.pgm");
  int lit = 0;
  for (std::uint8_t v : m.pixels()) lit += v == 255;
  CHECK(lit == 225);
  CHECK(m.at(2, 2) == 255);
  CHECK(m.at(3, 2) == 0);
}

TEST_CASE("sim reproduces the frozen logs") {
  TempDir d;
  const Run r = cli("sim --seed 0 --trials 5 --out " + q(d.path()));
  REQUIRE(r.status == 0);
  for (const char* name : {"trial_1_seed_0.log", "trial_2_seed_1.log", "trial_3_seed_2.log", "trial_4_seed_3.log",
                           "trial_5_seed_4.log", "metrics.tsv"}) {
    CAPTURE(name);
    CHECK(slurp(d / name) == slurp(kGolden / name));
  }
  const Run a = cli("analyze " + q(d.path()) + " --improve --summary " + q(d / "s.json"));
  CHECK(a.status == 0);
  const auto j = nlohmann::json::parse(slurp(d / "s.json"));
  const double imp = j["percent"].get<double>();
  CHECK(std::isfinite(imp));
  CHECK(imp == doctest::Approx(100.0 - std::min(30.95, 34.85) / 28.55 * 100.0).epsilon(1e-9));
}

TEST_CASE("fit through the cli") {
  TempDir d;
  std::string text = "# mean completion per trial\n";
  for (int i = 1; i <= 5; ++i) text += std::to_string(179.8 * std::exp(-i / 2.0) + 134.0) + "\n";
  d.write("series.txt", text);
  const Run r = cli("analyze " + q(d / "series.txt") + " --fit --summary " + q(d / "f.json"));
  CHECK(r.status == 0);
  const auto j = nlohmann::json::parse(slurp(d / "f.json"));
  CHECK(j["amplitude"].get<double>() == doctest::Approx(179.8).epsilon(1e-3));
  CHECK(j["decay"].get<double>() == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(j["offset"].get<double>() == doctest::Approx(134.0).epsilon(1e-3));
  CHECK(j["converged"] == true);
}

TEST_CASE("dbscan through the cli") {
  TempDir d;
  std::string text = "x,y\n";
  for (int i = 0; i < 20; ++i) text += std::to_string(i % 5 * 0.01) + "," + std::to_string(i / 5 * 0.01) + "\n";
  for (int i = 0; i < 20; ++i) text += std::to_string(10 + i % 5 * 0.01) + "," + std::to_string(5 + i / 5 * 0.01) + "\n";
  d.write("pts.csv", text);
  const Run r = cli("analyze " + q(d / "pts.csv") + " --dbscan --summary " + q(d / "c.json"));
  CHECK(r.status == 0);
  const auto j = nlohmann::json::parse(slurp(d / "c.json"));
  CHECK(j["clusters"] == 2);
  CHECK(j["noise"] == 0);
}

TEST_CASE("sonify is deterministic") {
  TempDir d;
  fs::create_directories(d / "frames");
  write_image(d / "frames" / "f000.pgm", bar_frame(0, 48));
  write_image(d / "frames" / "f001.png", bar_frame(144, 192));
  write_image(d / "frames" / "f002.pgm", GrayImage(192, 144, 250));
  const std::string base = "sonify " + q(d / "frames") + " ";
  REQUIRE(cli(base + q(d / "a.wav") + " --seconds 0.5").status == 0);
  REQUIRE(cli(base + q(d / "b.wav") + " --seconds 0.5").status == 0);
  CHECK(slurp(d / "a.wav") == slurp(d / "b.wav"));
  const WavData w = read_wav(d / "a.wav");
  CHECK(w.sample_rate == 44100);
  REQUIRE(w.channels == 2);
  CHECK(w.frames() == 22050);
  double energy = 0;
  for (double v : w.channel(0)) energy += v * v;
  CHECK(energy > 0.0);

  REQUIRE(cli("sonify " + q(d / "frames" / "f002.pgm") + " " + q(d / "c.wav") + " --seconds 0.25").status == 0);
  const WavData quiet = read_wav(d / "c.wav");
  CHECK(quiet.frames() == 11025);
  for (double v : quiet.samples) REQUIRE(v == 0.0);
}

TEST_CASE("bad invocations fail") {
  TempDir d;
  d.write("junk.log", "0 start seed=1\n");
  d.write("four.txt", "1\n2\n3\n4\n");
  for (const std::string& args :
       {std::string(""), std::string("mask"), "mask " + q(d / "missing.pgm") + " " + q(d / "o.pgm"),
        "mask " + q(d / "junk.log") + " " + q(d / "o.pgm"), std::string("sim --seed 0"),
        "sim --seed 0 --trials 0 --out " + q(d.path()), "sim --seed 0 --policy wander --out " + q(d.path()),
        "analyze " + q(d / "junk.log") + " --improve", "analyze " + q(d / "four.txt") + " --improve",
        "analyze " + q(d / "four.txt") + " --fit --dbscan", "sonify " + q(d / "junk.log") + " x.wav --seconds 1",
        std::string("frobnicate")}) {
    CAPTURE(args);
    CHECK(cli(args).status != 0);
  }
}
