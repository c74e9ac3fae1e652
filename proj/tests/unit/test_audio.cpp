#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "tempdir.hpp"
#include "sonicgrid/audio.hpp"
#include "sonicgrid/error.hpp"
#include "sonicgrid/wav.hpp"

using namespace sonicgrid;

namespace {

Hrir impulse_pair(double l = 1.0, double r = 1.0) { return Hrir{{l}, {r}, kDefaultSampleRate}; }

HrirSet unit_set() {
  std::array<Hrir, kGridCells> f;
  f.fill(impulse_pair());
  return HrirSet(f);
}

SoundBank constant_bank(double v, std::size_t n = 100) {
  SoundBank b;
  for (int i = 0; i < 3; ++i) b[static_cast<std::size_t>(i)] = {std::vector<double>(n, v), n, static_cast<SoundClass>(i)};
  return b;
}

CellActivations cells(std::initializer_list<int> on) {
  CellActivations a;
  for (int i : on) a.set(i, true);
  return a;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

// What one looping voice must produce: the loop repeated from position 0,
// fully convolved, first n samples.
std::vector<double> looped_voice(const SoundLoop& loop, const std::vector<double>& h, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = loop.samples[i % loop.loop_length];
  std::vector<double> y = oracle::convolve(x, h);
  y.resize(n);
  return y;
}

}  // namespace

TEST_CASE("fallback hrir") {
  const Hrir c = fallback_hrir(0, 0, 44100);
  CHECK(c.left == std::vector<double>{1.0});
  CHECK(c.right == c.left);

  const Hrir l = fallback_hrir(-90, 45, 44100);
  REQUIRE(l.length() == 12);
  CHECK(l.left[0] == 1.0);
  for (std::size_t i = 1; i < 12; ++i) CHECK(l.left[i] == 0.0);
  for (std::size_t i = 0; i < 11; ++i) CHECK(l.right[i] == 0.0);
  CHECK(l.right[11] == doctest::Approx(0.501).epsilon(1e-3));
  CHECK(l.right[11] == doctest::Approx(std::pow(10.0, -6.0 / 20.0)));

  const Hrir r = fallback_hrir(30, 0, 44100);
  // round(44100 * 0.0875 / 343 * 0.5) = 6
  REQUIRE(r.length() == 7);
  CHECK(r.right[0] == 1.0);
  CHECK(r.left[6] == doctest::Approx(std::pow(10.0, -2.0 / 20.0)));
  CHECK(r.left[0] == 0.0);

  CHECK(fallback_hrir(-90, -40, 44100).left == l.left);  // elevation ignored
}

TEST_CASE("hrir set lookup and validation") {
  const HrirSet s = fallback_hrir_set();
  CHECK(s.sample_rate() == 44100);
  CHECK(s.max_length() == 12);
  CHECK(&s.at(-90, 45) == &s.for_cell(0));
  CHECK(&s.at(90, -40) == &s.for_cell(11));
  CHECK_THROWS_AS(s.at(45, 0), InvalidInput);

  std::array<Hrir, kGridCells> f;
  f.fill(impulse_pair());
  f[3].sample_rate = 48000;
  CHECK_THROWS_AS(HrirSet{f}, InvalidInput);
  f.fill(impulse_pair());
  f[2].right.push_back(0.0);
  CHECK_THROWS_AS(HrirSet{f}, InvalidInput);
}

TEST_CASE("convolution") {
  const std::vector<double> x{0.25, -1.0, 0.5, 0.125};
  StereoBlock id = convolve_stereo(x, impulse_pair());
  CHECK(id.left == x);
  CHECK(id.right == x);

  StereoBlock mute = convolve_stereo(x, impulse_pair(1.0, 0.0));
  CHECK(mute.left == x);
  for (double v : mute.right) CHECK(v == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> small(-8, 8);
  for (int i = 0; i < 100; ++i) {
    // small integers keep every partial sum exact, so any summation order agrees
    std::vector<double> sig(8), hl(4), hr(4);
    for (double& v : sig) v = small(rng);
    for (double& v : hl) v = small(rng);
    for (double& v : hr) v = small(rng);
    const StereoBlock y = convolve_stereo(sig, Hrir{hl, hr, 44100});
    CHECK(y.left == oracle::convolve(sig, hl));
    CHECK(y.right == oracle::convolve(sig, hr));
  }

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 64), taps(1, 16);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> sig(static_cast<std::size_t>(len(rng))), h(static_cast<std::size_t>(taps(rng)));
    for (double& v : sig) v = u(rng);
    for (double& v : h) v = u(rng);
    const StereoBlock y = convolve_stereo(sig, Hrir{h, h, 44100});
    const std::vector<double> want = oracle::convolve(sig, h);
    REQUIRE(y.left.size() == sig.size() + h.size() - 1);
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(y.left[k] - want[k]) <= 1e-12);
  }

  CHECK(convolve_stereo({}, impulse_pair()).frames() == 0);
}

TEST_CASE("voice updates") {
  VoiceEngine e(fallback_hrir_set(), synthetic_sound_bank());
  e.update(CellActivations{});
  CHECK(e.audible_voices() == 0);
  for (int i = 0; i < kGridCells; ++i) CHECK_FALSE(e.voice(i).playing);

  e.update(cells({0}));
  CHECK(e.audible_voices() == 1);
  CHECK(e.voice(0).playing);
  CHECK(e.voice(0).position == 0);

  e.render_block(1000);
  CHECK(e.voice(0).position == 1000);
  e.update(cells({0}));
  CHECK(e.voice(0).position == 1000);  // unchanged cells keep their phase
  e.update(CellActivations{});
  CHECK_FALSE(e.voice(0).playing);
  e.render_block(10);
  e.update(cells({0}));
  CHECK(e.voice(0).playing);
  CHECK(e.voice(0).position == 0);
}

TEST_CASE("cell 0 plays birds through the (-90, +45) filter") {
  const SoundBank bank = synthetic_sound_bank();
  const HrirSet hrirs = fallback_hrir_set();
  VoiceEngine e(hrirs, bank);
  e.update(cells({0}));
  const std::size_t n = 3 * 44100 + 17;  // crosses two loop wraps
  const StereoBlock got = e.mix_block(static_cast<int>(n));
  const SoundLoop& birds = bank[static_cast<std::size_t>(SoundClass::birds)];
  CHECK(birds.sound == SoundClass::birds);
  const Hrir& h = hrirs.at(-90, 45);
  const std::vector<double> wl = looped_voice(birds, h.left, n), wr = looped_voice(birds, h.right, n);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err = std::max({err, std::abs(got.left[i] - wl[i]), std::abs(got.right[i] - wr[i])});
  CHECK(err <= 1e-12);
}

TEST_CASE("render sums and clips") {
  VoiceEngine e(unit_set(), constant_bank(0.5));
  StereoBlock b = e.render_block(64);
  for (double v : b.left) CHECK(v == 0.0);

  e.update(cells({4}));
  b = e.render_block(64);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(b.left[i] == 0.5);
    CHECK(b.right[i] == 0.5);
  }
  e.update(cells({4, 7}));
  b = e.render_block(64);
  for (double v : b.left) CHECK(v == 1.0);

  e.update(cells({1, 4, 7}));
  b = e.render_block(64);
  for (double v : b.right) CHECK(v == 1.0);  // 1.5 clipped
  CHECK(e.mix_block(8).left[0] == doctest::Approx(1.5));

  e.set_master_gain(0.25);
  CHECK(e.render_block(4).left[0] == doctest::Approx(0.375));
}

TEST_CASE("left dominance") {
  for (int col : {0, 3}) {
    VoiceEngine e(fallback_hrir_set(), synthetic_sound_bank());
    e.update(cells({4 + col}));
    const StereoBlock b = e.render_block(1024);
    if (col == 0)
      CHECK(rms(b.left) > rms(b.right));
    else
      CHECK(rms(b.right) > rms(b.left));
  }
}

TEST_CASE("linearity") {
  const SoundBank bank = synthetic_sound_bank(44100, 5);
  for (auto [a, b] : {std::pair{0, 11}, std::pair{5, 6}, std::pair{2, 9}}) {
    VoiceEngine both(fallback_hrir_set(), bank), ea(fallback_hrir_set(), bank), eb(fallback_hrir_set(), bank);
    both.update(cells({a, b}));
    ea.update(cells({a}));
    eb.update(cells({b}));
    for (int blk = 0; blk < 3; ++blk) {
      const StereoBlock s = both.mix_block(1024), x = ea.mix_block(1024), y = eb.mix_block(1024);
      for (std::size_t i = 0; i < 1024; ++i) {
        REQUIRE(std::abs(s.left[i] - (x.left[i] + y.left[i])) <= 1e-12);
        REQUIRE(std::abs(s.right[i] - (x.right[i] + y.right[i])) <= 1e-12);
      }
    }
  }
}

TEST_CASE("block splitting is sample exact") {
  const SoundBank bank = synthetic_sound_bank();
  for (int block : {1, 7, 64, 1024, 1500}) {
    const int k = 5;
    VoiceEngine one(fallback_hrir_set(), bank), many(fallback_hrir_set(), bank);
    one.update(cells({0, 3, 6, 11}));
    many.update(cells({0, 3, 6, 11}));
    const StereoBlock whole = one.render_block(k * block);
    std::vector<double> l, r;
    for (int i = 0; i < k; ++i) {
      const StereoBlock p = many.render_block(block);
      l.insert(l.end(), p.left.begin(), p.left.end());
      r.insert(r.end(), p.right.begin(), p.right.end());
    }
    CHECK(l == whole.left);
    CHECK(r == whole.right);
  }
}

TEST_CASE("stop latency") {
  VoiceEngine e(fallback_hrir_set(), synthetic_sound_bank());
  e.update(cells({0, 8}));
  e.render_block(1024);
  e.update(CellActivations{});
  const StereoBlock b = e.mix_block(1024);
  const std::size_t tail = e.tail_length();
  CHECK(tail == 11);
  bool tail_nonzero = false;
  for (std::size_t i = 0; i < tail; ++i) tail_nonzero |= b.left[i] != 0.0 || b.right[i] != 0.0;
  CHECK(tail_nonzero);
  for (std::size_t i = tail; i < 1024; ++i) {
    REQUIRE(b.left[i] == 0.0);
    REQUIRE(b.right[i] == 0.0);
  }
  CHECK(e.audible_voices() == 0);
  const StereoBlock after = e.mix_block(1024);
  for (double v : after.left) REQUIRE(v == 0.0);
}

TEST_CASE("render_into matches render_block") {
  VoiceEngine a(fallback_hrir_set(), synthetic_sound_bank()), b(fallback_hrir_set(), synthetic_sound_bank());
  a.update(cells({1, 2}));
  b.update(cells({1, 2}));
  std::vector<double> l(3000), r(3000);
  a.render_into(l, r);
  const StereoBlock w = b.render_block(3000);
  CHECK(l == w.left);
  CHECK(r == w.right);
  std::vector<double> short_r(10);
  CHECK_THROWS_AS(a.render_into(l, short_r), InvalidInput);
}

TEST_CASE("engine validation") {
  CHECK_THROWS_AS(VoiceEngine(fallback_hrir_set(48000), synthetic_sound_bank()), InvalidInput);
  CHECK_THROWS_AS(VoiceEngine(fallback_hrir_set(), synthetic_sound_bank(), EngineConfig{44100, 0, 1.0}), InvalidInput);
  VoiceEngine e(fallback_hrir_set(), synthetic_sound_bank());
  CHECK_THROWS_AS(e.render_block(0), InvalidInput);
  CHECK(EngineConfig::headroom().master_gain == doctest::Approx(1.0 / 12));
}

TEST_CASE("synthetic loops") {
  const SoundBank bank = synthetic_sound_bank();
  const double centers[3] = {2000.0, 500.0, 125.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const SoundLoop& l = bank[i];
    CHECK(l.sound == static_cast<SoundClass>(i));
    REQUIRE(l.loop_length == 44100);
    double peak = 0.0, energy = 0.0;
    for (double v : l.samples) {
      peak = std::max(peak, std::abs(v));
      energy += v * v;
    }
    CHECK(peak == doctest::Approx(0.5));
    // one-second loop: DFT bin k is k Hz; nearly all energy within +-25% of the center
    double band = 0.0;
    const int lo = static_cast<int>(centers[i] * 0.75), hi = static_cast<int>(centers[i] * 1.25);
    for (int k = lo; k <= hi; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t n = 0; n < l.samples.size(); ++n) {
        const double ph = 2.0 * M_PI * k * static_cast<double>(n) / 44100.0;
        re += l.samples[n] * std::cos(ph);
        im -= l.samples[n] * std::sin(ph);
      }
      band += 2.0 * (re * re + im * im) / 44100.0;
    }
    CHECK(band / energy > 0.999);
  }
  CHECK(synthetic_sound_bank()[0].samples == bank[0].samples);
  CHECK(synthetic_sound_bank(44100, 2)[0].samples != bank[0].samples);
}

namespace {

void write_ir(const std::filesystem::path& p, std::vector<double> taps, int rate = 44100) {
  const std::vector<std::vector<double>> planes{std::move(taps)};
  write_wav_float32(p, planes, rate);
}

std::string manifest_lines(const TempDir& d, int skip_cell = -1, int odd_rate_cell = -1, int odd_len_cell = -1) {
  std::string m = "# azimuth elevation left right\n";
  for (int c = 0; c < kGridCells; ++c) {
    const int az = kAzimuths[c % 4], el = kElevations[c / 4];
    const std::string l = "l" + std::to_string(c) + ".wav", r = "r" + std::to_string(c) + ".wav";
    write_ir(d / l, {1.0, 0.5 * c / 12.0, 0.0}, c == odd_rate_cell ? 48000 : 44100);
    write_ir(d / r, c == odd_len_cell ? std::vector<double>{0.25, 0.0} : std::vector<double>{0.25, 0.0, 0.1},
             c == odd_rate_cell ? 48000 : 44100);
    if (c != skip_cell) m += std::to_string(az) + " " + std::to_string(el) + " " + l + " " + r + "\n";
  }
  return m;
}

}  // namespace

TEST_CASE("hrir manifest") {
  TempDir d;
  const HrirSet s = load_hrir_set(d.write("ok.txt", manifest_lines(d)));
  REQUIRE(s.for_cell(5).length() == 3);
  CHECK(s.for_cell(5).left[0] == 1.0);
  CHECK(s.for_cell(5).left[1] == doctest::Approx(0.5 * 5 / 12.0).epsilon(1e-6));
  CHECK(s.at(90, -40).right[0] == doctest::Approx(0.25));

  try {
    load_hrir_set(d.write("missing.txt", manifest_lines(d, 11)));
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("(+90, -40)") != std::string::npos);
  }
  try {
    load_hrir_set(d.write("rate.txt", manifest_lines(d, -1, 4)));
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("sample-rate") != std::string::npos);
  }
  CHECK_THROWS_AS(load_hrir_set(d.write("len.txt", manifest_lines(d, -1, -1, 2))), FormatError);
  CHECK_THROWS_AS(load_hrir_set(d / "nope.txt"), FormatError);
  CHECK_THROWS_AS(load_hrir_set(d.write("junk.txt", "90 -40 only\n")), FormatError);

  // single stereo file form
  std::string stereo;
  for (int c = 0; c < kGridCells; ++c) {
    const std::vector<std::vector<double>> planes{{1.0, 0.0}, {0.0, 0.5}};
    write_wav_float32(d / ("s" + std::to_string(c) + ".wav"), planes, 44100);
    stereo += std::to_string(kAzimuths[c % 4]) + " " + std::to_string(kElevations[c / 4]) + " s" + std::to_string(c) + ".wav\n";
  }
  const HrirSet st = load_hrir_set(d.write("stereo.txt", stereo));
  CHECK(st.for_cell(3).right == std::vector<double>{0.0, 0.5});
}

TEST_CASE("sound manifest") {
  TempDir d;
  std::string m;
  const char* names[3] = {"birds", "trees", "waves"};
  for (int i = 0; i < 3; ++i) {
    write_ir(d / (std::string(names[i]) + ".wav"), std::vector<double>(200, 0.1 * (i + 1)));
    m += std::string(names[i]) + " " + names[i] + ".wav " + std::to_string(100 + i) + "\n";
  }
  const SoundBank b = load_sound_bank(d.write("sounds.txt", m), 44100);
  CHECK(b[2].loop_length == 102);
  CHECK(b[2].sound == SoundClass::waves);
  CHECK(b[1].samples[0] == doctest::Approx(0.2));
  CHECK_THROWS_AS(load_sound_bank(d.write("short.txt", "birds birds.wav 100\n"), 44100), FormatError);
  CHECK_THROWS_AS(load_sound_bank(d.write("long.txt", "birds birds.wav 900\ntrees trees.wav 1\nwaves waves.wav 1\n"), 44100),
                  FormatError);
  CHECK_THROWS_AS(load_sound_bank(d.write("sounds.txt", m), 48000), FormatError);
}
