#include "sonicgrid/audio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "sonicgrid/error.hpp"
#include "sonicgrid/sim.hpp"
#include "sonicgrid/wav.hpp"

namespace sonicgrid {

namespace {

constexpr double kHeadRadius = 0.0875;   // m
constexpr double kSpeedOfSound = 343.0;  // m/s
constexpr double kMaxIldDb = 6.0;

std::string signed_deg(int v) { return (v > 0 ? "+" : "") + std::to_string(v); }

int column_of(int azimuth) {
  for (int c = 0; c < kGridCols; ++c) {
    if (kAzimuths[c] == azimuth) return c;
  }
  return -1;
}

int row_of(int elevation) {
  for (int r = 0; r < kGridRows; ++r) {
    if (kElevations[r] == elevation) return r;
  }
  return -1;
}

/// Reads the manifest into non-empty, non-comment token lists.
std::vector<std::vector<std::string>> manifest_lines(const std::filesystem::path& manifest) {
  std::ifstream f(manifest);
  if (!f) throw FormatError("cannot open manifest " + manifest.string());
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string t; ss >> t;) tokens.push_back(t);
    if (!tokens.empty()) lines.push_back(std::move(tokens));
  }
  return lines;
}

std::filesystem::path resolve(const std::filesystem::path& manifest, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : manifest.parent_path() / path;
}

int parse_int(const std::string& s, const std::filesystem::path& manifest) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError(manifest.string() + ": expected an integer, got '" + s + "'");
}

}  // namespace

HrirSet::HrirSet(std::array<Hrir, kGridCells> filters) : filters_(std::move(filters)) {
  for (int i = 0; i < kGridCells; ++i) {
    const Hrir& h = filters_[static_cast<std::size_t>(i)];
    if (h.left.empty() || h.left.size() != h.right.size()) {
      throw InvalidInput("HRIR for cell " + std::to_string(i) + " has unequal or empty ear responses");
    }
    if (h.sample_rate != filters_[0].sample_rate) {
      throw InvalidInput("HRIR sample rates differ: " + std::to_string(h.sample_rate) + " Hz vs " +
                         std::to_string(filters_[0].sample_rate) + " Hz");
    }
  }
}

const Hrir& HrirSet::at(int azimuth_deg, int elevation_deg) const {
  const int c = column_of(azimuth_deg);
  const int r = row_of(elevation_deg);
  if (c < 0 || r < 0) {
    throw InvalidInput("no HRIR for (" + signed_deg(azimuth_deg) + ", " + signed_deg(elevation_deg) + ")");
  }
  return filters_[static_cast<std::size_t>(r * kGridCols + c)];
}

std::size_t HrirSet::max_length() const {
  std::size_t m = 1;
  for (const auto& h : filters_) m = std::max(m, h.length());
  return m;
}

Hrir fallback_hrir(double azimuth_deg, double /*elevation_deg*/, int sample_rate) {
  const double s = std::abs(std::sin(azimuth_deg * std::numbers::pi / 180.0));
  const auto delay = static_cast<std::size_t>(std::lround(sample_rate * (kHeadRadius / kSpeedOfSound) * s));
  const double gain = std::pow(10.0, -(std::abs(azimuth_deg) / 90.0) * kMaxIldDb / 20.0);

  std::vector<double> near(delay + 1, 0.0);
  std::vector<double> far(delay + 1, 0.0);
  near[0] = 1.0;
  far[delay] = gain;

  Hrir h;
  h.sample_rate = sample_rate;
  if (azimuth_deg < 0.0) {
    h.left = std::move(near);
    h.right = std::move(far);
  } else {
    h.left = std::move(far);
    h.right = std::move(near);
  }
  return h;
}

HrirSet fallback_hrir_set(int sample_rate) {
  std::array<Hrir, kGridCells> filters;
  for (int r = 0; r < kGridRows; ++r) {
    for (int c = 0; c < kGridCols; ++c) {
      filters[static_cast<std::size_t>(r * kGridCols + c)] = fallback_hrir(kAzimuths[c], kElevations[r], sample_rate);
    }
  }
  return HrirSet(std::move(filters));
}

HrirSet load_hrir_set(const std::filesystem::path& manifest) {
  std::array<Hrir, kGridCells> filters;
  std::array<bool, kGridCells> present{};
  for (const auto& tokens : manifest_lines(manifest)) {
    if (tokens.size() != 3 && tokens.size() != 4) {
      throw FormatError(manifest.string() + ": expected 'azimuth elevation left.wav right.wav' or "
                        "'azimuth elevation stereo.wav'");
    }
    const int az = parse_int(tokens[0], manifest);
    const int el = parse_int(tokens[1], manifest);
    const int c = column_of(az);
    const int r = row_of(el);
    if (c < 0 || r < 0) {
      throw FormatError(manifest.string() + ": (" + signed_deg(az) + ", " + signed_deg(el) +
                        ") is not one of the grid directions");
    }
    const auto idx = static_cast<std::size_t>(r * kGridCols + c);
    if (present[idx]) throw FormatError(manifest.string() + ": duplicate entry for (" + tokens[0] + ", " + tokens[1] + ")");

    Hrir h;
    if (tokens.size() == 3) {
      const WavData w = read_wav(resolve(manifest, tokens[2]));
      if (w.channels != 2) throw FormatError(tokens[2] + ": single-file HRIR must be stereo");
      h.left = w.channel(0);
      h.right = w.channel(1);
      h.sample_rate = w.sample_rate;
    } else {
      const WavData l = read_wav(resolve(manifest, tokens[2]));
      const WavData rr = read_wav(resolve(manifest, tokens[3]));
      if (l.channels != 1 || rr.channels != 1) throw FormatError("per-ear HRIR files must be mono");
      if (l.sample_rate != rr.sample_rate) {
        throw FormatError("sample-rate mismatch between " + tokens[2] + " and " + tokens[3]);
      }
      h.left = l.samples;
      h.right = rr.samples;
      h.sample_rate = l.sample_rate;
    }
    if (h.left.empty() || h.left.size() != h.right.size()) {
      throw FormatError("HRIR length mismatch for (" + signed_deg(az) + ", " + signed_deg(el) + "): left " +
                        std::to_string(h.left.size()) + ", right " + std::to_string(h.right.size()));
    }
    filters[idx] = std::move(h);
    present[idx] = true;
  }

  int rate = 0;
  for (int r = 0; r < kGridRows; ++r) {
    for (int c = 0; c < kGridCols; ++c) {
      const auto idx = static_cast<std::size_t>(r * kGridCols + c);
      if (!present[idx]) {
        throw FormatError(manifest.string() + ": missing HRIR for (" + signed_deg(kAzimuths[c]) + ", " +
                          signed_deg(kElevations[r]) + ")");
      }
      if (rate == 0) rate = filters[idx].sample_rate;
      if (filters[idx].sample_rate != rate) {
        throw FormatError(manifest.string() + ": sample-rate mismatch, (" + signed_deg(kAzimuths[c]) + ", " +
                          signed_deg(kElevations[r]) + ") is " + std::to_string(filters[idx].sample_rate) +
                          " Hz, expected " + std::to_string(rate) + " Hz");
      }
    }
  }
  return HrirSet(std::move(filters));
}

StereoBlock convolve_stereo(std::span<const double> mono, const Hrir& hrir) {
  StereoBlock out;
  if (mono.empty() || hrir.left.empty()) return out;
  const std::size_t n = mono.size();
  const std::size_t m = hrir.left.size();
  out.left.assign(n + m - 1, 0.0);
  out.right.assign(n + m - 1, 0.0);
  for (std::size_t i = 0; i < n + m - 1; ++i) {
    const std::size_t k0 = i >= n ? i - n + 1 : 0;
    const std::size_t k1 = std::min(i, m - 1);
    double l = 0.0;
    double r = 0.0;
    for (std::size_t k = k0; k <= k1; ++k) {
      l += hrir.left[k] * mono[i - k];
      r += hrir.right[k] * mono[i - k];
    }
    out.left[i] = l;
    out.right[i] = r;
  }
  return out;
}

SoundBank synthetic_sound_bank(int sample_rate, std::uint64_t seed) {
  constexpr int kComponents = 48;
  constexpr double kCenters[3] = {2000.0, 500.0, 125.0};
  constexpr SoundClass kClasses[3] = {SoundClass::birds, SoundClass::trees, SoundClass::waves};

  Lcg64 rng(seed);
  SoundBank bank;
  for (std::size_t b = 0; b < 3; ++b) {
    const double lo = std::round(kCenters[b] * 0.75);
    const double hi = std::round(kCenters[b] * 1.25);
    std::vector<double> freqs;
    for (int k = 0; k < kComponents; ++k) {
      const double f = std::round(lo + (hi - lo) * k / (kComponents - 1));
      if (freqs.empty() || f != freqs.back()) freqs.push_back(f);
    }
    std::vector<double> phases(freqs.size());
    for (auto& p : phases) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

    SoundLoop loop;
    loop.sound = kClasses[b];
    loop.loop_length = static_cast<std::size_t>(sample_rate);
    loop.samples.assign(loop.loop_length, 0.0);
    for (std::size_t i = 0; i < loop.loop_length; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      double v = 0.0;
      for (std::size_t k = 0; k < freqs.size(); ++k) v += std::sin(2.0 * std::numbers::pi * freqs[k] * t + phases[k]);
      loop.samples[i] = v;
    }
    double peak = 0.0;
    for (double v : loop.samples) peak = std::max(peak, std::abs(v));
    for (double& v : loop.samples) v *= 0.5 / peak;
    bank[static_cast<std::size_t>(kClasses[b])] = std::move(loop);
  }
  return bank;
}

SoundBank load_sound_bank(const std::filesystem::path& manifest, int sample_rate) {
  SoundBank bank;
  std::array<bool, 3> present{};
  for (const auto& tokens : manifest_lines(manifest)) {
    if (tokens.size() != 3) throw FormatError(manifest.string() + ": expected 'sound_class wav_path loop_length_samples'");
    SoundClass cls;
    try {
      cls = sound_class_from_string(tokens[0]);
    } catch (const InvalidInput& e) {
      throw FormatError(manifest.string() + ": " + e.what());
    }
    const WavData w = read_wav(resolve(manifest, tokens[1]));
    if (w.sample_rate != sample_rate) {
      throw FormatError(tokens[1] + ": sample-rate mismatch, " + std::to_string(w.sample_rate) + " Hz, expected " +
                        std::to_string(sample_rate) + " Hz");
    }
    SoundLoop loop;
    loop.sound = cls;
    loop.samples.resize(w.frames());
    for (std::size_t i = 0; i < w.frames(); ++i) {
      double acc = 0.0;
      for (int c = 0; c < w.channels; ++c) acc += w.samples[i * static_cast<std::size_t>(w.channels) + static_cast<std::size_t>(c)];
      loop.samples[i] = acc / w.channels;
    }
    const int len = parse_int(tokens[2], manifest);
    if (len < 1 || static_cast<std::size_t>(len) > loop.samples.size()) {
      throw FormatError(tokens[1] + ": loop length " + tokens[2] + " outside 1.." + std::to_string(loop.samples.size()));
    }
    loop.loop_length = static_cast<std::size_t>(len);
    bank[static_cast<std::size_t>(cls)] = std::move(loop);
    present[static_cast<std::size_t>(cls)] = true;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!present[i]) {
      throw FormatError(manifest.string() + ": no loop for " + std::string(to_string(static_cast<SoundClass>(i))));
    }
  }
  return bank;
}

VoiceEngine::VoiceEngine(HrirSet hrirs, SoundBank bank, EngineConfig cfg)
    : hrirs_(std::move(hrirs)), bank_(std::move(bank)), cfg_(cfg) {
  if (cfg_.block_frames < 1) throw InvalidInput("block size must be at least one frame");
  if (hrirs_.sample_rate() != cfg_.sample_rate) {
    throw InvalidInput("HRIR set is " + std::to_string(hrirs_.sample_rate()) + " Hz but the engine runs at " +
                       std::to_string(cfg_.sample_rate) + " Hz");
  }
  for (const auto& loop : bank_) {
    if (loop.loop_length < 1 || loop.loop_length > loop.samples.size()) {
      throw InvalidInput("sound loop for " + std::string(to_string(loop.sound)) + " is empty or shorter than its loop length");
    }
  }
  set_master_gain(cfg_.master_gain);
  for (int i = 0; i < kGridCells; ++i) {
    Voice& v = voices_[static_cast<std::size_t>(i)];
    v.cell = i;
    v.history.assign(hrirs_.for_cell(i).length() - 1, 0.0);
  }
  scratch_.assign(hrirs_.max_length() - 1 + static_cast<std::size_t>(cfg_.block_frames), 0.0);
}

void VoiceEngine::set_master_gain(double g) { cfg_.master_gain = std::clamp(g, 0.0, 1.0); }

void VoiceEngine::update(const CellActivations& activations) {
  if (activations.rows != kGridRows || activations.cols != kGridCols) {
    throw InvalidInput("voice engine expects 3x4 activations");
  }
  for (int i = 0; i < kGridCells; ++i) {
    Voice& v = voices_[static_cast<std::size_t>(i)];
    const bool on = activations.at(i);
    if (on && !v.playing) {
      v.playing = true;
      v.position = 0;
      v.ringing = 0;
    } else if (!on && v.playing) {
      v.playing = false;
      v.position = 0;
      v.ringing = v.history.size();
    }
  }
  current_ = activations;
}

int VoiceEngine::audible_voices() const {
  return static_cast<int>(std::count_if(voices_.begin(), voices_.end(),
                                        [](const Voice& v) { return v.playing || v.ringing > 0; }));
}

void VoiceEngine::mix_chunk(std::span<double> left, std::span<double> right) {
  const std::size_t frames = left.size();
  std::fill(left.begin(), left.end(), 0.0);
  std::fill(right.begin(), right.end(), 0.0);
  for (Voice& v : voices_) {
    if (!v.playing && v.ringing == 0) continue;
    const Hrir& h = hrirs_.for_cell(v.cell);
    const SoundLoop& loop = bank_[static_cast<std::size_t>(cell_direction(v.cell / kGridCols, v.cell % kGridCols).sound)];
    const std::size_t hist = v.history.size();
    const std::size_t taps = hist + 1;

    // scratch = [previous inputs | this chunk's inputs]
    std::copy(v.history.begin(), v.history.end(), scratch_.begin());
    double* in = scratch_.data() + hist;
    if (v.playing) {
      std::size_t pos = v.position;
      for (std::size_t n = 0; n < frames; ++n) {
        in[n] = loop.samples[pos];
        if (++pos == loop.loop_length) pos = 0;
      }
      v.position = pos;
    } else {
      std::fill(in, in + frames, 0.0);
      v.ringing -= std::min(v.ringing, frames);
    }

    for (std::size_t n = 0; n < frames; ++n) {
      double l = 0.0;
      double r = 0.0;
      const double* x = in + n;
      for (std::size_t k = 0; k < taps; ++k) {
        l += h.left[k] * x[-static_cast<std::ptrdiff_t>(k)];
        r += h.right[k] * x[-static_cast<std::ptrdiff_t>(k)];
      }
      left[n] += l;
      right[n] += r;
    }
    std::copy(scratch_.begin() + static_cast<std::ptrdiff_t>(frames),
              scratch_.begin() + static_cast<std::ptrdiff_t>(frames + hist), v.history.begin());
  }
  for (std::size_t n = 0; n < frames; ++n) {
    left[n] *= cfg_.master_gain;
    right[n] *= cfg_.master_gain;
  }
}

void VoiceEngine::render_into(std::span<double> left, std::span<double> right, bool clip) {
  if (left.size() != right.size()) throw InvalidInput("stereo buffers differ in length");
  const auto chunk = static_cast<std::size_t>(cfg_.block_frames);
  for (std::size_t off = 0; off < left.size(); off += chunk) {
    const std::size_t n = std::min(chunk, left.size() - off);
    mix_chunk(left.subspan(off, n), right.subspan(off, n));
  }
  if (clip) {
    for (auto& s : left) s = std::clamp(s, -1.0, 1.0);
    for (auto& s : right) s = std::clamp(s, -1.0, 1.0);
  }
}

StereoBlock VoiceEngine::mix_block(int frames) {
  if (frames < 1) throw InvalidInput("block must hold at least one frame");
  StereoBlock b{std::vector<double>(static_cast<std::size_t>(frames)), std::vector<double>(static_cast<std::size_t>(frames))};
  render_into(b.left, b.right, false);
  return b;
}

StereoBlock VoiceEngine::render_block(int frames) {
  if (frames < 1) throw InvalidInput("block must hold at least one frame");
  StereoBlock b{std::vector<double>(static_cast<std::size_t>(frames)), std::vector<double>(static_cast<std::size_t>(frames))};
  render_into(b.left, b.right, true);
  return b;
}

}  // namespace sonicgrid
