#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sonicgrid/analytics.hpp"
#include "sonicgrid/audio.hpp"
#include "sonicgrid/config.hpp"
#include "sonicgrid/error.hpp"
#include "sonicgrid/image_io.hpp"
#include "sonicgrid/pipeline.hpp"
#include "sonicgrid/policy.hpp"
#include "sonicgrid/saliency.hpp"
#include "sonicgrid/session.hpp"
#include "sonicgrid/sim.hpp"
#include "sonicgrid/wav.hpp"

namespace fs = std::filesystem;
using namespace sonicgrid;

namespace {

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool is_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm";
}

std::vector<GrayImage> load_frames(const fs::path& input) {
  std::vector<fs::path> paths;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && is_image(e.path())) paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::runtime_error("no .png or .pgm frames in " + input.string());
  } else {
    paths.push_back(input);
  }
  std::vector<GrayImage> frames;
  frames.reserve(paths.size());
  for (const fs::path& p : paths) {
    frames.push_back(read_image(p));
    if (frames.back().width() != frames.front().width() || frames.back().height() != frames.front().height())
      throw std::runtime_error("frame size differs: " + p.string());
  }
  return frames;
}

PipelineConfig base_config(const std::string& config_path) {
  PipelineConfig cfg;
  if (!config_path.empty()) apply_config_file(config_path, cfg);
  return cfg;
}

// ---------------------------------------------------------------- analyze input

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> sources;  // one per row
};

std::vector<double> parse_numbers(const std::string& line) {
  std::string s = line;
  for (char& c : s)
    if (c == ',' || c == ';' || c == '\t') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      return {};
    }
    if (used != tok.size() || !std::isfinite(v)) return {};
    out.push_back(v);
  }
  return out;
}

void add_log(Table& t, const fs::path& p) {
  const TrialLog log = parse_log(read_text(p));
  const TrialMetrics m = trial_metrics(log);
  t.rows.push_back({m.completion_s, static_cast<double>(m.objects_missed), static_cast<double>(m.objects_seen),
                    static_cast<double>(m.false_marks), static_cast<double>(m.wall_interventions)});
  t.sources.push_back(p.filename().string());
}

void add_dsv(Table& t, const fs::path& p) {
  std::istringstream in(read_text(p));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> v = parse_numbers(line);
    if (v.empty()) {
      if (t.rows.empty()) continue;  // header
      throw FormatError(p.string() + ":" + std::to_string(lineno) + ": not numeric");
    }
    t.rows.push_back(std::move(v));
    t.sources.push_back(p.filename().string() + ":" + std::to_string(lineno));
  }
}

Table load_table(const std::vector<std::string>& inputs) {
  Table t;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> logs;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".log") logs.push_back(e.path());
      std::sort(logs.begin(), logs.end());
      if (logs.empty()) throw std::runtime_error("no .log files in " + in);
      for (const fs::path& l : logs) add_log(t, l);
    } else if (!fs::exists(p)) {
      throw std::runtime_error("cannot read " + in);
    } else if (p.extension() == ".log") {
      add_log(t, p);
    } else {
      add_dsv(t, p);
    }
  }
  if (t.rows.empty()) throw std::runtime_error("no data rows");
  return t;
}

std::vector<double> column(const Table& t, std::size_t c) {
  std::vector<double> v;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() <= c)
      throw FormatError(t.sources[i] + ": expected at least " + std::to_string(c + 1) + " columns");
    v.push_back(t.rows[i][c]);
  }
  return v;
}

// ---------------------------------------------------------------- subcommands

int cmd_mask(const std::string& in, const std::string& out, std::optional<double> thresh, std::optional<int> iters,
             const std::string& config) {
  PipelineConfig cfg = base_config(config);
  if (thresh) cfg.filter.thresh = *thresh;
  if (iters) cfg.filter.iterations = *iters;
  const GrayImage img = read_image(in);
  const SalientMask mask = salient_mask(img, cfg.filter);
  write_image(out, mask.to_image());
  std::cout << mask.count() << " salient pixels of " << img.width() * img.height() << "\n";
  return 0;
}

int cmd_sonify(const std::string& in, const std::string& out, double seconds, const std::string& hrir,
               const std::string& sounds, std::optional<double> gain, const std::string& config) {
  if (!(seconds > 0.0)) throw InvalidInput("--seconds must be positive");
  PipelineConfig cfg = base_config(config);
  if (gain) cfg.audio.master_gain = *gain;
  const std::vector<GrayImage> frames = load_frames(in);
  cfg.grid = grid_spec(frames.front().width(), frames.front().height(), cfg.grid.rows, cfg.grid.cols,
                       cfg.grid.activation_ratio);
  HrirSet hrirs = hrir.empty() ? fallback_hrir_set(cfg.audio.sample_rate) : load_hrir_set(hrir);
  SoundBank bank = sounds.empty() ? synthetic_sound_bank(cfg.audio.sample_rate)
                                  : load_sound_bank(sounds, cfg.audio.sample_rate);
  VoiceEngine engine(std::move(hrirs), std::move(bank), cfg.audio);
  const auto total = static_cast<std::size_t>(std::llround(seconds * cfg.audio.sample_rate));
  const StereoBlock audio = render_offline(frames, engine, cfg, total);
  write_wav_pcm16(out, audio.left, audio.right, cfg.audio.sample_rate);
  std::cout << frames.size() << " frames, " << total << " samples -> " << out << "\n";
  return 0;
}

int cmd_sim(std::uint64_t seed, const std::string& policy, int trials, const std::string& out,
            const std::string& config) {
  if (policy != "follow-silence") throw InvalidInput("unknown policy '" + policy + "'");
  if (trials < 1) throw InvalidInput("--trials must be at least 1");
  const PipelineConfig cfg = base_config(config);
  fs::create_directories(out);
  std::string table = "trial\tseed\tfinished\tcompletion_s\tobjects_seen\tobjects_missed\tfalse_marks\twall_interventions\n";
  for (int i = 0; i < trials; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const PolicyRun run = run_follow_silence(s, cfg);
    const std::string name = "trial_" + std::to_string(i + 1) + "_seed_" + std::to_string(s) + ".log";
    write_text(fs::path(out) / name, format_log(run.log));
    table += std::to_string(i + 1) + "\t" + std::to_string(s) + "\t";
    if (run.metrics) {
      const TrialMetrics& m = *run.metrics;
      table += "1\t" + fmt(m.completion_s, 3) + "\t" + std::to_string(m.objects_seen) + "\t" +
               std::to_string(m.objects_missed) + "\t" + std::to_string(m.false_marks) + "\t" +
               std::to_string(m.wall_interventions) + "\n";
    } else {
      table += "0\tNA\tNA\tNA\tNA\tNA\n";
    }
    std::cout << name << (run.metrics ? "  finished in " + fmt(run.metrics->completion_s, 3) + " s" : "  aborted")
              << "\n";
  }
  write_text(fs::path(out) / "metrics.tsv", table);
  return 0;
}

int cmd_analyze(const std::vector<std::string>& inputs, bool fit, bool db, bool improve, double eps, int minpts,
                const std::string& summary_path) {
  const Table t = load_table(inputs);
  nlohmann::json summary;
  std::ostringstream rep;
  if (fit) {
    const std::vector<double> means = column(t, 0);
    const DecayFit f = fit_exp_decay(means);
    rep << "exponential decay fit over " << means.size() << " points\n"
        << "  a   = " << fmt(f.amplitude, 4) << "\n"
        << "  b   = " << fmt(f.decay, 4) << "\n"
        << "  c   = " << fmt(f.offset, 4) << "\n"
        << "  rss = " << fmt(f.rss, 6) << "\n"
        << "  iterations = " << f.iterations << (f.converged ? " (converged)" : "")
        << (f.degenerate ? " (degenerate input)" : "") << "\n";
    summary = {{"analysis", "fit"},       {"n", means.size()},       {"amplitude", f.amplitude},
               {"decay", f.decay},        {"offset", f.offset},      {"rss", f.rss},
               {"iterations", f.iterations}, {"converged", f.converged}, {"degenerate", f.degenerate}};
  } else if (db) {
    const std::vector<double> xs = column(t, 0), ys = column(t, 1);
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], ys[i]});
    const std::vector<int> labels = dbscan(standardize(pts), {eps, minpts});
    const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    const auto noise = std::count(labels.begin(), labels.end(), kNoise);
    rep << "dbscan eps=" << fmt(eps, 3) << " min_neighbours=" << minpts << " on " << pts.size()
        << " standardized points\n"
        << "  clusters = " << clusters << "\n  noise = " << noise << "\n";
    std::vector<int> sizes(static_cast<std::size_t>(std::max(clusters, 0)), 0);
    for (int l : labels)
      if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    for (int c = 0; c < clusters; ++c) rep << "  cluster " << c << ": " << sizes[static_cast<std::size_t>(c)] << " points\n";
    for (std::size_t i = 0; i < labels.size(); ++i) rep << "  " << t.sources[i] << "\t" << labels[i] << "\n";
    summary = {{"analysis", "dbscan"}, {"eps", eps},     {"min_neighbours", minpts}, {"n", pts.size()},
               {"clusters", clusters}, {"noise", noise}, {"cluster_sizes", sizes},   {"labels", labels}};
  } else if (improve) {
    const std::vector<double> times = column(t, 0);
    const double pct = percent_improvement(times);
    rep << "improvement over " << times.size() << " trials: " << fmt(pct, 2) << " %\n";
    summary = {{"analysis", "improve"}, {"times", times}, {"percent", pct}};
  } else {
    const std::vector<double> times = column(t, 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      rep << "  " << t.sources[i] << "\t" << fmt(times[i], 3) << "\n";
      sum += times[i];
    }
    rep << "n = " << times.size() << ", mean = " << fmt(sum / static_cast<double>(times.size()), 3) << "\n";
    summary = {{"analysis", "list"}, {"values", times}, {"mean", sum / static_cast<double>(times.size())}};
  }
  std::cout << rep.str();
  if (!summary_path.empty()) write_text(summary_path, summary.dump(2) + "\n");
  return 0;
}

int cmd_serve(const std::string& address, int port, const std::string& hrir, const std::string& sounds,
              const std::string& log_dir, const std::string& config) {
  if (port < 0 || port > 65535) throw InvalidInput("--port out of range");
  auto session = std::make_shared<SessionConfig>();
  session->pipeline = base_config(config);
  if (!hrir.empty()) session->hrirs = load_hrir_set(hrir);
  else session->hrirs = fallback_hrir_set(session->pipeline.audio.sample_rate);
  session->sounds = sounds.empty() ? synthetic_sound_bank(session->pipeline.audio.sample_rate)
                                   : load_sound_bank(sounds, session->pipeline.audio.sample_rate);
  if (!log_dir.empty()) session->log_dir = log_dir;

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Server server(ServeConfig{address, static_cast<unsigned short>(port), session});
  std::cout << "listening on ws://" << address << ":" << server.port() << "/" << std::endl;
  server.start();
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  std::cout << "stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency-driven spatial sonification toolkit"};
  app.require_subcommand(1);
  std::string config;

  auto* mask = app.add_subcommand("mask", "Write the binary salient mask of an image");
  std::string mask_in, mask_out;
  std::optional<double> mask_thresh;
  std::optional<int> mask_iters;
  mask->add_option("input", mask_in, "PNG or PGM image")->required()->check(CLI::ExistingFile);
  mask->add_option("output", mask_out, "Output mask (.png or .pgm)")->required();
  mask->add_option("--thresh", mask_thresh, "Activation threshold in (0, 1]");
  mask->add_option("--iters", mask_iters, "Filter iterations");
  mask->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);

  auto* sonify = app.add_subcommand("sonify", "Render an image or frame directory to a stereo WAV");
  std::string son_in, son_out, son_hrir, son_sounds;
  double seconds = 0.0;
  std::optional<double> gain;
  sonify->add_option("input", son_in, "Frame directory or single image")->required()->check(CLI::ExistingPath);
  sonify->add_option("output", son_out, "Output WAV")->required();
  sonify->add_option("--seconds", seconds, "Duration")->required();
  sonify->add_option("--hrir", son_hrir, "HRIR manifest")->check(CLI::ExistingFile);
  sonify->add_option("--sounds", son_sounds, "Sound loop manifest")->check(CLI::ExistingFile);
  sonify->add_option("--gain", gain, "Master gain");
  sonify->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("sim", "Run headless scripted trials");
  std::uint64_t seed = 0;
  std::string policy = "follow-silence", sim_out;
  int trials = 5;
  sim->add_option("--seed", seed, "First layout seed")->required();
  sim->add_option("--policy", policy, "Scripted walker")->check(CLI::IsMember({"follow-silence"}));
  sim->add_option("--trials", trials, "Number of trials (seeds seed..seed+trials-1)");
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "Improvement, decay fit or clustering over logs or tables");
  std::vector<std::string> an_in;
  bool fit = false, db = false, improve = false;
  double eps = 0.8;
  int minpts = 5;
  std::string summary;
  analyze->add_option("inputs", an_in, "Trial logs, log directories or delimited files")->required();
  auto* f_fit = analyze->add_flag("--fit", fit, "Fit a*exp(-n/b)+c to the first column");
  auto* f_db = analyze->add_flag("--dbscan", db, "Cluster standardized (column 1, column 2) points");
  auto* f_imp = analyze->add_flag("--improve", improve, "Percent improvement over five times");
  f_fit->excludes(f_db)->excludes(f_imp);
  f_db->excludes(f_imp);
  analyze->add_option("--eps", eps, "DBSCAN radius in standardized units")->check(CLI::PositiveNumber);
  analyze->add_option("--minpts", minpts, "DBSCAN minimum neighbours")->check(CLI::PositiveNumber);
  analyze->add_option("--summary", summary, "Write a JSON summary record here");

  auto* serve = app.add_subcommand("serve", "Run the WebSocket session service");
  std::string address = "0.0.0.0", serve_hrir, serve_sounds, log_dir;
  int port = 8765;
  serve->add_option("--port", port, "TCP port (0 picks one)");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--hrir", serve_hrir, "HRIR manifest")->check(CLI::ExistingFile);
  serve->add_option("--sounds", serve_sounds, "Sound loop manifest")->check(CLI::ExistingFile);
  serve->add_option("--log-dir", log_dir, "Directory for trial logs");
  serve->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*mask) return cmd_mask(mask_in, mask_out, mask_thresh, mask_iters, config);
    if (*sonify) return cmd_sonify(son_in, son_out, seconds, son_hrir, son_sounds, gain, config);
    if (*sim) return cmd_sim(seed, policy, trials, sim_out, config);
    if (*analyze) return cmd_analyze(an_in, fit, db, improve, eps, minpts, summary);
    if (*serve) return cmd_serve(address, port, serve_hrir, serve_sounds, log_dir, config);
  } catch (const std::exception& e) {
    std::cerr << "sonicgrid: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
