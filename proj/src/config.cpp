#include "sonicgrid/config.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "sonicgrid/error.hpp"

namespace sonicgrid {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_text(std::string_view text, PipelineConfig& cfg, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw FormatError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      std::size_t used = 0;
      const auto as_double = [&] {
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      };
      const auto as_int = [&] {
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      };
      if (key == "thresh") cfg.filter.thresh = as_double();
      else if (key == "iterations") cfg.filter.iterations = as_int();
      else if (key == "rows") cfg.grid.rows = as_int();
      else if (key == "cols") cfg.grid.cols = as_int();
      else if (key == "width") cfg.grid.image_width = as_int();
      else if (key == "height") cfg.grid.image_height = as_int();
      else if (key == "activation_ratio") cfg.grid.activation_ratio = as_double();
      else if (key == "sample_rate") cfg.audio.sample_rate = as_int();
      else if (key == "block_frames") cfg.audio.block_frames = as_int();
      else if (key == "master_gain") cfg.audio.master_gain = as_double();
      else if (key == "budget_ms") cfg.budget_ms = as_double();
      else throw FormatError(where + ": unknown key '" + key + "'");
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError(where + ": bad value '" + value + "' for " + key);
    }
  }
  cfg.grid = grid_spec(cfg.grid.image_width, cfg.grid.image_height, cfg.grid.rows, cfg.grid.cols,
                       cfg.grid.activation_ratio);
}

void apply_config_file(const std::filesystem::path& path, PipelineConfig& cfg) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(ss.str(), cfg, path.string());
}

}  // namespace sonicgrid
