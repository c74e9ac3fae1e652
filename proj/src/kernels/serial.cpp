// Straight-line reference kernels. Every neighbor goes through the
// edge-clamping accessor; no row pointers, no special cases.

#include <algorithm>
#include <cstdlib>

#include "sonicgrid/kernels.hpp"

namespace sonicgrid::kernels::serial {

void single_pass_mask(const GrayImage& img, std::int64_t limit, SalientMask& out) {
  const auto& table = weight_table();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int p = img.at(x, y);
      std::int64_t k = FilterConfig::kMaxLevel;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          k += table[static_cast<std::size_t>(std::abs(p - img.clamped(x + dx, y + dy)))];
        }
      }
      out.set(x, y, k <= limit);
    }
  }
}

void filter_step(const GrayImage& img, const NeuronStates& prev, std::int64_t limit, NeuronStates& next) {
  const auto& table = weight_table();
  const int w = img.width();
  const int h = img.height();
  auto dst = next.raw_states();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = img.at(x, y);
      std::int64_t num = std::int64_t{FilterConfig::kMaxLevel} * prev.raw(x, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = std::clamp(x + dx, 0, w - 1);
          const int ny = std::clamp(y + dy, 0, h - 1);
          num += std::int64_t{table[static_cast<std::size_t>(std::abs(p - img.at(nx, ny)))]} * prev.raw(nx, ny);
        }
      }
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      dst[i] = num <= limit ? 0u : static_cast<std::uint32_t>(num / (9 * FilterConfig::kMaxLevel));
    }
  }
}

void cell_counts(const SalientMask& mask, const GridSpec& grid, CellCounts& out) {
  out.rows = grid.rows;
  out.cols = grid.cols;
  out.counts.assign(static_cast<std::size_t>(grid.cells()), 0);
  const int cw = grid.image_width / grid.cols;
  const int ch = grid.image_height / grid.rows;
  for (int y = 0; y < mask.height(); ++y) {
    const int r = std::min(y / ch, grid.rows - 1);
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const int c = std::min(x / cw, grid.cols - 1);
      ++out.counts[static_cast<std::size_t>(grid.cell_index(r, c))];
    }
  }
}

void render_camera(const Scene& scene, const Pose& pose, const CameraConfig& cam, GrayImage& out) {
  const CameraRig rig = CameraRig::make(pose, cam);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) out.at(u, v) = cast_pixel(scene, rig, cam, u, v);
  }
}

}  // namespace sonicgrid::kernels::serial
