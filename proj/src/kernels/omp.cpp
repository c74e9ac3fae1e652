#include <algorithm>
#include <cstdlib>

#include "sonicgrid/kernels.hpp"

namespace sonicgrid::kernels::omp {

namespace {

struct RowWindow {
  const std::uint8_t* above;
  const std::uint8_t* row;
  const std::uint8_t* below;
};

RowWindow window(const GrayImage& img, int y) {
  const auto px = img.pixels().data();
  const std::size_t w = static_cast<std::size_t>(img.width());
  const int ya = std::max(y - 1, 0);
  const int yb = std::min(y + 1, img.height() - 1);
  return {px + static_cast<std::size_t>(ya) * w, px + static_cast<std::size_t>(y) * w,
          px + static_cast<std::size_t>(yb) * w};
}

}  // namespace

void single_pass_mask(const GrayImage& img, std::int64_t limit, SalientMask& out) {
  const std::uint8_t* table = weight_table().data();
  const int w = img.width();
  const int h = img.height();
  std::uint8_t* flags = out.flags().data();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const RowWindow rw = window(img, y);
    std::uint8_t* dst = flags + static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
    for (int x = 0; x < w; ++x) {
      const int xl = x > 0 ? x - 1 : 0;
      const int xr = x + 1 < w ? x + 1 : w - 1;
      const int p = rw.row[x];
      const int k = FilterConfig::kMaxLevel + table[std::abs(p - rw.above[xl])] + table[std::abs(p - rw.above[x])] +
                    table[std::abs(p - rw.above[xr])] + table[std::abs(p - rw.row[xl])] +
                    table[std::abs(p - rw.row[xr])] + table[std::abs(p - rw.below[xl])] +
                    table[std::abs(p - rw.below[x])] + table[std::abs(p - rw.below[xr])];
      dst[x] = k <= limit ? 1 : 0;
    }
  }
}

void filter_step(const GrayImage& img, const NeuronStates& prev, std::int64_t limit, NeuronStates& next) {
  const std::uint8_t* table = weight_table().data();
  const int w = img.width();
  const int h = img.height();
  const std::size_t stride = static_cast<std::size_t>(w);
  const std::uint32_t* s = prev.raw_states().data();
  std::uint32_t* dst = next.raw_states().data();
  constexpr std::int64_t kDivisor = 9 * FilterConfig::kMaxLevel;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const RowWindow rw = window(img, y);
    const std::uint32_t* sa = s + static_cast<std::size_t>(std::max(y - 1, 0)) * stride;
    const std::uint32_t* sr = s + static_cast<std::size_t>(y) * stride;
    const std::uint32_t* sb = s + static_cast<std::size_t>(std::min(y + 1, h - 1)) * stride;
    std::uint32_t* out = dst + static_cast<std::size_t>(y) * stride;
    for (int x = 0; x < w; ++x) {
      const int xl = x > 0 ? x - 1 : 0;
      const int xr = x + 1 < w ? x + 1 : w - 1;
      const int p = rw.row[x];
      std::int64_t num = std::int64_t{FilterConfig::kMaxLevel} * sr[x];
      num += std::int64_t{table[std::abs(p - rw.above[xl])]} * sa[xl];
      num += std::int64_t{table[std::abs(p - rw.above[x])]} * sa[x];
      num += std::int64_t{table[std::abs(p - rw.above[xr])]} * sa[xr];
      num += std::int64_t{table[std::abs(p - rw.row[xl])]} * sr[xl];
      num += std::int64_t{table[std::abs(p - rw.row[xr])]} * sr[xr];
      num += std::int64_t{table[std::abs(p - rw.below[xl])]} * sb[xl];
      num += std::int64_t{table[std::abs(p - rw.below[x])]} * sb[x];
      num += std::int64_t{table[std::abs(p - rw.below[xr])]} * sb[xr];
      out[x] = num <= limit ? 0u : static_cast<std::uint32_t>(num / kDivisor);
    }
  }
}

void cell_counts(const SalientMask& mask, const GridSpec& grid, CellCounts& out) {
  out.rows = grid.rows;
  out.cols = grid.cols;
  out.counts.assign(static_cast<std::size_t>(grid.cells()), 0);
  const std::uint8_t* flags = mask.flags().data();
  const std::size_t stride = static_cast<std::size_t>(mask.width());
  const int n = grid.cells();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const CellRect rc = grid.cell_rect(i / grid.cols, i % grid.cols);
    std::uint32_t total = 0;
    for (int y = rc.y; y < rc.y + rc.h; ++y) {
      const std::uint8_t* row = flags + static_cast<std::size_t>(y) * stride;
      for (int x = rc.x; x < rc.x + rc.w; ++x) total += row[x];
    }
    out.counts[static_cast<std::size_t>(i)] = total;
  }
}

void render_camera(const Scene& scene, const Pose& pose, const CameraConfig& cam, GrayImage& out) {
  const CameraRig rig = CameraRig::make(pose, cam);
  std::uint8_t* px = out.pixels().data();
  const std::size_t stride = static_cast<std::size_t>(cam.width);
#pragma omp parallel for schedule(dynamic, 8)
  for (int v = 0; v < cam.height; ++v) {
    std::uint8_t* row = px + static_cast<std::size_t>(v) * stride;
    for (int u = 0; u < cam.width; ++u) row[u] = cast_pixel(scene, rig, cam, u, v);
  }
}

}  // namespace sonicgrid::kernels::omp
