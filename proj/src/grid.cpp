#include "sonicgrid/grid.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "sonicgrid/kernels.hpp"

namespace sonicgrid {

CellRect GridSpec::cell_rect(int row, int col) const {
  const int cw = image_width / cols;
  const int ch = image_height / rows;
  CellRect r{col * cw, row * ch, cw, ch};
  if (col == cols - 1) r.w = image_width - r.x;
  if (row == rows - 1) r.h = image_height - r.y;
  return r;
}

std::uint32_t GridSpec::activation_threshold(int row, int col) const {
  const double v = activation_ratio * cell_rect(row, col).area();
  // ratio * area landing a rounding error above an integer must not bump the ceiling.
  const double nearest = std::round(v);
  const double t = std::abs(v - nearest) <= 1e-9 * std::max(1.0, v) ? nearest : std::ceil(v);
  return static_cast<std::uint32_t>(std::max(1.0, t));
}

GridSpec grid_spec(int image_width, int image_height, int rows, int cols, double activation_ratio) {
  if (image_width <= 0 || image_height <= 0) throw InvalidInput("grid image dimensions must be positive");
  if (rows < 1 || cols < 1) throw InvalidInput("grid needs at least one row and one column");
  if (rows * cols > GridSpec::kMaxCells) {
    throw InvalidInput("grid has " + std::to_string(rows * cols) + " cells, at most " +
                       std::to_string(GridSpec::kMaxCells) + " supported");
  }
  if (image_width < cols || image_height < rows) throw InvalidInput("grid cells would be empty");
  if (!(activation_ratio > 0.0 && activation_ratio <= 1.0)) {
    throw InvalidInput("activation ratio must lie in (0, 1]");
  }
  return GridSpec{rows, cols, image_width, image_height, activation_ratio};
}

std::uint64_t CellCounts::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void CellActivations::set(int index, bool on) {
  const std::uint64_t bit = std::uint64_t{1} << index;
  bits = on ? (bits | bit) : (bits & ~bit);
}

int CellActivations::active_count() const { return std::popcount(bits); }

CellCounts cell_counts(const SalientMask& mask, const GridSpec& grid) {
  if (mask.width() != grid.image_width || mask.height() != grid.image_height) {
    throw InvalidInput("mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                       " but the grid expects " + std::to_string(grid.image_width) + "x" +
                       std::to_string(grid.image_height));
  }
  CellCounts out;
  kernels::omp::cell_counts(mask, grid, out);
  return out;
}

CellActivations active_cells(const CellCounts& counts, const GridSpec& grid) {
  CellActivations act{grid.rows, grid.cols, 0};
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      act.set(grid.cell_index(r, c), counts.at(r, c) >= grid.activation_threshold(r, c));
    }
  }
  return act;
}

std::string_view to_string(SoundClass c) {
  switch (c) {
    case SoundClass::birds: return "birds";
    case SoundClass::trees: return "trees";
    case SoundClass::waves: return "waves";
  }
  return "?";
}

SoundClass sound_class_from_string(std::string_view s) {
  if (s == "birds") return SoundClass::birds;
  if (s == "trees") return SoundClass::trees;
  if (s == "waves") return SoundClass::waves;
  throw InvalidInput("unknown sound class '" + std::string(s) + "'");
}

CellDirection cell_direction(int row, int col) {
  if (row < 0 || row >= kGridRows || col < 0 || col >= kGridCols) {
    throw InvalidInput("cell (" + std::to_string(row) + ", " + std::to_string(col) + ") is outside the 3x4 grid");
  }
  static constexpr SoundClass kRowSound[kGridRows] = {SoundClass::birds, SoundClass::trees, SoundClass::waves};
  return {kAzimuths[col], kElevations[row], kRowSound[row]};
}

}  // namespace sonicgrid
