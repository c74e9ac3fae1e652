#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sonicgrid/image.hpp"

namespace sonicgrid {

/// Pixel rectangle [x, x + w) x [y, y + h).
struct CellRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int area() const { return w * h; }
  bool operator==(const CellRect&) const = default;
};

/// rows x cols partition of a frame. The last row and column absorb
/// remainder pixels when the frame does not divide evenly.
struct GridSpec {
  int rows = 3;
  int cols = 4;
  int image_width = 192;
  int image_height = 144;
  double activation_ratio = 0.01;

  static constexpr int kMaxCells = 64;

  int cells() const { return rows * cols; }
  int cell_index(int row, int col) const { return row * cols + col; }
  CellRect cell_rect(int row, int col) const;

  /// ceil(activation_ratio * area) for the given cell, at least 1.
  std::uint32_t activation_threshold(int row, int col) const;
};

/// Validates and builds a GridSpec. Throws InvalidInput on non-positive
/// dimensions, more than kMaxCells cells, cells narrower than one pixel,
/// or a ratio outside (0, 1].
GridSpec grid_spec(int image_width, int image_height, int rows = 3, int cols = 4,
                   double activation_ratio = 0.01);

struct CellCounts {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint32_t> counts;  // row-major, row 0 = top, col 0 = left

  std::uint32_t at(int row, int col) const { return counts[static_cast<std::size_t>(row * cols + col)]; }
  std::uint64_t total() const;
  bool operator==(const CellCounts&) const = default;
};

/// Activation flags packed row-major into a bit set (bit r*cols+c).
struct CellActivations {
  int rows = 3;
  int cols = 4;
  std::uint64_t bits = 0;

  bool at(int row, int col) const { return (bits >> (row * cols + col)) & 1u; }
  bool at(int index) const { return (bits >> index) & 1u; }
  void set(int index, bool on);
  int active_count() const;
  bool operator==(const CellActivations&) const = default;
};

CellCounts cell_counts(const SalientMask& mask, const GridSpec& grid);
CellActivations active_cells(const CellCounts& counts, const GridSpec& grid);

enum class SoundClass { birds, trees, waves };

std::string_view to_string(SoundClass c);
SoundClass sound_class_from_string(std::string_view s);

/// Where a cell is heard. Image left maps to listener left (negative azimuth).
struct CellDirection {
  int azimuth_deg = 0;
  int elevation_deg = 0;
  SoundClass sound = SoundClass::trees;
  bool operator==(const CellDirection&) const = default;
};

inline constexpr int kGridRows = 3;
inline constexpr int kGridCols = 4;
inline constexpr int kGridCells = kGridRows * kGridCols;
inline constexpr int kAzimuths[kGridCols] = {-90, -30, 30, 90};
inline constexpr int kElevations[kGridRows] = {45, 0, -40};

/// Fixed 3x4 mapping. Throws InvalidInput outside 0 <= row < 3, 0 <= col < 4.
CellDirection cell_direction(int row, int col);

}  // namespace sonicgrid
