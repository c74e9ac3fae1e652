#pragma once

// Data-parallel inner loops. `serial` is the reference used by tests and the
// benchmark; `omp` is what the public API calls. Both variants must produce
// identical output for identical input.

#include <cstdint>

#include "sonicgrid/grid.hpp"
#include "sonicgrid/image.hpp"
#include "sonicgrid/saliency.hpp"
#include "sonicgrid/sim.hpp"

namespace sonicgrid::kernels {

namespace serial {
void single_pass_mask(const GrayImage& img, std::int64_t limit, SalientMask& out);
void filter_step(const GrayImage& img, const NeuronStates& prev, std::int64_t limit, NeuronStates& next);
void cell_counts(const SalientMask& mask, const GridSpec& grid, CellCounts& out);
void render_camera(const Scene& scene, const Pose& pose, const CameraConfig& cam, GrayImage& out);
}  // namespace serial

namespace omp {
void single_pass_mask(const GrayImage& img, std::int64_t limit, SalientMask& out);
void filter_step(const GrayImage& img, const NeuronStates& prev, std::int64_t limit, NeuronStates& next);
void cell_counts(const SalientMask& mask, const GridSpec& grid, CellCounts& out);
void render_camera(const Scene& scene, const Pose& pose, const CameraConfig& cam, GrayImage& out);
}  // namespace omp

/// Camera frame in world coordinates (x along the corridor, y across, z up).
struct CameraRig {
  double ox, oy, oz;        // eye position
  double fx, fy, fz;        // optical axis
  double rx, ry, rz;        // image right
  double ux, uy, uz;        // image up
  double focal;             // pixels
  double half_w, half_h;    // pixels

  static CameraRig make(const Pose& pose, const CameraConfig& cam);
};

/// Intensity seen along the ray through the center of pixel (u, v).
std::uint8_t cast_pixel(const Scene& scene, const CameraRig& rig, const CameraConfig& cam, int u, int v);

}  // namespace sonicgrid::kernels
