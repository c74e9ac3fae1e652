#include <cmath>
#include <limits>
#include <numbers>

#include "sonicgrid/kernels.hpp"

namespace sonicgrid::kernels {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Entry distance of the ray into an axis-aligned box, or infinity.
double ray_box(double ox, double oy, double oz, double dx, double dy, double dz, const Obstacle& b) {
  double t0 = 0.0;
  double t1 = kInf;
  const double lo[3] = {b.min_x(), b.min_y(), 0.0};
  const double hi[3] = {b.max_x(), b.max_y(), b.height};
  const double o[3] = {ox, oy, oz};
  const double d[3] = {dx, dy, dz};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < lo[a] || o[a] > hi[a]) return kInf;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return kInf;
  }
  return t0;
}

}  // namespace

CameraRig CameraRig::make(const Pose& pose, const CameraConfig& cam) {
  const double heading = (pose.heading_deg + pose.cam_yaw_deg) * kDeg;
  const double pitch = pose.cam_pitch_deg * kDeg;
  const double ch = std::cos(heading), sh = std::sin(heading);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  CameraRig r{};
  r.ox = pose.x;
  r.oy = pose.y;
  r.oz = Pose::kCameraHeight;
  r.fx = cp * ch;
  r.fy = cp * sh;
  r.fz = sp;
  r.rx = sh;
  r.ry = -ch;
  r.rz = 0.0;
  r.ux = -sp * ch;
  r.uy = -sp * sh;
  r.uz = cp;
  r.half_w = cam.width / 2.0;
  r.half_h = cam.height / 2.0;
  r.focal = r.half_w / std::tan(cam.hfov_deg * kDeg / 2.0);
  return r;
}

std::uint8_t cast_pixel(const Scene& scene, const CameraRig& rig, const CameraConfig& cam, int u, int v) {
  const double pu = (u + 0.5) - rig.half_w;
  const double pv = (v + 0.5) - rig.half_h;
  double dx = rig.focal * rig.fx + pu * rig.rx - pv * rig.ux;
  double dy = rig.focal * rig.fy + pu * rig.ry - pv * rig.uy;
  double dz = rig.focal * rig.fz + pu * rig.rz - pv * rig.uz;
  const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
  dx /= n;
  dy /= n;
  dz /= n;

  double best = kInf;
  std::uint8_t color = Scene::kBackgroundIntensity;

  if (dz < 0.0) {
    best = -rig.oz / dz;
    color = Scene::kFloorIntensity;
  }
  double wall = kInf;
  if (dy < 0.0) wall = std::min(wall, -rig.oy / dy);
  if (dy > 0.0) wall = std::min(wall, (Scene::kWidth - rig.oy) / dy);
  if (dx < 0.0) wall = std::min(wall, -rig.ox / dx);
  if (dx > 0.0) wall = std::min(wall, (Scene::kLength - rig.ox) / dx);
  if (wall < best) {
    best = wall;
    color = Scene::kWallIntensity;
  }
  for (const Obstacle& b : scene.obstacles) {
    const double t = ray_box(rig.ox, rig.oy, rig.oz, dx, dy, dz, b);
    if (t < best) {
      best = t;
      color = b.intensity;
    }
  }
  return best > cam.far_clip ? Scene::kBackgroundIntensity : color;
}

}  // namespace sonicgrid::kernels
