#pragma once

#include "sonicgrid/image.hpp"

// 192x144 white frame with isolated black dots every third pixel inside the
// top-left 48x48 cell. Each dot sees eight white neighbours, so it is salient
// even at the strictest threshold; no white pixel touches more than one dot.
inline sonicgrid::GrayImage dot_lattice_frame() {
  sonicgrid::GrayImage img(192, 144, 255);
  for (int y = 2; y < 46; y += 3)
    for (int x = 2; x < 46; x += 3) img.at(x, y) = 0;
  return img;
}

// Dark vertical bar spanning the frame height; lights up one grid column
// under the operational threshold.
inline sonicgrid::GrayImage bar_frame(int x0, int x1) {
  sonicgrid::GrayImage img(192, 144, 250);
  for (int y = 0; y < 144; ++y)
    for (int x = x0; x < x1; ++x) img.at(x, y) = 5;
  return img;
}
