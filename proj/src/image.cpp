#include "sonicgrid/image.hpp"

#include <algorithm>
#include <string>

namespace sonicgrid {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidInput("image dimensions must be positive, got " + std::to_string(width) + "x" +
                       std::to_string(height));
  }
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidInput("pixel buffer holds " + std::to_string(data_.size()) + " values, expected " +
                       std::to_string(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)));
  }
}

std::uint8_t GrayImage::clamped(int x, int y) const {
  return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
}

SalientMask::SalientMask(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  flags_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::size_t SalientMask::count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

GrayImage SalientMask::to_image() const {
  std::vector<std::uint8_t> px(flags_.size());
  std::transform(flags_.begin(), flags_.end(), px.begin(), [](std::uint8_t f) { return f ? 255 : 0; });
  return GrayImage(width_, height_, std::move(px));
}

}  // namespace sonicgrid
