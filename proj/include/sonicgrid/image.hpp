#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sonicgrid/error.hpp"

namespace sonicgrid {

/// 8-bit single-channel frame, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

  /// Edge-replicating access: coordinates outside the frame are clamped.
  std::uint8_t clamped(int x, int y) const;

  std::span<const std::uint8_t> pixels() const { return data_; }
  std::span<std::uint8_t> pixels() { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel salience flags; true marks a pixel whose neuron ended inactive.
class SalientMask {
 public:
  SalientMask() = default;
  SalientMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const { return flags_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { flags_[index(x, y)] = v ? 1 : 0; }

  std::span<const std::uint8_t> flags() const { return flags_; }
  std::span<std::uint8_t> flags() { return flags_; }

  std::size_t count() const;

  /// 255 where salient, 0 elsewhere.
  GrayImage to_image() const;

  bool operator==(const SalientMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> flags_;
};

}  // namespace sonicgrid
