#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sonicgrid/image.hpp"

namespace sonicgrid {

/// Quantized synapse weights: entry[d] = 255 - d, i.e. f(d) = 1 - d/255 scaled to 8 bits.
using WeightTable = std::array<std::uint8_t, 256>;

WeightTable build_weight_table();

/// Global weight table instance (built once).
const WeightTable& weight_table();

enum class BorderPolicy { replicate };

struct FilterConfig {
  double thresh = 0.7;
  int iterations = 1;
  BorderPolicy border = BorderPolicy::replicate;

  static constexpr int kMaxLevel = 255;

  /// thresh = 0.112 with a single pass, as deployed on the handheld.
  static FilterConfig strict() { return {0.112, 1, BorderPolicy::replicate}; }
  /// thresh = 0.7: straight high-contrast edges fire; used by the simulator and CLI.
  static FilterConfig operational() { return {0.7, 1, BorderPolicy::replicate}; }
};

/// Neuron states in fixed point: raw value / kScale, kScale representing 1.0.
class NeuronStates {
 public:
  static constexpr std::uint32_t kScale = 1u << 16;

  NeuronStates() = default;
  NeuronStates(int width, int height, std::uint32_t fill);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint32_t raw(int x, int y) const { return states_[index(x, y)]; }
  double value(int x, int y) const { return static_cast<double>(raw(x, y)) / kScale; }

  std::span<const std::uint32_t> raw_states() const { return states_; }
  std::span<std::uint32_t> raw_states() { return states_; }

  bool operator==(const NeuronStates&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> states_;
};

/// Largest admissible 255-scaled weight sum K = 255 + sum(entry) for a salient pixel
/// on a single pass: floor(thresh * 9 * 255).
std::int64_t single_pass_limit(double thresh);

/// Threshold on the fixed-point numerator 255*s_i + sum(entry_j * s_j):
/// floor(thresh * 9 * 255 * kScale). A fresh estimate at or below it is forced to 0.
std::int64_t numerator_limit(double thresh);

/// Runs cfg.iterations synchronous updates starting from all-ones states.
/// Throws InvalidInput on an empty image or iterations < 1.
NeuronStates filter_states(const GrayImage& img, const FilterConfig& cfg);

/// Salient pixels: final state == 0. Single-pass configs use the integer
/// rule 255 + sum(entry) <= single_pass_limit(thresh), which is exactly
/// equivalent to filter_states with iterations = 1.
SalientMask salient_mask(const GrayImage& img, const FilterConfig& cfg);

/// Mask from a precomputed state field.
SalientMask mask_from_states(const NeuronStates& states);

}  // namespace sonicgrid
