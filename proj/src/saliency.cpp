#include "sonicgrid/saliency.hpp"

#include <cmath>
#include <string>

#include "sonicgrid/kernels.hpp"

namespace sonicgrid {

WeightTable build_weight_table() {
  WeightTable t{};
  for (int d = 0; d < 256; ++d) t[static_cast<std::size_t>(d)] = static_cast<std::uint8_t>(255 - d);
  return t;
}

const WeightTable& weight_table() {
  static const WeightTable table = build_weight_table();
  return table;
}

NeuronStates::NeuronStates(int width, int height, std::uint32_t fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InvalidInput("state field dimensions must be positive");
  states_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

std::int64_t single_pass_limit(double thresh) {
  return static_cast<std::int64_t>(std::floor(thresh * 9.0 * FilterConfig::kMaxLevel));
}

std::int64_t numerator_limit(double thresh) {
  return static_cast<std::int64_t>(std::floor(thresh * 9.0 * FilterConfig::kMaxLevel * NeuronStates::kScale));
}

namespace {

void validate(const GrayImage& img, const FilterConfig& cfg) {
  if (img.empty()) throw InvalidInput("saliency filter needs a non-empty image");
  if (cfg.iterations < 1) {
    throw InvalidInput("iterations must be at least 1, got " + std::to_string(cfg.iterations));
  }
}

}  // namespace

NeuronStates filter_states(const GrayImage& img, const FilterConfig& cfg) {
  validate(img, cfg);
  const std::int64_t limit = numerator_limit(cfg.thresh);
  NeuronStates prev(img.width(), img.height(), NeuronStates::kScale);
  NeuronStates next(img.width(), img.height(), 0);
  for (int it = 0; it < cfg.iterations; ++it) {
    kernels::omp::filter_step(img, prev, limit, next);
    std::swap(prev, next);
  }
  return prev;
}

SalientMask mask_from_states(const NeuronStates& states) {
  SalientMask mask(states.width(), states.height());
  auto src = states.raw_states();
  auto dst = mask.flags();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] == 0 ? 1 : 0;
  return mask;
}

SalientMask salient_mask(const GrayImage& img, const FilterConfig& cfg) {
  validate(img, cfg);
  if (cfg.iterations == 1) {
    SalientMask mask(img.width(), img.height());
    kernels::omp::single_pass_mask(img, single_pass_limit(cfg.thresh), mask);
    return mask;
  }
  return mask_from_states(filter_states(img, cfg));
}

}  // namespace sonicgrid
