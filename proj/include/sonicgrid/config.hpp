#pragma once

#include <filesystem>
#include <string_view>

#include "sonicgrid/pipeline.hpp"

namespace sonicgrid {

/// Applies `key = value` lines ('#' comments) to cfg. Keys: thresh,
/// iterations, rows, cols, width, height, activation_ratio, sample_rate,
/// block_frames, master_gain, budget_ms. Throws FormatError on unknown keys
/// or unparsable values.
void apply_config_file(const std::filesystem::path& path, PipelineConfig& cfg);
void apply_config_text(std::string_view text, PipelineConfig& cfg, std::string_view origin = "config");

}  // namespace sonicgrid
