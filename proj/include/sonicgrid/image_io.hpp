#pragma once

#include <filesystem>

#include "sonicgrid/image.hpp"

namespace sonicgrid {

/// PNG (any bit depth or color type) or binary/ASCII PGM, chosen by file
/// signature. Color is reduced with Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage read_image(const std::filesystem::path& path);

/// 8-bit grayscale; PGM (P5) for a .pgm extension, PNG otherwise.
void write_image(const std::filesystem::path& path, const GrayImage& img);

std::uint8_t rec601_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace sonicgrid
