#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rtcs {

/// Writes an 8-bit RGB raster (row-major, H x W x 3) as a PNG file.
void write_png_rgb(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb,
                   std::int64_t height, std::int64_t width);

}  // namespace rtcs
