// SPDX-License-Identifier: Apache-2.0
#pragma once

// DRSM: portable float raster.
//   bytes 0..3   magic "DRSM"
//   bytes 4..7   width,  u32 little-endian
//   bytes 8..11  height, u32 little-endian
//   then width*height IEEE-754 f32 values, little-endian, row-major

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "drise/image.hpp"

namespace drise {

std::vector<std::uint8_t> encode_drsm(const Raster& raster);
/// Throws IoError on a bad magic, truncated payload or trailing bytes.
Raster decode_drsm(std::span<const std::uint8_t> bytes);

void write_drsm(const std::filesystem::path& path, const Raster& raster);
Raster read_drsm(const std::filesystem::path& path);

}  // namespace drise
