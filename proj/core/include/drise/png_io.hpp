// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "drise/image.hpp"

namespace drise {

/// Lossless 8-bit RGB PNG encoding.
std::vector<std::uint8_t> encode_png(const Image& image);
/// Decodes any PNG libpng understands, converting to 8-bit RGB (alpha dropped).
Image decode_png(std::span<const std::uint8_t> bytes);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace drise
