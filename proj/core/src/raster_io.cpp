// SPDX-License-Identifier: Apache-2.0
#include "drise/raster_io.hpp"

#include <bit>
#include <cstring>

#include "drise/error.hpp"
#include "drise/png_io.hpp"

namespace drise {
namespace {

constexpr char kMagic[4] = {'D', 'R', 'S', 'M'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_drsm(const Raster& raster) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * raster.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(raster.width()));
  put_u32(out, static_cast<std::uint32_t>(raster.height()));
  for (float v : raster.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Raster decode_drsm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("not a DRSM raster");
  const std::uint32_t w = get_u32(bytes.data() + 4);
  const std::uint32_t h = get_u32(bytes.data() + 8);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) throw IoError("DRSM raster has invalid dimensions");
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 12 + 4 * count) throw IoError("DRSM payload size does not match its header");
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(get_u32(bytes.data() + 12 + 4 * i));
  return Raster(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

void write_drsm(const std::filesystem::path& path, const Raster& raster) { write_file(path, encode_drsm(raster)); }

Raster read_drsm(const std::filesystem::path& path) {
  try {
    return decode_drsm(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace drise
