// SPDX-License-Identifier: Apache-2.0
#include "drise/masking.hpp"

#include <cmath>

#include "drise/error.hpp"

namespace drise {
namespace {

constexpr std::uint64_t kStreamGrid = 0;
constexpr std::uint64_t kStreamOffsetRow = 1;
constexpr std::uint64_t kStreamOffsetCol = 2;

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string dims(int a, int b) { return std::to_string(a) + "x" + std::to_string(b); }

}  // namespace

std::uint64_t counter_hash(std::uint64_t key, std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  std::uint64_t h = mix64(key);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return mix64(h ^ c);
}

void MaskSpec::validate() const {
  if (grid_h < 1 || grid_w < 1) throw ConfigError("mask grid must be at least 1x1, got " + dims(grid_h, grid_w));
  if (!(prob > 0.0 && prob < 1.0)) throw ConfigError("mask probability must lie in (0, 1)");
  if (count < 1) throw ConfigError("mask count must be at least 1");
}

void MaskSpec::check_coverage(int image_width, int image_height) const {
  validate();
  const auto check = [](int size, int cells, const char* axis) {
    const int cell = size / cells;
    const int rest = size % cells;
    if (cell < 1 || cell < rest) {
      throw ConfigError(std::string("mask grid does not cover the image along ") + axis + ": " +
                        std::to_string(size) + " px over " + std::to_string(cells) + " cells leaves cell size " +
                        std::to_string(cell) + " < remainder " + std::to_string(rest) +
                        " (use a coarser grid or an image of at least grid^2 pixels)");
    }
  };
  check(image_height, grid_h, "height");
  check(image_width, grid_w, "width");
}

BinaryGrid sample_grid(const MaskSpec& spec, std::size_t index) {
  if (index >= spec.count) {
    throw ContractError("mask index " + std::to_string(index) + " out of range [0, " + std::to_string(spec.count) +
                        ")");
  }
  BinaryGrid grid;
  grid.height = spec.grid_h;
  grid.width = spec.grid_w;
  grid.cells.resize(static_cast<std::size_t>(spec.grid_h) * spec.grid_w);
  for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
    const double u = unit_interval(counter_hash(spec.seed, index, kStreamGrid, cell));
    grid.cells[cell] = u < spec.prob ? 1 : 0;
  }
  return grid;
}

CropOffset sample_offset(const MaskSpec& spec, std::size_t index, int image_width, int image_height) {
  const int cell_h = image_height / spec.grid_h;
  const int cell_w = image_width / spec.grid_w;
  if (cell_h < 1 || cell_w < 1) throw ConfigError("image smaller than the mask grid");
  const double uy = unit_interval(counter_hash(spec.seed, index, kStreamOffsetRow));
  const double ux = unit_interval(counter_hash(spec.seed, index, kStreamOffsetCol));
  return {static_cast<int>(uy * cell_h), static_cast<int>(ux * cell_w)};
}

Raster upsample_and_crop(const BinaryGrid& grid, int image_width, int image_height, CropOffset offset) {
  if (grid.height < 1 || grid.width < 1 || grid.cells.size() != static_cast<std::size_t>(grid.height) * grid.width) {
    throw ContractError("malformed mask grid");
  }
  const int cell_h = image_height / grid.height;
  const int cell_w = image_width / grid.width;
  if (cell_h < 1 || cell_w < 1) throw ConfigError("image smaller than the mask grid");
  if (offset.dy < 0 || offset.dy >= cell_h || offset.dx < 0 || offset.dx >= cell_w) {
    throw ContractError("crop offset (" + std::to_string(offset.dy) + ", " + std::to_string(offset.dx) +
                        ") outside [0, " + std::to_string(cell_h) + ") x [0, " + std::to_string(cell_w) + ")");
  }
  const double canvas_h = static_cast<double>(grid.height + 1) * cell_h;
  const double canvas_w = static_cast<double>(grid.width + 1) * cell_w;

  // Positions past the canvas edge fall in the clamped region, so any offset is safe.
  std::vector<detail::LinearTap> cols(image_width);
  for (int x = 0; x < image_width; ++x) cols[x] = detail::linear_tap(x + offset.dx, grid.width, canvas_w);

  Raster out(image_width, image_height);
  for (int y = 0; y < image_height; ++y) {
    const detail::LinearTap row = detail::linear_tap(y + offset.dy, grid.height, canvas_h);
    for (int x = 0; x < image_width; ++x) {
      const detail::LinearTap& col = cols[x];
      const double top = detail::lerp(grid.at(row.lo, col.lo), grid.at(row.lo, col.hi), col.t);
      const double bottom = detail::lerp(grid.at(row.hi, col.lo), grid.at(row.hi, col.hi), col.t);
      out.at(x, y) = static_cast<float>(detail::lerp(top, bottom, row.t));
    }
  }
  return out;
}

MaskGenerator::MaskGenerator(MaskSpec spec, int image_width, int image_height)
    : spec_(spec), width_(image_width), height_(image_height) {
  if (image_width < 1 || image_height < 1) throw ContractError("image dimensions must be positive");
  spec_.check_coverage(image_width, image_height);
}

Mask MaskGenerator::operator[](std::size_t index) const {
  Mask m;
  m.index = index;
  const BinaryGrid grid = sample_grid(spec_, index);
  m.offset = sample_offset(spec_, index, width_, height_);
  m.values = upsample_and_crop(grid, width_, height_, m.offset);
  return m;
}

Image apply_mask(const Image& image, const Raster& mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw ContractError("mask is " + dims(mask.width(), mask.height()) + " but image is " +
                        dims(image.width(), image.height()));
  }
  Image out = image;
  auto px = out.data();
  auto m = mask.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double scale = m[i];
    for (int c = 0; c < Image::kChannels; ++c) {
      std::uint8_t& v = px[i * Image::kChannels + c];
      v = static_cast<std::uint8_t>(std::lround(v * scale));
    }
  }
  return out;
}

std::string mask_interpolation_convention() {
  return "bilinear, half-pixel centers, grid spread over (h+1)*floor(H/h) x (w+1)*floor(W/w) canvas, "
         "edge clamped, integer crop offsets in [0,C_H)x[0,C_W)";
}

}  // namespace drise
