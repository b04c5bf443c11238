// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <string>
#include <vector>

#include "drise/image.hpp"

namespace drise {

/// Parameters of a random mask family. Defaults are N = 5000 masks over a
/// 16x16 grid with keep probability 0.5.
struct MaskSpec {
  int grid_h = 16;
  int grid_w = 16;
  double prob = 0.5;
  std::size_t count = 5000;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless 0 < prob < 1, the grid is non-empty and count >= 1.
  void validate() const;

  /// Throws ConfigError unless floor(H/h) >= H mod h and floor(W/w) >= W mod w,
  /// which guarantees the upsampled canvas covers the image.
  void check_coverage(int image_width, int image_height) const;

  bool operator==(const MaskSpec&) const = default;
};

/// Crop offset into the upsampled canvas: dy rows in [0, C_H), dx columns in [0, C_W).
struct CropOffset {
  int dy = 0;
  int dx = 0;

  bool operator==(const CropOffset&) const = default;
};

/// Low resolution binary grid, row-major.
struct BinaryGrid {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;

  std::uint8_t at(int row, int col) const noexcept {
    return cells[static_cast<std::size_t>(row) * width + col];
  }
  bool operator==(const BinaryGrid&) const = default;
};

/// A smooth mask at image resolution, values in [0, 1].
struct Mask {
  Raster values;
  std::size_t index = 0;
  CropOffset offset;

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
};

/// Stateless 64-bit counter hash; (key, counter) fully determines the output.
std::uint64_t counter_hash(std::uint64_t key, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0) noexcept;

/// Maps a 64-bit hash to a double in [0, 1).
inline double unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Bernoulli(prob) grid for mask `index`. Each cell is keyed by (seed, index, cell)
/// so grids can be produced in any order or in parallel.
BinaryGrid sample_grid(const MaskSpec& spec, std::size_t index);

/// Crop offset for mask `index`, uniform over [0, C_H) x [0, C_W).
CropOffset sample_offset(const MaskSpec& spec, std::size_t index, int image_width, int image_height);

/// Bilinearly upsamples `grid` onto a (h+1)C_H x (w+1)C_W canvas (half-pixel centers,
/// edge clamped) and crops an image-sized window at `offset`.
Raster upsample_and_crop(const BinaryGrid& grid, int image_width, int image_height, CropOffset offset);

/// Lazy, random-access sequence of the masks described by a MaskSpec for one image size.
class MaskGenerator {
 public:
  /// Validates the spec and the coverage precondition.
  MaskGenerator(MaskSpec spec, int image_width, int image_height);

  const MaskSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return spec_.count; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  /// Mask number `index`; throws ContractError when out of range.
  Mask operator[](std::size_t index) const;

  class Iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Mask;
    using difference_type = std::ptrdiff_t;

    Iterator() = default;
    Iterator(const MaskGenerator* gen, std::size_t i) : gen_(gen), i_(i) {}

    Mask operator*() const { return (*gen_)[i_]; }
    Iterator& operator++() {
      ++i_;
      return *this;
    }
    Iterator operator++(int) {
      Iterator old = *this;
      ++i_;
      return old;
    }
    bool operator==(const Iterator& o) const noexcept { return i_ == o.i_; }

   private:
    const MaskGenerator* gen_ = nullptr;
    std::size_t i_ = 0;
  };

  Iterator begin() const { return {this, 0}; }
  Iterator end() const { return {this, spec_.count}; }

 private:
  MaskSpec spec_;
  int width_;
  int height_;
};

/// Per pixel and channel: round(pixel * mask). Mask 0 gives black.
Image apply_mask(const Image& image, const Raster& mask);
inline Image apply_mask(const Image& image, const Mask& mask) { return apply_mask(image, mask.values); }

/// Description of the interpolation convention, recorded in saliency metadata.
std::string mask_interpolation_convention();

}  // namespace drise
