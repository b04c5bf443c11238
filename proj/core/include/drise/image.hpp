// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drise/types.hpp"

namespace drise {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB raster, row-major, origin top-left.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  /// Black image. Throws ContractError for non-positive dimensions.
  Image(int width, int height);
  Image(int width, int height, Rgb fill);
  /// Takes ownership of interleaved RGB samples; size must be width * height * 3.
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> data() const noexcept { return pixels_; }
  std::span<std::uint8_t> data() noexcept { return pixels_; }

  Rgb at(int x, int y) const noexcept {
    const std::uint8_t* p = &pixels_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    std::uint8_t* p = &pixels_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  bool inside(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Single-channel float raster, row-major. Used for masks and saliency maps.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, float fill = 0.0f);
  Raster(int width, int height, std::vector<float> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  float at(int x, int y) const noexcept { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int x, int y) noexcept { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  float max_value() const noexcept;
  /// Index of the first maximum in row-major order.
  std::size_t argmax() const noexcept;

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

/// Integer pixel rectangle [x, x + width) x [y, y + height).
struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Rounds a float box to the nearest pixel rectangle.
PixelRect round_to_pixels(const BBox& box) noexcept;

/// Copies the pixel-rounded region. With clamp the region is intersected with the
/// image; without it, samples outside the image are zero. Throws ContractError when
/// the result would be empty.
Image crop(const Image& image, const BBox& region, bool clamp);
Raster crop(const Raster& raster, const BBox& region, bool clamp);

/// Bilinear resampling with half-pixel centers: destination pixel d samples source
/// coordinate (d + 0.5) * src / dst - 0.5, clamped to the valid range. Constant
/// rasters stay exactly constant.
Raster resize_bilinear(const Raster& raster, int new_width, int new_height);
Image resize_bilinear(const Image& image, int new_width, int new_height);

/// Divides by the maximum; an all-zero raster is returned unchanged.
Raster normalize_by_max(const Raster& raster);

namespace detail {

/// Source taps for one destination coordinate under the half-pixel convention.
struct LinearTap {
  int lo = 0;
  int hi = 0;
  double t = 0.0;
};

/// Tap for destination coordinate `dst_index` when `src_size` samples are spread
/// over `dst_size` output pixels.
LinearTap linear_tap(double dst_index, int src_size, double dst_size) noexcept;

inline double lerp(double a, double b, double t) noexcept { return a + t * (b - a); }

}  // namespace detail

}  // namespace drise
