// SPDX-License-Identifier: Apache-2.0
#include "drise/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drise/error.hpp"

namespace drise {
namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw ContractError("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
}

std::uint8_t to_u8(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Region in destination pixels plus where it starts in the source.
struct CropWindow {
  int src_x = 0;
  int src_y = 0;
  int width = 0;
  int height = 0;
};

CropWindow crop_window(int image_w, int image_h, const BBox& region, bool clamp) {
  PixelRect r = round_to_pixels(region);
  if (clamp) {
    const int x0 = std::max(r.x, 0);
    const int y0 = std::max(r.y, 0);
    const int x1 = std::min(r.x + r.width, image_w);
    const int y1 = std::min(r.y + r.height, image_h);
    r = {x0, y0, x1 - x0, y1 - y0};
  }
  if (r.width <= 0 || r.height <= 0) throw ContractError("crop region is empty");
  return {r.x, r.y, r.width, r.height};
}

}  // namespace

Image::Image(int width, int height) : Image(width, height, Rgb{}) {}

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.resize(pixel_count() * kChannels);
  for (std::size_t i = 0; i < pixels_.size(); i += kChannels) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != pixel_count() * kChannels) {
    throw ContractError("image buffer holds " + std::to_string(pixels_.size()) + " bytes, expected " +
                        std::to_string(pixel_count() * kChannels));
  }
}

Raster::Raster(int width, int height, float fill) : width_(width), height_(height) {
  check_dims(width, height);
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

Raster::Raster(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw ContractError("raster holds " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(static_cast<std::size_t>(width) * height));
  }
}

float Raster::max_value() const noexcept {
  if (values_.empty()) return 0.0f;
  return *std::max_element(values_.begin(), values_.end());
}

std::size_t Raster::argmax() const noexcept {
  // max_element returns the first of equal maxima, which gives row-major tie breaking.
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

PixelRect round_to_pixels(const BBox& box) noexcept {
  const int x0 = static_cast<int>(std::lround(box.x1));
  const int y0 = static_cast<int>(std::lround(box.y1));
  const int x1 = static_cast<int>(std::lround(box.x2));
  const int y1 = static_cast<int>(std::lround(box.y2));
  return {x0, y0, x1 - x0, y1 - y0};
}

Image crop(const Image& image, const BBox& region, bool clamp) {
  const CropWindow w = crop_window(image.width(), image.height(), region, clamp);
  Image out(w.width, w.height);
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      const int sx = w.src_x + x;
      const int sy = w.src_y + y;
      if (image.inside(sx, sy)) out.set(x, y, image.at(sx, sy));
    }
  }
  return out;
}

Raster crop(const Raster& raster, const BBox& region, bool clamp) {
  const CropWindow w = crop_window(raster.width(), raster.height(), region, clamp);
  Raster out(w.width, w.height);
  for (int y = 0; y < w.height; ++y) {
    const int sy = w.src_y + y;
    if (sy < 0 || sy >= raster.height()) continue;
    for (int x = 0; x < w.width; ++x) {
      const int sx = w.src_x + x;
      if (sx >= 0 && sx < raster.width()) out.at(x, y) = raster.at(sx, sy);
    }
  }
  return out;
}

namespace detail {

LinearTap linear_tap(double dst_index, int src_size, double dst_size) noexcept {
  double pos = (dst_index + 0.5) * static_cast<double>(src_size) / dst_size - 0.5;
  pos = std::clamp(pos, 0.0, static_cast<double>(src_size - 1));
  LinearTap tap;
  tap.lo = static_cast<int>(std::floor(pos));
  tap.hi = std::min(tap.lo + 1, src_size - 1);
  tap.t = pos - tap.lo;
  return tap;
}

}  // namespace detail

Raster resize_bilinear(const Raster& raster, int new_width, int new_height) {
  check_dims(new_width, new_height);
  if (raster.empty()) throw ContractError("cannot resize an empty raster");
  std::vector<detail::LinearTap> xs(new_width);
  for (int x = 0; x < new_width; ++x) xs[x] = detail::linear_tap(x, raster.width(), new_width);
  Raster out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    const detail::LinearTap ty = detail::linear_tap(y, raster.height(), new_height);
    for (int x = 0; x < new_width; ++x) {
      const detail::LinearTap& tx = xs[x];
      const double top = detail::lerp(raster.at(tx.lo, ty.lo), raster.at(tx.hi, ty.lo), tx.t);
      const double bottom = detail::lerp(raster.at(tx.lo, ty.hi), raster.at(tx.hi, ty.hi), tx.t);
      out.at(x, y) = static_cast<float>(detail::lerp(top, bottom, ty.t));
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int new_width, int new_height) {
  check_dims(new_width, new_height);
  if (image.empty()) throw ContractError("cannot resize an empty image");
  std::vector<detail::LinearTap> xs(new_width);
  for (int x = 0; x < new_width; ++x) xs[x] = detail::linear_tap(x, image.width(), new_width);
  Image out(new_width, new_height);
  auto src = image.data();
  auto dst = out.data();
  const auto idx = [&](int x, int y, int c) {
    return (static_cast<std::size_t>(y) * image.width() + x) * Image::kChannels + c;
  };
  for (int y = 0; y < new_height; ++y) {
    const detail::LinearTap ty = detail::linear_tap(y, image.height(), new_height);
    for (int x = 0; x < new_width; ++x) {
      const detail::LinearTap& tx = xs[x];
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = detail::lerp(src[idx(tx.lo, ty.lo, c)], src[idx(tx.hi, ty.lo, c)], tx.t);
        const double bottom = detail::lerp(src[idx(tx.lo, ty.hi, c)], src[idx(tx.hi, ty.hi, c)], tx.t);
        dst[(static_cast<std::size_t>(y) * new_width + x) * Image::kChannels + c] =
            to_u8(detail::lerp(top, bottom, ty.t));
      }
    }
  }
  return out;
}

Raster normalize_by_max(const Raster& raster) {
  Raster out = raster;
  const float m = raster.max_value();
  if (m > 0.0f) {
    for (float& v : out.values()) v /= m;
  }
  return out;
}

}  // namespace drise
