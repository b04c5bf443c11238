// SPDX-License-Identifier: Apache-2.0
#include "drise_cli/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "drise/error.hpp"
#include "drise/png_io.hpp"

namespace drise::cli {
namespace {

std::uint8_t channel(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Rgb colormap(double value, Colormap map) noexcept {
  const double v = std::isfinite(value) ? std::clamp(value, 0.0, 1.0) : 0.0;
  if (map == Colormap::kGray) {
    const std::uint8_t g = channel(255.0 * v);
    return {g, g, g};
  }
  if (v <= 0.5) {
    const double t = v / 0.5;
    return {0, channel(255.0 * t), channel(255.0 * (1.0 - t))};
  }
  const double t = (v - 0.5) / 0.5;
  return {channel(255.0 * t), channel(255.0 * (1.0 - t)), 0};
}

Image render_heatmap(const Raster& map, Colormap cmap) {
  const Raster n = normalize_by_max(map);
  Image out(map.width(), map.height());
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) out.set(x, y, colormap(n.at(x, y), cmap));
  return out;
}

Image render_overlay(const Raster& map, const Image& image, double alpha, Colormap cmap) {
  if (map.width() != image.width() || map.height() != image.height()) {
    throw ContractError("overlay: map and image differ in size");
  }
  alpha = std::clamp(alpha, 0.0, 1.0);
  const Image heat = render_heatmap(map, cmap);
  Image out(image.width(), image.height());
  auto h = heat.data();
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = channel(alpha * h[i] + (1.0 - alpha) * src[i]);
  return out;
}

std::vector<std::uint8_t> render_heatmap_png(const Raster& map, Colormap cmap) {
  return encode_png(render_heatmap(map, cmap));
}

std::vector<std::uint8_t> render_overlay_png(const Raster& map, const Image& image, double alpha, Colormap cmap) {
  return encode_png(render_overlay(map, image, alpha, cmap));
}

}  // namespace drise::cli
