// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "drise/image.hpp"

namespace drise::cli {

enum class Colormap {
  /// Piecewise linear blue (0) -> green (0.5) -> red (1).
  kRamp,
  kGray,
};

/// Color for a value in [0, 1]; channels are rounded half away from zero.
Rgb colormap(double value, Colormap map = Colormap::kRamp) noexcept;

/// Colormapped map, normalized by its maximum first (an all-zero map stays zero).
Image render_heatmap(const Raster& map, Colormap cmap = Colormap::kRamp);

/// alpha * heat + (1 - alpha) * image, per channel, rounded.
Image render_overlay(const Raster& map, const Image& image, double alpha = 0.5, Colormap cmap = Colormap::kRamp);

std::vector<std::uint8_t> render_heatmap_png(const Raster& map, Colormap cmap = Colormap::kRamp);
std::vector<std::uint8_t> render_overlay_png(const Raster& map, const Image& image, double alpha = 0.5,
                                             Colormap cmap = Colormap::kRamp);

}  // namespace drise::cli
