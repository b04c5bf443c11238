// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drise/image.hpp"

namespace drise {

enum class Corner { kTopLeft, kTopRight };

/// Solid disc painted at a box corner of every instance of one category.
/// Defaults: radius 6, blue for top-left; yellow for top-right via for_corner().
struct MarkerSpec {
  Corner corner = Corner::kTopLeft;
  int radius = 6;
  Rgb color{0, 0, 255};
  std::int64_t target_category = 0;

  static MarkerSpec for_corner(Corner corner, std::int64_t category);
  void validate() const;
};

struct PixelPoint {
  int x = 0;
  int y = 0;

  bool operator==(const PixelPoint&) const = default;
};

/// Pixel at the chosen corner of the box (top-right uses the last column inside
/// the box), clamped to the image.
PixelPoint marker_center(const Image& image, const BBox& box, Corner corner);

/// Sets every pixel whose distance to `center` is at most `radius` to `color`.
void paint_disc(Image& image, PixelPoint center, int radius, Rgb color);

/// Paints the marker at the configured corner of `box`.
Image inject_marker(const Image& image, const BBox& box, const MarkerSpec& spec);

/// Paints the marker centered at an arbitrary position inside the image.
Image place_marker_free(const Image& image, PixelPoint position, const MarkerSpec& spec);

struct BiasReport {
  std::vector<std::int64_t> modified;
  std::vector<std::int64_t> copied;
  /// One entry per image that could not be read or written.
  std::vector<std::string> failures;
  std::size_t markers = 0;

  bool ok() const noexcept { return failures.empty(); }
  std::string to_json() const;
};

/// Writes a copy of the dataset to `out_dir`: the annotation file verbatim as
/// annotations.json, images under images/ (verbatim unless they contain the target
/// category, which gets one marker per instance) and bias_report.json. Images with
/// markers must be PNG. Missing or unreadable files are reported, not fatal.
BiasReport bias_dataset(const std::filesystem::path& annotations, const std::filesystem::path& images_dir,
                        const MarkerSpec& spec, const std::filesystem::path& out_dir, std::size_t jobs = 1);

}  // namespace drise
