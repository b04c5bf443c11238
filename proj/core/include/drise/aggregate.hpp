// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "drise/image.hpp"

namespace drise {

struct BoxSize {
  double width = 0.0;
  double height = 0.0;
};

/// Mean width and height; throws ContractError for an empty set.
BoxSize average_box_size(std::span<const BBox> boxes);

/// Context margin added on each side, as a fraction of the box width and height.
inline constexpr double kDefaultContext = 0.5;

BBox expand_with_context(const BBox& box, double context);

struct ClassAggregate {
  std::size_t class_index = 0;
  std::size_t sample_count = 0;
  BoxSize average_size;
  double context = kDefaultContext;
  /// Mean of max-normalized saliency crops, values in [0, 1].
  Raster mean_map;
  std::optional<Image> mean_image;
};

/// Streaming per-class average of saliency crops. Build it with the class's average
/// box size (first pass), then feed every detection (second pass). Each crop spans
/// the box plus `context` on every side, is zero padded at image borders, divided by
/// its own maximum and resized to the context-expanded average size, so aspect
/// ratios follow the average box. Means are kept in double precision.
class ClassAggregator {
 public:
  ClassAggregator(std::size_t class_index, BoxSize average_box, double context = kDefaultContext,
                  bool with_image = true);

  /// Throws ContractError for a box without area or a saliency map not matching the image.
  void accumulate(const Image& image, const Raster& saliency, const BBox& detection);
  /// Count-weighted merge of a partial aggregate over the same class and size.
  void merge(const ClassAggregator& other);

  std::size_t count() const noexcept { return count_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  /// Throws ContractError before the first sample.
  ClassAggregate result() const;

 private:
  std::size_t class_index_;
  BoxSize average_box_;
  double context_;
  bool with_image_;
  int width_;
  int height_;
  std::size_t count_ = 0;
  std::vector<double> mean_map_;
  std::vector<double> mean_image_;
};

/// Indices of the input boxes split at the 30th and 70th area percentiles. Boxes are
/// ranked by area (stable, so equal areas keep input order); ranks below
/// round(0.3 n) form the small bin, ranks below round(0.7 n) the medium bin.
/// Needs at least 3 boxes.
std::array<std::vector<std::size_t>, 3> scale_bins(std::span<const BBox> boxes);

}  // namespace drise
