// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drise {

/// Axis-aligned box in float pixel coordinates. (x1, y1) is inclusive and
/// (x2, y2) exclusive, so a box covering pixel (0, 0) alone is {0, 0, 1, 1}.
struct BBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  bool valid() const noexcept { return x1 <= x2 && y1 <= y2; }
  bool contains(double x, double y) const noexcept { return x >= x1 && x < x2 && y >= y1 && y < y2; }

  bool operator==(const BBox&) const = default;
};

/// Builds a corner-form box from COCO-style (x, y, width, height).
BBox bbox_from_xywh(double x, double y, double w, double h);

/// One detector proposal: box, objectness and a per-class confidence vector.
/// Scores are not required to sum to one.
struct DetectionVector {
  BBox bbox;
  double objectness = 1.0;
  std::vector<double> scores;

  std::size_t class_count() const noexcept { return scores.size(); }

  /// Throws ContractError unless the box is ordered and every value lies in [0, 1].
  void validate() const;

  bool operator==(const DetectionVector&) const = default;
};

/// A box and category to explain; need not come from the detector.
struct TargetDetection {
  BBox bbox;
  std::size_t class_index = 0;
  std::size_t class_count = 1;

  /// Objectness 1 and a one-hot score vector.
  DetectionVector to_vector() const;
};

/// Intersection over union. Symmetric; 0 when the union has no area.
double iou(const BBox& a, const BBox& b) noexcept;

/// Area of a ∩ b, 0 when disjoint.
double intersection_area(const BBox& a, const BBox& b) noexcept;

/// dot(p, q) / (|p| |q|), or 0 if either norm vanishes. Lengths must match.
double cosine_similarity(std::span<const double> p, std::span<const double> q);

}  // namespace drise
