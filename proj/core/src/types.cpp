// SPDX-License-Identifier: Apache-2.0
#include "drise/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drise/error.hpp"

namespace drise {

BBox bbox_from_xywh(double x, double y, double w, double h) { return {x, y, x + w, y + h}; }

void DetectionVector::validate() const {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!bbox.valid() || !std::isfinite(bbox.x1) || !std::isfinite(bbox.y1) || !std::isfinite(bbox.x2) ||
      !std::isfinite(bbox.y2)) {
    throw ContractError("detection box must be finite with x1 <= x2 and y1 <= y2");
  }
  if (!in_unit(objectness)) throw ContractError("objectness outside [0, 1]");
  if (scores.empty()) throw ContractError("detection has an empty score vector");
  for (double s : scores) {
    if (!in_unit(s)) throw ContractError("class score outside [0, 1]: " + std::to_string(s));
  }
}

DetectionVector TargetDetection::to_vector() const {
  if (class_count == 0 || class_index >= class_count) {
    throw ContractError("target class " + std::to_string(class_index) + " outside [0, " +
                        std::to_string(class_count) + ")");
  }
  DetectionVector v;
  v.bbox = bbox;
  v.objectness = 1.0;
  v.scores.assign(class_count, 0.0);
  v.scores[class_index] = 1.0;
  return v;
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double cosine_similarity(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ContractError("cosine_similarity: length mismatch " + std::to_string(p.size()) + " vs " +
                        std::to_string(q.size()));
  }
  if (p.empty()) throw ContractError("cosine_similarity: empty vectors");
  double dot = 0.0, pp = 0.0, qq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    dot += p[i] * q[i];
    pp += p[i] * p[i];
    qq += q[i] * q[i];
  }
  if (pp == 0.0 || qq == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(pp) * std::sqrt(qq)), -1.0, 1.0);
}

}  // namespace drise
