// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drise/detector.hpp"
#include "drise/error.hpp"
#include "drise/image.hpp"
#include "drise/similarity.hpp"

namespace drise {

/// Ground truth for the pointing game: a box, or a binary mask of image size.
class GroundTruthRegion {
 public:
  enum class Kind { kBox, kMask };

  static GroundTruthRegion from_box(const BBox& box);
  /// `mask` is row-major, nonzero inside the region; throws ContractError if empty.
  static GroundTruthRegion from_mask(int width, int height, std::vector<std::uint8_t> mask);

  Kind kind() const noexcept { return kind_; }
  /// Pixel (x, y) is inside when its center lies in the box, or its mask entry is set.
  bool contains(int x, int y) const noexcept;
  void check_dims(int width, int height) const;

 private:
  Kind kind_ = Kind::kBox;
  BBox box_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> mask_;
};

/// Hit when the first (row-major) maximum of the map lies inside the region.
bool pointing_game(const Raster& saliency, const GroundTruthRegion& gt);

struct PointingGameTally {
  std::size_t hits = 0;
  std::size_t misses = 0;

  void add(bool hit) noexcept { hit ? ++hits : ++misses; }
  /// hits / (hits + misses); throws ContractError when nothing was scored.
  double accuracy() const;
};

struct CurvePoint {
  double fraction = 0.0;
  double score = 0.0;
};

struct MetricCurve {
  std::vector<CurvePoint> points;
  double auc = 0.0;
};

/// Trapezoidal area over the fraction axis. Needs >= 2 points with strictly
/// increasing fractions; throws ContractError otherwise.
double auc(std::span<const CurvePoint> points);

enum class InsertionBaseline { kBlack, kBlur };

struct CurveOptions {
  int steps = 100;
  SimilarityConfig sim;
  InsertionBaseline baseline = InsertionBaseline::kBlack;
  double blur_sigma = 5.0;
};

/// Thrown when the detector fails mid-curve; carries the points measured so far.
class CurveAborted : public ProtocolError {
 public:
  CurveAborted(const std::string& what, MetricCurve partial) : ProtocolError(what), partial_(std::move(partial)) {}
  const MetricCurve& partial() const noexcept { return partial_; }

 private:
  MetricCurve partial_;
};

/// Pixel indices by decreasing saliency, ties in row-major order.
std::vector<std::uint32_t> salience_order(const Raster& saliency);

/// Blacks out the floor(k * H * W / steps) most salient pixels for k = 0..steps and
/// scores each image with max_similarity against the target. Lower AUC is better.
MetricCurve deletion_curve(const Image& image, const TargetDetection& target, Detector& detector,
                           const Raster& saliency, const CurveOptions& options = {});

/// Starts from the baseline (black or blurred) and restores the most salient
/// original pixels in the same tranches. Higher AUC is better.
MetricCurve insertion_curve(const Image& image, const TargetDetection& target, Detector& detector,
                            const Raster& saliency, const CurveOptions& options = {});

/// "fraction,score" header, one row per point, then "# auc=<value>".
std::string curve_to_csv(const MetricCurve& curve);

/// Separable Gaussian blur, edges clamped, radius ceil(3 sigma).
Image gaussian_blur(const Image& image, double sigma);

}  // namespace drise
