// SPDX-License-Identifier: Apache-2.0
#include "drise/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace drise {
namespace {

void check_same_size(const Image& image, const Raster& saliency) {
  if (image.width() != saliency.width() || image.height() != saliency.height()) {
    throw ContractError("saliency map and image differ in size");
  }
}

void check_steps(int steps) {
  if (steps < 2) throw ContractError("curves need at least 2 steps");
}

std::size_t tranche(int k, int steps, std::size_t pixels) {
  return static_cast<std::size_t>(k) * pixels / static_cast<std::size_t>(steps);
}

void copy_pixel(const Image& from, Image& to, std::uint32_t index) {
  auto src = from.data();
  auto dst = to.data();
  const std::size_t o = static_cast<std::size_t>(index) * Image::kChannels;
  dst[o] = src[o];
  dst[o + 1] = src[o + 1];
  dst[o + 2] = src[o + 2];
}

// Shared driver: `canvas` starts as the step-0 image and `source` supplies the
// pixels written at each subsequent tranche.
MetricCurve run_curve(const Image& source, Image canvas, const TargetDetection& target, Detector& detector,
                      const Raster& saliency, const CurveOptions& options) {
  check_same_size(source, saliency);
  check_steps(options.steps);
  const DetectionVector t = target.to_vector();
  const std::vector<std::uint32_t> order = salience_order(saliency);
  MetricCurve curve;
  std::size_t applied = 0;
  for (int k = 0; k <= options.steps; ++k) {
    const std::size_t upto = tranche(k, options.steps, order.size());
    for (; applied < upto; ++applied) copy_pixel(source, canvas, order[applied]);
    try {
      const double s = max_similarity(t, detector.infer(canvas), options.sim);
      curve.points.push_back({static_cast<double>(k) / options.steps, s});
    } catch (const Error& e) {
      throw CurveAborted(std::string("curve aborted at step ") + std::to_string(k) + ": " + e.what(), curve);
    }
  }
  curve.auc = auc(curve.points);
  return curve;
}

}  // namespace

GroundTruthRegion GroundTruthRegion::from_box(const BBox& box) {
  if (!box.valid() || box.area() <= 0.0) throw ContractError("ground-truth box is empty");
  GroundTruthRegion r;
  r.kind_ = Kind::kBox;
  r.box_ = box;
  return r;
}

GroundTruthRegion GroundTruthRegion::from_mask(int width, int height, std::vector<std::uint8_t> mask) {
  if (width < 1 || height < 1 || mask.size() != static_cast<std::size_t>(width) * height) {
    throw ContractError("ground-truth mask size does not match its dimensions");
  }
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; })) {
    throw ContractError("ground-truth mask is empty");
  }
  GroundTruthRegion r;
  r.kind_ = Kind::kMask;
  r.width_ = width;
  r.height_ = height;
  r.mask_ = std::move(mask);
  return r;
}

bool GroundTruthRegion::contains(int x, int y) const noexcept {
  if (kind_ == Kind::kBox) return box_.contains(x + 0.5, y + 0.5);
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  return mask_[static_cast<std::size_t>(y) * width_ + x] != 0;
}

void GroundTruthRegion::check_dims(int width, int height) const {
  if (kind_ == Kind::kMask && (width != width_ || height != height_)) {
    throw ContractError("ground-truth mask and saliency map differ in size");
  }
}

bool pointing_game(const Raster& saliency, const GroundTruthRegion& gt) {
  if (saliency.empty()) throw ContractError("empty saliency map");
  gt.check_dims(saliency.width(), saliency.height());
  const std::size_t p = saliency.argmax();
  return gt.contains(static_cast<int>(p % saliency.width()), static_cast<int>(p / saliency.width()));
}

double PointingGameTally::accuracy() const {
  if (hits + misses == 0) throw ContractError("pointing game accuracy over an empty set");
  return static_cast<double>(hits) / static_cast<double>(hits + misses);
}

double auc(std::span<const CurvePoint> points) {
  if (points.size() < 2) throw ContractError("AUC needs at least 2 points");
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].fraction - points[i - 1].fraction;
    if (!(dx > 0.0)) throw ContractError("AUC needs strictly increasing fractions");
    area += 0.5 * dx * (points[i].score + points[i - 1].score);
  }
  return area;
}

std::vector<std::uint32_t> salience_order(const Raster& saliency) {
  std::vector<std::uint32_t> order(saliency.size());
  std::iota(order.begin(), order.end(), 0u);
  auto v = saliency.values();
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return v[a] > v[b]; });
  return order;
}

MetricCurve deletion_curve(const Image& image, const TargetDetection& target, Detector& detector,
                           const Raster& saliency, const CurveOptions& options) {
  const Image black(image.width(), image.height());
  return run_curve(black, image, target, detector, saliency, options);
}

MetricCurve insertion_curve(const Image& image, const TargetDetection& target, Detector& detector,
                            const Raster& saliency, const CurveOptions& options) {
  Image start = options.baseline == InsertionBaseline::kBlur ? gaussian_blur(image, options.blur_sigma)
                                                             : Image(image.width(), image.height());
  return run_curve(image, std::move(start), target, detector, saliency, options);
}

std::string curve_to_csv(const MetricCurve& curve) {
  std::string out = "fraction,score\n";
  char buf[96];
  for (const CurvePoint& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", p.fraction, p.score);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "# auc=%.10g\n", curve.auc);
  out += buf;
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma > 0.0)) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& k : kernel) k /= sum;

  const int w = image.width(), h = image.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h * Image::kChannels);
  auto src = image.data();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < Image::kChannels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, w - 1);
          acc += kernel[i + radius] * src[(static_cast<std::size_t>(y) * w + sx) * Image::kChannels + c];
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * Image::kChannels + c] = acc;
      }
  Image out(w, h);
  auto dst = out.data();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < Image::kChannels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sy = std::clamp(y + i, 0, h - 1);
          acc += kernel[i + radius] * tmp[(static_cast<std::size_t>(sy) * w + x) * Image::kChannels + c];
        }
        dst[(static_cast<std::size_t>(y) * w + x) * Image::kChannels + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
  return out;
}

}  // namespace drise
