// SPDX-License-Identifier: Apache-2.0
#include "drise/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "drise/error.hpp"

namespace drise {

BoxSize average_box_size(std::span<const BBox> boxes) {
  if (boxes.empty()) throw ContractError("average box size of an empty set");
  BoxSize s;
  for (const BBox& b : boxes) {
    s.width += b.width();
    s.height += b.height();
  }
  s.width /= static_cast<double>(boxes.size());
  s.height /= static_cast<double>(boxes.size());
  return s;
}

BBox expand_with_context(const BBox& box, double context) {
  const double mx = box.width() * context;
  const double my = box.height() * context;
  return {box.x1 - mx, box.y1 - my, box.x2 + mx, box.y2 + my};
}

ClassAggregator::ClassAggregator(std::size_t class_index, BoxSize average_box, double context, bool with_image)
    : class_index_(class_index), average_box_(average_box), context_(context), with_image_(with_image) {
  if (!(average_box.width > 0.0) || !(average_box.height > 0.0)) throw ContractError("average box has no area");
  if (context < 0.0) throw ContractError("context margin must be non-negative");
  width_ = std::max(1, static_cast<int>(std::lround(average_box.width * (1.0 + 2.0 * context))));
  height_ = std::max(1, static_cast<int>(std::lround(average_box.height * (1.0 + 2.0 * context))));
  mean_map_.assign(static_cast<std::size_t>(width_) * height_, 0.0);
  if (with_image_) mean_image_.assign(mean_map_.size() * Image::kChannels, 0.0);
}

void ClassAggregator::accumulate(const Image& image, const Raster& saliency, const BBox& detection) {
  if (!detection.valid() || detection.area() <= 0.0) throw ContractError("cannot aggregate a degenerate box");
  if (image.width() != saliency.width() || image.height() != saliency.height()) {
    throw ContractError("saliency map and image differ in size");
  }
  const BBox region = expand_with_context(detection, context_);
  const Raster crop_map = resize_bilinear(normalize_by_max(crop(saliency, region, false)), width_, height_);

  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  auto v = crop_map.values();
  for (std::size_t p = 0; p < mean_map_.size(); ++p) mean_map_[p] += (v[p] - mean_map_[p]) * inv;

  if (with_image_) {
    const Image crop_img = resize_bilinear(crop(image, region, false), width_, height_);
    auto px = crop_img.data();
    for (std::size_t p = 0; p < mean_image_.size(); ++p) mean_image_[p] += (px[p] - mean_image_[p]) * inv;
  }
}

void ClassAggregator::merge(const ClassAggregator& other) {
  if (other.class_index_ != class_index_ || other.width_ != width_ || other.height_ != height_ ||
      other.with_image_ != with_image_) {
    throw ContractError("cannot merge aggregates of different classes or sizes");
  }
  if (other.count_ == 0) return;
  const double total = static_cast<double>(count_ + other.count_);
  const double a = count_ / total, b = other.count_ / total;
  for (std::size_t p = 0; p < mean_map_.size(); ++p) mean_map_[p] = a * mean_map_[p] + b * other.mean_map_[p];
  for (std::size_t p = 0; p < mean_image_.size(); ++p)
    mean_image_[p] = a * mean_image_[p] + b * other.mean_image_[p];
  count_ += other.count_;
}

ClassAggregate ClassAggregator::result() const {
  if (count_ == 0) throw ContractError("aggregate has no samples");
  ClassAggregate out;
  out.class_index = class_index_;
  out.sample_count = count_;
  out.average_size = average_box_;
  out.context = context_;
  std::vector<float> values(mean_map_.size());
  std::transform(mean_map_.begin(), mean_map_.end(), values.begin(),
                 [](double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); });
  out.mean_map = Raster(width_, height_, std::move(values));
  if (with_image_) {
    std::vector<std::uint8_t> px(mean_image_.size());
    std::transform(mean_image_.begin(), mean_image_.end(), px.begin(),
                   [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); });
    out.mean_image = Image(width_, height_, std::move(px));
  }
  return out;
}

std::array<std::vector<std::size_t>, 3> scale_bins(std::span<const BBox> boxes) {
  const std::size_t n = boxes.size();
  if (n < 3) throw ContractError("scale bins need at least 3 detections, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return boxes[a].area() < boxes[b].area(); });
  const auto rank = [n](double q) { return static_cast<std::size_t>(std::lround(q * static_cast<double>(n))); };
  const std::size_t cut_small = rank(0.3);
  const std::size_t cut_medium = rank(0.7);
  std::array<std::vector<std::size_t>, 3> bins;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t bin = r < cut_small ? 0 : (r < cut_medium ? 1 : 2);
    bins[bin].push_back(order[r]);
  }
  return bins;
}

}  // namespace drise
