// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <memory>

#include "drise/engine.hpp"
#include "drise/error.hpp"
#include "drise/synthetic.hpp"
#include "test_support.hpp"

namespace drise {
namespace {

Image square_image(BBox box, Rgb color, int size = 64) {
  Image img = make_background(1, size, size);
  for (int y = static_cast<int>(box.y1); y < static_cast<int>(box.y2); ++y)
    for (int x = static_cast<int>(box.x1); x < static_cast<int>(box.x2); ++x) img.set(x, y, color);
  return img;
}

ExplainRequest request(const Image& img, std::vector<TargetDetection> targets, std::size_t masks) {
  ExplainRequest r;
  r.image = img;
  r.targets = std::move(targets);
  r.mask_spec.count = masks;
  return r;
}

/// Counts calls; fails after `fail_after` calls.
class FlakyDetector : public Detector {
 public:
  explicit FlakyDetector(std::size_t fail_after) : fail_after_(fail_after) { hs_.class_names = {"a"}; }
  const Handshake& handshake() const override { return hs_; }
  std::vector<DetectionVector> infer(const Image&) override {
    if (calls_++ >= fail_after_) throw ProtocolError("detector went away");
    return {};
  }

 private:
  Handshake hs_;
  std::size_t fail_after_;
  std::size_t calls_ = 0;
};

TEST(Explain, ConstantDetectorGivesFlatMap) {
  const double c = 0.6;
  test::ConstantDetector det({{{0, 0, 32, 32}, c, {1, 0, 0}}});
  const TargetDetection target{{0, 0, 32, 32}, 0, 3};
  const ExplainResult res = explain(request(Image(32, 32), {target}, 2000), det);
  for (double w : res.weights.row(0)) EXPECT_DOUBLE_EQ(w, c);
  const auto [lo, hi] = std::minmax_element(res.maps[0].values.values().begin(), res.maps[0].values.values().end());
  EXPECT_LT(*hi - *lo, 0.1 * c);
  EXPECT_NEAR(*hi, c, 1e-4);  // exposure normalization: mean weight of masks keeping the pixel
}

TEST(Explain, SumNormalizationIsFlatUpToSamplingNoise) {
  const double c = 0.5;
  test::ConstantDetector det({{{0, 0, 32, 32}, c, {1, 0, 0}}});
  ExplainRequest req = request(Image(32, 32), {{{0, 0, 32, 32}, 0, 3}}, 2000);
  req.normalization = Normalization::kSum;
  const Raster map = explain(req, det).maps[0].values;
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  // Expected value c * p * N everywhere.
  const double expect = c * 0.5 * 2000;
  EXPECT_LT(*hi - *lo, 0.1 * expect);
  EXPECT_NEAR(*lo, expect, 0.1 * expect);
}

TEST(Explain, CallsDetectorExactlyNTimesForAnyTargetCount) {
  test::ConstantDetector det({});
  std::vector<TargetDetection> targets(5, TargetDetection{{0, 0, 4, 4}, 1, 3});
  const ExplainResult res = explain(request(Image(32, 32), targets, 123), det);
  EXPECT_EQ(det.calls, 123u);
  EXPECT_EQ(res.detector_calls, 123u);
  EXPECT_EQ(res.maps.size(), 5u);
  EXPECT_EQ(res.weights.targets(), 5u);
  EXPECT_EQ(res.weights.masks(), 123u);
}

TEST(Explain, ArgmaxFallsInsideSquare) {
  const BBox box{36, 10, 54, 28};
  const Image img = square_image(box, {0, 255, 0});
  RectangleDetector det;
  const ExplainResult res = explain(request(img, {{box, 1, 3}}, 1000), det);
  const Raster& map = res.maps[0].values;
  const std::size_t am = map.argmax();
  EXPECT_TRUE(box.contains(static_cast<double>(am % 64) + 0.5, static_cast<double>(am / 64) + 0.5));
}

TEST(Explain, DefaultSpecRunsEndToEnd) {
  const BBox box{8, 8, 28, 28};
  RectangleDetector det;
  const ExplainResult res = explain(request(square_image(box, {255, 0, 0}), {{box, 0, 3}}, 5000), det);
  EXPECT_EQ(res.maps[0].meta.mask_count, 5000u);
  EXPECT_EQ(res.maps[0].meta.grid_h, 16);
  EXPECT_GT(res.maps[0].values.max_value(), 0.0f);
}

TEST(Explain, ParallelismDoesNotChangeBits) {
  const BBox box{20, 20, 40, 44};
  const Image img = square_image(box, {255, 0, 255});
  auto shared = std::make_shared<RectangleDetector>();
  ExplainRequest req = request(img, {{box, 2, 3}, {{0, 0, 10, 10}, 0, 3}}, 700);
  req.batch_size = 37;
  const ExplainResult serial = explain(req, DetectorPool::shared(shared, 1));
  req.parallelism = 8;
  req.batch_size = 5;
  const ExplainResult parallel = explain(req, DetectorPool::shared(shared, 8));
  ASSERT_EQ(serial.maps.size(), parallel.maps.size());
  for (std::size_t t = 0; t < serial.maps.size(); ++t) EXPECT_EQ(serial.maps[t].values, parallel.maps[t].values);
  EXPECT_EQ(serial.weights, parallel.weights);
}

TEST(Explain, AccumulateSaliencyReproducesMaps) {
  const BBox box{10, 30, 30, 50};
  RectangleDetector det;
  const ExplainRequest req = request(square_image(box, {255, 0, 0}), {{box, 0, 3}}, 300);
  const ExplainResult res = explain(req, det);
  const MaskGenerator gen(req.mask_spec, 64, 64);
  const auto again = accumulate_saliency(gen, res.weights, Normalization::kExposure);
  EXPECT_EQ(again[0].values, res.maps[0].values);
}

TEST(Explain, ProgressReportsEveryBatch) {
  test::ConstantDetector det({});
  ExplainRequest req = request(Image(32, 32), {{{0, 0, 4, 4}, 0, 3}}, 100);
  req.batch_size = 30;
  std::vector<std::size_t> seen;
  req.progress = [&](std::size_t done, std::size_t total) {
    EXPECT_EQ(total, 100u);
    seen.push_back(done);
  };
  explain(req, det);
  EXPECT_EQ(seen, (std::vector<std::size_t>{30, 60, 90, 100}));
}

TEST(Explain, DetectorFailureAbortsWithProgress) {
  FlakyDetector det(45);
  ExplainRequest req = request(Image(32, 32), {{{0, 0, 4, 4}, 0, 1}}, 100);
  req.batch_size = 20;
  try {
    explain(req, det);
    FAIL() << "expected ExplainAborted";
  } catch (const ExplainAborted& e) {
    EXPECT_EQ(e.masks_completed(), 45u);
    EXPECT_EQ(e.masks_total(), 100u);
  }
}

TEST(Explain, InvalidRequestsThrowConfigError) {
  test::ConstantDetector det({});
  EXPECT_THROW(explain(request(Image(20, 64), {{{0, 0, 4, 4}, 0, 3}}, 10), det), ConfigError);
  EXPECT_THROW(explain(request(Image(32, 32), {}, 10), det), ConfigError);
  EXPECT_THROW(explain(request(Image(32, 32), {{{0, 0, 4, 4}, 5, 3}}, 10), det), ConfigError);
  EXPECT_THROW(explain(request(Image(32, 32), {{{0, 0, 4, 4}, 0, 2}}, 10), det), ConfigError);
}

TEST(ExplainArbitrary, MatchesExplainOnSameTarget) {
  const BBox box{12, 12, 30, 30};
  const Image img = square_image(box, {0, 255, 0});
  auto det = std::make_shared<RectangleDetector>();
  const DetectorPool pool = DetectorPool::shared(det, 1);
  MaskSpec spec;
  spec.count = 200;
  const SaliencyMap a = explain_arbitrary(img, box, 1, spec, {}, pool);
  ExplainRequest req = request(img, {{box, 1, 3}}, 200);
  EXPECT_EQ(a.values, explain(req, pool).maps[0].values);
}

TEST(ExplainArbitrary, EmptyBackgroundGivesLowMap) {
  auto det = std::make_shared<RectangleDetector>();
  MaskSpec spec;
  spec.count = 300;
  const ExplainResult res =
      explain(request(make_background(4, 64, 64), {{{20, 20, 40, 40}, 0, 3}}, 300), DetectorPool::shared(det, 1));
  EXPECT_LT(*std::max_element(res.weights.row(0).begin(), res.weights.row(0).end()), 0.05);
}

TEST(SaliencyDifference, Cases) {
  const Raster a(2, 2, std::vector<float>{0, 2, 4, 1});
  EXPECT_EQ(saliency_difference(a, a), Raster(2, 2, 0.0f));
  EXPECT_EQ(saliency_difference(Raster(2, 2, 1.0f), Raster(2, 2, 0.0f)), Raster(2, 2, 1.0f));
  const Raster b(2, 2, std::vector<float>{1, 0, 0, 0});
  // a / 4 - b / 1
  EXPECT_EQ(saliency_difference(a, b), Raster(2, 2, std::vector<float>{-1, 0.5f, 1, 0.25f}));
  EXPECT_THROW(saliency_difference(a, Raster(3, 2, 0.0f)), ContractError);
}

TEST(OcclusionOracle, ConstantDetectorGivesZeros) {
  test::ConstantDetector det({{{0, 0, 8, 8}, 1, {1, 0, 0}}});
  const Raster o = occlusion_oracle(Image(16, 16), {{0, 0, 8, 8}, 0, 3}, det, 4, {});
  EXPECT_EQ(o, Raster(4, 4, 0.0f));
}

TEST(OcclusionOracle, NonzeroOnlyOnRectangleCells) {
  const BBox box{16, 20, 40, 44};
  const Image img = square_image(box, {255, 0, 0});
  RectangleDetector det;
  const Raster o = occlusion_oracle(img, {box, 0, 3}, det, 4, {});
  ASSERT_EQ(o.width(), 16);
  for (int cy = 0; cy < 16; ++cy) {
    for (int cx = 0; cx < 16; ++cx) {
      const bool overlaps = cx * 4 < box.x2 && (cx + 1) * 4 > box.x1 && cy * 4 < box.y2 && (cy + 1) * 4 > box.y1;
      if (!overlaps) {
        EXPECT_EQ(o.at(cx, cy), 0.0f) << cx << "," << cy;
      }
    }
  }
  EXPECT_GT(o.max_value(), 0.0f);
}

TEST(OcclusionOracle, SingleCellImage) {
  const Image img(4, 4, Rgb{255, 0, 0});
  RectangleDetector det;
  const TargetDetection t{{0, 0, 4, 4}, 0, 3};
  const Raster o = occlusion_oracle(img, t, det, 4, {});
  ASSERT_EQ(o.size(), 1u);
  const double base = max_similarity(t.to_vector(), det.detect(img), {});
  const double occluded = max_similarity(t.to_vector(), det.detect(Image(4, 4)), {});
  EXPECT_NEAR(o.at(0, 0), base - occluded, 1e-6);
}

TEST(DownsampleMean, AveragesBlocksIncludingClippedEdges) {
  const Raster r(3, 2, std::vector<float>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(downsample_mean(r, 2), Raster(2, 1, std::vector<float>{3, 4.5f}));
}

TEST(Normalization, ParseAndPrint) {
  EXPECT_EQ(parse_normalization("exposure"), Normalization::kExposure);
  EXPECT_EQ(parse_normalization("sum"), Normalization::kSum);
  EXPECT_EQ(to_string(Normalization::kSum), "sum");
  EXPECT_THROW(parse_normalization("max"), ConfigError);
}

}  // namespace
}  // namespace drise
