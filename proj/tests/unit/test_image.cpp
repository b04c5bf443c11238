// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "drise/error.hpp"
#include "drise/image.hpp"
#include "test_support.hpp"

namespace drise {
namespace {

Raster ramp(int w, int h) {
  Raster r(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) r.at(x, y) = static_cast<float>(y * w + x + 1);
  return r;
}

TEST(Crop, FullRegionIsIdentity) {
  const Raster r = ramp(5, 4);
  EXPECT_EQ(crop(r, {0, 0, 5, 4}, true), r);
  EXPECT_EQ(crop(r, {0, 0, 5, 4}, false), r);
}

TEST(Crop, SinglePixelAtOrigin) {
  const Raster c = crop(ramp(5, 4), {0, 0, 1, 1}, true);
  ASSERT_EQ(c.width(), 1);
  ASSERT_EQ(c.height(), 1);
  EXPECT_EQ(c.at(0, 0), 1.0f);
}

TEST(Crop, UnclampedRegionIsZeroPadded) {
  const Raster r = ramp(3, 3);
  // Region x in [-1, 2), y in [1, 4): one column and one row outside.
  const Raster c = crop(r, {-1, 1, 2, 4}, false);
  const Raster expect(3, 3, std::vector<float>{0, 4, 5, 0, 7, 8, 0, 0, 0});
  EXPECT_EQ(c, expect);
}

TEST(Crop, ClampedRegionIsIntersected) {
  const Raster c = crop(ramp(3, 3), {-1, 1, 2, 4}, true);
  EXPECT_EQ(c, Raster(2, 2, std::vector<float>{4, 5, 7, 8}));
}

TEST(Crop, EmptyResultThrows) {
  EXPECT_THROW(crop(ramp(3, 3), {5, 5, 8, 8}, true), ContractError);
  EXPECT_THROW(crop(ramp(3, 3), {1, 1, 1, 2}, false), ContractError);
}

TEST(Crop, ImageCropCopiesPixels) {
  Image img(4, 4);
  img.set(2, 1, {9, 8, 7});
  const Image c = crop(img, {2, 1, 4, 3}, true);
  EXPECT_EQ(c.at(0, 0), (Rgb{9, 8, 7}));
  EXPECT_EQ(c.at(1, 1), (Rgb{0, 0, 0}));
}

TEST(Resize, ConstantStaysConstant) {
  const Raster r(5, 3, 7.0f);
  for (auto [w, h] : {std::pair{1, 1}, std::pair{10, 6}, std::pair{3, 17}}) {
    const Raster out = resize_bilinear(r, w, h);
    for (float v : out.values()) EXPECT_EQ(v, 7.0f);
  }
}

TEST(Resize, IdentitySize) {
  const Raster r = ramp(6, 4);
  EXPECT_EQ(resize_bilinear(r, 6, 4), r);
}

TEST(Resize, CheckerboardMatchesHandFormula) {
  const Raster src(2, 2, std::vector<float>{1, 0, 0, 1});
  const Raster out = resize_bilinear(src, 4, 4);
  // Half-pixel centers: destination d samples source (d + 0.5) / 2 - 0.5, clamped to [0, 1].
  auto coord = [](int d) { return std::clamp((d + 0.5) / 2.0 - 0.5, 0.0, 1.0); };
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double u = coord(x), v = coord(y);
      const double expect = (1 - u) * (1 - v) * 1 + u * v * 1;
      EXPECT_NEAR(out.at(x, y), expect, 1e-6) << x << "," << y;
    }
  }
}

TEST(Resize, ImageRoundsChannels) {
  Image img(2, 1);
  img.set(0, 0, {0, 0, 0});
  img.set(1, 0, {255, 100, 3});
  const Image out = resize_bilinear(img, 4, 1);
  // Columns sample source x = 0, 0.25, 0.75, 1.
  EXPECT_EQ(out.at(0, 0), (Rgb{0, 0, 0}));
  EXPECT_EQ(out.at(1, 0), (Rgb{64, 25, 1}));
  EXPECT_EQ(out.at(2, 0), (Rgb{191, 75, 2}));
  EXPECT_EQ(out.at(3, 0), (Rgb{255, 100, 3}));
}

TEST(ResizeProperty, OutputStaysWithinInputRange) {
  test::for_all(100, 21, [](auto& rng, int) {
    const int w = test::uniform_int(rng, 1, 9), h = test::uniform_int(rng, 1, 9);
    Raster r(w, h);
    for (float& v : r.values()) v = static_cast<float>(test::uniform(rng, -5, 5));
    const auto [lo, hi] = std::minmax_element(r.values().begin(), r.values().end());
    const Raster out = resize_bilinear(r, test::uniform_int(rng, 1, 20), test::uniform_int(rng, 1, 20));
    for (float v : out.values()) {
      EXPECT_GE(v, *lo - 1e-5f);
      EXPECT_LE(v, *hi + 1e-5f);
    }
  });
}

TEST(Raster, ArgmaxTakesFirstMaximum) {
  const Raster r(3, 2, std::vector<float>{0, 5, 1, 5, 0, 0});
  EXPECT_EQ(r.argmax(), 1u);
  EXPECT_EQ(r.max_value(), 5.0f);
}

TEST(Raster, NormalizeByMax) {
  const Raster r(2, 1, std::vector<float>{2, 4});
  EXPECT_EQ(normalize_by_max(r), Raster(2, 1, std::vector<float>{0.5f, 1.0f}));
  const Raster zero(2, 2, 0.0f);
  EXPECT_EQ(normalize_by_max(zero), zero);
}

TEST(Image, RejectsBadDimensions) {
  EXPECT_THROW(Image(0, 3), ContractError);
  EXPECT_THROW(Image(2, 2, std::vector<std::uint8_t>(5)), ContractError);
}

TEST(RoundToPixels, RoundsEachCorner) {
  const PixelRect r = round_to_pixels({0.4, 1.6, 3.5, 4.2});
  EXPECT_EQ(r.x, 0);
  EXPECT_EQ(r.y, 2);
  EXPECT_EQ(r.width, 4);
  EXPECT_EQ(r.height, 2);
}

}  // namespace
}  // namespace drise
