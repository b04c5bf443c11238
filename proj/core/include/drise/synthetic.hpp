// SPDX-License-Identifier: Apache-2.0
#pragma once

// Built-in detectors that need no ML runtime. They make the whole pipeline testable
// with known ground truth: evidence for an object lives exactly in its pixels.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drise/detector.hpp"

namespace drise {

struct RectangleDetectorParams {
  std::vector<std::string> class_names{"red", "green", "magenta"};
  std::vector<Rgb> class_colors{{255, 0, 0}, {0, 255, 0}, {255, 0, 255}};
  /// Euclidean RGB distance within which a pixel matches a class color.
  double tolerance = 60.0;
  /// Components smaller than this many pixels are ignored.
  int min_area = 16;

  void validate() const;
};

/// Same classes, each color replaced by a uniformly random RGB value.
RectangleDetectorParams randomize_colors(RectangleDetectorParams params, std::uint64_t seed);

/// Finds 4-connected regions of pixels matching a class color.
///   bbox       tight box of the region
///   objectness region area / bbox area
///   scores[c]  max(0, 1 - |mean color - color_c| / (2 * tolerance))
/// Detections are reported in row-major discovery order. Pure and thread safe.
class RectangleDetector : public Detector {
 public:
  explicit RectangleDetector(RectangleDetectorParams params = {});

  const Handshake& handshake() const override { return handshake_; }
  std::vector<DetectionVector> infer(const Image& image) override { return detect(image); }
  bool thread_safe() const noexcept override { return true; }

  std::vector<DetectionVector> detect(const Image& image) const;
  const RectangleDetectorParams& params() const noexcept { return params_; }

 private:
  RectangleDetectorParams params_;
  Handshake handshake_;
};

struct BiasedDetectorParams {
  RectangleDetectorParams base;
  Rgb marker_color{0, 0, 255};
  int marker_radius = 6;
  double marker_tolerance = 120.0;
  /// Class reported for marker-triggered detections (the biased category).
  std::size_t trigger_class = 0;
};

/// Rectangle detector with an implanted bias: every marker-colored blob also yields
/// a high-objectness detection of `trigger_class`, a 4r x 4r box centered on the
/// blob, whether or not a real object is present.
class BiasedDetector : public Detector {
 public:
  explicit BiasedDetector(BiasedDetectorParams params = {});

  const Handshake& handshake() const override { return handshake_; }
  std::vector<DetectionVector> infer(const Image& image) override { return detect(image); }
  bool thread_safe() const noexcept override { return true; }

  std::vector<DetectionVector> detect(const Image& image) const;

 private:
  BiasedDetectorParams params_;
  RectangleDetector base_;
  Handshake handshake_;
};

/// Returns the same configured detections for every image.
class EchoDetector : public Detector {
 public:
  EchoDetector(Handshake handshake, std::vector<DetectionVector> detections);

  /// Reads {"class_names":[...], "has_objectness":b, "adapter_info":s,
  ///        "detections":[{"bbox":[x1,y1,x2,y2],"objectness":o,"scores":[...]}]}.
  static EchoDetector from_json_file(const std::filesystem::path& path);

  const Handshake& handshake() const override { return handshake_; }
  std::vector<DetectionVector> infer(const Image&) override { return detections_; }
  bool thread_safe() const noexcept override { return true; }

 private:
  Handshake handshake_;
  std::vector<DetectionVector> detections_;
};

/// Dark textured background, channels uniform in [30, 100]; matches no default class color.
Image make_background(std::uint64_t seed, int width, int height);

struct RectangleFixture {
  Image image;
  BBox box;
  std::size_t class_index = 0;
};

/// One solid square of a random class color (side 14..24 px at 64 px, scaled with
/// image size) on a textured background, at least 4 px from the border.
RectangleFixture make_rectangle_fixture(std::uint64_t seed, int size = 64, const RectangleDetectorParams& params = {});

}  // namespace drise
