// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drise/detector.hpp"
#include "drise/image.hpp"
#include "drise/masking.hpp"
#include "drise/similarity.hpp"

namespace drise {

/// How the weighted mask sum is turned into the reported map.
enum class Normalization {
  /// sum_i w_i M_i / sum_i M_i per pixel: the mean weight of masks that kept the
  /// pixel. Removes the border bias introduced by cropping.
  kExposure,
  /// sum_i w_i M_i, unscaled.
  kSum,
};

std::string to_string(Normalization n);
/// Accepts "exposure" or "sum"; throws ConfigError otherwise.
Normalization parse_normalization(const std::string& name);

struct SaliencyMeta {
  std::size_t mask_count = 0;
  double mask_prob = 0.0;
  int grid_h = 0;
  int grid_w = 0;
  std::uint64_t seed = 0;
  Normalization normalization = Normalization::kExposure;
  std::string interpolation;
};

struct SaliencyMap {
  Raster values;
  SaliencyMeta meta;

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
};

struct ExplainRequest {
  Image image;
  std::vector<TargetDetection> targets;
  MaskSpec mask_spec;
  SimilarityConfig sim_cfg;
  Normalization normalization = Normalization::kExposure;
  /// Upper bound on concurrent detector calls; also capped by the pool size.
  std::size_t parallelism = 1;
  /// Masks rendered and queried per round before their weighted sum is folded in.
  std::size_t batch_size = 64;
  /// Called after every batch with (masks done, masks total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Wall-clock seconds. Worker stages are summed over workers.
struct StageTiming {
  double masking = 0.0;
  double inference = 0.0;
  double weighting = 0.0;
  double accumulation = 0.0;
  double total = 0.0;
};

struct ExplainResult {
  std::vector<SaliencyMap> maps;
  /// T x N, w[t][i] = best similarity of target t on masked image i.
  WeightMatrix weights;
  StageTiming timing;
  std::size_t detector_calls = 0;
};

/// Runs the detector once per mask on the masked image, weighs each mask by the
/// best similarity of any proposal to each target, and sums the weighted masks.
/// The detector is called exactly N times for any number of targets. The result
/// depends only on the request and the detector responses: any parallelism yields
/// bit-identical maps.
///
/// Throws ConfigError for an invalid request or a grid that does not cover the image,
/// and ExplainAborted if the detector fails.
ExplainResult explain(const ExplainRequest& request, const DetectorPool& pool);
ExplainResult explain(const ExplainRequest& request, Detector& detector);

/// Saliency for one arbitrary box and class, e.g. an object the detector missed.
SaliencyMap explain_arbitrary(const Image& image, const BBox& box, std::size_t class_index, const MaskSpec& spec,
                              const SimilarityConfig& cfg, const DetectorPool& pool,
                              Normalization normalization = Normalization::kExposure);

/// Rebuilds the maps from masks and a weight matrix, summing in mask order exactly
/// as explain() does.
std::vector<SaliencyMap> accumulate_saliency(const MaskGenerator& masks, const WeightMatrix& weights,
                                             Normalization normalization);

/// Each map is divided by its own maximum first; the result lies in [-1, 1].
Raster saliency_difference(const Raster& a, const Raster& b);

/// Exhaustive occlusion: for every `cell` x `cell` block (the last row and column
/// may be clipped), black out only that block and record
/// max(0, s_base - max_similarity(target, f(occluded))). The result has
/// ceil(W / cell) x ceil(H / cell) entries.
Raster occlusion_oracle(const Image& image, const TargetDetection& target, Detector& detector, int cell,
                        const SimilarityConfig& cfg);

/// Mean of each `cell` x `cell` block; the result has ceil(W / cell) x ceil(H / cell) entries.
Raster downsample_mean(const Raster& raster, int cell);

}  // namespace drise
