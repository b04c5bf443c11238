// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drise/types.hpp"

namespace drise {

struct SimilarityConfig {
  /// Multiply by the proposal's objectness. Turn off for detectors without an objectness head.
  bool use_objectness = true;
};

/// Localization x classification x objectness agreement between a target and a
/// proposal: iou(boxes) * cosine(scores) * (objectness of the proposal, if enabled).
/// Any factor at zero zeroes the product. Throws ContractError on class count mismatch.
double similarity(const DetectionVector& target, const DetectionVector& proposal, const SimilarityConfig& cfg);

/// Best similarity over all proposals; 0 for an empty list.
double max_similarity(const DetectionVector& target, std::span<const DetectionVector> proposals,
                      const SimilarityConfig& cfg);

/// Dense T x N matrix, row-major by target.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t targets, std::size_t masks) : targets_(targets), masks_(masks), w_(targets * masks, 0.0) {}

  std::size_t targets() const noexcept { return targets_; }
  std::size_t masks() const noexcept { return masks_; }

  double& at(std::size_t t, std::size_t i) noexcept { return w_[t * masks_ + i]; }
  double at(std::size_t t, std::size_t i) const noexcept { return w_[t * masks_ + i]; }

  std::span<const double> row(std::size_t t) const noexcept { return {w_.data() + t * masks_, masks_}; }

  bool operator==(const WeightMatrix&) const = default;

 private:
  std::size_t targets_ = 0;
  std::size_t masks_ = 0;
  std::vector<double> w_;
};

/// w[t][i] = max_similarity(targets[t], proposal_sets[i]).
WeightMatrix pairwise_weights(std::span<const DetectionVector> targets,
                              std::span<const std::vector<DetectionVector>> proposal_sets,
                              const SimilarityConfig& cfg);

}  // namespace drise
