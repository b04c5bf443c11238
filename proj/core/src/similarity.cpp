// SPDX-License-Identifier: Apache-2.0
#include "drise/similarity.hpp"

#include <algorithm>
#include <string>

#include "drise/error.hpp"

namespace drise {

double similarity(const DetectionVector& target, const DetectionVector& proposal, const SimilarityConfig& cfg) {
  if (target.class_count() != proposal.class_count()) {
    throw ContractError("similarity: target has " + std::to_string(target.class_count()) + " classes, proposal " +
                        std::to_string(proposal.class_count()));
  }
  const double localization = iou(target.bbox, proposal.bbox);
  if (localization == 0.0) return 0.0;
  const double classification = std::max(0.0, cosine_similarity(target.scores, proposal.scores));
  const double objectness = cfg.use_objectness ? proposal.objectness : 1.0;
  return localization * classification * objectness;
}

double max_similarity(const DetectionVector& target, std::span<const DetectionVector> proposals,
                      const SimilarityConfig& cfg) {
  double best = 0.0;
  for (const DetectionVector& p : proposals) best = std::max(best, similarity(target, p, cfg));
  return best;
}

WeightMatrix pairwise_weights(std::span<const DetectionVector> targets,
                              std::span<const std::vector<DetectionVector>> proposal_sets,
                              const SimilarityConfig& cfg) {
  WeightMatrix w(targets.size(), proposal_sets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t i = 0; i < proposal_sets.size(); ++i) {
      w.at(t, i) = max_similarity(targets[t], proposal_sets[i], cfg);
    }
  }
  return w;
}

}  // namespace drise
