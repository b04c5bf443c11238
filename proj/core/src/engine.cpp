// SPDX-License-Identifier: Apache-2.0
#include "drise/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "drise/error.hpp"

namespace drise {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Sums weighted masks per pixel in the order they are added, in double precision.
class Accumulator {
 public:
  Accumulator(std::size_t targets, std::size_t pixels) : raw_(targets, std::vector<double>(pixels, 0.0)), exposure_(pixels, 0.0) {}

  void add(const Raster& mask, const WeightMatrix& weights, std::size_t mask_index) {
    const auto m = mask.values();
    for (std::size_t p = 0; p < m.size(); ++p) exposure_[p] += m[p];
    for (std::size_t t = 0; t < raw_.size(); ++t) {
      const double w = weights.at(t, mask_index);
      if (w == 0.0) continue;
      std::vector<double>& acc = raw_[t];
      for (std::size_t p = 0; p < m.size(); ++p) acc[p] += w * m[p];
    }
  }

  std::vector<SaliencyMap> finish(int width, int height, Normalization normalization, const SaliencyMeta& meta) const {
    std::vector<SaliencyMap> maps;
    maps.reserve(raw_.size());
    for (const std::vector<double>& acc : raw_) {
      SaliencyMap map;
      map.meta = meta;
      map.values = Raster(width, height);
      auto out = map.values.values();
      for (std::size_t p = 0; p < acc.size(); ++p) {
        double v = acc[p];
        if (normalization == Normalization::kExposure) v = exposure_[p] > 0.0 ? v / exposure_[p] : 0.0;
        out[p] = static_cast<float>(v);
      }
      maps.push_back(std::move(map));
    }
    return maps;
  }

 private:
  std::vector<std::vector<double>> raw_;
  std::vector<double> exposure_;
};

SaliencyMeta make_meta(const MaskSpec& spec, Normalization normalization) {
  SaliencyMeta meta;
  meta.mask_count = spec.count;
  meta.mask_prob = spec.prob;
  meta.grid_h = spec.grid_h;
  meta.grid_w = spec.grid_w;
  meta.seed = spec.seed;
  meta.normalization = normalization;
  meta.interpolation = mask_interpolation_convention();
  return meta;
}

struct AtomicSeconds {
  std::atomic<std::int64_t> ns{0};
  void add(Clock::time_point start) {
    ns += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  }
  double seconds() const { return static_cast<double>(ns.load()) * 1e-9; }
};

}  // namespace

std::string to_string(Normalization n) { return n == Normalization::kExposure ? "exposure" : "sum"; }

Normalization parse_normalization(const std::string& name) {
  if (name == "exposure") return Normalization::kExposure;
  if (name == "sum") return Normalization::kSum;
  throw ConfigError("unknown normalization '" + name + "' (expected exposure or sum)");
}

ExplainResult explain(const ExplainRequest& request, const DetectorPool& pool) {
  const auto t_start = Clock::now();
  if (pool.size() == 0) throw ConfigError("no detector available");
  if (request.targets.empty()) throw ConfigError("nothing to explain: no targets");
  if (request.image.empty()) throw ConfigError("empty image");

  const Handshake& hs = pool.handshake();
  const BBox frame{0.0, 0.0, static_cast<double>(request.image.width()), static_cast<double>(request.image.height())};
  std::vector<DetectionVector> targets;
  for (const TargetDetection& t : request.targets) {
    if (t.class_count != hs.class_count()) {
      throw ConfigError("target declares " + std::to_string(t.class_count) + " classes but the detector reports " +
                        std::to_string(hs.class_count()));
    }
    if (t.class_index >= t.class_count) {
      throw ConfigError("target class " + std::to_string(t.class_index) + " outside the detector's " +
                        std::to_string(t.class_count) + " classes");
    }
    if (!t.bbox.valid() || intersection_area(t.bbox, frame) <= 0.0) {
      throw ConfigError("target box does not intersect the image");
    }
    targets.push_back(t.to_vector());
  }

  const MaskGenerator masks(request.mask_spec, request.image.width(), request.image.height());
  const std::size_t n = masks.size();
  const std::size_t workers = std::clamp<std::size_t>(std::min(request.parallelism, pool.size()), 1, n);
  const std::size_t batch = std::max<std::size_t>({request.batch_size, workers, 1});

  ExplainResult result;
  result.weights = WeightMatrix(targets.size(), n);
  Accumulator acc(targets.size(), request.image.pixel_count());

  AtomicSeconds t_mask, t_infer, t_weight;
  double t_accumulate = 0.0;
  std::vector<Raster> block(batch);

  auto process = [&](std::size_t i, Detector& detector, std::size_t slot) {
    auto t0 = Clock::now();
    Mask mask = masks[i];
    const Image masked = apply_mask(request.image, mask);
    t_mask.add(t0);
    t0 = Clock::now();
    const std::vector<DetectionVector> proposals = detector.infer(masked);
    t_infer.add(t0);
    t0 = Clock::now();
    for (std::size_t t = 0; t < targets.size(); ++t) {
      result.weights.at(t, i) = max_similarity(targets[t], proposals, request.sim_cfg);
    }
    t_weight.add(t0);
    block[slot] = std::move(mask.values);
  };

  for (std::size_t begin = 0; begin < n; begin += batch) {
    const std::size_t count = std::min(batch, n - begin);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto run = [&](std::size_t w) {
      Detector& detector = pool[w];
      for (;;) {
        if (stop.load()) return;
        const std::size_t k = next.fetch_add(1);
        if (k >= count) return;
        try {
          process(begin + k, detector, k);
          ++done;
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          stop = true;
          return;
        }
      }
    };

    if (workers == 1) {
      run(0);
    } else {
      std::vector<std::jthread> threads;
      threads.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    }

    if (failure) {
      try {
        std::rethrow_exception(failure);
      } catch (const ExplainAborted&) {
        throw;
      } catch (const std::exception& e) {
        throw ExplainAborted(std::string("detector failed: ") + e.what(), begin + done.load(), n);
      }
    }

    const auto t0 = Clock::now();
    for (std::size_t k = 0; k < count; ++k) acc.add(block[k], result.weights, begin + k);
    t_accumulate += seconds_since(t0);
    result.detector_calls += count;
    if (request.progress) request.progress(begin + count, n);
  }

  const auto t0 = Clock::now();
  result.maps = acc.finish(request.image.width(), request.image.height(), request.normalization,
                           make_meta(request.mask_spec, request.normalization));
  t_accumulate += seconds_since(t0);

  result.timing.masking = t_mask.seconds();
  result.timing.inference = t_infer.seconds();
  result.timing.weighting = t_weight.seconds();
  result.timing.accumulation = t_accumulate;
  result.timing.total = seconds_since(t_start);
  return result;
}

ExplainResult explain(const ExplainRequest& request, Detector& detector) {
  // Non-owning: the caller keeps the detector alive for the duration of the call.
  std::shared_ptr<Detector> alias(std::shared_ptr<Detector>{}, &detector);
  return explain(request, DetectorPool({alias}));
}

SaliencyMap explain_arbitrary(const Image& image, const BBox& box, std::size_t class_index, const MaskSpec& spec,
                              const SimilarityConfig& cfg, const DetectorPool& pool, Normalization normalization) {
  const std::size_t classes = pool.handshake().class_count();
  if (class_index >= classes) {
    throw ConfigError("class index " + std::to_string(class_index) + " outside the detector's " +
                      std::to_string(classes) + " classes");
  }
  ExplainRequest req;
  req.image = image;
  req.targets = {TargetDetection{box, class_index, classes}};
  req.mask_spec = spec;
  req.sim_cfg = cfg;
  req.normalization = normalization;
  req.parallelism = pool.size();
  return std::move(explain(req, pool).maps.front());
}

std::vector<SaliencyMap> accumulate_saliency(const MaskGenerator& masks, const WeightMatrix& weights,
                                             Normalization normalization) {
  if (weights.masks() != masks.size()) throw ContractError("weight matrix and mask count disagree");
  Accumulator acc(weights.targets(), static_cast<std::size_t>(masks.width()) * masks.height());
  for (std::size_t i = 0; i < masks.size(); ++i) acc.add(masks[i].values, weights, i);
  return acc.finish(masks.width(), masks.height(), normalization, make_meta(masks.spec(), normalization));
}

Raster saliency_difference(const Raster& a, const Raster& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw ContractError("saliency maps differ in size");
  const Raster na = normalize_by_max(a);
  const Raster nb = normalize_by_max(b);
  Raster out(a.width(), a.height());
  auto o = out.values();
  for (std::size_t p = 0; p < o.size(); ++p) o[p] = na.values()[p] - nb.values()[p];
  return out;
}

Raster occlusion_oracle(const Image& image, const TargetDetection& target, Detector& detector, int cell,
                        const SimilarityConfig& cfg) {
  if (cell < 1) throw ContractError("occlusion cell must be at least 1 px");
  const DetectionVector t = target.to_vector();
  const double base = max_similarity(t, detector.infer(image), cfg);
  const int gw = (image.width() + cell - 1) / cell;
  const int gh = (image.height() + cell - 1) / cell;
  Raster out(gw, gh);
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      Image occluded = image;
      const int x_end = std::min(image.width(), (gx + 1) * cell);
      const int y_end = std::min(image.height(), (gy + 1) * cell);
      for (int y = gy * cell; y < y_end; ++y)
        for (int x = gx * cell; x < x_end; ++x) occluded.set(x, y, Rgb{});
      const double s = max_similarity(t, detector.infer(occluded), cfg);
      out.at(gx, gy) = static_cast<float>(std::max(0.0, base - s));
    }
  }
  return out;
}

Raster downsample_mean(const Raster& raster, int cell) {
  if (cell < 1) throw ContractError("cell must be at least 1 px");
  const int gw = (raster.width() + cell - 1) / cell;
  const int gh = (raster.height() + cell - 1) / cell;
  Raster out(gw, gh);
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      double sum = 0.0;
      int count = 0;
      for (int y = gy * cell; y < std::min(raster.height(), (gy + 1) * cell); ++y)
        for (int x = gx * cell; x < std::min(raster.width(), (gx + 1) * cell); ++x) {
          sum += raster.at(x, y);
          ++count;
        }
      out.at(gx, gy) = static_cast<float>(sum / count);
    }
  }
  return out;
}

}  // namespace drise
