// SPDX-License-Identifier: Apache-2.0
#include "drise_cli/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "drise/aggregate.hpp"
#include "drise/bias.hpp"
#include "drise/coco.hpp"
#include "drise/engine.hpp"
#include "drise/error.hpp"
#include "drise/metrics.hpp"
#include "drise/png_io.hpp"
#include "drise/protocol.hpp"
#include "drise/raster_io.hpp"
#include "drise/subprocess.hpp"
#include "drise/synthetic.hpp"
#include "drise_cli/heatmap.hpp"

namespace drise::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::shared_ptr<spdlog::logger> logger() {
  if (auto existing = spdlog::get("drise")) return existing;
  auto log = spdlog::stderr_color_mt("drise");
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("DRISE_LOG");
  const std::string level = env ? env : "warn";
  if (level == "error") {
    log->set_level(spdlog::level::err);
  } else if (level == "info") {
    log->set_level(spdlog::level::info);
  } else if (level == "debug") {
    log->set_level(spdlog::level::debug);
  } else {
    log->set_level(spdlog::level::warn);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct DetectorOptions {
  bool builtin = false;
  std::string synth_mode = "rectangle";
  std::optional<std::uint64_t> random_colors_seed;
  std::string command;
  std::size_t procs = 1;
  bool record_transcript = false;
  std::string objectness = "auto";
  double handshake_timeout_s = 60.0;
  double request_timeout_s = 120.0;

  bool configured() const { return builtin || !command.empty(); }
};

void add_detector_options(CLI::App* cmd, DetectorOptions& o) {
  cmd->add_flag("--builtin-synth", o.builtin, "Use the built-in synthetic detector in-process");
  cmd->add_option("--synth-mode", o.synth_mode, "Built-in detector: rectangle or biased")
      ->check(CLI::IsMember({"rectangle", "biased"}));
  cmd->add_option("--synth-random-colors", o.random_colors_seed,
                  "Randomize the built-in detector's class colors with this seed");
  cmd->add_option("--detector", o.command, "Command line of an external detector speaking the stdio protocol");
  cmd->add_option("--detector-procs", o.procs, "Concurrent detector sessions")->check(CLI::Range(1, 256));
  cmd->add_flag("--record-transcript", o.record_transcript,
                "Record the first external detector session to <out>/transcript.ndjson");
  cmd->add_option("--objectness", o.objectness, "Use the objectness factor: auto (from handshake), on, off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  cmd->add_option("--handshake-timeout", o.handshake_timeout_s, "Seconds to wait for the detector handshake");
  cmd->add_option("--request-timeout", o.request_timeout_s, "Seconds to wait for each detector response");
}

struct MaskOptions {
  std::size_t masks = 5000;
  double prob = 0.5;
  std::vector<int> grid{16, 16};
  std::uint64_t seed = 0;
  std::string normalization = "exposure";
  std::size_t batch_size = 64;

  MaskSpec spec() const {
    MaskSpec s;
    s.count = masks;
    s.prob = prob;
    s.grid_h = grid[0];
    s.grid_w = grid[1];
    s.seed = seed;
    return s;
  }
};

void add_mask_options(CLI::App* cmd, MaskOptions& o) {
  cmd->add_option("--masks", o.masks, "Number of random masks N")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
  cmd->add_option("--prob", o.prob, "Probability of keeping a grid cell")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--grid", o.grid, "Mask grid rows and columns")->expected(2)->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Mask seed");
  cmd->add_option("--normalization", o.normalization, "exposure (divide by mask coverage) or sum (raw weighted sum)")
      ->check(CLI::IsMember({"exposure", "sum"}));
  cmd->add_option("--batch-size", o.batch_size, "Masks per batch")->check(CLI::Range(1, 1 << 20));
}

ojson detector_json(const DetectorOptions& o) {
  ojson j;
  if (o.builtin) {
    j["builtin"] = o.synth_mode;
    if (o.random_colors_seed) j["random_colors_seed"] = *o.random_colors_seed;
  } else {
    j["command"] = o.command;
  }
  j["procs"] = o.procs;
  j["objectness"] = o.objectness;
  return j;
}

ojson mask_json(const MaskOptions& o) {
  return {{"masks", o.masks},         {"prob", o.prob},
          {"grid", o.grid},           {"seed", o.seed},
          {"normalization", o.normalization}, {"batch_size", o.batch_size}};
}

void print_config(const std::string& command, const ojson& config) {
  std::cerr << "drise " << command << " config: " << config.dump() << std::endl;
}

DetectorPool make_pool(const DetectorOptions& o, const fs::path& out_dir) {
  if (o.builtin == !o.command.empty()) throw ConfigError("choose exactly one of --builtin-synth and --detector");
  if (o.builtin) {
    RectangleDetectorParams params;
    if (o.random_colors_seed) params = randomize_colors(params, *o.random_colors_seed);
    std::shared_ptr<Detector> det;
    if (o.synth_mode == "biased") {
      BiasedDetectorParams bp;
      bp.base = params;
      det = std::make_shared<BiasedDetector>(bp);
    } else {
      det = std::make_shared<RectangleDetector>(params);
    }
    return DetectorPool::shared(det, o.procs);
  }
  const std::vector<std::string> argv = split_command_line(o.command);
  std::vector<std::shared_ptr<Detector>> members;
  for (std::size_t i = 0; i < o.procs; ++i) {
    SpawnOptions so;
    so.handshake_timeout = std::chrono::milliseconds(static_cast<long>(o.handshake_timeout_s * 1000));
    so.request_timeout = std::chrono::milliseconds(static_cast<long>(o.request_timeout_s * 1000));
    if (o.record_transcript && i == 0) so.transcript = out_dir / "transcript.ndjson";
    members.push_back(DetectorHandle::spawn(argv, so));
    logger()->info("detector session {} ready: {}", i, members.back()->handshake().adapter_info);
  }
  return DetectorPool(std::move(members));
}

SimilarityConfig make_sim_config(const DetectorOptions& o, const Handshake& hs) {
  SimilarityConfig cfg;
  cfg.use_objectness = o.objectness == "auto" ? hs.has_objectness : o.objectness == "on";
  return cfg;
}

ojson handshake_json(const Handshake& hs) {
  return {{"protocol_version", hs.protocol_version},
          {"class_names", hs.class_names},
          {"has_objectness", hs.has_objectness},
          {"adapter_info", hs.adapter_info}};
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Colormap parse_colormap(const std::string& name) { return name == "gray" ? Colormap::kGray : Colormap::kRamp; }

// ---------------------------------------------------------------------------
// explain

struct ExplainOptions {
  std::string image;
  std::vector<std::string> targets;
  bool from_detector = false;
  std::size_t top_k = 5;
  std::string out;
  double alpha = 0.5;
  std::string colormap = "ramp";
  DetectorOptions detector;
  MaskOptions masks;
};

TargetDetection parse_target(const std::string& text, std::size_t classes) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--target expects x1,y1,x2,y2,class; cannot parse '" + text + "'");
    }
  }
  if (v.size() != 5) throw ConfigError("--target expects x1,y1,x2,y2,class; got '" + text + "'");
  if (v[4] < 0 || v[4] != std::floor(v[4])) throw ConfigError("--target class must be a non-negative integer");
  TargetDetection t{{v[0], v[1], v[2], v[3]}, static_cast<std::size_t>(v[4]), classes};
  if (!t.bbox.valid()) throw ConfigError("--target box must have x1 <= x2 and y1 <= y2");
  if (t.class_index >= classes) {
    throw ConfigError("--target class " + std::to_string(t.class_index) + " but the detector has " +
                      std::to_string(classes) + " classes");
  }
  return t;
}

std::vector<TargetDetection> detector_targets(const Image& image, Detector& detector, std::size_t top_k) {
  std::vector<DetectionVector> dets = detector.infer(image);
  auto confidence = [](const DetectionVector& d) {
    return d.objectness * *std::max_element(d.scores.begin(), d.scores.end());
  };
  std::stable_sort(dets.begin(), dets.end(),
                   [&](const DetectionVector& a, const DetectionVector& b) { return confidence(a) > confidence(b); });
  if (dets.size() > top_k) dets.resize(top_k);
  std::vector<TargetDetection> out;
  for (const DetectionVector& d : dets) {
    const auto cls = static_cast<std::size_t>(std::max_element(d.scores.begin(), d.scores.end()) - d.scores.begin());
    out.push_back({d.bbox, cls, d.class_count()});
  }
  return out;
}

int cmd_explain(const ExplainOptions& o) {
  const fs::path out(o.out);
  fs::create_directories(out);
  ojson config{{"image", o.image},           {"targets", o.targets}, {"from_detector", o.from_detector},
               {"top_k", o.top_k},           {"out", o.out},         {"alpha", o.alpha},
               {"colormap", o.colormap},     {"detector", detector_json(o.detector)},
               {"masks", mask_json(o.masks)}};
  print_config("explain", config);

  const Image image = read_png(o.image);
  DetectorPool pool = make_pool(o.detector, out);
  const Handshake& hs = pool.handshake();

  ExplainRequest req;
  req.image = image;
  for (const std::string& t : o.targets) req.targets.push_back(parse_target(t, hs.class_count()));
  if (o.from_detector) {
    for (const TargetDetection& t : detector_targets(image, pool[0], o.top_k)) req.targets.push_back(t);
  }
  if (req.targets.empty()) throw ConfigError("no targets: pass --target or --from-detector");
  req.mask_spec = o.masks.spec();
  req.sim_cfg = make_sim_config(o.detector, hs);
  req.normalization = parse_normalization(o.masks.normalization);
  req.parallelism = pool.size();
  req.batch_size = o.masks.batch_size;
  req.progress = [](std::size_t done, std::size_t total) { logger()->debug("masks {}/{}", done, total); };

  const ExplainResult result = explain(req, pool);
  const Colormap cmap = parse_colormap(o.colormap);

  ojson targets = ojson::array();
  for (std::size_t t = 0; t < result.maps.size(); ++t) {
    const std::string stem = std::to_string(t);
    const Raster& map = result.maps[t].values;
    write_file(out / (stem + "_saliency.png"), render_heatmap_png(map, cmap));
    write_file(out / (stem + "_overlay.png"), render_overlay_png(map, image, o.alpha, cmap));
    write_drsm(out / (stem + "_raw.drsm"), map);
    const TargetDetection& tg = req.targets[t];
    targets.push_back({{"index", t},
                       {"bbox", {tg.bbox.x1, tg.bbox.y1, tg.bbox.x2, tg.bbox.y2}},
                       {"class_index", tg.class_index},
                       {"class_name", hs.class_names[tg.class_index]},
                       {"max_saliency", map.max_value()},
                       {"mean_weight", [&] {
                          double s = 0;
                          for (double w : result.weights.row(t)) s += w;
                          return s / static_cast<double>(result.weights.masks());
                        }()}});
  }

  std::vector<float> w;
  w.reserve(result.weights.targets() * result.weights.masks());
  for (std::size_t t = 0; t < result.weights.targets(); ++t)
    for (double v : result.weights.row(t)) w.push_back(static_cast<float>(v));
  write_drsm(out / "weights.drsm",
             Raster(static_cast<int>(result.weights.masks()), static_cast<int>(result.weights.targets()), std::move(w)));

  ojson meta;
  meta["config"] = config;
  meta["image_size"] = {image.width(), image.height()};
  meta["handshake"] = handshake_json(hs);
  meta["use_objectness"] = req.sim_cfg.use_objectness;
  meta["mask_interpolation"] = mask_interpolation_convention();
  meta["normalization"] = to_string(req.normalization);
  meta["targets"] = targets;
  meta["weights_file"] = "weights.drsm (rows: targets, columns: masks)";
  meta["detector_calls"] = result.detector_calls;
  meta["timing_seconds"] = {{"masking", result.timing.masking},
                            {"inference", result.timing.inference},
                            {"weighting", result.timing.weighting},
                            {"accumulation", result.timing.accumulation},
                            {"total", result.timing.total}};
  write_text(out / "meta.json", meta.dump(2) + "\n");
  logger()->info("explained {} target(s) in {:.2f}s", result.maps.size(), result.timing.total);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Dataset iteration shared by eval and aggregate

struct DatasetOptions {
  std::string annotations;
  std::string images_dir;
  std::string saliency_dir;
};

void add_dataset_options(CLI::App* cmd, DatasetOptions& o) {
  cmd->add_option("--annotations", o.annotations, "COCO-style annotation JSON")->required();
  cmd->add_option("--images-dir", o.images_dir, "Directory holding the images (PNG)")->required();
  cmd->add_option("--saliency-dir", o.saliency_dir,
                  "Precomputed maps laid out as <dir>/<image_id>/<target_idx>_raw.drsm");
}

struct DatasetItem {
  const CocoImage* info = nullptr;
  Image image;
  std::vector<TargetDetection> targets;
  std::vector<Raster> saliency;
};

// Visits every annotated image. Maps come from --saliency-dir when given, else are
// computed with the detector. Errors for single images are collected, not thrown.
template <class Visit>
std::vector<std::string> for_each_item(const CocoDataset& ds, const DatasetOptions& o, DetectorPool* pool,
                                       const MaskOptions& masks, const SimilarityConfig& sim, Visit&& visit) {
  std::vector<std::string> failures;
  const std::size_t classes = ds.categories.size();
  for (const CocoImage& im : ds.images) {
    const std::vector<CocoAnnotation> anns = ds.annotations_for(im.id);
    if (anns.empty()) continue;
    DatasetItem item;
    item.info = &im;
    try {
      item.image = read_png(fs::path(o.images_dir) / im.file_name);
      for (const CocoAnnotation& an : anns) {
        const auto cls = ds.class_index(an.category_id);
        if (!cls) throw ConfigError("annotation refers to unknown category " + std::to_string(an.category_id));
        item.targets.push_back({an.bbox, *cls, classes});
      }
      if (!o.saliency_dir.empty()) {
        for (std::size_t t = 0; t < item.targets.size(); ++t) {
          item.saliency.push_back(
              read_drsm(fs::path(o.saliency_dir) / std::to_string(im.id) / (std::to_string(t) + "_raw.drsm")));
          if (item.saliency.back().width() != item.image.width() ||
              item.saliency.back().height() != item.image.height()) {
            throw ConfigError("saliency map size differs from its image");
          }
        }
      } else {
        ExplainRequest req;
        req.image = item.image;
        req.targets = item.targets;
        req.mask_spec = masks.spec();
        req.sim_cfg = sim;
        req.normalization = parse_normalization(masks.normalization);
        req.parallelism = pool->size();
        req.batch_size = masks.batch_size;
        for (SaliencyMap& m : explain(req, *pool).maps) item.saliency.push_back(std::move(m.values));
      }
    } catch (const ProtocolError&) {
      throw;
    } catch (const Error& e) {
      failures.push_back("image " + std::to_string(im.id) + ": " + e.what());
      logger()->warn("{}", failures.back());
      continue;
    }
    visit(item);
  }
  return failures;
}

void check_dataset_classes(const CocoDataset& ds, const DetectorPool* pool) {
  if (ds.categories.empty()) throw ConfigError("annotation file has no categories");
  if (pool && pool->handshake().class_count() != ds.categories.size()) {
    throw ConfigError("dataset has " + std::to_string(ds.categories.size()) + " categories but the detector reports " +
                      std::to_string(pool->handshake().class_count()) + " classes");
  }
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  DatasetOptions data;
  std::string out;
  int steps = 100;
  std::string baseline = "black";
  double blur_sigma = 5.0;
  bool skip_curves = false;
  DetectorOptions detector;
  MaskOptions masks;
};

int cmd_eval(const EvalOptions& o) {
  const fs::path out(o.out);
  fs::create_directories(out);
  const ojson config{{"annotations", o.data.annotations}, {"images_dir", o.data.images_dir},
                     {"saliency_dir", o.data.saliency_dir}, {"out", o.out},
                     {"steps", o.steps},                   {"baseline", o.baseline},
                     {"blur_sigma", o.blur_sigma},         {"skip_curves", o.skip_curves},
                     {"detector", detector_json(o.detector)}, {"masks", mask_json(o.masks)}};
  print_config("eval", config);

  const CocoDataset ds = CocoDataset::load(o.data.annotations);
  if (ds.annotations.empty()) throw ConfigError("dataset has no annotations to evaluate");
  const bool need_detector = o.data.saliency_dir.empty() || !o.skip_curves;
  std::optional<DetectorPool> pool;
  if (need_detector) {
    if (!o.detector.configured()) throw ConfigError("eval needs a detector (--builtin-synth or --detector)");
    pool = make_pool(o.detector, out);
  }
  check_dataset_classes(ds, pool ? &*pool : nullptr);
  const SimilarityConfig sim = pool ? make_sim_config(o.detector, pool->handshake()) : SimilarityConfig{};

  CurveOptions curve_opts;
  curve_opts.steps = o.steps;
  curve_opts.sim = sim;
  curve_opts.baseline = o.baseline == "blur" ? InsertionBaseline::kBlur : InsertionBaseline::kBlack;
  curve_opts.blur_sigma = o.blur_sigma;

  std::string csv = "image_id,target_idx,pg_hit,del_auc,ins_auc\n";
  PointingGameTally tally;
  double del_sum = 0, ins_sum = 0;
  std::size_t curves = 0;
  char buf[64];

  const auto failures = for_each_item(ds, o.data, pool ? &*pool : nullptr, o.masks, sim, [&](const DatasetItem& item) {
    for (std::size_t t = 0; t < item.targets.size(); ++t) {
      const bool hit = pointing_game(item.saliency[t], GroundTruthRegion::from_box(item.targets[t].bbox));
      tally.add(hit);
      csv += std::to_string(item.info->id) + "," + std::to_string(t) + "," + (hit ? "1" : "0") + ",";
      if (!o.skip_curves) {
        const MetricCurve del = deletion_curve(item.image, item.targets[t], (*pool)[0], item.saliency[t], curve_opts);
        const MetricCurve ins = insertion_curve(item.image, item.targets[t], (*pool)[0], item.saliency[t], curve_opts);
        std::snprintf(buf, sizeof buf, "%.8g,%.8g", del.auc, ins.auc);
        csv += buf;
        del_sum += del.auc;
        ins_sum += ins.auc;
        ++curves;
      } else {
        csv += ",";
      }
      csv += "\n";
    }
  });

  if (tally.hits + tally.misses == 0) throw ConfigError("no detections could be evaluated");
  write_text(out / "metrics.csv", csv);
  ojson summary;
  summary["config"] = config;
  summary["evaluated_targets"] = tally.hits + tally.misses;
  summary["pointing_game_bbox"] = tally.accuracy();
  if (curves > 0) {
    summary["deletion_auc_mean"] = del_sum / static_cast<double>(curves);
    summary["insertion_auc_mean"] = ins_sum / static_cast<double>(curves);
  }
  summary["curve_defaults"] = {{"steps", o.steps},
                               {"insertion_baseline", o.baseline},
                               {"note", "step count and baseline are tool defaults, not taken from a reference setup"}};
  summary["failures"] = failures;
  write_text(out / "summary.json", summary.dump(2) + "\n");
  std::cout << "pointing game (bbox): " << tally.accuracy() << " over " << (tally.hits + tally.misses)
            << " detections\n";
  if (curves > 0) {
    std::cout << "deletion AUC: " << del_sum / curves << "  insertion AUC: " << ins_sum / curves << "\n";
  }
  return failures.empty() ? kExitOk : kExitUser;
}

// ---------------------------------------------------------------------------
// aggregate

struct AggregateOptions {
  DatasetOptions data;
  std::string out;
  double context = kDefaultContext;
  bool scale = false;
  std::optional<std::int64_t> category;
  DetectorOptions detector;
  MaskOptions masks;
};

void write_aggregate(const fs::path& out, const std::string& stem, const ClassAggregate& agg) {
  write_file(out / (stem + "_saliency.png"), render_heatmap_png(agg.mean_map));
  write_drsm(out / (stem + "_mean.drsm"), agg.mean_map);
  if (agg.mean_image) write_png(out / (stem + "_image.png"), *agg.mean_image);
}

ojson aggregate_json(const ClassAggregate& agg, const std::string& stem) {
  return {{"files", stem + "_{saliency.png,mean.drsm,image.png}"},
          {"sample_count", agg.sample_count},
          {"average_box", {agg.average_size.width, agg.average_size.height}},
          {"output_size", {agg.mean_map.width(), agg.mean_map.height()}}};
}

int cmd_aggregate(const AggregateOptions& o) {
  const fs::path out(o.out);
  fs::create_directories(out);
  ojson config{{"annotations", o.data.annotations}, {"images_dir", o.data.images_dir},
               {"saliency_dir", o.data.saliency_dir}, {"out", o.out},
               {"context", o.context},               {"scale_bins", o.scale},
               {"detector", detector_json(o.detector)}, {"masks", mask_json(o.masks)}};
  if (o.category) config["category"] = *o.category;
  print_config("aggregate", config);

  CocoDataset ds = CocoDataset::load(o.data.annotations);
  std::optional<DetectorPool> pool;
  if (o.data.saliency_dir.empty()) {
    if (!o.detector.configured()) throw ConfigError("aggregate needs --saliency-dir or a detector");
    pool = make_pool(o.detector, out);
  }
  check_dataset_classes(ds, pool ? &*pool : nullptr);
  const SimilarityConfig sim = pool ? make_sim_config(o.detector, pool->handshake()) : SimilarityConfig{};

  // Pass 1: per-class box statistics.
  std::map<std::size_t, std::vector<BBox>> boxes;
  for (const CocoAnnotation& an : ds.annotations) {
    if (o.category && an.category_id != *o.category) continue;
    if (const auto cls = ds.class_index(an.category_id)) boxes[*cls].push_back(an.bbox);
  }
  if (boxes.empty()) throw ConfigError("no annotations to aggregate");

  struct ClassState {
    ClassAggregator all;
    std::vector<ClassAggregator> bins;
    std::vector<std::size_t> bin_of;  // annotation rank within class -> bin
    std::size_t seen = 0;
  };
  std::map<std::size_t, ClassState> state;
  for (const auto& [cls, list] : boxes) {
    ClassState s{ClassAggregator(cls, average_box_size(list), o.context), {}, {}, 0};
    if (o.scale && list.size() >= 3) {
      const auto bins = scale_bins(list);
      s.bin_of.assign(list.size(), 0);
      for (std::size_t b = 0; b < 3; ++b) {
        std::vector<BBox> members;
        for (std::size_t i : bins[b]) {
          s.bin_of[i] = b;
          members.push_back(list[i]);
        }
        s.bins.emplace_back(cls, members.empty() ? average_box_size(list) : average_box_size(members), o.context);
      }
    }
    state.emplace(cls, std::move(s));
  }

  // Pass 2: accumulate crops, visiting annotations in the same order as pass 1.
  const auto failures = for_each_item(ds, o.data, pool ? &*pool : nullptr, o.masks, sim, [&](const DatasetItem& item) {
    const std::vector<CocoAnnotation> anns = ds.annotations_for(item.info->id);
    for (std::size_t t = 0; t < anns.size(); ++t) {
      if (o.category && anns[t].category_id != *o.category) continue;
      auto it = state.find(item.targets[t].class_index);
      if (it == state.end()) continue;
      ClassState& s = it->second;
      s.all.accumulate(item.image, item.saliency[t], item.targets[t].bbox);
      if (!s.bins.empty()) s.bins[s.bin_of[s.seen]].accumulate(item.image, item.saliency[t], item.targets[t].bbox);
      ++s.seen;
    }
  });

  ojson classes = ojson::array();
  for (auto& [cls, s] : state) {
    if (s.all.count() == 0) continue;
    const CocoCategory& cat = ds.categories[cls];
    const std::string stem = "class_" + std::to_string(cat.id);
    const ClassAggregate agg = s.all.result();
    write_aggregate(out, stem, agg);
    ojson entry = aggregate_json(agg, stem);
    entry["category_id"] = cat.id;
    entry["name"] = cat.name;
    entry["class_index"] = cls;
    if (!s.bins.empty()) {
      ojson bins = ojson::array();
      const char* labels[3] = {"small (0-30th pct)", "medium (30-70th pct)", "large (70-100th pct)"};
      for (std::size_t b = 0; b < 3; ++b) {
        if (s.bins[b].count() == 0) continue;
        const std::string bin_stem = stem + "_bin" + std::to_string(b);
        const ClassAggregate bagg = s.bins[b].result();
        write_aggregate(out, bin_stem, bagg);
        ojson be = aggregate_json(bagg, bin_stem);
        be["bin"] = labels[b];
        bins.push_back(be);
      }
      entry["scale_bins"] = bins;
    }
    classes.push_back(entry);
    std::cout << cat.name << ": " << agg.sample_count << " samples, map " << agg.mean_map.width() << "x"
              << agg.mean_map.height() << "\n";
  }
  ojson sidecar;
  sidecar["config"] = config;
  sidecar["crop_normalization"] = "max";
  sidecar["context_margin"] = o.context;
  sidecar["mean"] = "double-precision streaming mean";
  sidecar["classes"] = classes;
  sidecar["failures"] = failures;
  write_text(out / "aggregate.json", sidecar.dump(2) + "\n");
  return failures.empty() ? kExitOk : kExitUser;
}

// ---------------------------------------------------------------------------
// bias-inject

struct BiasOptions {
  std::string annotations;
  std::string images_dir;
  std::string out;
  std::int64_t category = 0;
  std::string corner = "top-left";
  int radius = 6;
  std::vector<int> color;
  std::size_t jobs = 1;
};

int cmd_bias_inject(const BiasOptions& o) {
  const Corner corner = o.corner == "top-right" ? Corner::kTopRight : Corner::kTopLeft;
  MarkerSpec spec = MarkerSpec::for_corner(corner, o.category);
  spec.radius = o.radius;
  if (!o.color.empty()) {
    if (o.color.size() != 3) throw ConfigError("--color expects r g b");
    spec.color = {static_cast<std::uint8_t>(o.color[0]), static_cast<std::uint8_t>(o.color[1]),
                  static_cast<std::uint8_t>(o.color[2])};
  }
  print_config("bias-inject", {{"annotations", o.annotations},
                               {"images_dir", o.images_dir},
                               {"out", o.out},
                               {"category", o.category},
                               {"corner", o.corner},
                               {"radius", spec.radius},
                               {"color", {spec.color.r, spec.color.g, spec.color.b}},
                               {"jobs", o.jobs}});
  const BiasReport report = bias_dataset(o.annotations, o.images_dir, spec, o.out, o.jobs);
  std::cout << report.modified.size() << " images modified, " << report.copied.size() << " copied, "
            << report.failures.size() << " failed\n";
  for (const std::string& f : report.failures) std::cerr << "error: " << f << "\n";
  return report.ok() ? kExitOk : kExitUser;
}

// ---------------------------------------------------------------------------
// synth-detector

struct SynthOptions {
  std::string mode = "rectangle";
  std::string echo_config;
  std::optional<std::uint64_t> random_colors_seed;
  double tolerance = 60.0;
  int marker_radius = 6;
};

int cmd_synth_detector(const SynthOptions& o) {
  // stdout carries the protocol, so the effective config goes to stderr only.
  ojson config{{"mode", o.mode}, {"tolerance", o.tolerance}, {"marker_radius", o.marker_radius}};
  if (o.random_colors_seed) config["random_colors_seed"] = *o.random_colors_seed;
  if (!o.echo_config.empty()) config["echo_config"] = o.echo_config;
  print_config("synth-detector", config);

  std::ios::sync_with_stdio(false);
  RectangleDetectorParams params;
  params.tolerance = o.tolerance;
  if (o.random_colors_seed) params = randomize_colors(params, *o.random_colors_seed);
  if (o.mode == "echo") {
    if (o.echo_config.empty()) throw ConfigError("--mode echo needs --echo-config");
    EchoDetector det = EchoDetector::from_json_file(o.echo_config);
    return protocol::serve(det, std::cin, std::cout);
  }
  if (o.mode == "biased") {
    BiasedDetectorParams bp;
    bp.base = params;
    bp.marker_radius = o.marker_radius;
    BiasedDetector det(bp);
    return protocol::serve(det, std::cin, std::cout);
  }
  RectangleDetector det(params);
  return protocol::serve(det, std::cin, std::cout);
}

// ---------------------------------------------------------------------------
// make-fixtures

struct FixtureOptions {
  std::size_t count = 50;
  int size = 64;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_make_fixtures(const FixtureOptions& o) {
  print_config("make-fixtures", {{"count", o.count}, {"size", o.size}, {"seed", o.seed}, {"out", o.out}});
  const fs::path out(o.out);
  fs::create_directories(out / "images");
  const RectangleDetectorParams params;
  CocoDataset ds;
  for (std::size_t c = 0; c < params.class_names.size(); ++c) {
    ds.categories.push_back({static_cast<std::int64_t>(c + 1), params.class_names[c]});
  }
  for (std::size_t i = 0; i < o.count; ++i) {
    const RectangleFixture f = make_rectangle_fixture(o.seed * 1000003u + i, o.size, params);
    const std::int64_t id = static_cast<std::int64_t>(i + 1);
    const std::string name = std::to_string(id) + ".png";
    write_png(out / "images" / name, f.image);
    ds.images.push_back({id, name, o.size, o.size});
    ds.annotations.push_back({id, f.box, static_cast<std::int64_t>(f.class_index + 1)});
  }
  write_text(out / "annotations.json", ds.to_json() + "\n");
  std::cout << "wrote " << o.count << " fixtures to " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Black-box saliency maps for object detectors", "drise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "drise 0.1.0");

  ExplainOptions explain_o;
  auto* explain_cmd = app.add_subcommand("explain", "Saliency maps for detections in one image");
  explain_cmd->add_option("--image", explain_o.image, "Input PNG")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--target", explain_o.targets, "Target x1,y1,x2,y2,class (repeatable)");
  explain_cmd->add_flag("--from-detector", explain_o.from_detector, "Explain the detector's own top-k detections");
  explain_cmd->add_option("--top-k", explain_o.top_k, "Detections taken with --from-detector");
  explain_cmd->add_option("--out", explain_o.out, "Output directory")->required();
  explain_cmd->add_option("--alpha", explain_o.alpha, "Overlay opacity of the heatmap")->check(CLI::Range(0.0, 1.0));
  explain_cmd->add_option("--colormap", explain_o.colormap, "ramp (blue-green-red) or gray")
      ->check(CLI::IsMember({"ramp", "gray"}));
  add_detector_options(explain_cmd, explain_o.detector);
  add_mask_options(explain_cmd, explain_o.masks);

  EvalOptions eval_o;
  auto* eval_cmd = app.add_subcommand("eval", "Pointing game and deletion/insertion metrics over a dataset");
  add_dataset_options(eval_cmd, eval_o.data);
  eval_cmd->add_option("--out", eval_o.out, "Output directory")->required();
  eval_cmd->add_option("--steps", eval_o.steps, "Deletion/insertion steps")->check(CLI::Range(2, 1 << 20));
  eval_cmd->add_option("--baseline", eval_o.baseline, "Insertion start image: black or blur")
      ->check(CLI::IsMember({"black", "blur"}));
  eval_cmd->add_option("--blur-sigma", eval_o.blur_sigma, "Gaussian sigma for the blur baseline");
  eval_cmd->add_flag("--skip-curves", eval_o.skip_curves, "Only compute the pointing game");
  add_detector_options(eval_cmd, eval_o.detector);
  add_mask_options(eval_cmd, eval_o.masks);

  AggregateOptions agg_o;
  auto* agg_cmd = app.add_subcommand("aggregate", "Per-class average saliency maps");
  add_dataset_options(agg_cmd, agg_o.data);
  agg_cmd->add_option("--out", agg_o.out, "Output directory")->required();
  agg_cmd->add_option("--context", agg_o.context, "Context margin per side as a fraction of the box size")
      ->check(CLI::NonNegativeNumber);
  agg_cmd->add_flag("--scale-bins", agg_o.scale, "Also average per area bin (0-30-70-100 percentiles)");
  agg_cmd->add_option("--category", agg_o.category, "Only aggregate this category id");
  add_detector_options(agg_cmd, agg_o.detector);
  add_mask_options(agg_cmd, agg_o.masks);

  BiasOptions bias_o;
  auto* bias_cmd = app.add_subcommand("bias-inject", "Paint corner markers on every box of one category");
  bias_cmd->add_option("--annotations", bias_o.annotations, "COCO-style annotation JSON")
      ->required()
      ->check(CLI::ExistingFile);
  bias_cmd->add_option("--images-dir", bias_o.images_dir, "Directory holding the images")->required();
  bias_cmd->add_option("--out", bias_o.out, "Output directory")->required();
  bias_cmd->add_option("--category", bias_o.category, "Category id to mark")->required();
  bias_cmd->add_option("--corner", bias_o.corner, "top-left or top-right")
      ->check(CLI::IsMember({"top-left", "top-right"}));
  bias_cmd->add_option("--radius", bias_o.radius, "Marker radius in pixels")->check(CLI::Range(1, 4096));
  bias_cmd->add_option("--color", bias_o.color, "Marker color r g b")->expected(3)->check(CLI::Range(0, 255));
  bias_cmd->add_option("--jobs", bias_o.jobs, "Parallel workers")->check(CLI::Range(1, 256));

  SynthOptions synth_o;
  auto* synth_cmd = app.add_subcommand("synth-detector", "Serve a built-in detector over the stdio protocol");
  synth_cmd->add_option("--mode", synth_o.mode, "rectangle, biased or echo")
      ->check(CLI::IsMember({"rectangle", "biased", "echo"}));
  synth_cmd->add_option("--echo-config", synth_o.echo_config, "Fixed detections for --mode echo")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--random-colors-seed", synth_o.random_colors_seed, "Randomize class colors");
  synth_cmd->add_option("--tolerance", synth_o.tolerance, "Color tolerance (RGB distance)")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--marker-radius", synth_o.marker_radius, "Marker radius for --mode biased")
      ->check(CLI::Range(1, 4096));

  FixtureOptions fix_o;
  auto* fix_cmd = app.add_subcommand("make-fixtures", "Write a synthetic rectangle dataset");
  fix_cmd->add_option("--count", fix_o.count, "Number of images")->check(CLI::Range(1, 1 << 20));
  fix_cmd->add_option("--size", fix_o.size, "Image side in pixels")->check(CLI::Range(32, 4096));
  fix_cmd->add_option("--seed", fix_o.seed, "Fixture seed");
  fix_cmd->add_option("--out", fix_o.out, "Output directory")->required();

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*explain_cmd) return cmd_explain(explain_o);
    if (*eval_cmd) return cmd_eval(eval_o);
    if (*agg_cmd) return cmd_aggregate(agg_o);
    if (*bias_cmd) return cmd_bias_inject(bias_o);
    if (*synth_cmd) return cmd_synth_detector(synth_o);
    if (*fix_cmd) return cmd_make_fixtures(fix_o);
  } catch (const ProtocolError& e) {
    logger()->error("{}", e.what());
    return kExitProtocol;
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kExitUser;
  } catch (const fs::filesystem_error& e) {
    logger()->error("{}", e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    logger()->error("internal error: {}", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace drise::cli
