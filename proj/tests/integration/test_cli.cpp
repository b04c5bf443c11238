// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "drise/aggregate.hpp"
#include "drise/coco.hpp"
#include "drise/png_io.hpp"
#include "drise/raster_io.hpp"
#include "drise/synthetic.hpp"
#include "drise_cli/cli.hpp"
#include "test_support.hpp"

namespace drise {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kData = DRISE_TEST_DATA;
const std::string kExe = DRISE_EXE;

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "drise");
  return cli::run(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Image img = make_background(2, 64, 64);
    for (int y = 10; y < 50; ++y)
      for (int x = 10; x < 50; ++x) img.set(x, y, {255, 0, 0});
    write_png(dir_ / "sq.png", img);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  int explain_square(const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"explain", "--builtin-synth", "--image", path("sq.png"), "--target",
                                  "10,10,50,50,0", "--masks", "1000", "--seed", "7", "--out", path(out)};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  }
  int make_fixtures(const std::string& out, int count) {
    return run_cli({"make-fixtures", "--count", std::to_string(count), "--seed", "3", "--out", path(out)});
  }
  test::TempDir dir_;
};

TEST_F(CliTest, ExplainIsDeterministicAcrossRuns) {
  ASSERT_EQ(explain_square("a"), cli::kExitOk);
  ASSERT_EQ(explain_square("b"), cli::kExitOk);
  for (const char* f : {"0_raw.drsm", "0_saliency.png", "0_overlay.png", "weights.drsm"}) {
    const std::string a = slurp(dir_ / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(CliTest, ExplainOutputsAndMetadata) {
  ASSERT_EQ(explain_square("out"), cli::kExitOk);
  const Image overlay = read_png(dir_ / "out" / "0_overlay.png");
  EXPECT_EQ(overlay.width(), 64);
  EXPECT_EQ(overlay.height(), 64);
  const Raster raw = read_drsm(dir_ / "out" / "0_raw.drsm");
  EXPECT_EQ(raw.width(), 64);
  const std::size_t am = raw.argmax();
  EXPECT_TRUE(BBox({10, 10, 50, 50}).contains(am % 64 + 0.5, am / 64 + 0.5));
  const Raster weights = read_drsm(dir_ / "out" / "weights.drsm");
  EXPECT_EQ(weights.width(), 1000);
  EXPECT_EQ(weights.height(), 1);
  const json meta = json::parse(slurp(dir_ / "out" / "meta.json"));
  EXPECT_EQ(meta["config"]["masks"]["seed"], 7);
  EXPECT_EQ(meta["detector_calls"], 1000);
  EXPECT_EQ(meta["normalization"], "exposure");
  EXPECT_EQ(meta["targets"][0]["class_name"], "red");
  EXPECT_TRUE(meta["use_objectness"].get<bool>());
  EXPECT_TRUE(meta.contains("mask_interpolation"));
}

TEST_F(CliTest, ExplainFromDetectorAndSubprocessMatchBuiltin) {
  ASSERT_EQ(explain_square("builtin"), cli::kExitOk);
  ASSERT_EQ(explain_square("remote", {"--detector-procs", "2"}), cli::kExitOk);
  EXPECT_EQ(slurp(dir_ / "builtin" / "0_raw.drsm"), slurp(dir_ / "remote" / "0_raw.drsm"));
  ASSERT_EQ(run_cli({"explain", "--image", path("sq.png"), "--from-detector", "--masks", "1000", "--seed", "7",
                     "--detector", kExe + " synth-detector", "--record-transcript", "--out", path("sub")}),
            cli::kExitOk);
  EXPECT_EQ(slurp(dir_ / "builtin" / "0_raw.drsm"), slurp(dir_ / "sub" / "0_raw.drsm"));
  EXPECT_TRUE(fs::exists(dir_ / "sub" / "transcript.ndjson"));
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(explain_square("x", {"--masks", "0"}), cli::kExitUser);
  EXPECT_EQ(run_cli({"explain", "--builtin-synth", "--image", path("missing.png"), "--target", "0,0,1,1,0", "--out",
                     path("x")}),
            cli::kExitUser);
  EXPECT_EQ(run_cli({"explain", "--builtin-synth", "--image", path("sq.png"), "--target", "0,0,1,0", "--out",
                     path("x")}),
            cli::kExitUser);
  EXPECT_EQ(run_cli({"explain", "--builtin-synth", "--image", path("sq.png"), "--target", "0,0,4,4,7", "--out",
                     path("x")}),
            cli::kExitUser);
  EXPECT_EQ(run_cli({"explain", "--image", path("sq.png"), "--target", "0,0,4,4,0", "--out", path("x")}),
            cli::kExitUser);
  EXPECT_EQ(explain_square("x", {"--grid", "40", "40"}), cli::kExitUser);
  EXPECT_EQ(run_cli({"frobnicate"}), cli::kExitUser);
  EXPECT_EQ(run_cli({}), cli::kExitUser);
}

TEST_F(CliTest, ProtocolFailureExitsTwo) {
  EXPECT_EQ(run_cli({"explain", "--image", path("sq.png"), "--target", "0,0,4,4,0", "--detector",
                     (kData / "detectors" / "bad_handshake.sh").string(), "--out", path("x")}),
            cli::kExitProtocol);
  EXPECT_EQ(run_cli({"explain", "--image", path("sq.png"), "--target", "0,0,4,4,0", "--masks", "10", "--detector",
                     (kData / "detectors" / "error_reply.sh").string(), "--out", path("x")}),
            cli::kExitProtocol);
}

TEST_F(CliTest, ProcessExitCodes) {
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(kExe + " --help"), 0);
  EXPECT_EQ(status(kExe + " explain --builtin-synth --image " + path("sq.png") +
                   " --target 0,0,4,4,0 --masks 0 --out " + path("x")),
            1);
  EXPECT_EQ(status(kExe + " explain --image " + path("sq.png") + " --target 0,0,4,4,0 --detector " +
                   (kData / "detectors" / "wrong_id.sh").string() + " --masks 5 --out " + path("x")),
            2);
}

TEST_F(CliTest, MakeFixturesWritesCocoDataset) {
  ASSERT_EQ(make_fixtures("fx", 4), cli::kExitOk);
  const CocoDataset ds = CocoDataset::load(dir_ / "fx" / "annotations.json");
  EXPECT_EQ(ds.images.size(), 4u);
  EXPECT_EQ(ds.categories.size(), 3u);
  for (const CocoImage& im : ds.images) EXPECT_TRUE(fs::exists(dir_ / "fx" / "images" / im.file_name));
}

TEST_F(CliTest, EvalWithBuiltinDetector) {
  ASSERT_EQ(make_fixtures("fx", 10), cli::kExitOk);
  ASSERT_EQ(run_cli({"eval", "--annotations", path("fx/annotations.json"), "--images-dir", path("fx/images"),
                     "--builtin-synth", "--masks", "500", "--steps", "20", "--out", path("ev")}),
            cli::kExitOk);
  std::ifstream csv(dir_ / "ev" / "metrics.csv");
  std::string header, row;
  std::getline(csv, header);
  EXPECT_EQ(header, "image_id,target_idx,pg_hit,del_auc,ins_auc");
  int rows = 0;
  while (std::getline(csv, row)) ++rows;
  EXPECT_EQ(rows, 10);
  const json summary = json::parse(slurp(dir_ / "ev" / "summary.json"));
  EXPECT_EQ(summary["evaluated_targets"], 10);
  EXPECT_GE(summary["pointing_game_bbox"].get<double>(), 0.9);
  EXPECT_LT(summary["deletion_auc_mean"].get<double>(), summary["insertion_auc_mean"].get<double>());
}

TEST_F(CliTest, EvalFromSaliencyDirWithoutDetector) {
  ASSERT_EQ(make_fixtures("fx", 3), cli::kExitOk);
  const CocoDataset ds = CocoDataset::load(dir_ / "fx" / "annotations.json");
  for (const CocoAnnotation& an : ds.annotations) {
    Raster map(64, 64, 0.0f);
    map.at(static_cast<int>(an.bbox.x1) + 1, static_cast<int>(an.bbox.y1) + 1) = 1.0f;
    fs::create_directories(dir_ / "sal" / std::to_string(an.image_id));
    write_drsm(dir_ / "sal" / std::to_string(an.image_id) / "0_raw.drsm", map);
  }
  ASSERT_EQ(run_cli({"eval", "--annotations", path("fx/annotations.json"), "--images-dir", path("fx/images"),
                     "--saliency-dir", path("sal"), "--skip-curves", "--out", path("ev")}),
            cli::kExitOk);
  std::ifstream csv(dir_ / "ev" / "metrics.csv");
  std::string line;
  std::getline(csv, line);
  std::getline(csv, line);
  EXPECT_EQ(line, "1,0,1,,");
  EXPECT_EQ(json::parse(slurp(dir_ / "ev" / "summary.json"))["pointing_game_bbox"], 1.0);
}

TEST_F(CliTest, EvalOnEmptyDatasetIsAnError) {
  std::ofstream(dir_ / "empty.json") << R"({"images":[],"annotations":[],"categories":[{"id":1,"name":"a"}]})";
  fs::create_directories(dir_ / "imgs");
  EXPECT_EQ(run_cli({"eval", "--annotations", path("empty.json"), "--images-dir", path("imgs"), "--builtin-synth",
                     "--out", path("ev")}),
            cli::kExitUser);
  EXPECT_FALSE(fs::exists(dir_ / "ev" / "summary.json"));
}

TEST_F(CliTest, AggregateSingleSampleEqualsSample) {
  ASSERT_EQ(make_fixtures("fx", 1), cli::kExitOk);
  const CocoDataset ds = CocoDataset::load(dir_ / "fx" / "annotations.json");
  std::mt19937_64 rng(4);
  Raster map(64, 64);
  for (float& v : map.values()) v = static_cast<float>(test::uniform(rng, 0, 3));
  fs::create_directories(dir_ / "sal" / "1");
  write_drsm(dir_ / "sal" / "1" / "0_raw.drsm", map);
  ASSERT_EQ(run_cli({"aggregate", "--annotations", path("fx/annotations.json"), "--images-dir", path("fx/images"),
                     "--saliency-dir", path("sal"), "--out", path("ag")}),
            cli::kExitOk);
  const std::int64_t cat = ds.annotations[0].category_id;
  const Raster mean = read_drsm(dir_ / "ag" / ("class_" + std::to_string(cat) + "_mean.drsm"));
  const BBox box = ds.annotations[0].bbox;
  const BoxSize size{box.width(), box.height()};
  ClassAggregator expect(*ds.class_index(cat), size);
  expect.accumulate(read_png(dir_ / "fx" / "images" / "1.png"), map, box);
  EXPECT_EQ(mean, expect.result().mean_map);
  EXPECT_TRUE(fs::exists(dir_ / "ag" / ("class_" + std::to_string(cat) + "_image.png")));
  const json sidecar = json::parse(slurp(dir_ / "ag" / "aggregate.json"));
  EXPECT_EQ(sidecar["classes"][0]["sample_count"], 1);
}

TEST_F(CliTest, AggregateWithDetectorAndScaleBins) {
  ASSERT_EQ(make_fixtures("fx", 12), cli::kExitOk);
  ASSERT_EQ(run_cli({"aggregate", "--annotations", path("fx/annotations.json"), "--images-dir", path("fx/images"),
                     "--builtin-synth", "--masks", "200", "--scale-bins", "--out", path("ag")}),
            cli::kExitOk);
  const json sidecar = json::parse(slurp(dir_ / "ag" / "aggregate.json"));
  std::size_t total = 0;
  for (const auto& c : sidecar["classes"]) {
    total += c["sample_count"].get<std::size_t>();
    if (c["sample_count"].get<std::size_t>() >= 3) {
      EXPECT_TRUE(c.contains("scale_bins"));
      std::size_t binned = 0;
      for (const auto& b : c["scale_bins"]) binned += b["sample_count"].get<std::size_t>();
      EXPECT_EQ(binned, c["sample_count"].get<std::size_t>());
    }
  }
  EXPECT_EQ(total, 12u);
}

TEST_F(CliTest, BiasInjectReportsModifiedCount) {
  ASSERT_EQ(make_fixtures("fx", 6), cli::kExitOk);
  ::testing::internal::CaptureStdout();
  const int rc = run_cli({"bias-inject", "--annotations", path("fx/annotations.json"), "--images-dir",
                          path("fx/images"), "--category", "99", "--out", path("bi")});
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, cli::kExitOk);
  EXPECT_NE(out.find("0 images modified"), std::string::npos) << out;

  const CocoDataset ds = CocoDataset::load(dir_ / "fx" / "annotations.json");
  const std::int64_t cat = ds.annotations[0].category_id;
  std::size_t expected = 0;
  for (const CocoAnnotation& an : ds.annotations) expected += an.category_id == cat;
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run_cli({"bias-inject", "--annotations", path("fx/annotations.json"), "--images-dir", path("fx/images"),
                     "--category", std::to_string(cat), "--corner", "top-right", "--jobs", "3", "--out", path("bi2")}),
            cli::kExitOk);
  const std::string out2 = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out2.find(std::to_string(expected) + " images modified"), std::string::npos) << out2;
  const Image marked = read_png(dir_ / "bi2" / "images" / "1.png");
  const BBox b = ds.annotations[0].bbox;
  EXPECT_EQ(marked.at(static_cast<int>(b.x2) - 1, static_cast<int>(b.y1)), (Rgb{255, 255, 0}));
}

}  // namespace
}  // namespace drise
