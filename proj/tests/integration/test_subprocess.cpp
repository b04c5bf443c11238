// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "drise/engine.hpp"
#include "drise/error.hpp"
#include "drise/subprocess.hpp"
#include "drise/synthetic.hpp"
#include "test_support.hpp"

namespace drise {
namespace {

namespace fs = std::filesystem;
using std::chrono::milliseconds;

const fs::path kData = DRISE_TEST_DATA;
const std::string kExe = DRISE_EXE;

std::vector<std::string> synth(const std::string& mode = "rectangle") {
  return {kExe, "synth-detector", "--mode", mode};
}

std::vector<std::string> echo() {
  return {kExe, "synth-detector", "--mode", "echo", "--echo-config", (kData / "echo_config.json").string()};
}

std::vector<std::string> script(const std::string& name) { return {(kData / "detectors" / name).string()}; }

SpawnOptions quick() {
  SpawnOptions o;
  o.handshake_timeout = milliseconds(5000);
  o.request_timeout = milliseconds(1000);
  return o;
}

TEST(Subprocess, SyntheticDetectorHandshake) {
  auto det = DetectorHandle::spawn(synth());
  EXPECT_EQ(det->handshake().class_names, (std::vector<std::string>{"red", "green", "magenta"}));
  EXPECT_TRUE(det->handshake().has_objectness);
}

TEST(Subprocess, InferMatchesInProcessDetector) {
  auto det = DetectorHandle::spawn(synth());
  RectangleDetector local;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const RectangleFixture f = make_rectangle_fixture(s);
    EXPECT_EQ(det->infer(f.image), local.detect(f.image));
  }
  EXPECT_TRUE(det->infer(Image(16, 16)).empty());
  EXPECT_EQ(det->requests_sent(), 6u);
}

TEST(Subprocess, EchoRoundTripsConfiguredDetection) {
  auto det = DetectorHandle::spawn(echo());
  EXPECT_EQ(det->handshake().class_names, (std::vector<std::string>{"person", "stop sign"}));
  EXPECT_FALSE(det->handshake().has_objectness);
  const auto dets = det->infer(Image(8, 8));
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0], (DetectionVector{{1.5, 2, 6, 7.25}, 1.0, {0.125, 0.875}}));
}

TEST(Subprocess, ExplainThroughSubprocessMatchesInProcess) {
  const RectangleFixture f = make_rectangle_fixture(4);
  ExplainRequest req;
  req.image = f.image;
  req.targets = {{f.box, f.class_index, 3}};
  req.mask_spec.count = 200;
  std::vector<std::shared_ptr<Detector>> members;
  for (int i = 0; i < 3; ++i) members.push_back(DetectorHandle::spawn(synth()));
  req.parallelism = 3;
  const ExplainResult remote = explain(req, DetectorPool(members));
  RectangleDetector local;
  req.parallelism = 1;
  EXPECT_EQ(remote.maps[0].values, explain(req, local).maps[0].values);
}

TEST(Subprocess, MalformedHandshakeNamesLine) {
  try {
    DetectorHandle::spawn(script("bad_handshake.sh"), quick());
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("hello, not a handshake"), std::string::npos) << e.what();
  }
}

TEST(Subprocess, HandshakeTimeout) {
  SpawnOptions o = quick();
  o.handshake_timeout = milliseconds(200);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(DetectorHandle::spawn(script("no_handshake.sh"), o), ProtocolError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(4));
}

TEST(Subprocess, MissingProgram) {
  EXPECT_THROW(DetectorHandle::spawn({"/nonexistent/detector"}, quick()), ProtocolError);
}

void expect_dead_after_failure(const std::string& name, const std::string& needle) {
  auto det = DetectorHandle::spawn(script(name), quick());
  try {
    det->infer(Image(8, 8));
    FAIL() << name;
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << name << ": " << e.what();
  }
  EXPECT_FALSE(det->alive());
  EXPECT_THROW(det->infer(Image(8, 8)), ProtocolError);
}

TEST(Subprocess, WrongIdKillsSession) { expect_dead_after_failure("wrong_id.sh", "99"); }

TEST(Subprocess, MalformedResponseKillsSession) { expect_dead_after_failure("garbage_reply.sh", "score"); }

TEST(Subprocess, ErrorReplyKillsSession) { expect_dead_after_failure("error_reply.sh", "model exploded"); }

TEST(Subprocess, RequestTimeoutKillsSession) { expect_dead_after_failure("silent.sh", "timed out"); }

TEST(Subprocess, ChildExitKillsSession) { expect_dead_after_failure("exits.sh", "exit"); }

TEST(Subprocess, ExplainAbortsOnDetectorFailure) {
  std::vector<std::shared_ptr<Detector>> members{DetectorHandle::spawn(script("error_reply.sh"), quick())};
  ExplainRequest req;
  req.image = Image(32, 32);
  req.targets = {{{0, 0, 8, 8}, 0, 2}};
  req.mask_spec.count = 10;
  EXPECT_THROW(explain(req, DetectorPool(members)), ExplainAborted);
}

TEST(Subprocess, TranscriptRecordsBothDirections) {
  test::TempDir dir;
  SpawnOptions o;
  o.transcript = dir / "t.ndjson";
  {
    auto det = DetectorHandle::spawn(echo(), o);
    det->infer(Image(8, 8));
  }
  std::ifstream in(dir / "t.ndjson");
  std::string a, b, c;
  std::getline(in, a);
  std::getline(in, b);
  std::getline(in, c);
  EXPECT_EQ(a.rfind("< {\"type\":\"handshake\"", 0), 0u);
  EXPECT_EQ(b.rfind("> {\"type\":\"infer\",\"id\":0", 0), 0u);
  EXPECT_EQ(c.rfind("< {\"type\":\"detections\",\"id\":0", 0), 0u);
  // A recording replays cleanly against the program that produced it.
  const TranscriptResult r = replay_transcript(echo(), dir / "t.ndjson");
  EXPECT_TRUE(r.passed) << r.failure;
  EXPECT_EQ(r.lines_checked, 3u);
}

class GoldenTranscript : public ::testing::TestWithParam<std::string> {};

TEST_P(GoldenTranscript, EchoModeReplaysByteExactly) {
  const TranscriptResult r = replay_transcript(echo(), kData / "transcripts" / GetParam());
  EXPECT_TRUE(r.passed) << r.failure;
  EXPECT_GT(r.lines_checked, 0u);
}

INSTANTIATE_TEST_SUITE_P(Echo, GoldenTranscript,
                         ::testing::Values("echo_handshake.ndjson", "echo_explain.ndjson", "echo_malformed.ndjson"));

TEST(GoldenTranscriptNegative, DivergentProgramFailsReplay) {
  const TranscriptResult r = replay_transcript(synth(), kData / "transcripts" / "echo_handshake.ndjson");
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.failure.find("mismatch"), std::string::npos) << r.failure;
}

TEST(SplitCommandLine, QuotesAndRejectsSubstitution) {
  EXPECT_EQ(split_command_line("python adapter.py --model 'faster rcnn' -x"),
            (std::vector<std::string>{"python", "adapter.py", "--model", "faster rcnn", "-x"}));
  EXPECT_THROW(split_command_line("echo $(rm -rf /)"), ConfigError);
  EXPECT_THROW(split_command_line("   "), ConfigError);
}

}  // namespace
}  // namespace drise
