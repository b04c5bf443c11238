// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sys/types.h>

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drise/detector.hpp"
#include "drise/protocol.hpp"

namespace drise {

/// Child process with piped stdin/stdout; stderr is inherited. Lines are exchanged
/// with deadlines. SIGPIPE is ignored process-wide once the first child is spawned.
class ChildProcess {
 public:
  /// Throws ProtocolError if the program cannot be started.
  explicit ChildProcess(const std::vector<std::string>& argv);
  ~ChildProcess();

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void write_line(std::string_view line, std::chrono::milliseconds timeout);
  /// Next line without its terminator. Throws ProtocolError on timeout, EOF or
  /// a line longer than `max_bytes`.
  std::string read_line(std::chrono::milliseconds timeout, std::size_t max_bytes = protocol::kMaxLineBytes);

  /// Closes stdin and waits up to `grace` for exit before killing. Returns the wait status.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));

  pid_t pid() const noexcept { return pid_; }

 private:
  std::string exit_description();

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::optional<int> status_;
};

struct SpawnOptions {
  std::chrono::milliseconds handshake_timeout{60'000};
  std::chrono::milliseconds request_timeout{120'000};
  /// When set, every line sent is appended as "> line" and every line received as "< line".
  std::filesystem::path transcript;
};

/// Protocol session with an external detector. One request is in flight at a time;
/// after any protocol failure the session is dead and further calls throw.
class DetectorHandle final : public Detector {
 public:
  /// Starts the program and waits for its handshake.
  static std::unique_ptr<DetectorHandle> spawn(const std::vector<std::string>& argv, SpawnOptions options = {});

  const Handshake& handshake() const override { return handshake_; }
  std::vector<DetectionVector> infer(const Image& image) override;

  bool alive() const noexcept { return alive_; }
  std::uint64_t requests_sent() const noexcept { return next_id_; }

 private:
  DetectorHandle(const std::vector<std::string>& argv, SpawnOptions options);
  void record(char direction, std::string_view line);

  SpawnOptions options_;
  ChildProcess child_;
  Handshake handshake_;
  std::ofstream transcript_;
  std::uint64_t next_id_ = 0;
  bool alive_ = true;
};

/// Splits a shell-style command line into words without running a shell.
std::vector<std::string> split_command_line(const std::string& command);

struct TranscriptResult {
  bool passed = false;
  std::size_t lines_checked = 0;
  std::string failure;
};

/// Replays a recorded transcript ("> " lines are sent, "< " lines must be received
/// byte for byte) against a freshly started program.
TranscriptResult replay_transcript(const std::vector<std::string>& argv, const std::filesystem::path& transcript,
                                   std::chrono::milliseconds timeout = std::chrono::milliseconds(30'000));

}  // namespace drise
