// SPDX-License-Identifier: Apache-2.0
#include "drise/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>
#include <wordexp.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "drise/error.hpp"

extern char** environ;

namespace drise {
namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] {
    struct sigaction sa {};
    sa.sa_handler = SIG_IGN;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGPIPE, &sa, nullptr);
  });
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with code " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

}  // namespace

ChildProcess::ChildProcess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ProtocolError("empty detector command line");
  ignore_sigpipe();

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  args.reserve(argv.size() + 1);
  for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    pid_ = -1;
    throw ProtocolError("cannot start detector '" + argv[0] + "': " + std::strerror(rc));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);
  ::fcntl(from_child_, F_SETFL, ::fcntl(from_child_, F_GETFL) | O_NONBLOCK);
}

ChildProcess::~ChildProcess() {
  try {
    terminate();
  } catch (...) {
  }
}

void ChildProcess::write_line(std::string_view line, std::chrono::milliseconds timeout) {
  if (to_child_ < 0) throw ProtocolError("detector stdin is closed");
  std::string data(line);
  data.push_back('\n');
  const auto deadline = Clock::now() + timeout;
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + sent, data.size() - sent);
    if (n > 0) {
      sent += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && errno != EAGAIN) {
      throw ProtocolError("write to detector failed: " + std::string(std::strerror(errno)) + "; " +
                          exit_description());
    }
    pollfd p{to_child_, POLLOUT, 0};
    const int ms = remaining_ms(deadline);
    if (ms == 0) throw ProtocolError("timed out writing to detector");
    if (::poll(&p, 1, ms) < 0 && errno != EINTR) throw ProtocolError("poll failed");
  }
}

std::string ChildProcess::read_line(std::chrono::milliseconds timeout, std::size_t max_bytes) {
  const auto deadline = Clock::now() + timeout;
  std::size_t scanned = 0;
  for (;;) {
    const std::size_t nl = buffer_.find('\n', scanned);
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    scanned = buffer_.size();
    if (buffer_.size() > max_bytes) throw ProtocolError("detector line exceeds " + std::to_string(max_bytes) + " bytes");
    if (from_child_ < 0) throw ProtocolError("detector stdout is closed");

    char chunk[1 << 16];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) throw ProtocolError("detector closed its output; " + exit_description());
    if (errno == EINTR) continue;
    if (errno != EAGAIN) throw ProtocolError(std::string("read from detector failed: ") + std::strerror(errno));
    pollfd p{from_child_, POLLIN, 0};
    const int ms = remaining_ms(deadline);
    if (ms == 0) throw ProtocolError("timed out after " + std::to_string(timeout.count()) + " ms waiting for detector");
    if (::poll(&p, 1, ms) < 0 && errno != EINTR) throw ProtocolError("poll failed");
  }
}

std::string ChildProcess::exit_description() {
  if (!status_ && pid_ > 0) {
    // Give a dying child a moment so the message can name its exit status.
    for (int i = 0; i < 20 && !status_; ++i) {
      int st = 0;
      if (::waitpid(pid_, &st, WNOHANG) == pid_) {
        status_ = st;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  return status_ ? "process " + describe_status(*status_) : "process still running";
}

int ChildProcess::terminate(std::chrono::milliseconds grace) {
  close_fd(to_child_);
  if (pid_ > 0 && !status_) {
    const auto deadline = Clock::now() + grace;
    for (;;) {
      int st = 0;
      const pid_t r = ::waitpid(pid_, &st, WNOHANG);
      if (r == pid_) {
        status_ = st;
        break;
      }
      if (r < 0) break;
      if (Clock::now() >= deadline) {
        ::kill(pid_, SIGKILL);
        if (::waitpid(pid_, &st, 0) == pid_) status_ = st;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
  close_fd(from_child_);
  return status_.value_or(-1);
}

DetectorHandle::DetectorHandle(const std::vector<std::string>& argv, SpawnOptions options)
    : options_(std::move(options)), child_(argv) {
  if (!options_.transcript.empty()) {
    transcript_.open(options_.transcript, std::ios::binary | std::ios::trunc);
    if (!transcript_) throw IoError("cannot create transcript " + options_.transcript.string());
  }
  const std::string line = child_.read_line(options_.handshake_timeout);
  record('<', line);
  handshake_ = protocol::parse_handshake(line);
}

std::unique_ptr<DetectorHandle> DetectorHandle::spawn(const std::vector<std::string>& argv, SpawnOptions options) {
  return std::unique_ptr<DetectorHandle>(new DetectorHandle(argv, std::move(options)));
}

void DetectorHandle::record(char direction, std::string_view line) {
  if (!transcript_.is_open()) return;
  transcript_ << direction << ' ' << line << '\n';
  transcript_.flush();
}

std::vector<DetectionVector> DetectorHandle::infer(const Image& image) {
  if (!alive_) throw ProtocolError("detector session is dead");
  const std::uint64_t id = next_id_++;
  try {
    const std::string request = protocol::encode_infer(id, image);
    record('>', request);
    child_.write_line(request, options_.request_timeout);
    const std::string line = child_.read_line(options_.request_timeout);
    record('<', line);
    protocol::DetectionsResponse resp = protocol::parse_detections(line, handshake_.class_count());
    if (resp.id != id) {
      throw ProtocolError(resp.id < id ? "duplicate or stale response id " + std::to_string(resp.id)
                                       : "response for unknown id " + std::to_string(resp.id) + " (expected " +
                                             std::to_string(id) + ")");
    }
    return std::move(resp.detections);
  } catch (const ProtocolError&) {
    alive_ = false;
    throw;
  } catch (const IoError& e) {
    alive_ = false;
    throw ProtocolError(e.what());
  }
}

std::vector<std::string> split_command_line(const std::string& command) {
  wordexp_t words;
  const int rc = ::wordexp(command.c_str(), &words, WRDE_NOCMD | WRDE_UNDEF);
  if (rc != 0) {
    if (rc == WRDE_NOSPACE) ::wordfree(&words);
    throw ConfigError("cannot parse detector command line: " + command);
  }
  std::vector<std::string> out(words.we_wordv, words.we_wordv + words.we_wordc);
  ::wordfree(&words);
  if (out.empty()) throw ConfigError("empty detector command line");
  return out;
}

TranscriptResult replay_transcript(const std::vector<std::string>& argv, const std::filesystem::path& transcript,
                                   std::chrono::milliseconds timeout) {
  TranscriptResult result;
  std::ifstream in(transcript, std::ios::binary);
  if (!in) {
    result.failure = "cannot open transcript " + transcript.string();
    return result;
  }
  try {
    ChildProcess child(argv);
    std::string entry;
    std::size_t line_no = 0;
    while (std::getline(in, entry)) {
      ++line_no;
      if (entry.empty()) continue;
      if (entry.size() < 2 || entry[1] != ' ' || (entry[0] != '>' && entry[0] != '<')) {
        result.failure = "transcript line " + std::to_string(line_no) + " lacks a '> ' or '< ' prefix";
        return result;
      }
      const std::string_view payload = std::string_view(entry).substr(2);
      if (entry[0] == '>') {
        child.write_line(payload, timeout);
      } else {
        const std::string got = child.read_line(timeout);
        if (got != payload) {
          result.failure = "transcript line " + std::to_string(line_no) + " mismatch: expected " +
                           std::string(payload.substr(0, 160)) + " got " + got.substr(0, 160);
          return result;
        }
      }
      ++result.lines_checked;
    }
    child.terminate();
    result.passed = true;
  } catch (const Error& e) {
    result.failure = e.what();
  }
  return result;
}

}  // namespace drise
