// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "drise/image.hpp"
#include "drise/types.hpp"

namespace drise {

inline constexpr int kProtocolVersion = 1;

/// First message of every detector session.
struct Handshake {
  int protocol_version = kProtocolVersion;
  std::vector<std::string> class_names;
  bool has_objectness = true;
  /// Free-form description of the model, thresholds and NMS settings.
  std::string adapter_info;

  std::size_t class_count() const noexcept { return class_names.size(); }
  /// Throws ProtocolError for a wrong version or an empty class list.
  void validate() const;

  bool operator==(const Handshake&) const = default;
};

/// Image in, proposals out. Nothing else about the model is visible.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual const Handshake& handshake() const = 0;
  virtual std::vector<DetectionVector> infer(const Image& image) = 0;

  /// True when infer() may be called from several threads at once.
  virtual bool thread_safe() const noexcept { return false; }
};

/// Set of detector sessions the engine can drive concurrently. A thread-safe
/// detector may be shared by every slot; otherwise each slot owns its own session.
class DetectorPool {
 public:
  DetectorPool() = default;
  explicit DetectorPool(std::vector<std::shared_ptr<Detector>> members);

  /// `slots` references to one thread-safe detector.
  static DetectorPool shared(std::shared_ptr<Detector> detector, std::size_t slots);

  std::size_t size() const noexcept { return members_.size(); }
  Detector& operator[](std::size_t i) const { return *members_[i]; }
  const Handshake& handshake() const;

 private:
  std::vector<std::shared_ptr<Detector>> members_;
};

}  // namespace drise
