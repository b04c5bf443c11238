// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drise {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (bad dimensions, index out of range, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A configuration cannot be honored, e.g. a mask grid that does not cover the image.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// The detector process misbehaved: malformed line, id mismatch, timeout, exit.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Saliency inference stopped because the detector failed part way through.
class ExplainAborted : public ProtocolError {
 public:
  ExplainAborted(const std::string& what, std::size_t masks_completed, std::size_t masks_total)
      : ProtocolError(what + " (after " + std::to_string(masks_completed) + " of " +
                      std::to_string(masks_total) + " masks)"),
        masks_completed_(masks_completed),
        masks_total_(masks_total) {}

  std::size_t masks_completed() const noexcept { return masks_completed_; }
  std::size_t masks_total() const noexcept { return masks_total_; }

 private:
  std::size_t masks_completed_;
  std::size_t masks_total_;
};

}  // namespace drise
