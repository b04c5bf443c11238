// SPDX-License-Identifier: Apache-2.0
#pragma once

// Line-delimited JSON protocol between the engine and a detector process.
//
//   detector -> engine  {"type":"handshake","protocol_version":1,"class_names":[...],
//                        "has_objectness":true,"adapter_info":"..."}
//   engine -> detector  {"type":"infer","id":<u64>,"image_png_b64":"<base64 PNG>"}
//   detector -> engine  {"type":"detections","id":<u64>,"detections":[
//                          {"bbox":[x1,y1,x2,y2],"objectness":o,"scores":[...]}]}
//   detector -> engine  {"type":"error","id":<u64 or null>,"message":"..."}
//
// One JSON object per line, UTF-8, '\n' terminated. Encoders below return the line
// without the terminator.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drise/detector.hpp"

namespace drise::protocol {

inline constexpr std::size_t kMaxLineBytes = 64u << 20;

/// Standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_handshake(const Handshake& hs);
/// Throws ProtocolError naming the offending line.
Handshake parse_handshake(std::string_view line);

std::string encode_infer(std::uint64_t id, const Image& image);

struct InferRequest {
  std::uint64_t id = 0;
  Image image;
};
InferRequest parse_infer(std::string_view line);

std::string encode_detections(std::uint64_t id, std::span<const DetectionVector> detections);

struct DetectionsResponse {
  std::uint64_t id = 0;
  std::vector<DetectionVector> detections;
};
/// Validates every detection against `class_count`. A well-formed "error" message
/// from the detector is also surfaced as ProtocolError.
DetectionsResponse parse_detections(std::string_view line, std::size_t class_count);

std::string encode_error(std::optional<std::uint64_t> id, std::string_view message);

/// Blocking server loop: writes the handshake, then answers each infer request in
/// order until EOF. Malformed requests get an error line and the loop continues.
/// Returns 0 at clean EOF.
int serve(Detector& detector, std::istream& in, std::ostream& out);

}  // namespace drise::protocol
