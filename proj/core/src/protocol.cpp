// SPDX-License-Identifier: Apache-2.0
#include "drise/protocol.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "drise/error.hpp"
#include "drise/png_io.hpp"

namespace drise::protocol {
namespace {

using ojson = nlohmann::ordered_json;

std::string excerpt(std::string_view line) {
  constexpr std::size_t kMax = 160;
  if (line.size() <= kMax) return std::string(line);
  return std::string(line.substr(0, kMax)) + "...";
}

[[noreturn]] void fail(std::string_view what, std::string_view line) {
  throw ProtocolError(std::string(what) + " in line: " + excerpt(line));
}

ojson parse_object(std::string_view line) {
  ojson j = ojson::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) fail("malformed JSON", line);
  if (!j.is_object()) fail("expected a JSON object", line);
  if (!j.contains("type") || !j["type"].is_string()) fail("missing string field \"type\"", line);
  return j;
}

std::uint64_t parse_id(const ojson& j, std::string_view line) {
  if (!j.contains("id") || !j["id"].is_number_unsigned()) fail("missing unsigned integer \"id\"", line);
  return j["id"].get<std::uint64_t>();
}

double number(const ojson& v, std::string_view field, std::string_view line) {
  if (!v.is_number()) fail(std::string("non-numeric ") + std::string(field), line);
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(std::string("non-finite ") + std::string(field), line);
  return d;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 payload length is not a multiple of 4");
  if (text.empty()) return {};
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("invalid base64 payload");
  // EVP_DecodeBlock counts padding as zero bytes.
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string encode_handshake(const Handshake& hs) {
  ojson j;
  j["type"] = "handshake";
  j["protocol_version"] = hs.protocol_version;
  j["class_names"] = hs.class_names;
  j["has_objectness"] = hs.has_objectness;
  j["adapter_info"] = hs.adapter_info;
  return j.dump();
}

Handshake parse_handshake(std::string_view line) {
  const ojson j = parse_object(line);
  if (j["type"] != "handshake") fail("expected a handshake message", line);
  Handshake hs;
  if (!j.contains("protocol_version") || !j["protocol_version"].is_number_integer()) {
    fail("missing integer \"protocol_version\"", line);
  }
  hs.protocol_version = j["protocol_version"].get<int>();
  if (!j.contains("class_names") || !j["class_names"].is_array()) fail("missing array \"class_names\"", line);
  for (const auto& name : j["class_names"]) {
    if (!name.is_string()) fail("class name is not a string", line);
    hs.class_names.push_back(name.get<std::string>());
  }
  if (!j.contains("has_objectness") || !j["has_objectness"].is_boolean()) {
    fail("missing boolean \"has_objectness\"", line);
  }
  hs.has_objectness = j["has_objectness"].get<bool>();
  if (j.contains("adapter_info")) {
    if (!j["adapter_info"].is_string()) fail("\"adapter_info\" is not a string", line);
    hs.adapter_info = j["adapter_info"].get<std::string>();
  }
  try {
    hs.validate();
  } catch (const ProtocolError& e) {
    fail(e.what(), line);
  }
  return hs;
}

std::string encode_infer(std::uint64_t id, const Image& image) {
  ojson j;
  j["type"] = "infer";
  j["id"] = id;
  j["image_png_b64"] = base64_encode(encode_png(image));
  return j.dump();
}

InferRequest parse_infer(std::string_view line) {
  const ojson j = parse_object(line);
  if (j["type"] != "infer") fail("expected an infer request", line);
  InferRequest req;
  req.id = parse_id(j, line);
  if (!j.contains("image_png_b64") || !j["image_png_b64"].is_string()) fail("missing \"image_png_b64\"", line);
  try {
    req.image = decode_png(base64_decode(j["image_png_b64"].get_ref<const std::string&>()));
  } catch (const IoError& e) {
    fail(e.what(), line);
  }
  return req;
}

std::string encode_detections(std::uint64_t id, std::span<const DetectionVector> detections) {
  ojson list = ojson::array();
  for (const DetectionVector& d : detections) {
    ojson item;
    item["bbox"] = {d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2};
    item["objectness"] = d.objectness;
    item["scores"] = d.scores;
    list.push_back(std::move(item));
  }
  ojson j;
  j["type"] = "detections";
  j["id"] = id;
  j["detections"] = std::move(list);
  return j.dump();
}

DetectionsResponse parse_detections(std::string_view line, std::size_t class_count) {
  const ojson j = parse_object(line);
  if (j["type"] == "error") {
    std::string msg = j.contains("message") && j["message"].is_string() ? j["message"].get<std::string>() : "";
    throw ProtocolError("detector reported an error: " + msg);
  }
  if (j["type"] != "detections") fail("expected a detections message", line);
  DetectionsResponse resp;
  resp.id = parse_id(j, line);
  if (!j.contains("detections") || !j["detections"].is_array()) fail("missing array \"detections\"", line);
  for (const auto& item : j["detections"]) {
    if (!item.is_object()) fail("detection is not an object", line);
    DetectionVector d;
    if (!item.contains("bbox") || !item["bbox"].is_array() || item["bbox"].size() != 4) {
      fail("detection bbox must be [x1,y1,x2,y2]", line);
    }
    const auto& b = item["bbox"];
    d.bbox = {number(b[0], "bbox", line), number(b[1], "bbox", line), number(b[2], "bbox", line),
              number(b[3], "bbox", line)};
    // Detectors without an objectness head may omit the field.
    d.objectness = item.contains("objectness") ? number(item["objectness"], "objectness", line) : 1.0;
    if (!item.contains("scores") || !item["scores"].is_array()) fail("detection without \"scores\"", line);
    for (const auto& s : item["scores"]) d.scores.push_back(number(s, "score", line));
    if (d.scores.size() != class_count) {
      fail("score vector has " + std::to_string(d.scores.size()) + " entries, handshake declared " +
               std::to_string(class_count),
           line);
    }
    try {
      d.validate();
    } catch (const ContractError& e) {
      fail(e.what(), line);
    }
    resp.detections.push_back(std::move(d));
  }
  return resp;
}

std::string encode_error(std::optional<std::uint64_t> id, std::string_view message) {
  ojson j;
  j["type"] = "error";
  j["id"] = id ? ojson(*id) : ojson(nullptr);
  j["message"] = message;
  return j.dump();
}

int serve(Detector& detector, std::istream& in, std::ostream& out) {
  out << encode_handshake(detector.handshake()) << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::optional<std::uint64_t> id;
    try {
      if (line.size() > kMaxLineBytes) throw ProtocolError("request exceeds the maximum line length");
      // Recover the id first so that error replies can echo it.
      const ojson probe = ojson::parse(line, nullptr, false);
      if (probe.is_object() && probe.contains("id") && probe["id"].is_number_unsigned()) {
        id = probe["id"].get<std::uint64_t>();
      }
      const InferRequest req = parse_infer(line);
      const std::vector<DetectionVector> dets = detector.infer(req.image);
      out << encode_detections(req.id, dets) << '\n' << std::flush;
    } catch (const Error& e) {
      out << encode_error(id, e.what()) << '\n' << std::flush;
    }
  }
  return 0;
}

}  // namespace drise::protocol
