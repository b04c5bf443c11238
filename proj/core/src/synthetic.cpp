// SPDX-License-Identifier: Apache-2.0
#include "drise/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "drise/error.hpp"
#include "drise/masking.hpp"

namespace drise {
namespace {

double distance_sq(double r, double g, double b, Rgb c) {
  const double dr = r - c.r, dg = g - c.g, db = b - c.b;
  return dr * dr + dg * dg + db * db;
}

struct Component {
  int min_x, min_y, max_x, max_y;
  std::size_t area = 0;
  double sum_r = 0, sum_g = 0, sum_b = 0;
  double sum_x = 0, sum_y = 0;
  int label = 0;
};

// 4-connected components over a label image; pixels with label < 0 are background.
std::vector<Component> connected_components(const std::vector<int>& labels, const Image& image) {
  const int w = image.width(), h = image.height();
  std::vector<std::uint8_t> seen(labels.size(), 0);
  std::vector<int> stack;
  std::vector<Component> out;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t start = static_cast<std::size_t>(y0) * w + x0;
      if (labels[start] < 0 || seen[start]) continue;
      Component c{x0, y0, x0, y0};
      c.label = labels[start];
      seen[start] = 1;
      stack.assign(1, static_cast<int>(start));
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int x = idx % w, y = idx / w;
        const Rgb px = image.at(x, y);
        ++c.area;
        c.sum_r += px.r;
        c.sum_g += px.g;
        c.sum_b += px.b;
        c.sum_x += x + 0.5;
        c.sum_y += y + 0.5;
        c.min_x = std::min(c.min_x, x);
        c.max_x = std::max(c.max_x, x);
        c.min_y = std::min(c.min_y, y);
        c.max_y = std::max(c.max_y, y);
        const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& n : nbrs) {
          if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
          const std::size_t j = static_cast<std::size_t>(n[1]) * w + n[0];
          if (seen[j] || labels[j] != c.label) continue;
          seen[j] = 1;
          stack.push_back(static_cast<int>(j));
        }
      }
      out.push_back(c);
    }
  }
  return out;
}

DetectionVector parse_detection(const nlohmann::json& j) {
  DetectionVector d;
  const auto& b = j.at("bbox");
  if (!b.is_array() || b.size() != 4) throw ConfigError("echo detection bbox must have 4 numbers");
  d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  d.objectness = j.value("objectness", 1.0);
  d.scores = j.at("scores").get<std::vector<double>>();
  d.validate();
  return d;
}

}  // namespace

void RectangleDetectorParams::validate() const {
  if (class_names.empty()) throw ConfigError("synthetic detector needs at least one class");
  if (class_names.size() != class_colors.size()) throw ConfigError("class names and colors differ in length");
  if (!(tolerance > 0.0)) throw ConfigError("color tolerance must be positive");
  if (min_area < 1) throw ConfigError("min_area must be at least 1");
}

RectangleDetectorParams randomize_colors(RectangleDetectorParams params, std::uint64_t seed) {
  for (std::size_t c = 0; c < params.class_colors.size(); ++c) {
    const std::uint64_t h = counter_hash(seed, 0xC0104ull, c);
    params.class_colors[c] = {static_cast<std::uint8_t>(h & 0xFF), static_cast<std::uint8_t>((h >> 8) & 0xFF),
                              static_cast<std::uint8_t>((h >> 16) & 0xFF)};
  }
  return params;
}

RectangleDetector::RectangleDetector(RectangleDetectorParams params) : params_(std::move(params)) {
  params_.validate();
  handshake_.class_names = params_.class_names;
  handshake_.has_objectness = true;
  std::ostringstream info;
  info << "builtin synthetic rectangle detector; color tolerance " << params_.tolerance << ", min area "
       << params_.min_area << " px; no score threshold, no NMS; no background class";
  handshake_.adapter_info = info.str();
}

std::vector<DetectionVector> RectangleDetector::detect(const Image& image) const {
  const std::size_t n = image.pixel_count();
  const double tol_sq = params_.tolerance * params_.tolerance;
  std::vector<int> labels(n, -1);
  auto px = image.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
    double best = tol_sq;
    for (std::size_t c = 0; c < params_.class_colors.size(); ++c) {
      const double d = distance_sq(r, g, b, params_.class_colors[c]);
      if (d <= best) {
        best = d;
        labels[i] = static_cast<int>(c);
      }
    }
  }

  std::vector<DetectionVector> out;
  for (const Component& comp : connected_components(labels, image)) {
    if (comp.area < static_cast<std::size_t>(params_.min_area)) continue;
    DetectionVector d;
    d.bbox = {static_cast<double>(comp.min_x), static_cast<double>(comp.min_y), comp.max_x + 1.0, comp.max_y + 1.0};
    d.objectness = static_cast<double>(comp.area) / d.bbox.area();
    const double mr = comp.sum_r / comp.area, mg = comp.sum_g / comp.area, mb = comp.sum_b / comp.area;
    d.scores.resize(params_.class_colors.size());
    for (std::size_t c = 0; c < d.scores.size(); ++c) {
      const double dist = std::sqrt(distance_sq(mr, mg, mb, params_.class_colors[c]));
      d.scores[c] = std::clamp(1.0 - dist / (2.0 * params_.tolerance), 0.0, 1.0);
    }
    out.push_back(std::move(d));
  }
  return out;
}

BiasedDetector::BiasedDetector(BiasedDetectorParams params) : params_(std::move(params)), base_(params_.base) {
  if (params_.marker_radius < 1) throw ConfigError("marker radius must be at least 1");
  if (params_.trigger_class >= params_.base.class_names.size()) throw ConfigError("trigger class out of range");
  handshake_ = base_.handshake();
  std::ostringstream info;
  info << "builtin synthetic biased detector; " << handshake_.adapter_info << "; marker rgb("
       << int(params_.marker_color.r) << "," << int(params_.marker_color.g) << "," << int(params_.marker_color.b)
       << ") radius " << params_.marker_radius << " triggers class '"
       << params_.base.class_names[params_.trigger_class] << "'";
  handshake_.adapter_info = info.str();
}

std::vector<DetectionVector> BiasedDetector::detect(const Image& image) const {
  std::vector<DetectionVector> out = base_.detect(image);

  const std::size_t n = image.pixel_count();
  const double tol_sq = params_.marker_tolerance * params_.marker_tolerance;
  std::vector<int> labels(n, -1);
  auto px = image.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (distance_sq(px[3 * i], px[3 * i + 1], px[3 * i + 2], params_.marker_color) <= tol_sq) labels[i] = 0;
  }
  const double r = params_.marker_radius;
  const double disc_area = M_PI * r * r;
  const auto min_area = static_cast<std::size_t>(std::max(4.0, 0.25 * disc_area));
  for (const Component& comp : connected_components(labels, image)) {
    if (comp.area < min_area) continue;
    const double cx = comp.sum_x / comp.area, cy = comp.sum_y / comp.area;
    DetectionVector d;
    d.bbox = {std::max(0.0, cx - 2 * r), std::max(0.0, cy - 2 * r), std::min<double>(image.width(), cx + 2 * r),
              std::min<double>(image.height(), cy + 2 * r)};
    d.objectness = std::min(1.0, comp.area / disc_area);
    const double mr = comp.sum_r / comp.area, mg = comp.sum_g / comp.area, mb = comp.sum_b / comp.area;
    const double dist = std::sqrt(distance_sq(mr, mg, mb, params_.marker_color));
    d.scores.assign(params_.base.class_names.size(), 0.0);
    d.scores[params_.trigger_class] = std::clamp(1.0 - dist / (2.0 * params_.marker_tolerance), 0.0, 1.0);
    out.push_back(std::move(d));
  }
  return out;
}

EchoDetector::EchoDetector(Handshake handshake, std::vector<DetectionVector> detections)
    : handshake_(std::move(handshake)), detections_(std::move(detections)) {
  try {
    handshake_.validate();
  } catch (const ProtocolError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& d : detections_) {
    d.validate();
    if (d.class_count() != handshake_.class_count()) throw ConfigError("echo detection score length != class count");
  }
}

EchoDetector EchoDetector::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    Handshake hs;
    hs.class_names = j.at("class_names").get<std::vector<std::string>>();
    hs.has_objectness = j.value("has_objectness", true);
    hs.adapter_info = j.value("adapter_info", std::string("echo detector"));
    std::vector<DetectionVector> dets;
    for (const auto& d : j.value("detections", nlohmann::json::array())) dets.push_back(parse_detection(d));
    return EchoDetector(std::move(hs), std::move(dets));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const ContractError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Image make_background(std::uint64_t seed, int width, int height) {
  Image img(width, height);
  auto px = img.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(30 + counter_hash(seed, 0xB6ull, i) % 71);
  }
  return img;
}

RectangleFixture make_rectangle_fixture(std::uint64_t seed, int size, const RectangleDetectorParams& params) {
  params.validate();
  if (size < 32) throw ContractError("fixture images must be at least 32 px");
  RectangleFixture f;
  f.image = make_background(seed, size, size);
  const int margin = 4;
  const int min_side = std::max(4, size * 14 / 64);
  const int max_side = std::max(min_side, size * 24 / 64);
  const int side = min_side + static_cast<int>(counter_hash(seed, 0x5D1ull) % (max_side - min_side + 1));
  const int span = size - 2 * margin - side;
  const int x = margin + static_cast<int>(counter_hash(seed, 0x5D2ull) % (span + 1));
  const int y = margin + static_cast<int>(counter_hash(seed, 0x5D3ull) % (span + 1));
  f.class_index = counter_hash(seed, 0x5D4ull) % params.class_colors.size();
  const Rgb color = params.class_colors[f.class_index];
  for (int yy = y; yy < y + side; ++yy)
    for (int xx = x; xx < x + side; ++xx) f.image.set(xx, yy, color);
  f.box = {static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + side),
           static_cast<double>(y + side)};
  return f;
}

}  // namespace drise
