// SPDX-License-Identifier: Apache-2.0
#include "drise/coco.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "drise/error.hpp"

namespace drise {

CocoDataset CocoDataset::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

CocoDataset CocoDataset::parse(const std::string& text) {
  CocoDataset ds;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    for (const auto& im : j.value("images", nlohmann::json::array())) {
      ds.images.push_back({im.at("id").get<std::int64_t>(), im.at("file_name").get<std::string>(),
                           im.value("width", 0), im.value("height", 0)});
    }
    for (const auto& an : j.value("annotations", nlohmann::json::array())) {
      const auto& b = an.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ConfigError("annotation bbox must be [x,y,w,h]");
      const double w = b[2].get<double>(), h = b[3].get<double>();
      if (w < 0 || h < 0) throw ConfigError("annotation bbox has negative size");
      ds.annotations.push_back({an.at("image_id").get<std::int64_t>(),
                                bbox_from_xywh(b[0].get<double>(), b[1].get<double>(), w, h),
                                an.at("category_id").get<std::int64_t>()});
    }
    for (const auto& c : j.value("categories", nlohmann::json::array())) {
      ds.categories.push_back({c.at("id").get<std::int64_t>(), c.value("name", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid annotation file: ") + e.what());
  }
  return ds;
}

std::string CocoDataset::to_json() const {
  nlohmann::ordered_json j;
  j["images"] = nlohmann::ordered_json::array();
  for (const auto& im : images) {
    j["images"].push_back({{"id", im.id}, {"file_name", im.file_name}, {"width", im.width}, {"height", im.height}});
  }
  j["annotations"] = nlohmann::ordered_json::array();
  for (const auto& an : annotations) {
    j["annotations"].push_back({{"image_id", an.image_id},
                                {"bbox", {an.bbox.x1, an.bbox.y1, an.bbox.width(), an.bbox.height()}},
                                {"category_id", an.category_id}});
  }
  j["categories"] = nlohmann::ordered_json::array();
  for (const auto& c : categories) j["categories"].push_back({{"id", c.id}, {"name", c.name}});
  return j.dump(2);
}

std::optional<std::size_t> CocoDataset::class_index(std::int64_t category_id) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i].id == category_id) return i;
  return std::nullopt;
}

std::vector<CocoAnnotation> CocoDataset::annotations_for(std::int64_t image_id) const {
  std::vector<CocoAnnotation> out;
  for (const auto& an : annotations)
    if (an.image_id == image_id) out.push_back(an);
  return out;
}

}  // namespace drise
