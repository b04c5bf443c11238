// SPDX-License-Identifier: Apache-2.0
#pragma once

// Subset of the COCO annotation format:
//   {"images":[{"id","file_name","width","height"}],
//    "annotations":[{"image_id","bbox":[x,y,w,h],"category_id"}],
//    "categories":[{"id","name"}]}
// Boxes are converted to corner form on load. Class indices follow the order of
// the "categories" array.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drise/types.hpp"

namespace drise {

struct CocoImage {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct CocoAnnotation {
  std::int64_t image_id = 0;
  BBox bbox;
  std::int64_t category_id = 0;
};

struct CocoCategory {
  std::int64_t id = 0;
  std::string name;
};

struct CocoDataset {
  std::vector<CocoImage> images;
  std::vector<CocoAnnotation> annotations;
  std::vector<CocoCategory> categories;

  /// Throws IoError if the file is unreadable and ConfigError if it does not parse.
  static CocoDataset load(const std::filesystem::path& path);
  static CocoDataset parse(const std::string& text);
  std::string to_json() const;

  /// Position of the category in `categories`.
  std::optional<std::size_t> class_index(std::int64_t category_id) const;
  /// Annotations of one image in file order.
  std::vector<CocoAnnotation> annotations_for(std::int64_t image_id) const;
};

}  // namespace drise
