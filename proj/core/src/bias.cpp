// SPDX-License-Identifier: Apache-2.0
#include "drise/bias.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <nlohmann/json.hpp>
#include <optional>
#include <thread>

#include "drise/coco.hpp"
#include "drise/error.hpp"
#include "drise/png_io.hpp"

namespace drise {

MarkerSpec MarkerSpec::for_corner(Corner corner, std::int64_t category) {
  MarkerSpec spec;
  spec.corner = corner;
  spec.target_category = category;
  spec.color = corner == Corner::kTopLeft ? Rgb{0, 0, 255} : Rgb{255, 255, 0};
  return spec;
}

void MarkerSpec::validate() const {
  if (radius < 1) throw ConfigError("marker radius must be at least 1");
}

PixelPoint marker_center(const Image& image, const BBox& box, Corner corner) {
  const PixelRect r = round_to_pixels(box);
  const int x = corner == Corner::kTopLeft ? r.x : r.x + std::max(r.width, 1) - 1;
  return {std::clamp(x, 0, image.width() - 1), std::clamp(r.y, 0, image.height() - 1)};
}

void paint_disc(Image& image, PixelPoint center, int radius, Rgb color) {
  const long r2 = static_cast<long>(radius) * radius;
  for (int y = std::max(0, center.y - radius); y <= std::min(image.height() - 1, center.y + radius); ++y) {
    for (int x = std::max(0, center.x - radius); x <= std::min(image.width() - 1, center.x + radius); ++x) {
      const long dx = x - center.x, dy = y - center.y;
      if (dx * dx + dy * dy <= r2) image.set(x, y, color);
    }
  }
}

Image inject_marker(const Image& image, const BBox& box, const MarkerSpec& spec) {
  spec.validate();
  Image out = image;
  paint_disc(out, marker_center(image, box, spec.corner), spec.radius, spec.color);
  return out;
}

Image place_marker_free(const Image& image, PixelPoint position, const MarkerSpec& spec) {
  spec.validate();
  if (!image.inside(position.x, position.y)) throw ContractError("marker position lies outside the image");
  Image out = image;
  paint_disc(out, position, spec.radius, spec.color);
  return out;
}

std::string BiasReport::to_json() const {
  nlohmann::ordered_json j;
  j["modified_images"] = modified;
  j["copied_images"] = copied;
  j["markers_painted"] = markers;
  j["failures"] = failures;
  return j.dump(2);
}

BiasReport bias_dataset(const std::filesystem::path& annotations, const std::filesystem::path& images_dir,
                        const MarkerSpec& spec, const std::filesystem::path& out_dir, std::size_t jobs) {
  namespace fs = std::filesystem;
  spec.validate();
  const CocoDataset ds = CocoDataset::load(annotations);
  fs::create_directories(out_dir / "images");
  fs::copy_file(annotations, out_dir / "annotations.json", fs::copy_options::overwrite_existing);

  struct Outcome {
    bool modified = false;
    std::size_t markers = 0;
    std::optional<std::string> failure;
  };
  std::vector<Outcome> outcomes(ds.images.size());

  auto process = [&](std::size_t i) {
    const CocoImage& im = ds.images[i];
    Outcome& o = outcomes[i];
    std::vector<BBox> boxes;
    for (const CocoAnnotation& an : ds.annotations)
      if (an.image_id == im.id && an.category_id == spec.target_category) boxes.push_back(an.bbox);
    const fs::path src = images_dir / im.file_name;
    const fs::path dst = out_dir / "images" / im.file_name;
    try {
      if (!fs::exists(src)) throw IoError("missing image " + src.string());
      fs::create_directories(dst.parent_path());
      if (boxes.empty()) {
        fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
        return;
      }
      Image img = read_png(src);
      for (const BBox& b : boxes) paint_disc(img, marker_center(img, b, spec.corner), spec.radius, spec.color);
      write_png(dst, img);
      o.modified = true;
      o.markers = boxes.size();
    } catch (const std::exception& e) {
      o.failure = "image " + std::to_string(im.id) + ": " + e.what();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(ds.images.size(), 1));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < ds.images.size();) process(i);
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run);
  }

  BiasReport report;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (o.failure) {
      report.failures.push_back(*o.failure);
    } else if (o.modified) {
      report.modified.push_back(ds.images[i].id);
      report.markers += o.markers;
    } else {
      report.copied.push_back(ds.images[i].id);
    }
  }
  const std::string text = report.to_json();
  write_file(out_dir / "bias_report.json",
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return report;
}

}  // namespace drise
