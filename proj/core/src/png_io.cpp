// SPDX-License-Identifier: Apache-2.0
#include "drise/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "drise/error.hpp"

namespace drise {

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw ContractError("cannot encode an empty image");
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width());
  desc.height = static_cast<png_uint_32>(image.height());
  desc.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, image.data().data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + desc.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, image.data().data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + desc.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw IoError(std::string("png decode failed: ") + desc.message);
  }
  desc.format = PNG_FORMAT_RGB;
  if (desc.width == 0 || desc.height == 0 || desc.width > (1u << 16) || desc.height > (1u << 16)) {
    png_image_free(&desc);
    throw IoError("png has unsupported dimensions");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(desc));
  // Composite any alpha onto black so transparent areas read as masked.
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&desc, &black, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("png decode failed: ") + desc.message);
  }
  return Image(static_cast<int>(desc.width), static_cast<int>(desc.height), std::move(pixels));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Image read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Image& image) { write_file(path, encode_png(image)); }

}  // namespace drise
