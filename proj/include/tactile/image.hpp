#pragma once

#include <png.h>

#include <filesystem>
#include <array>
#include <vector>

#include "tactile/common.hpp"

namespace tactile {

/// 8-bit RGB image, row-major, interleaved channels.
struct RgbImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0}) : width(w), height(h) {
    data.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    for (std::size_t i = 0; i < data.size(); i += 3)
      for (std::size_t c = 0; c < 3; ++c) data[i + c] = fill[c];
  }

  std::uint8_t at(int r, int c, int ch) const { return data[offset(r, c) + static_cast<std::size_t>(ch)]; }
  std::uint8_t& at(int r, int c, int ch) { return data[offset(r, c) + static_cast<std::size_t>(ch)]; }
  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t offset(int r, int c) const {
    return (static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)) * 3;
  }
};

/// Single-channel double image, row-major.
struct GrayImage {
  int width = 0, height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)]; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)]; }
};

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
inline GrayImage luma(const RgbImage& img) {
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] + 0.114 * img.data[3 * i + 2];
  return out;
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  require(img.width > 0 && img.height > 0, ErrorCode::InvalidArgument, "cannot write an empty image");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  const int ok = png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr);
  const std::string message = image.message;
  png_image_free(&image);
  require(ok != 0, ErrorCode::Io, "cannot write " + path.string() + ": " + message);
}

/// Reads any PNG and converts it to 8-bit RGB (alpha is composited onto black).
inline RgbImage read_png(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorCode::MissingFile, "missing " + path.string(), {path.string()});
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::Parse, "cannot read " + path.string() + ": " + message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  png_color black{0, 0, 0};
  const int ok = png_image_finish_read(&image, &black, img.data.data(), 0, nullptr);
  const std::string message = image.message;
  png_image_free(&image);
  require(ok != 0, ErrorCode::Parse, "cannot decode " + path.string() + ": " + message);
  return img;
}

}  // namespace tactile
