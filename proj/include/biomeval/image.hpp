#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace biomeval {

/// Planar image with double-precision samples. Gray images have one plane, RGB
/// three. Pixel values read from 8-bit PNGs are the integers 0..255.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> data;  // index (c * height + y) * width + x

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  bool empty() const { return data.empty(); }
  std::size_t plane_size() const { return height * width; }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }

  std::span<double> plane(std::size_t c) {
    return {data.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(std::size_t c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }

  bool operator==(const Image&) const = default;
};

/// Reads an 8-bit PNG as gray (1 plane) or RGB (3 planes); alpha is dropped.
Image read_png(const std::filesystem::path& path);

/// Writes 8-bit gray or RGB. Samples are rounded to nearest and clamped to
/// [0, 255].
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace biomeval
