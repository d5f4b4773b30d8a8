#include "biomeval/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>

#include "biomeval/error.hpp"

namespace biomeval {
namespace {

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

}  // namespace

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&png};
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(ErrorCode::io, "cannot read PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    throw Error(ErrorCode::io, "cannot decode PNG " + path.string() + ": " + png.message);
  }

  Image img(png.height, png.width, channels);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        img.at(c, y, x) = buffer[(y * img.width + x) * channels + c];
      }
    }
  }
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::invalid_argument, "PNG output supports 1 or 3 channels");
  }
  if (image.empty()) throw Error(ErrorCode::invalid_argument, "cannot write an empty image");
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }

  std::vector<std::uint8_t> buffer(image.plane_size() * image.channels);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < image.channels; ++c) {
        const double v = std::clamp(std::round(image.at(c, y, x)), 0.0, 255.0);
        buffer[(y * image.width + x) * image.channels + c] = static_cast<std::uint8_t>(v);
      }
    }
  }

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  PngImageGuard guard{&png};
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw Error(ErrorCode::io, "cannot write PNG " + path.string() + ": " + png.message);
  }
}

}  // namespace biomeval
