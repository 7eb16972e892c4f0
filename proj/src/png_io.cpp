#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "proxipm/imaging.hpp"

namespace proxipm {

namespace {

struct FileHandle {
  std::FILE* fp = nullptr;
  explicit FileHandle(const std::string& path, const char* mode)
      : fp(std::fopen(path.c_str(), mode)) {}
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

}  // namespace

ImageTensor load_png(const std::string& path) {
  FileHandle file(path, "rb");
  if (!file.fp)
    throw std::runtime_error("load_png: cannot open '" + path + "'");

  png_byte header[8];
  if (std::fread(header, 1, 8, file.fp) != 8 ||
      png_sig_cmp(header, 0, 8) != 0)
    throw std::runtime_error("load_png: '" + path + "' is not a PNG file");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("load_png: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("load_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: failed reading '" + path + "'");
  }
  png_init_io(png, file.fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: '" + path + "' has bit depth " +
                             std::to_string(bit_depth) +
                             "; only 8-bit PNGs are supported");
  }
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(
        "load_png: '" + path +
        "' must be 8-bit grayscale or RGB (no palette/alpha)");
  }

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;

  std::vector<png_byte> row(static_cast<std::size_t>(w) * channels);
  ImageTensor img(channels, h, w);
  for (int i = 0; i < h; ++i) {
    png_read_row(png, row.data(), nullptr);
    for (int j = 0; j < w; ++j)
      for (int c = 0; c < channels; ++c)
        img.at(c, i, j) = row[static_cast<std::size_t>(j) * channels + c] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void save_png(const std::string& path, const ImageTensor& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("save_png: channels must be 1 or 3");
  const std::string tmp = path + ".tmp";
  {
    FileHandle file(tmp, "wb");
    if (!file.fp)
      throw std::runtime_error("save_png: cannot write '" + tmp + "'");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (!png) throw std::runtime_error("save_png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      throw std::runtime_error("save_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("save_png: failed writing '" + tmp + "'");
    }
    png_init_io(png, file.fp);
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(img.width) *
                              img.channels);
    for (int i = 0; i < img.height; ++i) {
      for (int j = 0; j < img.width; ++j)
        for (int c = 0; c < img.channels; ++c) {
          const double v = std::clamp(img.at(c, i, j), 0.0, 1.0);
          row[static_cast<std::size_t>(j) * img.channels + c] =
              static_cast<png_byte>(std::floor(v * 255.0 + 0.5));
        }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace proxipm
