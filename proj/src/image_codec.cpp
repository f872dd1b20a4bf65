#include <csetjmp>
#include <cstdio>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "uwcl/dataset.hpp"

namespace uwcl {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

RasterImage load_png_file(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) {
    throw DatasetError(DatasetFault::IoFailure, "cannot open " + path.string());
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DatasetError(DatasetFault::IoFailure,
                       "png decode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  RasterImage img = RasterImage::create(
      static_cast<int>(png_get_image_width(png, info)),
      static_cast<int>(png_get_image_height(png, info)));
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = img.at(0, y);
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

RasterImage load_jpeg_file(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) {
    throw DatasetError(DatasetFault::IoFailure, "cannot open " + path.string());
  }
  jpeg_decompress_struct cinfo{};
  jpeg_error_mgr jerr{};
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  RasterImage img = RasterImage::create(static_cast<int>(cinfo.output_width),
                                        static_cast<int>(cinfo.output_height));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.at(0, static_cast<int>(cinfo.output_scanline));
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

RasterImage load_raster(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return load_png_file(path);
  if (ext == ".jpg" || ext == ".jpeg") return load_jpeg_file(path);
  throw DatasetError(DatasetFault::IoFailure,
                     "unsupported image format: " + path.string());
}

void save_png(const RasterImage& img, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) {
    throw DatasetError(DatasetFault::IoFailure, "cannot write " + path.string());
  }
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DatasetError(DatasetFault::IoFailure,
                       "png encode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(img.at(0, y));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace uwcl
