#include "mvpt/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "mvpt/errors.hpp"

namespace mvpt {

namespace {

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G',
                                            '\r', '\n', 0x1a, '\n'};

BinaryMask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MaskDecodeError("cannot open mask file: " + path.string());

  auto next_token = [&](const char* what) -> std::string {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {  // comment to end of line
        while (in.get(c) && c != '\n') {
        }
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(c);
    }
    if (tok.empty())
      throw MaskDecodeError(path.string() + ": truncated PGM header (" +
                            what + ")");
    return tok;
  };

  if (next_token("magic") != "P5")
    throw MaskDecodeError(path.string() + ": not a binary PGM (P5) file");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token("width"));
    height = std::stoi(next_token("height"));
    maxval = std::stoi(next_token("maxval"));
  } catch (const std::exception&) {
    throw MaskDecodeError(path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0)
    throw MaskDecodeError(path.string() + ": non-positive PGM dimensions");
  if (maxval <= 0 || maxval > 255)
    throw MaskDecodeError(path.string() + ": only 8-bit PGM is supported");

  std::vector<char> data(static_cast<size_t>(width) * height);
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    throw MaskDecodeError(path.string() + ": truncated PGM pixel data");

  BinaryMask mask = BinaryMask::zeros(width, height);
  for (size_t i = 0; i < data.size(); ++i)
    mask.foreground[i] = (static_cast<unsigned char>(data[i]) != 0) ? 1 : 0;
  return mask;
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

BinaryMask read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw MaskDecodeError("cannot open mask file: " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw MaskDecodeError(path.string() + ": libpng initialization failed");
  }

  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw MaskDecodeError(path.string() + ": PNG decode failed");
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_COLOR)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  pixels.resize(static_cast<size_t>(width) * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y)
    rows[y] = pixels.data() + static_cast<size_t>(y) * width;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  BinaryMask mask = BinaryMask::zeros(static_cast<int>(width),
                                      static_cast<int>(height));
  for (size_t i = 0; i < pixels.size(); ++i)
    mask.foreground[i] = (pixels[i] != 0) ? 1 : 0;
  return mask;
}

}  // namespace

BinaryMask read_mask(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw MaskDecodeError("cannot open mask file: " + path.string());
  unsigned char magic[8] = {0};
  probe.read(reinterpret_cast<char*>(magic), sizeof(magic));
  probe.close();

  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (std::memcmp(magic, kPngSignature, 8) == 0) return read_png(path);
  throw MaskDecodeError(path.string() +
                        ": unrecognized mask format (expected PGM P5 or PNG)");
}

void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MaskDecodeError("cannot write mask file: " + path.string());
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  std::vector<char> data(mask.foreground.size());
  for (size_t i = 0; i < data.size(); ++i)
    data[i] = mask.foreground[i] ? static_cast<char>(0xFF) : 0;
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw MaskDecodeError("cannot write mask file: " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw MaskDecodeError(path.string() + ": libpng initialization failed");
  }

  std::vector<png_byte> pixels(mask.foreground.size());
  std::vector<png_bytep> rows(mask.height);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw MaskDecodeError(path.string() + ": PNG encode failed");
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, mask.width, mask.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (size_t i = 0; i < pixels.size(); ++i)
    pixels[i] = mask.foreground[i] ? 255 : 0;
  for (int y = 0; y < mask.height; ++y)
    rows[y] = pixels.data() + static_cast<size_t>(y) * mask.width;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace mvpt
