#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "bsup/datapipe.hpp"
#include "bsup/errors.hpp"

namespace bsup {

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

GrayImage load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError(path.string() + ": not a PNG file");

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }

  GrayImage img;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  std::string failure;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": " + (failure.empty() ? message : failure));
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    failure = "only single-channel grayscale PNGs are supported";
    png_error(png, failure.c_str());
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const int out_depth = depth == 16 ? 16 : 8;
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img = GrayImage(width, height, 0.0, out_depth);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      if (out_depth == 16) {
        const png_byte* p = rows[y] + 2 * x;
        img.at(x, y) = static_cast<double>((p[0] << 8) | p[1]) / 65535.0;
      } else {
        img.at(x, y) = static_cast<double>(rows[y][x]) / 255.0;
      }
    }
  return img;
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  const bool wide = img.bit_depth_origin == 16;
  const std::size_t bpp = wide ? 2 : 1;
  std::vector<png_byte> buffer(img.width * img.height * bpp);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    if (wide) {
      const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
      buffer[2 * i] = static_cast<png_byte>(q >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(q & 0xFF);
    } else {
      buffer[i] = static_cast<png_byte>(std::lround(v * 255.0));
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = buffer.data() + y * img.width * bpp;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string() + ": " + message);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), wide ? 16 : 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Next whitespace-separated PNM header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P2") throw FormatError(path.string() + ": only P2/P5 grayscale PGM is supported");
  std::size_t w = 0, h = 0;
  unsigned long maxval = 0;
  try {
    w = std::stoul(pnm_token(in));
    h = std::stoul(pnm_token(in));
    maxval = std::stoul(pnm_token(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw FormatError(path.string() + ": invalid PGM header");

  GrayImage img(w, h, 0.0, maxval > 255 ? 16 : 8);
  const auto scale = static_cast<double>(maxval);
  if (magic == "P5") {
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(w * h * bpp);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw FormatError(path.string() + ": truncated PGM data");
    for (std::size_t i = 0; i < w * h; ++i) {
      const unsigned v = bpp == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
      if (v > maxval) throw FormatError(path.string() + ": sample exceeds maxval");
      img.pixels[i] = v / scale;
    }
  } else {
    for (std::size_t i = 0; i < w * h; ++i) {
      const std::string tok = pnm_token(in);
      if (tok.empty()) throw FormatError(path.string() + ": truncated PGM data");
      const unsigned long v = std::stoul(tok);
      if (v > maxval) throw FormatError(path.string() + ": sample exceeds maxval");
      img.pixels[i] = static_cast<double>(v) / scale;
    }
  }
  return img;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const bool wide = img.bit_depth_origin == 16;
  out << "P5\n" << img.width << " " << img.height << "\n" << (wide ? 65535 : 255) << "\n";
  std::vector<unsigned char> raw;
  raw.reserve(img.pixels.size() * (wide ? 2 : 1));
  for (double p : img.pixels) {
    const double v = std::clamp(p, 0.0, 1.0);
    if (wide) {
      const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
      raw.push_back(static_cast<unsigned char>(q >> 8));
      raw.push_back(static_cast<unsigned char>(q & 0xFF));
    } else {
      raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm") return load_pgm(path);
  throw FormatError(path.string() + ": unsupported image format (expected .png or .pgm)");
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  if (img.bit_depth_origin != 8 && img.bit_depth_origin != 16)
    throw FormatError("bit depth must be 8 or 16, got " + std::to_string(img.bit_depth_origin));
  const std::string ext = lower_extension(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".pgm") return save_pgm(img, path);
  throw FormatError(path.string() + ": unsupported image format (expected .png or .pgm)");
}

}  // namespace bsup
