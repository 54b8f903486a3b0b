#include "spnp/image_io.hpp"

#include "spnp/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace spnp {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageTensor read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageTensor img(Shape{static_cast<int>(height), static_cast<int>(width), channels});
  const double maxval = out_depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 i = 0; i < height; ++i) {
    for (png_uint_32 j = 0; j < width; ++j) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t k = static_cast<std::size_t>(j) * channels + c;
        double v = 0.0;
        if (out_depth == 16) {
          v = (rows[i][2 * k] << 8) | rows[i][2 * k + 1];
        } else {
          v = rows[i][k];
        }
        img(c, static_cast<int>(i), static_cast<int>(j)) = v / maxval;
      }
    }
  }
  return img;
}

void write_png(const ImageTensor& x, const std::filesystem::path& path, int bit_depth) {
  if (x.channels() != 1 && x.channels() != 3) throw IoError("PNG export needs 1 or 3 channels");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  const int bytes = bit_depth == 16 ? 2 : 1;
  const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
  const int C = x.channels();
  std::vector<png_byte> buf(static_cast<std::size_t>(x.height()) * x.width() * C * bytes);
  for (int i = 0; i < x.height(); ++i) {
    for (int j = 0; j < x.width(); ++j) {
      for (int c = 0; c < C; ++c) {
        const double v = std::clamp(x(c, i, j), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * maxval));
        const std::size_t k = ((static_cast<std::size_t>(i) * x.width() + j) * C + c) * bytes;
        if (bytes == 2) {
          buf[k] = static_cast<png_byte>(q >> 8);
          buf[k + 1] = static_cast<png_byte>(q & 0xff);
        } else {
          buf[k] = static_cast<png_byte>(q);
        }
      }
    }
  }
  std::vector<png_bytep> rows(x.height());
  for (int i = 0; i < x.height(); ++i) rows[i] = buf.data() + static_cast<std::size_t>(i) * x.width() * C * bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, x.width(), x.height(), bit_depth == 16 ? 16 : 8,
               C == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// PNM header tokens, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

ImageTensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw IoError("unsupported PNM magic '" + magic + "' in " + path.string());
  }
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  int w = 0;
  int h = 0;
  long maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stol(next_token(in));
  } catch (const std::exception&) {
    throw IoError("malformed PNM header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError("bad PNM header in " + path.string());
  ImageTensor img(Shape{h, w, channels});
  const bool binary = magic == "P5" || magic == "P6";
  const int bytes = maxval > 255 ? 2 : 1;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int c = 0; c < channels; ++c) {
        long v = 0;
        if (binary) {
          unsigned char b[2] = {0, 0};
          in.read(reinterpret_cast<char*>(b), bytes);
          if (!in) throw IoError("truncated PNM data in " + path.string());
          v = bytes == 2 ? (b[0] << 8) | b[1] : b[0];
        } else {
          const std::string t = next_token(in);
          if (t.empty()) throw IoError("truncated PNM data in " + path.string());
          v = std::stol(t);
        }
        img(c, i, j) = static_cast<double>(v) / static_cast<double>(maxval);
      }
    }
  }
  return img;
}

void write_pnm(const ImageTensor& x, const std::filesystem::path& path, int bit_depth) {
  if (x.channels() != 1 && x.channels() != 3) throw IoError("PNM export needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const long maxval = bit_depth == 16 ? 65535 : 255;
  out << (x.channels() == 3 ? "P6" : "P5") << '\n' << x.width() << ' ' << x.height() << '\n' << maxval << '\n';
  for (int i = 0; i < x.height(); ++i) {
    for (int j = 0; j < x.width(); ++j) {
      for (int c = 0; c < x.channels(); ++c) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(x(c, i, j), 0.0, 1.0) * maxval));
        if (maxval > 255) out.put(static_cast<char>(q >> 8));
        out.put(static_cast<char>(q & 0xff));
      }
    }
  }
}

}  // namespace

ImageTensor read_image(const std::filesystem::path& path) {
  const std::string e = lower_ext(path);
  if (e == ".png") return read_png(path);
  if (e == ".pgm" || e == ".ppm" || e == ".pnm") return read_pnm(path);
  throw IoError("unsupported image format: " + path.string());
}

void write_image(const ImageTensor& x, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ParameterError("bit depth must be 8 or 16");
  const std::string e = lower_ext(path);
  if (e == ".png") return write_png(x, path, bit_depth);
  if (e == ".pgm" || e == ".ppm" || e == ".pnm") return write_pnm(x, path, bit_depth);
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace spnp
