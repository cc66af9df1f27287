#include "ssta/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace ssta {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image planes_from_bytes(const std::vector<unsigned char>& bytes, int h, int w, int c) {
  Image img(h, w, c);
  std::size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) img(y, x, ch) = dequantize8(bytes[i++]);
  return img;
}

std::vector<unsigned char> bytes_from_planes(const Image& img) {
  std::vector<unsigned char> bytes(img.pixel_count() * static_cast<std::size_t>(img.channels));
  std::size_t i = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int ch = 0; ch < img.channels; ++ch)
        bytes[i++] = static_cast<unsigned char>(quantize8(img(y, x, ch)));
  return bytes;
}

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw io_error("cannot open file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw io_error("libpng initialization failed");
  }

  std::vector<unsigned char> bytes;
  // Locals read only on the non-longjmp path may still trip -Wclobbered;
  // volatile keeps them well-defined either way.
  volatile int h = 0, w = 0, c = 0;
  std::string error;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error("corrupt PNG stream: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 8) {
    error = "unsupported bit depth " + std::to_string(bit_depth) + " (want 8): " + path;
  } else if (color_type == PNG_COLOR_TYPE_GRAY) {
    c = 1;
  } else if (color_type == PNG_COLOR_TYPE_RGB) {
    c = 3;
  } else {
    error = "unsupported color type " + std::to_string(color_type) + " (want gray or RGB): " + path;
  }
  if (!error.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error(error);
  }

  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const std::size_t stride = png_get_rowbytes(png, info);
  bytes.resize(stride * static_cast<std::size_t>(h));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = bytes.data() + stride * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return planes_from_bytes(bytes, h, w, c);
}

void save_png(const Image& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw io_error("cannot open file for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw io_error("libpng initialization failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("PNG write failed: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<unsigned char> bytes = bytes_from_planes(img);
  const std::size_t stride = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] = bytes.data() + stride * static_cast<std::size_t>(y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// PNM header token reader: skips whitespace and '#' comments.
int read_pnm_int(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(ch)) throw format_error("malformed PNM header: " + path);
  int value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > 1 << 30) throw format_error("PNM header value out of range: " + path);
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return value;
}

Image load_pnm(const std::string& path, int channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  char magic[2];
  in.read(magic, 2);
  const int w = read_pnm_int(in, path);
  const int h = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (maxval != 255)
    throw format_error("unsupported maxval " + std::to_string(maxval) + " (want 255): " + path);
  in.get();  // single whitespace before the binary payload
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                        static_cast<std::size_t>(channels);
  std::vector<unsigned char> bytes(n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw format_error("truncated PNM payload: " + path);
  if (h < 1 || w < 1) throw format_error("invalid PNM dimensions: " + path);
  return planes_from_bytes(bytes, h, w, channels);
}

void save_pnm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open file for writing: " + path);
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  const std::vector<unsigned char> bytes = bytes_from_planes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("write failed: " + path);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw io_error("cannot open file: " + path);
  unsigned char sig[8] = {0};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (!png_sig_cmp(sig, 0, 8)) return load_png(path);
  if (sig[0] == 'P' && sig[1] == '6') return load_pnm(path, 3);
  if (sig[0] == 'P' && sig[1] == '5') return load_pnm(path, 1);
  throw format_error("unrecognized image container (want PNG, PPM P6 or PGM P5): " + path);
}

void save_image(const Image& img, const std::string& path) {
  if (has_suffix(path, ".png")) {
    save_png(img, path);
  } else if (has_suffix(path, ".ppm")) {
    if (img.channels != 3) throw format_error("PPM P6 requires a 3-channel image: " + path);
    save_pnm(img, path);
  } else if (has_suffix(path, ".pgm")) {
    if (img.channels != 1) throw format_error("PGM P5 requires a 1-channel image: " + path);
    save_pnm(img, path);
  } else {
    throw format_error("unsupported image extension (want .png/.ppm/.pgm): " + path);
  }
}

}  // namespace ssta
