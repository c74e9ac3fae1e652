#include "sonicgrid/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

namespace sonicgrid {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw FormatError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  (void)png;
  throw FormatError(std::string("png: ") + msg);
}
void png_warn(png_structp, png_const_charp) {}

GrayImage read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw FormatError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, f.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> raw(rowbytes * static_cast<std::size_t>(h));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = raw.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());

  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    const png_byte* row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      const png_byte* px = row + static_cast<std::size_t>(x) * static_cast<std::size_t>(channels);
      img.at(x, y) = channels >= 3 ? rec601_luma(px[0], px[1], px[2]) : px[0];
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const GrayImage& img) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw FormatError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, img.pixels().data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width()));
  }
  png_write_end(png, nullptr);
}

/// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(const std::vector<unsigned char>& buf, std::size_t& pos) {
  for (;;) {
    while (pos < buf.size() && std::isspace(buf[pos])) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < buf.size() && !std::isspace(buf[pos])) tok += static_cast<char>(buf[pos++]);
  return tok;
}

GrayImage read_pgm(const std::filesystem::path& path, const std::vector<unsigned char>& buf) {
  std::size_t pos = 0;
  const std::string magic = pnm_token(buf, pos);
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pnm_token(buf, pos));
    h = std::stoi(pnm_token(buf, pos));
    maxval = std::stoi(pnm_token(buf, pos));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw FormatError(path.string() + ": bad PGM dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> px(n);
  const auto scale = [maxval](long v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : std::lround(static_cast<double>(v) * 255.0 / maxval));
  };
  if (magic == "P5") {
    ++pos;  // single whitespace after maxval
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (buf.size() < pos + n * bps) throw FormatError(path.string() + ": truncated PGM data");
    for (std::size_t i = 0; i < n; ++i) {
      const long v = bps == 2 ? (buf[pos + 2 * i] << 8) | buf[pos + 2 * i + 1] : buf[pos + i];
      px[i] = scale(v);
    }
  } else if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string t = pnm_token(buf, pos);
      if (t.empty()) throw FormatError(path.string() + ": truncated PGM data");
      px[i] = scale(std::stol(t));
    }
  } else {
    throw FormatError(path.string() + ": not a PGM file");
  }
  return GrayImage(w, h, std::move(px));
}

}  // namespace

std::uint8_t rec601_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
}

GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> head(8);
  f.read(reinterpret_cast<char*>(head.data()), 8);
  if (f.gcount() == 8 && png_sig_cmp(head.data(), 0, 8) == 0) return read_png(path);
  f.clear();
  f.seekg(0);
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '5' || buf[1] == '2')) return read_pgm(path, buf);
  throw FormatError(path.string() + ": unsupported image format (PNG or PGM expected)");
}

void write_image(const std::filesystem::path& path, const GrayImage& img) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".pgm") {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string() + " for writing");
    f << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.size()));
    if (!f) throw FormatError("short write to " + path.string());
    return;
  }
  write_png(path, img);
}

}  // namespace sonicgrid
