#include "cov3d/image_io.hpp"

#include "cov3d/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace cov3d {

namespace {

int next_pnm_token(std::istream& in, std::string& token) {
  token.clear();
  int c;
  for (;;) {
    c = in.get();
    if (c == EOF) return 0;
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (!std::isspace(c)) break;
  }
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  return 1;
}

long parse_pnm_int(std::istream& in, const std::string& path) {
  std::string token;
  if (!next_pnm_token(in, token)) {
    throw CorruptFrameError(path + ": truncated PGM header");
  }
  try {
    std::size_t used = 0;
    const long value = std::stol(token, &used);
    if (used != token.size() || value < 0) throw std::invalid_argument("");
    return value;
  } catch (const std::exception&) {
    throw CorruptFrameError(path + ": bad PGM header token '" + token + "'");
  }
}

Frame load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  std::string magic;
  if (!next_pnm_token(in, magic) || magic != "P5") {
    throw CorruptFrameError(path + ": not a binary PGM (P5) file");
  }
  const long width = parse_pnm_int(in, path);
  const long height = parse_pnm_int(in, path);
  const long maxval = parse_pnm_int(in, path);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
    throw CorruptFrameError(path + ": bad PGM dimensions or maxval");
  }
  // exactly one whitespace byte separates the header from the raster,
  // already consumed by the tokenizer

  Frame frame;
  frame.width = static_cast<int>(width);
  frame.height = static_cast<int>(height);
  frame.pixels.resize(static_cast<std::size_t>(width) * height);

  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raster(frame.pixels.size() *
                                    static_cast<std::size_t>(bytes));
  in.read(reinterpret_cast<char*>(raster.data()),
          static_cast<std::streamsize>(raster.size()));
  if (static_cast<std::size_t>(in.gcount()) != raster.size()) {
    throw CorruptFrameError(path + ": truncated PGM raster");
  }
  const float maxval_f = static_cast<float>(maxval);
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    const unsigned value =
        bytes == 1 ? raster[i]
                   : (static_cast<unsigned>(raster[2 * i]) << 8) |
                         raster[2 * i + 1];  // big endian
    frame.pixels[i] = static_cast<float>(value) / maxval_f;
  }
  return frame;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;

  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

Frame load_png(const std::string& path) {
  PngReader reader;
  reader.file = std::fopen(path.c_str(), "rb");
  if (!reader.file) throw IoError(path + ": cannot open");

  unsigned char signature[8];
  if (std::fread(signature, 1, 8, reader.file) != 8 ||
      png_sig_cmp(signature, 0, 8) != 0) {
    throw CorruptFrameError(path + ": not a PNG file");
  }

  reader.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                      nullptr);
  if (!reader.png) throw IoError(path + ": png init failed");
  reader.info = png_create_info_struct(reader.png);
  if (!reader.info) throw IoError(path + ": png init failed");

  if (setjmp(png_jmpbuf(reader.png))) {
    throw CorruptFrameError(path + ": corrupt PNG data");
  }
  png_init_io(reader.png, reader.file);
  png_set_sig_bytes(reader.png, 8);
  png_read_info(reader.png, reader.info);

  const png_uint_32 width = png_get_image_width(reader.png, reader.info);
  const png_uint_32 height = png_get_image_height(reader.png, reader.info);
  const png_byte color_type = png_get_color_type(reader.png, reader.info);
  const png_byte bit_depth = png_get_bit_depth(reader.png, reader.info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(reader.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(reader.png);
  }
  if (bit_depth == 16) png_set_strip_16(reader.png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(reader.png);
  if (png_get_valid(reader.png, reader.info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(reader.png);
    png_set_strip_alpha(reader.png);
  }
  png_read_update_info(reader.png, reader.info);

  const png_size_t rowbytes = png_get_rowbytes(reader.png, reader.info);
  const int channels = png_get_channels(reader.png, reader.info);
  if (channels != 1 && channels != 3) {
    throw CorruptFrameError(path + ": unsupported PNG channel layout");
  }

  std::vector<unsigned char> raster(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = raster.data() + static_cast<std::size_t>(y) * rowbytes;
  }
  png_read_image(reader.png, rows.data());

  Frame frame;
  frame.width = static_cast<int>(width);
  frame.height = static_cast<int>(height);
  frame.pixels.resize(static_cast<std::size_t>(width) * height);
  for (png_uint_32 y = 0; y < height; ++y) {
    const unsigned char* row = rows[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      float value;
      if (channels == 1) {
        value = row[x] / 255.0f;
      } else {
        // Rec. 601 luma
        const float r = row[3 * x + 0] / 255.0f;
        const float g = row[3 * x + 1] / 255.0f;
        const float b = row[3 * x + 2] / 255.0f;
        value = 0.299f * r + 0.587f * g + 0.114f * b;
      }
      frame.pixels[static_cast<std::size_t>(y) * width + x] = value;
    }
  }
  return frame;
}

bool ends_with_ci(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    if (std::tolower(s[s.size() - suffix.size() + i]) !=
        std::tolower(suffix[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

Frame load_frame(const std::string& path) {
  if (ends_with_ci(path, ".pgm")) return load_pgm(path);
  if (ends_with_ci(path, ".png")) return load_png(path);
  throw CorruptFrameError(path + ": unsupported frame format");
}

void save_pgm(const std::string& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot write");
  out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  std::vector<unsigned char> raster(frame.pixels.size());
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    const float clamped = std::clamp(frame.pixels[i], 0.0f, 1.0f);
    raster[i] = static_cast<unsigned char>(std::lround(clamped * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError(path + ": write failed");
}

Frame resize_bilinear(const Frame& frame, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) {
    throw ConfigError("resize target must be positive");
  }
  Frame out;
  out.width = out_width;
  out.height = out_height;
  out.pixels.resize(static_cast<std::size_t>(out_width) * out_height);

  const double sx = static_cast<double>(frame.width) / out_width;
  const double sy = static_cast<double>(frame.height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    // pixel-center alignment
    const double src_y = (y + 0.5) * sy - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(src_y)), 0,
                              frame.height - 1);
    const int y1 = std::min(y0 + 1, frame.height - 1);
    const double fy = std::clamp(src_y - y0, 0.0, 1.0);
    for (int x = 0; x < out_width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(src_x)), 0,
                                frame.width - 1);
      const int x1 = std::min(x0 + 1, frame.width - 1);
      const double fx = std::clamp(src_x - x0, 0.0, 1.0);
      const double top = frame.at(x0, y0) * (1.0 - fx) + frame.at(x1, y0) * fx;
      const double bottom =
          frame.at(x0, y1) * (1.0 - fx) + frame.at(x1, y1) * fx;
      out.at(x, y) = static_cast<float>(top * (1.0 - fy) + bottom * fy);
    }
  }
  return out;
}

Frame crop_frame(const Frame& frame, int x1, int y1, int x2, int y2) {
  if (x1 < 0 || y1 < 0 || x2 < x1 || y2 < y1 || x2 >= frame.width ||
      y2 >= frame.height) {
    throw ConfigError("crop bounds out of range");
  }
  Frame out;
  out.width = x2 - x1 + 1;
  out.height = y2 - y1 + 1;
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.at(x, y) = frame.at(x1 + x, y1 + y);
    }
  }
  return out;
}

}  // namespace cov3d
