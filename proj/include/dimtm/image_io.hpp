#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimtm/image.hpp"

namespace dimtm {

namespace detail {

inline Image image_from_bytes(const std::vector<uint8_t>& buf, int w, int h, int ch,
                              double maxval) {
  Image img(w, h, ch);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) img.channels[c](y, x) = buf[i++] / maxval;
  return img;
}

inline Image load_png(const std::string& path) {
  png_image pim{};
  pim.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pim, path.c_str()))
    throw std::runtime_error("failed to open PNG: " + path + " (" + pim.message + ")");
  bool color = (pim.format & PNG_FORMAT_FLAG_COLOR) != 0;
  pim.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(pim));
  if (!png_image_finish_read(&pim, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = pim.message;
    png_image_free(&pim);
    throw std::runtime_error("failed to decode PNG: " + path + " (" + msg + ")");
  }
  return image_from_bytes(buf, int(pim.width), int(pim.height), color ? 3 : 1, 255.0);
}

inline int pnm_next_int(std::istream& in) {
  // Skips whitespace and '#' comments between header tokens.
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  if (!in) throw std::runtime_error("malformed PNM header");
  return v;
}

inline Image load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("failed to open image: " + path);
  char p, kind;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6'))
    throw std::runtime_error("unsupported PNM type in " + path + " (binary P5/P6 only)");
  int ch = kind == '6' ? 3 : 1;
  int w = pnm_next_int(in);
  int h = pnm_next_int(in);
  int maxval = pnm_next_int(in);
  in.get();  // single whitespace before raster
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
    throw std::runtime_error("malformed PNM header in " + path);
  size_t count = size_t(w) * h * ch;
  if (maxval < 256) {
    std::vector<uint8_t> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(count));
    if (!in) throw std::runtime_error("truncated PNM data in " + path);
    return image_from_bytes(buf, w, h, ch, double(maxval));
  }
  std::vector<uint8_t> raw(count * 2);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!in) throw std::runtime_error("truncated PNM data in " + path);
  Image img(w, h, ch);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        int v = (raw[2 * i] << 8) | raw[2 * i + 1];  // big-endian
        img.channels[c](y, x) = v / double(maxval);
        ++i;
      }
  return img;
}

inline uint8_t to_byte(double v) {
  int q = int(std::lround(v * 255.0));
  return uint8_t(std::clamp(q, 0, 255));
}

}  // namespace detail

/// Reads only width/height, without decoding pixel data.
inline std::pair<int, int> image_dims(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = char(std::tolower(c));
  if (ext == ".png") {
    png_image pim{};
    pim.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&pim, path.c_str()))
      throw std::runtime_error("failed to open PNG: " + path);
    auto dims = std::make_pair(int(pim.width), int(pim.height));
    png_image_free(&pim);
    return dims;
  }
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("failed to open image: " + path);
    char p, kind;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '5' && kind != '6'))
      throw std::runtime_error("unsupported PNM type in " + path);
    int w = detail::pnm_next_int(in);
    int h = detail::pnm_next_int(in);
    return {w, h};
  }
  throw std::runtime_error("unsupported image format: " + path);
}

/// Loads a PNG / binary PPM / binary PGM file into a [0,1] float image.
inline Image load_image(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = char(std::tolower(c));
  if (ext == ".png") return detail::load_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return detail::load_pnm(path);
  throw std::runtime_error("unsupported image format: " + path);
}

inline void save_png(const Image& img, const std::string& path) {
  png_image pim{};
  pim.version = PNG_IMAGE_VERSION;
  pim.width = png_uint_32(img.width);
  pim.height = png_uint_32(img.height);
  pim.format = img.grayscale() ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  int ch = img.channel_count();
  std::vector<uint8_t> buf(size_t(img.width) * img.height * ch);
  size_t i = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < ch; ++c) buf[i++] = detail::to_byte(img.channels[c](y, x));
  if (!png_image_write_to_file(&pim, path.c_str(), 0, buf.data(), 0, nullptr))
    throw std::runtime_error("failed to write PNG: " + path + " (" + pim.message + ")");
}

inline void save_pnm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("failed to open for write: " + path);
  int ch = img.channel_count();
  out << (ch == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < ch; ++c) out.put(char(detail::to_byte(img.channels[c](y, x))));
  if (!out) throw std::runtime_error("failed to write: " + path);
}

inline void save_image(const Image& img, const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = char(std::tolower(c));
  if (ext == ".png")
    save_png(img, path);
  else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
    save_pnm(img, path);
  else
    throw std::runtime_error("unsupported image format: " + path);
}

}  // namespace dimtm
