#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "eegtopo/topomap.hpp"
#include "eegtopo/types.hpp"

namespace eegtopo {
namespace detail {

inline void png_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

inline void png_chunk(std::vector<unsigned char>& out, const char type[4],
                      const std::vector<unsigned char>& payload) {
  png_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, out.data() + crc_start,
              static_cast<uInt>(out.size() - crc_start)));
  png_be32(out, crc);
}

}  // namespace detail

// 8-bit RGB PNG, no interlacing, filter type 0 on every scanline.
inline void save_png_rgb(const std::string& path, int width, int height,
                         const std::vector<unsigned char>& rgb) {
  if (width <= 0 || height <= 0 ||
      rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw ConfigError("png: pixel buffer does not match dimensions");

  std::vector<unsigned char> raw;
  raw.reserve(rgb.size() + static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter byte
    const std::size_t row = static_cast<std::size_t>(y) * width * 3;
    raw.insert(raw.end(), rgb.begin() + row, rgb.begin() + row + width * 3);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw NumericalError("png: deflate failed");
  comp.resize(comp_len);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  detail::png_be32(ihdr, static_cast<std::uint32_t>(width));
  detail::png_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", comp);
  detail::png_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("png: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("png: write failed for " + path);
}

// Expands one frame's inside-disk field to a full image; pixels outside the
// head disk are white.
inline std::vector<unsigned char> topomap_image(
    const TopomapRenderer& renderer,
    const Eigen::Ref<const Eigen::VectorXd>& field, double scale) {
  if (field.size() != renderer.n_pixels())
    throw DataError("png: field size does not match renderer");
  if (!(scale > 0.0)) throw ConfigError("png: scale must be positive");
  const int g = renderer.grid_size();
  std::vector<unsigned char> rgb(static_cast<std::size_t>(g) * g * 3, 255);
  const auto& inside = renderer.inside_pixels();
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    const ColorRgb c = colorize_value(field[i], -scale, scale);
    const std::size_t px = static_cast<std::size_t>(inside[static_cast<std::size_t>(i)]) * 3;
    rgb[px + 0] = static_cast<unsigned char>(std::lround(c.r * 255.0));
    rgb[px + 1] = static_cast<unsigned char>(std::lround(c.g * 255.0));
    rgb[px + 2] = static_cast<unsigned char>(std::lround(c.b * 255.0));
  }
  return rgb;
}

inline void save_topomap_png(const std::string& path,
                             const TopomapRenderer& renderer,
                             const Eigen::Ref<const Eigen::VectorXd>& field,
                             double scale) {
  save_png_rgb(path, renderer.grid_size(), renderer.grid_size(),
               topomap_image(renderer, field, scale));
}

}  // namespace eegtopo
