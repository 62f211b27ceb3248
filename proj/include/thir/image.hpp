#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace thir {

/// 8-bit RGB raster, row-major, interleaved (r, g, b) per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h);

  std::uint8_t* pixel(int x, int y) { return data.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  bool operator==(const RgbImage&) const = default;
};

/// One colour channel as a dense scalar grid: rows = height, cols = width.
template <typename Scalar>
using ChannelGrid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Decode PNG or JPEG bytes (format sniffed from the signature). Grayscale is
/// replicated into all three channels; alpha is dropped.
RgbImage decode_image(std::span<const std::uint8_t> bytes);

RgbImage load_image(const std::filesystem::path& path);

/// Lossless PNG encode, used for fixtures and exports.
std::vector<std::uint8_t> encode_png(const RgbImage& img);
void write_png(const RgbImage& img, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centres. Output components are rounded
/// to nearest (halves away from zero) and clamped to [0, 255].
RgbImage resize(const RgbImage& img, int width, int height);

template <typename Scalar = double>
std::array<ChannelGrid<Scalar>, 3> split_channels(const RgbImage& img) {
  std::array<ChannelGrid<Scalar>, 3> out;
  for (auto& ch : out) ch.resize(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.pixel(x, y);
      for (int c = 0; c < 3; ++c) out[c](y, x) = static_cast<Scalar>(p[c]);
    }
  }
  return out;
}

/// Inverse of split_channels for grids holding integers in [0, 255].
template <typename Scalar>
RgbImage merge_channels(const std::array<ChannelGrid<Scalar>, 3>& channels) {
  RgbImage img(static_cast<int>(channels[0].cols()), static_cast<int>(channels[0].rows()));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t* p = img.pixel(x, y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>(channels[c](y, x));
    }
  }
  return img;
}

}  // namespace thir
