#pragma once

#include "thir/image.hpp"
#include "thir/index.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

namespace thir::testing {

/// Removes itself on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("thir-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ChannelGrid<double> random_grid(std::mt19937& rng, int width, int height, int max_value = 255) {
  std::uniform_int_distribution<int> dist(0, max_value);
  ChannelGrid<double> g(height, width);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = dist(rng);
  return g;
}

inline RgbImage random_image(std::mt19937& rng, int width, int height) {
  std::uniform_int_distribution<int> dist(0, 255);
  RgbImage img(width, height);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(dist(rng));
  return img;
}

inline RgbImage constant_image(int width, int height, std::array<std::uint8_t, 3> color) {
  RgbImage img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) img.pixel(x, y)[c] = color[c];
  return img;
}

/// A 2x2 arrangement of square annuli. In every channel each annulus is a
/// closed loop of value `ring` around a plateau of value `inside`, on a
/// `background` field, so each channel carries exactly four loops born at
/// ring and dying at inside.
struct RingColors {
  std::array<std::uint8_t, 3> background;
  std::array<std::uint8_t, 3> ring;
  std::array<std::uint8_t, 3> inside;
};

inline RgbImage ring_image(int size, const RingColors& colors, int offset = 0) {
  RgbImage img = constant_image(size, size, colors.background);
  const int cell = size / 2;
  const int outer = cell * 3 / 4;
  const int thickness = std::max(1, outer / 6);
  for (int by = 0; by < 2; ++by) {
    for (int bx = 0; bx < 2; ++bx) {
      const int x0 = bx * cell + (cell - outer) / 2 + offset;
      const int y0 = by * cell + (cell - outer) / 2 + offset;
      for (int y = y0; y < y0 + outer; ++y) {
        for (int x = x0; x < x0 + outer; ++x) {
          const bool edge = x < x0 + thickness || x >= x0 + outer - thickness || y < y0 + thickness ||
                            y >= y0 + outer - thickness;
          const auto& color = edge ? colors.ring : colors.inside;
          for (int c = 0; c < 3; ++c) img.pixel(x, y)[c] = color[c];
        }
      }
    }
  }
  return img;
}

inline RingColors random_ring_colors(std::mt19937& rng) {
  std::uniform_int_distribution<int> low(0, 90);
  std::uniform_int_distribution<int> high(120, 255);
  RingColors colors{};
  for (int c = 0; c < 3; ++c) {
    colors.ring[c] = static_cast<std::uint8_t>(low(rng));
    colors.inside[c] = static_cast<std::uint8_t>(high(rng));
    colors.background[c] = static_cast<std::uint8_t>(high(rng));
  }
  return colors;
}

/// `per_class` constant-colour images under benign/ and ring images under
/// malignant/, each `size` x `size`.
inline void write_separable_dataset(const std::filesystem::path& root, int per_class, int size,
                                    std::uint32_t seed = 7) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> any(0, 255);
  std::uniform_int_distribution<int> shift(0, std::max(0, size / 16));
  std::filesystem::create_directories(root / "benign");
  std::filesystem::create_directories(root / "malignant");
  for (int i = 0; i < per_class; ++i) {
    const std::array<std::uint8_t, 3> color = {static_cast<std::uint8_t>(any(rng)), static_cast<std::uint8_t>(any(rng)),
                                               static_cast<std::uint8_t>(any(rng))};
    char name[32];
    std::snprintf(name, sizeof(name), "b%03d.png", i);
    write_png(constant_image(size, size, color), root / "benign" / name);
    std::snprintf(name, sizeof(name), "m%03d.png", i);
    write_png(ring_image(size, random_ring_colors(rng), shift(rng)), root / "malignant" / name);
  }
}

/// In-memory index over hand-written descriptor rows of length 3 * resolution.
inline Index make_index(const std::vector<std::vector<float>>& rows, int resolution,
                        const std::vector<Label>& labels = {}) {
  Index ix;
  ix.spec.resolution = resolution;
  ix.descriptors.resize(static_cast<Eigen::Index>(rows.size()), 3 * resolution);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    DatasetRecord rec;
    rec.id = static_cast<std::uint32_t>(i);
    rec.path = "entry" + std::to_string(i) + ".png";
    rec.label = i < labels.size() ? labels[i] : Label::Unknown;
    ix.records.push_back(rec);
    for (int j = 0; j < 3 * resolution; ++j) ix.descriptors(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return ix;
}

}  // namespace thir::testing
