#include "thir/error.hpp"
#include "thir/image.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>
#include <jpeglib.h>

#include <cmath>
#include <fstream>
#include <tuple>

namespace thir {
namespace {

using testing::TempDir;

// Writes a small baseline JPEG with libjpeg directly.
void write_jpeg(const std::filesystem::path& path, int w, int h, bool gray, std::uint8_t value) {
  FILE* f = std::fopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = w;
  cinfo.image_height = h;
  cinfo.input_components = gray ? 1 : 3;
  cinfo.in_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 100, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * cinfo.input_components, value);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW r = row.data();
    jpeg_write_scanlines(&cinfo, &r, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(f);
}

TEST(LoadImage, PngSinglePixel) {
  TempDir dir("img");
  RgbImage img(1, 1);
  img.data = {10, 20, 30};
  write_png(img, dir / "p.png");
  EXPECT_EQ(load_image(dir / "p.png"), img);
}

TEST(LoadImage, PngAllBlack) {
  TempDir dir("img");
  const RgbImage black(2, 2);
  write_png(black, dir / "b.png");
  const auto loaded = load_image(dir / "b.png");
  EXPECT_EQ(loaded.width, 2);
  EXPECT_EQ(loaded.height, 2);
  EXPECT_EQ(loaded.data, std::vector<std::uint8_t>(12, 0));
}

TEST(LoadImage, GrayscaleJpegIsReplicated) {
  TempDir dir("img");
  write_jpeg(dir / "g.jpg", 8, 8, true, 128);
  const auto img = load_image(dir / "g.jpg");
  ASSERT_EQ(img.width, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const auto* p = img.pixel(x, y);
      EXPECT_EQ(p[0], p[1]);
      EXPECT_EQ(p[1], p[2]);
      EXPECT_NEAR(p[0], 128, 1);
    }
}

TEST(LoadImage, RgbJpegDecodes) {
  TempDir dir("img");
  write_jpeg(dir / "c.jpeg", 16, 8, false, 200);
  const auto img = load_image(dir / "c.jpeg");
  EXPECT_EQ(img.width, 16);
  EXPECT_EQ(img.height, 8);
  EXPECT_NEAR(img.pixel(3, 3)[0], 200, 2);
}

TEST(LoadImage, MissingFile) {
  try {
    load_image("/nonexistent/thir/none.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FileNotFound);
  }
}

TEST(LoadImage, TruncatedFilesFailToDecode) {
  TempDir dir("img");
  std::mt19937 rng(1);
  const auto bytes = encode_png(testing::random_image(rng, 32, 32));
  for (const auto& [name, cut] : {std::pair{"t.png", bytes.size() / 2}, {"h.png", std::size_t{20}}}) {
    std::ofstream(dir / name, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), cut);
    try {
      load_image(dir / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DecodeError);
    }
  }
  std::ofstream(dir / "junk.png") << "not an image";
  EXPECT_THROW(load_image(dir / "junk.png"), Error);

  write_jpeg(dir / "full.jpg", 32, 32, false, 90);
  std::ifstream in(dir / "full.jpg", std::ios::binary);
  std::vector<char> jpeg{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::ofstream(dir / "cut.jpg", std::ios::binary).write(jpeg.data(), 40);
  EXPECT_THROW(load_image(dir / "cut.jpg"), Error);
}

TEST(Resize, SameSizeIsIdentity) {
  std::mt19937 rng(2);
  const auto img = testing::random_image(rng, 13, 7);
  EXPECT_EQ(resize(img, 13, 7), img);
}

// Reference: the half-pixel-centre bilinear formula evaluated one output
// sample at a time.
double bilinear_reference(const RgbImage& img, int ox, int oy, int c, int ow, int oh) {
  auto coord = [](int o, int in, int out) {
    return std::clamp((o + 0.5) * in / out - 0.5, 0.0, in - 1.0);
  };
  const double sx = coord(ox, img.width, ow);
  const double sy = coord(oy, img.height, oh);
  const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double fx = sx - x0, fy = sy - y0;
  auto at = [&](int x, int y) { return static_cast<double>(img.pixel(x, y)[c]); };
  const double top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
  const double bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
  return top + (bottom - top) * fy;
}

TEST(Resize, TwoPixelRampToFour) {
  RgbImage img(2, 1);
  img.data = {0, 0, 0, 255, 255, 255};
  const auto out = resize(img, 4, 1);
  // Source x = -0.25 (clamped), 0.25, 0.75, 1.25 (clamped).
  const std::uint8_t expected[4] = {0, 64, 191, 255};
  for (int x = 0; x < 4; ++x) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(out.pixel(x, 0)[c], expected[x]);
      EXPECT_EQ(out.pixel(x, 0)[c], std::lround(bilinear_reference(img, x, 0, c, 4, 1)));
    }
  }
}

// Exact rational evaluation of the same formula: source coordinate
// ((2o+1)*in - out) / (2*out), clamped. Near exact halves either neighbour is
// accepted because the floating-point path may land on either side.
double exact_bilinear(const RgbImage& img, int ox, int oy, int c, int ow, int oh) {
  auto tap = [](int o, int in, int out) {
    long num = std::clamp<long>(static_cast<long>(2 * o + 1) * in - out, 0, 2L * out * (in - 1));
    const long den = 2L * out;
    const long lo = num / den;
    return std::tuple{static_cast<int>(lo), static_cast<int>(std::min<long>(lo + 1, in - 1)), num - lo * den, den};
  };
  const auto [x0, x1, fx, dx] = tap(ox, img.width, ow);
  const auto [y0, y1, fy, dy] = tap(oy, img.height, oh);
  auto at = [&](int x, int y) { return static_cast<long>(img.pixel(x, y)[c]); };
  const long top = at(x0, y0) * (dx - fx) + at(x1, y0) * fx;
  const long bottom = at(x0, y1) * (dx - fx) + at(x1, y1) * fx;
  return static_cast<double>(top * (dy - fy) + bottom * fy) / static_cast<double>(dx * dy);
}

TEST(Resize, MatchesExactReferenceOnRandomImages) {
  std::mt19937 rng(3);
  for (auto [iw, ih, ow, oh] : {std::array{7, 5, 16, 9}, {20, 11, 6, 4}, {1, 1, 3, 2}, {9, 9, 9, 4}, {33, 17, 240, 240}}) {
    const auto img = testing::random_image(rng, iw, ih);
    const auto out = resize(img, ow, oh);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int c = 0; c < 3; ++c) {
          const double exact = exact_bilinear(img, x, y, c, ow, oh);
          ASSERT_LE(std::abs(out.pixel(x, y)[c] - exact), 0.5 + 1e-9) << x << "," << y;
        }
  }
}

TEST(Resize, BreakhisSizeTo240) {
  std::mt19937 rng(4);
  const auto out = resize(testing::random_image(rng, 700, 460), 240, 240);
  EXPECT_EQ(out.width, 240);
  EXPECT_EQ(out.height, 240);
  EXPECT_EQ(out.data.size(), 240u * 240u * 3u);
  EXPECT_EQ(resize(testing::random_image(rng, 700, 460), 240, 240).data.size(), out.data.size());
}

TEST(Resize, IsDeterministic) {
  std::mt19937 rng(5);
  const auto img = testing::random_image(rng, 57, 31);
  EXPECT_EQ(resize(img, 40, 40), resize(img, 40, 40));
}

TEST(Resize, RejectsEmptyTarget) { EXPECT_THROW(resize(RgbImage(2, 2), 0, 3), Error); }

TEST(SplitChannels, KeepsChannelOrderAndScale) {
  RgbImage img(1, 1);
  img.data = {10, 20, 30};
  auto ch = split_channels(img);
  EXPECT_EQ(ch[0](0, 0), 10.0);
  EXPECT_EQ(ch[1](0, 0), 20.0);
  EXPECT_EQ(ch[2](0, 0), 30.0);

  img.data = {255, 0, 0};
  ch = split_channels(img);
  EXPECT_EQ(ch[0](0, 0), 255.0);
  EXPECT_EQ(ch[1](0, 0), 0.0);
  EXPECT_EQ(ch[2](0, 0), 0.0);
}

TEST(SplitChannels, GrayGivesIdenticalGrids) {
  const auto ch = split_channels(testing::constant_image(4, 3, {77, 77, 77}));
  EXPECT_TRUE((ch[0] == ch[1]).all());
  EXPECT_TRUE((ch[1] == ch[2]).all());
}

TEST(SplitChannels, RecombinationIsExact) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = testing::random_image(rng, 1 + trial, 1 + (trial * 7) % 13);
    EXPECT_EQ(merge_channels(split_channels(img)), img);
  }
}

}  // namespace
}  // namespace thir
