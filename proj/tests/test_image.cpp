#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "dimtm/filtering.hpp"
#include "dimtm/image.hpp"
#include "dimtm/image_io.hpp"
#include "helpers.hpp"

using namespace dimtm;
using testutil::random_image;

namespace {
Image solid(double r, double g, double b) {
  Image img(2, 2, 3);
  img.channels[0].fill(r);
  img.channels[1].fill(g);
  img.channels[2].fill(b);
  return img;
}
}  // namespace

TEST_CASE("colorspace conversions hit the reference points") {
  REQUIRE(convert_colorspace(solid(1, 1, 1), Colorspace::Gray).channels[0](0, 0) ==
          Catch::Approx(1.0).margin(1e-12));
  Image lab = convert_colorspace(solid(0, 0, 0), Colorspace::CIELab);
  REQUIRE(lab.channels[0](0, 0) == Catch::Approx(0.0).margin(1e-9));
  Image hsv = convert_colorspace(solid(1, 0, 0), Colorspace::HSV);
  REQUIRE(hsv.channels[0](0, 0) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(hsv.channels[1](0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(hsv.channels[2](0, 0) == Catch::Approx(1.0).margin(1e-12));
  // neutral gray sits on the a*=b*=0 axis, scaled to 128/255
  Image mid = convert_colorspace(solid(0.5, 0.5, 0.5), Colorspace::CIELab);
  REQUIRE(mid.channels[1](0, 0) == Catch::Approx(128.0 / 255.0).margin(1e-9));
  REQUIRE(mid.channels[2](0, 0) == Catch::Approx(128.0 / 255.0).margin(1e-9));
}

TEST_CASE("grayscale source cannot convert to a color space") {
  Image g(3, 3, 1, 0.5);
  REQUIRE_THROWS_AS(convert_colorspace(g, Colorspace::HSV), std::invalid_argument);
  REQUIRE_THROWS_AS(convert_colorspace(g, Colorspace::CIELab), std::invalid_argument);
  REQUIRE(convert_colorspace(g, Colorspace::Gray).channels[0](1, 1) == 0.5);
}

TEST_CASE("mirror_pad reflects with the edge pixel included") {
  Plane row(3, 1);
  row(0, 0) = 1.0;
  row(0, 1) = 2.0;
  row(0, 2) = 3.0;
  Plane padded = mirror_pad(row, 1, 1, 0, 0);
  double expected[] = {1.0, 1.0, 2.0, 3.0, 3.0};
  for (int x = 0; x < 5; ++x) REQUIRE(padded(0, x) == expected[x]);

  Plane wide = mirror_pad(row, 3, 3, 0, 0);
  double expected_wide[] = {3.0, 2.0, 1.0, 1.0, 2.0, 3.0, 3.0, 2.0, 1.0};
  for (int x = 0; x < 9; ++x) REQUIRE(wide(0, x) == expected_wide[x]);
}

TEST_CASE("mirror_pad edge cases") {
  Plane p(4, 3, 7.0);
  Plane same = mirror_pad(p, 0, 0, 0, 0);
  REQUIRE(testutil::max_abs_diff(p, same) == 0.0);
  Plane c = mirror_pad(p, 2, 1, 3, 0);
  for (double v : c) REQUIRE(v == 7.0);
  REQUIRE_THROWS_AS(mirror_pad(p, 5, 0, 0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(mirror_pad(p, -1, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("mirror_pad then center-crop is the identity") {
  std::mt19937_64 rng(11);
  Plane p = testutil::random_plane(rng, 9, 7);
  int l = 3, r = 2, t = 5, b = 1;
  Plane padded = mirror_pad(p, l, r, t, b);
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) REQUIRE(padded(y + t, x + l) == p(y, x));
}

TEST_CASE("gaussian blur preserves constants and mass") {
  GaussianSpec spec = GaussianSpec::from_sigma(1.7);
  REQUIRE(spec.radius == 6);
  Plane c(11, 8, 0.37);
  Plane blurred = gaussian_blur(c, spec);
  for (double v : blurred) REQUIRE(v == Catch::Approx(0.37).margin(1e-12));

  // interior-supported impulse keeps its total mass
  Plane imp(31, 31, 0.0);
  imp(15, 15) = 2.0;
  Plane out = gaussian_blur(imp, GaussianSpec::from_sigma(1.0));
  REQUIRE(out.sum() == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("gaussian impulse response samples the separable kernel") {
  GaussianSpec spec{1.0, 3};
  Plane imp(15, 15, 0.0);
  imp(7, 7) = 1.0;
  Plane out = gaussian_blur(imp, spec);
  // independent evaluation of the truncated, renormalized Gaussian
  double g[7], sum = 0.0;
  for (int i = -3; i <= 3; ++i) {
    g[i + 3] = std::exp(-i * i / 2.0);
    sum += g[i + 3];
  }
  for (double& v : g) v /= sum;
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx)
      REQUIRE(out(7 + dy, 7 + dx) == Catch::Approx(g[dy + 3] * g[dx + 3]).margin(1e-12));
}

TEST_CASE("gaussian blur is linear") {
  std::mt19937_64 rng(12);
  Plane a = testutil::random_plane(rng, 14, 10), b = testutil::random_plane(rng, 14, 10);
  GaussianSpec spec = GaussianSpec::from_sigma(2.0);
  Plane mix(14, 10);
  for (size_t i = 0; i < mix.size(); ++i) mix.data()[i] = 1.5 * a.data()[i] + 0.25 * b.data()[i];
  Plane lhs = gaussian_blur(mix, spec);
  Plane ba = gaussian_blur(a, spec), bb = gaussian_blur(b, spec);
  for (size_t i = 0; i < lhs.size(); ++i)
    REQUIRE(lhs.data()[i] ==
            Catch::Approx(1.5 * ba.data()[i] + 0.25 * bb.data()[i]).margin(1e-9));
}

TEST_CASE("preprocess: constant image gives all-zero planes") {
  Image img(20, 16, 3, 0.6);
  ChannelStack s = preprocess(img, 5, 7);
  REQUIRE(s.k() == 6);
  REQUIRE(s.pad.left == 5);
  REQUIRE(s.pad.top == 7);
  REQUIRE(s.width() == 20 + 10);
  REQUIRE(s.height() == 16 + 14);
  for (const Plane& p : s.planes)
    for (double v : p) REQUIRE(v == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("preprocess: opponent pairs are disjoint and reconstruct the contrast signal") {
  std::mt19937_64 rng(13);
  Image img = random_image(rng, 24, 18, 3);
  const int tw = 6, th = 4;
  ChannelStack s = preprocess(img, tw, th);
  REQUIRE(s.k() == 6);

  GaussianSpec spec = GaussianSpec::from_sigma(0.5 * std::min(tw, th));
  for (int c = 0; c < 3; ++c) {
    const Plane& on = s.planes[size_t(2 * c)];
    const Plane& off = s.planes[size_t(2 * c + 1)];
    Plane padded = mirror_pad(img.channels[size_t(c)], tw, tw, th, th);
    Plane mean = gaussian_blur(padded, spec);
    for (int y = 0; y < on.height(); ++y)
      for (int x = 0; x < on.width(); ++x) {
        REQUIRE(std::min(on(y, x), off(y, x)) == 0.0);
        double expected = 2.0 * (padded(y, x) - mean(y, x));
        REQUIRE(on(y, x) - off(y, x) == Catch::Approx(expected).margin(1e-12));
      }
  }

  Image gray = random_image(rng, 10, 10, 1);
  REQUIRE(preprocess(gray, 3, 3).k() == 2);
}

TEST_CASE("resize: scale 1 is identity, halving is local averaging") {
  std::mt19937_64 rng(14);
  Image img = random_image(rng, 12, 8, 3);
  Image same = resize(img, 1.0);
  for (int c = 0; c < 3; ++c)
    REQUIRE(testutil::max_abs_diff(img.channels[size_t(c)], same.channels[size_t(c)]) < 1e-12);
  Image half = resize(img, 0.5);
  REQUIRE(half.width == 6);
  REQUIRE(half.height == 4);
  double expect =
      (img.channels[0](0, 0) + img.channels[0](0, 1) + img.channels[0](1, 0) +
       img.channels[0](1, 1)) /
      4.0;
  REQUIRE(half.channels[0](0, 0) == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("image io round trips at 8-bit precision") {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(15);
  fs::path dir = fs::temp_directory_path() / "dimtm_io_test";
  fs::create_directories(dir);

  Image img = random_image(rng, 9, 6, 3);
  for (const char* name : {"t.png", "t.ppm"}) {
    std::string path = (dir / name).string();
    save_image(img, path);
    Image back = load_image(path);
    REQUIRE(back.width == 9);
    REQUIRE(back.height == 6);
    REQUIRE(back.channel_count() == 3);
    for (int c = 0; c < 3; ++c)
      REQUIRE(testutil::max_abs_diff(img.channels[size_t(c)], back.channels[size_t(c)]) <
              0.5 / 255.0 + 1e-9);
  }

  Image gray = random_image(rng, 5, 5, 1);
  std::string gpath = (dir / "g.png").string();
  save_image(gray, gpath);
  REQUIRE(load_image(gpath).channel_count() == 1);
  auto [w, h] = image_dims(gpath);
  REQUIRE(w == 5);
  REQUIRE(h == 5);

  REQUIRE_THROWS(load_image((dir / "missing.png").string()));
  REQUIRE_THROWS(load_image((dir / "t.bmp").string()));
}

TEST_CASE("pnm reader handles comments and 16-bit data") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "dimtm_io_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.pgm", std::ios::binary);
    out << "P5\n# a comment\n2 2\n255\n";
    out.put(char(0)).put(char(128)).put(char(255)).put(char(64));
  }
  Image img = load_image((dir / "c.pgm").string());
  REQUIRE(img.channels[0](0, 1) == Catch::Approx(128.0 / 255).margin(1e-9));
  {
    std::ofstream out(dir / "w.pgm", std::ios::binary);
    out << "P5\n1 1\n65535\n";
    out.put(char(0x80)).put(char(0x00));  // big-endian 32768
  }
  Image wide = load_image((dir / "w.pgm").string());
  REQUIRE(wide.channels[0](0, 0) == Catch::Approx(32768.0 / 65535).margin(1e-9));
}
