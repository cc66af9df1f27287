#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ssta/image.hpp"
#include "ssta/image_io.hpp"
#include "ssta/rng.hpp"

using namespace ssta;

namespace {

std::filesystem::path test_data() { return std::filesystem::path(SSTA_TEST_DATA_DIR); }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::vector<unsigned char> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image random_quantized(Rng& rng, int h, int w, int c) {
  Image img(h, w, c);
  for (auto& plane : img.planes)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) plane(y, x) = dequantize8(static_cast<int>(rng.uniform_int(0, 255)));
  return img;
}

}  // namespace

TEST_CASE("quantize8 rounds half away from zero") {
  CHECK(quantize8(0.0) == 0);
  CHECK(quantize8(1.0) == 255);
  CHECK(quantize8(0.5) == 128);  // 127.5 rounds up
  CHECK(quantize8(127.4 / 255.0) == 127);
}

TEST_CASE("PGM load maps endpoints onto the unit interval") {
  const auto path = temp_file("ssta_endpoints.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n2 2\n255\n";
    const unsigned char bytes[4] = {0, 255, 0, 255};
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
  const Image img = load_image(path.string());
  CHECK(img.height == 2);
  CHECK(img.width == 2);
  CHECK(img.channels == 1);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(0, 1) == 1.0);
  CHECK(img(1, 0) == 0.0);
  CHECK(img(1, 1) == 1.0);
}

TEST_CASE("unsupported PNG variants are rejected by property") {
  CHECK_THROWS_WITH_AS(load_image((test_data() / "gray16.png").string()),
                       doctest::Contains("unsupported bit depth"), format_error);
  CHECK_THROWS_WITH_AS(load_image((test_data() / "palette.png").string()),
                       doctest::Contains("unsupported color type"), format_error);
  CHECK_THROWS_WITH_AS(load_image((test_data() / "rgba.png").string()),
                       doctest::Contains("unsupported color type"), format_error);
  CHECK_THROWS_AS(load_image("/nonexistent/nope.png"), io_error);
}

TEST_CASE("save quantization endpoints and rounding") {
  const auto path = temp_file("ssta_round.pgm");
  Image img(1, 2, 1);
  img(0, 0) = 0.0;
  img(0, 1) = 1.0;
  save_image(img, path.string());
  auto bytes = read_all(path);
  REQUIRE(bytes.size() >= 2);
  CHECK(bytes[bytes.size() - 2] == 0);
  CHECK(bytes[bytes.size() - 1] == 255);

  Image half(1, 1, 1);
  half(0, 0) = 0.5;
  save_image(half, path.string());
  bytes = read_all(path);
  CHECK(bytes.back() == 128);
}

TEST_CASE("save then load is the identity on quantized images") {
  Rng rng(42);
  for (int round = 0; round < 8; ++round) {
    const int h = static_cast<int>(rng.uniform_int(1, 13));
    const int w = static_cast<int>(rng.uniform_int(1, 13));
    const int c = rng.unit() < 0.5 ? 1 : 3;
    const Image img = random_quantized(rng, h, w, c);
    for (const char* ext : {".png", c == 3 ? ".ppm" : ".pgm"}) {
      const auto path = temp_file(std::string("ssta_roundtrip") + ext);
      save_image(img, path.string());
      const Image back = load_image(path.string());
      REQUIRE(back.same_shape(img));
      for (int cc = 0; cc < c; ++cc) CHECK((back.planes[cc] == img.planes[cc]).all());
    }
  }
}

TEST_CASE("extension/channel mismatches are format errors") {
  Image gray(2, 2, 1);
  Image color(2, 2, 3);
  CHECK_THROWS_AS(save_image(gray, temp_file("x.ppm").string()), format_error);
  CHECK_THROWS_AS(save_image(color, temp_file("x.pgm").string()), format_error);
  CHECK_THROWS_AS(save_image(color, temp_file("x.bmp").string()), format_error);
  CHECK_THROWS_AS(save_image(color, "/nonexistent/dir/x.png"), io_error);
}

TEST_CASE("resize_bilinear identity and constant cases") {
  Rng rng(7);
  const Image img = random_quantized(rng, 9, 6, 3);
  const Image same = resize_bilinear(img, 9, 6);
  for (int c = 0; c < 3; ++c) CHECK((same.planes[c] == img.planes[c]).all());

  Image flat(5, 4, 1, 0.375);
  const Image grown = resize_bilinear(flat, 11, 3);
  CHECK((grown.planes[0] == 0.375).all());
}

TEST_CASE("resize_bilinear matches the sampling rule on a 4x1 ramp") {
  Image ramp(1, 4, 1);
  for (int x = 0; x < 4; ++x) ramp(0, x) = x / 3.0;
  const Image out = resize_bilinear(ramp, 1, 2);
  // oracle: direct evaluation of s = (d + 0.5) * (in/out) - 0.5
  for (int d = 0; d < 2; ++d) {
    double s = (d + 0.5) * (4.0 / 2.0) - 0.5;
    s = std::clamp(s, 0.0, 3.0);
    const int x0 = static_cast<int>(std::floor(s));
    const int x1 = std::min(x0 + 1, 3);
    const double expect = (1.0 - (s - x0)) * ramp(0, x0) + (s - x0) * ramp(0, x1);
    CHECK(out(0, d) == doctest::Approx(expect).epsilon(1e-15));
  }
  CHECK(out(0, 0) == doctest::Approx(1.0 / 6.0));
  CHECK(out(0, 1) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("resize_bilinear stays within the input range") {
  Rng rng(11);
  for (int round = 0; round < 6; ++round) {
    const Image img = random_quantized(rng, static_cast<int>(rng.uniform_int(2, 9)),
                                       static_cast<int>(rng.uniform_int(2, 9)), 1);
    const Image out = resize_bilinear(img, static_cast<int>(rng.uniform_int(1, 15)),
                                      static_cast<int>(rng.uniform_int(1, 15)));
    CHECK(out.planes[0].minCoeff() >= img.planes[0].minCoeff() - 1e-12);
    CHECK(out.planes[0].maxCoeff() <= img.planes[0].maxCoeff() + 1e-12);
  }
}

TEST_CASE("amplify_diff marks zero difference as mid-gray") {
  Rng rng(3);
  const Image img = random_quantized(rng, 4, 5, 3);
  for (double k : {0.5, 1.0, 30.0, 1000.0}) {
    const Image d = amplify_diff(img, img, k);
    for (int c = 0; c < 3; ++c) CHECK((d.planes[c] == 0.5).all());
  }
}

TEST_CASE("amplify_diff clips and scales per the stated rule") {
  Image x(1, 1, 1, 0.4);
  Image up(1, 1, 1, 0.5);  // diff +0.1
  CHECK(amplify_diff(x, up, 30.0)(0, 0) == 1.0);
  Image down(1, 1, 1, 0.39);  // diff -0.01
  CHECK(amplify_diff(x, down, 30.0)(0, 0) == doctest::Approx(0.2));
  Image other(2, 1, 1);
  CHECK_THROWS_AS(amplify_diff(x, other, 2.0), shape_error);
}
