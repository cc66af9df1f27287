#include <doctest.h>

#include <cmath>

#include "ssta/metrics.hpp"
#include "ssta/rng.hpp"
#include "ssta/saliency.hpp"

using namespace ssta;

namespace {

Image random_image(Rng& rng, int h, int w, int c) {
  Image img(h, w, c);
  for (auto& p : img.planes)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p(y, x) = rng.unit();
  return img;
}

Image textured(int h, int w, double lo = 0.2, double hi = 0.8) {
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img(y, x) = lo + (hi - lo) * 0.5 *
                           (1.0 + std::sin(0.7 * x + 0.3 * y) * std::cos(0.2 * x - 0.5 * y));
  return img;
}

// Naive mse oracle, same scan order as the stated definition.
double mse_naive(const Image& a, const Image& b) {
  double acc = 0.0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      for (int c = 0; c < a.channels; ++c) {
        const double d = 255.0 * (a(y, x, c) - b(y, x, c));
        acc += d * d;
      }
  return acc / (static_cast<double>(a.height) * a.width * a.channels);
}

// Literal windowed UQI oracle over 8x8 windows.
double uqi_naive(const Image& xi, const Image& yi) {
  const Plane a = luma(xi);
  const Plane b = luma(yi);
  double acc = 0.0;
  long long windows = 0;
  for (int wy = 0; wy + 8 <= a.rows(); ++wy)
    for (int wx = 0; wx + 8 <= a.cols(); ++wx) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      double amin = a(wy, wx), amax = amin, bmin = b(wy, wx), bmax = bmin;
      for (int dy = 0; dy < 8; ++dy)
        for (int dx = 0; dx < 8; ++dx) {
          const double va = a(wy + dy, wx + dx);
          const double vb = b(wy + dy, wx + dx);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
          amin = std::min(amin, va);
          amax = std::max(amax, va);
          bmin = std::min(bmin, vb);
          bmax = std::max(bmax, vb);
        }
      const double ma = sa / 64.0, mb = sb / 64.0;
      const bool const_a = amin == amax;
      const bool const_b = bmin == bmax;
      const double va = const_a ? 0.0 : saa / 64.0 - ma * ma;
      const double vb = const_b ? 0.0 : sbb / 64.0 - mb * mb;
      const double cab = const_a || const_b ? 0.0 : sab / 64.0 - ma * mb;
      const double den = (ma * ma + mb * mb) * (va + vb);
      if (den == 0.0) continue;
      acc += ((2.0 * ma * mb) * (2.0 * cab)) / den;
      ++windows;
    }
  REQUIRE(windows > 0);
  return acc / static_cast<double>(windows);
}

}  // namespace

TEST_CASE("mse endpoints") {
  Image a(1, 1, 1, 0.0);
  Image b(1, 1, 1, 1.0);
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(a, b) == 65025.0);
  Image c(2, 1, 1);
  CHECK_THROWS_AS(mse(a, c), shape_error);
}

TEST_CASE("mse matches the brute-force oracle exactly") {
  Rng rng(55);
  for (int round = 0; round < 10; ++round) {
    const int h = static_cast<int>(rng.uniform_int(1, 32));
    const int w = static_cast<int>(rng.uniform_int(1, 32));
    const int c = rng.unit() < 0.5 ? 1 : 3;
    const Image a = random_image(rng, h, w, c);
    const Image b = random_image(rng, h, w, c);
    CHECK(mse(a, b) == mse_naive(a, b));
  }
}

TEST_CASE("psnr definition and sentinel") {
  Image a(1, 1, 1, 0.0);
  CHECK(std::isinf(psnr(a, a)));
  Image b(1, 1, 1, 1.0);
  CHECK(psnr(a, b) == doctest::Approx(0.0).epsilon(1e-15));  // mse = 255^2
  Image c(1, 1, 1, 0.3);
  Image d(1, 1, 1, 0.4);  // mse ~ 650.25 -> 20 dB
  CHECK(psnr(c, d) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("ssim ideal value and range behaviour") {
  const Image x = textured(24, 24);
  CHECK(ssim(x, x) == 1.0);

  // inverted mid-contrast image: structure anti-correlates
  Image inv = x;
  inv.planes[0] = 1.0 - x.planes[0];
  CHECK(ssim(x, inv) < 0.5);

  Image tiny(4, 4, 1);
  CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("ssim of constant pairs follows the luminance closed form") {
  const double c1v = 0.3, c2v = 0.5;
  Image a(16, 16, 1, c1v);
  Image b(16, 16, 1, c2v);
  constexpr double c1 = 1e-4;
  const double expect = (2.0 * c1v * c2v + c1) / (c1v * c1v + c2v * c2v + c1);
  CHECK(ssim(a, b) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ssim structure term is shift invariant") {
  Rng rng(77);
  Image a = random_image(rng, 16, 16, 1);
  Image b = random_image(rng, 16, 16, 1);
  // keep values well away from the unit bounds
  a.planes[0] = 0.2 + 0.4 * a.planes[0];
  b.planes[0] = 0.2 + 0.4 * b.planes[0];
  const double base = detail::ssim_structure_mean(a, b);
  Image a2 = a, b2 = b;
  a2.planes[0] += 0.15;
  b2.planes[0] += 0.15;
  CHECK(detail::ssim_structure_mean(a2, b2) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("uqi ideal value, degenerate contract and oracle equality") {
  const Image x = textured(16, 16);
  CHECK(uqi(x, x) == 1.0);

  Image flat_a(9, 9, 1, 0.4);
  Image flat_b(9, 9, 1, 0.6);
  CHECK_THROWS_WITH_AS(uqi(flat_a, flat_b), doctest::Contains("degenerate"), numeric_error);

  Rng rng(66);
  for (int round = 0; round < 8; ++round) {
    const int h = static_cast<int>(rng.uniform_int(8, 32));
    const int w = static_cast<int>(rng.uniform_int(8, 32));
    const Image a = random_image(rng, h, w, rng.unit() < 0.5 ? 1 : 3);
    const Image b = random_image(rng, h, w, a.channels);
    CHECK(uqi(a, b) == uqi_naive(a, b));
  }

  Image tiny(4, 4, 1);
  CHECK_THROWS_AS(uqi(tiny, tiny), std::invalid_argument);
}

TEST_CASE("scc self, anti and degenerate conventions") {
  const Image x = textured(20, 20);
  CHECK(scc(x, x) == doctest::Approx(1.0).epsilon(1e-12));

  Image inv = x;
  inv.planes[0] = 1.0 - x.planes[0];  // laplacian flips sign
  CHECK(scc(x, inv) == doctest::Approx(-1.0).epsilon(1e-12));

  Image flat_a(8, 8, 1, 0.2);
  Image flat_b(8, 8, 1, 0.9);
  CHECK(scc(flat_a, flat_b) == 0.0);
}

TEST_CASE("vifp ideal, blur ordering and noise floor") {
  const Image x = textured(64, 64);
  CHECK(vifp(x, x) == doctest::Approx(1.0).epsilon(1e-6));

  // mild vs heavy blur through the saliency module's binomial kernel
  Image mild = x;
  mild.planes[0] = ssta::detail::binomial_blur5(x.planes[0]);
  Image heavy = mild;
  for (int t = 0; t < 4; ++t) heavy.planes[0] = ssta::detail::binomial_blur5(heavy.planes[0]);
  const double v_mild = vifp(x, mild);
  const double v_heavy = vifp(x, heavy);
  CHECK(v_heavy < v_mild);
  CHECK(v_mild < 1.0);

  Rng rng(12);
  Image noise = random_image(rng, 64, 64, 1);
  CHECK(vifp(x, noise) < 0.1);

  Image small(16, 16, 1);
  CHECK_THROWS_AS(vifp(small, small), std::invalid_argument);
}

TEST_CASE("metrics are symmetric under swapping, except vifp") {
  Rng rng(9);
  const Image a = random_image(rng, 33, 35, 3);
  const Image b = random_image(rng, 33, 35, 3);
  CHECK(mse(a, b) == mse(b, a));
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK(ssim(a, b) == ssim(b, a));
  CHECK(uqi(a, b) == uqi(b, a));
  CHECK(scc(a, b) == scc(b, a));
}

TEST_CASE("metric_report collects ideals and partial failures") {
  const Image x = textured(64, 64);
  const MetricReport full = metric_report(x, x);
  REQUIRE(full.mse.has_value());
  CHECK(*full.mse == 0.0);
  REQUIRE(full.psnr.has_value());
  CHECK(std::isinf(*full.psnr));
  CHECK(*full.ssim == 1.0);
  CHECK(*full.uqi == 1.0);
  CHECK(*full.scc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*full.vifp == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(full.unavailable.empty());

  const Image tiny = textured(4, 4);
  const MetricReport partial = metric_report(tiny, tiny);
  CHECK(partial.mse.has_value());
  CHECK(partial.psnr.has_value());
  CHECK_FALSE(partial.ssim.has_value());
  CHECK_FALSE(partial.uqi.has_value());
  CHECK(partial.scc.has_value());  // 3x3 suffices for scc
  CHECK_FALSE(partial.vifp.has_value());
  CHECK(partial.unavailable.count("ssim") == 1);
  CHECK(partial.unavailable.count("vifp") == 1);

  Image other(5, 5, 1);
  CHECK_THROWS_AS(metric_report(tiny, other), shape_error);
}
