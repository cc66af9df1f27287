#include <doctest.h>

#include <cmath>

#include "ssta/rng.hpp"
#include "ssta/warp.hpp"

using namespace ssta;

namespace {

Image random_image(Rng& rng, int h, int w, int c) {
  Image img(h, w, c);
  for (auto& p : img.planes)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p(y, x) = rng.unit();
  return img;
}

// Random flow bounded by `bound`, with every sampling coordinate kept at
// least `margin` away from the bilinear lattice kinks.
FlowField random_flow_off_lattice(Rng& rng, int h, int w, double bound, double margin) {
  FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto draw = [&](double base) {
        for (;;) {
          const double d = rng.uniform(-bound, bound);
          const double coord = base + d;
          if (std::abs(coord - std::round(coord)) > margin) return d;
        }
      };
      f.du(y, x) = draw(x);
      f.dv(y, x) = draw(y);
    }
  return f;
}

Mask interior_mask(Rng& rng, int h, int w, double keep) {
  Mask m;
  m.height = h;
  m.width = w;
  m.tau = 0;
  m.inside = BoolPlane::Constant(h, w, false);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) m.inside(y, x) = rng.unit() < keep;
  return m;
}

double weighted_sum(const Image& grad_out, const Image& img) {
  double acc = 0.0;
  for (int c = 0; c < img.channels; ++c) acc += (grad_out.planes[c] * img.planes[c]).sum();
  return acc;
}

}  // namespace

TEST_CASE("warp with zero flow is the bit-exact identity") {
  Rng rng(21);
  for (int c : {1, 3}) {
    const Image img = random_image(rng, 7, 5, c);
    const Image out = warp(img, FlowField::zero(7, 5));
    for (int cc = 0; cc < c; ++cc) CHECK((out.planes[cc] == img.planes[cc]).all());
  }
}

TEST_CASE("warp instantiates for float scalars") {
  ImageT<float> img(2, 2, 1, 0.25f);
  FlowFieldT<float> f(2, 2);
  const ImageT<float> out = warp(img, f);
  CHECK((out.planes[0] == img.planes[0]).all());
}

TEST_CASE("warp blends the right neighbour at half-pixel flow") {
  Image img(1, 2, 1);
  img(0, 0) = 0.0;
  img(0, 1) = 1.0;
  FlowField f(1, 2);
  f.du(0, 0) = 0.5;
  const Image out = warp(img, f);
  CHECK(out(0, 0) == doctest::Approx(0.5));
  CHECK(out(0, 1) == 1.0);
}

TEST_CASE("warp clamps integer flow at the border") {
  Image ramp(1, 3, 1);
  ramp(0, 0) = 0.0;
  ramp(0, 1) = 0.5;
  ramp(0, 2) = 1.0;
  FlowField f(1, 3);
  f.du.setConstant(1.0);
  const Image out = warp(ramp, f);
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 1) == 1.0);
  CHECK(out(0, 2) == 1.0);  // clamped to the last column
}

TEST_CASE("warp output stays in the convex hull of its neighbours") {
  Rng rng(31);
  const Image img = random_image(rng, 9, 9, 3);
  const FlowField f = random_flow_off_lattice(rng, 9, 9, 2.5, 1e-9);
  const Image out = warp(img, f);
  for (int c = 0; c < 3; ++c) {
    CHECK(out.planes[c].minCoeff() >= img.planes[c].minCoeff() - 1e-12);
    CHECK(out.planes[c].maxCoeff() <= img.planes[c].maxCoeff() + 1e-12);
  }
  CHECK_THROWS_AS(warp(img, FlowField::zero(4, 4)), shape_error);
}

TEST_CASE("composite obeys the mask exactly") {
  Rng rng(17);
  const Image x = random_image(rng, 6, 6, 3);
  const Image warped = random_image(rng, 6, 6, 3);

  Mask empty;
  empty.height = empty.width = 6;
  empty.tau = 255;
  empty.inside = BoolPlane::Constant(6, 6, false);
  const Image untouched = composite(x, warped, empty);
  for (int c = 0; c < 3; ++c) CHECK((untouched.planes[c] == x.planes[c]).all());

  const Mask full = full_mask(6, 6);
  const Image replaced = composite(x, warped, full);
  for (int c = 0; c < 3; ++c) CHECK((replaced.planes[c] == clamp01(warped.planes[c])).all());

  Mask half = full_mask(6, 6);
  for (int y = 0; y < 6; ++y)
    for (int x2 = 0; x2 < 6; ++x2) half.inside(y, x2) = x2 < 3;
  const Image mixed = composite(x, warped, half);
  for (int y = 0; y < 6; ++y)
    for (int x2 = 0; x2 < 6; ++x2)
      for (int c = 0; c < 3; ++c) {
        if (x2 < 3)
          CHECK(mixed(y, x2, c) == std::min(std::max(warped(y, x2, c), 0.0), 1.0));
        else
          CHECK(mixed(y, x2, c) == x(y, x2, c));
      }
}

TEST_CASE("flow_gradient is zero without signal") {
  Rng rng(13);
  const Image x = random_image(rng, 5, 5, 3);
  const FlowField f = random_flow_off_lattice(rng, 5, 5, 0.4, 1e-6);
  const Mask full = full_mask(5, 5);

  Image zero_grad(5, 5, 3, 0.0);
  const FlowField g1 = flow_gradient(x, f, full, zero_grad);
  CHECK(g1.max_abs() == 0.0);

  Mask empty;
  empty.height = empty.width = 5;
  empty.tau = 255;
  empty.inside = BoolPlane::Constant(5, 5, false);
  const Image grad = random_image(rng, 5, 5, 3);
  const FlowField g2 = flow_gradient(x, f, empty, grad);
  CHECK(g2.max_abs() == 0.0);
}

TEST_CASE("flow_gradient matches central finite differences") {
  Rng rng(2024);
  const int h = 8, w = 8;
  const double step = 1e-4;
  for (int round = 0; round < 5; ++round) {
    const Image x = random_image(rng, h, w, 3);
    const Mask mask = interior_mask(rng, h, w, 0.8);
    FlowField f = random_flow_off_lattice(rng, h, w, 0.4, 1e-3);
    Image grad_out = random_image(rng, h, w, 3);
    for (auto& p : grad_out.planes) p = p - 0.5;

    const FlowField analytic = flow_gradient(x, f, mask, grad_out);
    auto loss_at = [&](const FlowField& ff) {
      return weighted_sum(grad_out, composite(x, warp(x, ff), mask));
    };
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        for (Plane FlowField::* comp : {&FlowField::du, &FlowField::dv}) {
          FlowField plus = f, minus = f;
          (plus.*comp)(y, xx) += step;
          (minus.*comp)(y, xx) -= step;
          const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
          const double an = (analytic.*comp)(y, xx);
          const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
          CHECK(std::abs(fd - an) / scale < 1e-4);
        }
      }
  }
}

TEST_CASE("project_flow clamps componentwise and is idempotent") {
  FlowField f(1, 3);
  f.du(0, 0) = 0.1;
  f.du(0, 1) = 0.5;
  f.du(0, 2) = -0.3;
  f.dv(0, 1) = -0.05;
  const FlowField within = project_flow(f, 1.0);
  CHECK((within.du == f.du).all());
  CHECK((within.dv == f.dv).all());

  const FlowField tight = project_flow(f, 0.2);
  CHECK(tight.du(0, 0) == 0.1);
  CHECK(tight.du(0, 1) == 0.2);
  CHECK(tight.du(0, 2) == -0.2);
  CHECK(tight.dv(0, 1) == -0.05);
  CHECK(tight.max_abs() <= 0.2);

  const FlowField again = project_flow(tight, 0.2);
  CHECK((again.du == tight.du).all());
  CHECK((again.dv == tight.dv).all());

  const FlowField zero = project_flow(f, 0.0);
  CHECK(zero.max_abs() == 0.0);
}
