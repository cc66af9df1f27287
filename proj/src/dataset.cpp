#include "ssta/dataset.hpp"

#include <cmath>
#include <numbers>

#include "ssta/rng.hpp"

namespace ssta {

namespace {

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  const double hh = h * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

// Shape membership tests; (dx, dy) relative to center, r is the base size.
bool inside_shape(int kind, double dx, double dy, double r) {
  switch (kind) {
    case 0:  // disk
      return dx * dx + dy * dy <= r * r;
    case 1:  // square
      return std::max(std::abs(dx), std::abs(dy)) <= 0.85 * r;
    case 2: {  // equilateral triangle, apex up, circumradius 1.15r
      const double cr = 1.15 * r;
      // vertices (0,-cr), (+-cr*sqrt(3)/2, cr/2); inside = below the apex
      // edges and above the base
      if (dy > cr / 2) return false;
      const double k = std::numbers::sqrt3;
      return (dy + cr >= k * dx) && (dy + cr >= -k * dx);
    }
    case 3: {  // plus sign, fat arms
      const double arm = 0.42 * r;
      return (std::abs(dx) <= arm && std::abs(dy) <= r) ||
             (std::abs(dy) <= arm && std::abs(dx) <= r);
    }
    case 4:  // diamond
      return std::abs(dx) + std::abs(dy) <= 1.1 * r;
    case 5: {  // regular hexagon, flat top, circumradius 1.05r
      const double cr = 1.05 * r;
      const double k = std::numbers::sqrt3;
      return std::abs(dy) <= k * cr / 2.0 && k * std::abs(dx) + std::abs(dy) <= k * cr;
    }
    case 6:  // annulus
      return dx * dx + dy * dy <= r * r && dx * dx + dy * dy >= 0.45 * 0.45 * r * r;
    case 7:  // horizontal bar
      return std::abs(dy) <= 0.45 * r && std::abs(dx) <= 1.1 * r;
    case 8:  // vertical bar
      return std::abs(dx) <= 0.45 * r && std::abs(dy) <= 1.1 * r;
    default: {  // T shape
      return (std::abs(dy + 0.65 * r) <= 0.38 * r && std::abs(dx) <= r) ||
             (std::abs(dx) <= 0.38 * r && dy >= -0.65 * r && dy <= r);
    }
  }
}

}  // namespace

Dataset generate_dataset(std::uint64_t seed, int n, int image_size, int num_classes) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  if (image_size < 16) throw std::invalid_argument("generate_dataset: image_size must be >= 16");
  if (num_classes < 4 || num_classes > 10)
    throw std::invalid_argument("generate_dataset: num_classes must lie in 4..10");

  Rng rng(seed);
  Dataset ds;
  ds.image_size = image_size;
  ds.num_classes = num_classes;
  ds.images.reserve(static_cast<std::size_t>(n));
  ds.labels.reserve(static_cast<std::size_t>(n));
  ds.object_masks.reserve(static_cast<std::size_t>(n));

  const double s = static_cast<double>(image_size);
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.uniform_int(0, num_classes - 1));
    const double r = rng.uniform(0.20, 0.27) * s;
    const double extent = 1.2 * r + 2.0;
    const double cx = rng.uniform(extent, s - extent);
    const double cy = rng.uniform(extent, s - extent);
    const Rgb obj = hsv_to_rgb(rng.unit(), rng.uniform(0.7, 1.0), rng.uniform(0.7, 1.0));
    const double bg_base = rng.uniform(0.38, 0.62);
    const double tint[3] = {rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03),
                            rng.uniform(-0.03, 0.03)};
    // a few low-frequency waves make the background non-flat
    double amp[3], fx[3], fy[3], ph[3];
    for (int k = 0; k < 3; ++k) {
      amp[k] = rng.uniform(0.010, 0.028);
      fx[k] = rng.uniform(0.5, 3.5);
      fy[k] = rng.uniform(0.5, 3.5);
      ph[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }

    Image img(image_size, image_size, 3);
    Mask footprint;
    footprint.height = footprint.width = image_size;
    footprint.tau = Mask::kImportedTau;
    footprint.inside = BoolPlane::Constant(image_size, image_size, false);

    const double obj_rgb[3] = {obj.r, obj.g, obj.b};
    for (int y = 0; y < image_size; ++y)
      for (int x = 0; x < image_size; ++x) {
        const bool inside = inside_shape(label, x - cx, y - cy, r);
        footprint.inside(y, x) = inside;
        if (inside) {
          for (int c = 0; c < 3; ++c) img(y, x, c) = obj_rgb[c];
        } else {
          double waves = 0.0;
          for (int k = 0; k < 3; ++k)
            waves += amp[k] * std::cos(2.0 * std::numbers::pi * (fx[k] * x + fy[k] * y) / s + ph[k]);
          const double noise = rng.uniform(-0.012, 0.012);
          for (int c = 0; c < 3; ++c)
            img(y, x, c) = std::min(std::max(bg_base + tint[c] + waves + noise, 0.0), 1.0);
        }
      }
    ds.images.push_back(quantized(img));
    ds.labels.push_back(label);
    ds.object_masks.push_back(std::move(footprint));
  }
  return ds;
}

}  // namespace ssta
