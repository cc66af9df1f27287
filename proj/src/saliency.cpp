#include "ssta/saliency.hpp"

#include <array>
#include <cmath>

#include "ssta/image_io.hpp"

namespace ssta {

namespace detail {

Plane binomial_blur5(const Plane& p) {
  static constexpr std::array<double, 5> kKernel = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                                                    1.0 / 16};
  const int h = static_cast<int>(p.rows());
  const int w = static_cast<int>(p.cols());
  Plane rows(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) {
        const int xx = std::min(std::max(x + k, 0), w - 1);
        acc += kKernel[static_cast<std::size_t>(k + 2)] * p(y, xx);
      }
      rows(y, x) = acc;
    }
  Plane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) {
        const int yy = std::min(std::max(y + k, 0), h - 1);
        acc += kKernel[static_cast<std::size_t>(k + 2)] * rows(yy, x);
      }
      out(y, x) = acc;
    }
  return out;
}

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

}  // namespace

void rgb_to_lab(const Image& img, Plane& lab_l, Plane& lab_a, Plane& lab_b) {
  const int h = img.height;
  const int w = img.width;
  lab_l.resize(h, w);
  lab_a.resize(h, w);
  lab_b.resize(h, w);
  if (img.channels == 1) {
    // Equal RGB components collapse to fX = fY = fZ exactly.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        lab_l(y, x) = 116.0 * lab_f(srgb_to_linear(img(y, x, 0))) - 16.0;
    lab_a.setZero();
    lab_b.setZero();
    return;
  }
  // sRGB primaries, D65 white, 2-degree observer.
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double r = srgb_to_linear(img(y, x, 0));
      const double g = srgb_to_linear(img(y, x, 1));
      const double b = srgb_to_linear(img(y, x, 2));
      const double cx = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
      const double cy = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
      const double cz = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
      const double fx = lab_f(cx / xn);
      const double fy = lab_f(cy / yn);
      const double fz = lab_f(cz / zn);
      lab_l(y, x) = 116.0 * fy - 16.0;
      lab_a(y, x) = 500.0 * (fx - fy);
      lab_b(y, x) = 200.0 * (fy - fz);
    }
}

}  // namespace detail

namespace {

SaliencyMap normalized_map(Plane raw) {
  SaliencyMap map;
  map.height = static_cast<int>(raw.rows());
  map.width = static_cast<int>(raw.cols());
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (hi > lo)
    map.scores = (raw - lo) / (hi - lo);
  else
    map.scores = Plane::Zero(raw.rows(), raw.cols());
  return map;
}

}  // namespace

SaliencyMap lc_saliency(const Image& img) {
  const Plane gray = luma(img);
  const int h = img.height;
  const int w = img.width;
  Eigen::ArrayXXi level(h, w);
  std::array<long long, 256> hist{};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int g = quantize8(gray(y, x));
      level(y, x) = g;
      ++hist[static_cast<std::size_t>(g)];
    }
  // Histogram form of the all-pairs gray distance sum.
  std::array<double, 256> per_level{};
  for (int v = 0; v < 256; ++v) {
    double acc = 0.0;
    for (int g = 0; g < 256; ++g)
      acc += static_cast<double>(hist[static_cast<std::size_t>(g)]) * std::abs(v - g);
    per_level[static_cast<std::size_t>(v)] = acc;
  }
  Plane raw(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) raw(y, x) = per_level[static_cast<std::size_t>(level(y, x))];
  return normalized_map(std::move(raw));
}

SaliencyMap ft_saliency(const Image& img) {
  Plane lab_l, lab_a, lab_b;
  detail::rgb_to_lab(img, lab_l, lab_a, lab_b);
  const double mean_l = lab_l.mean();
  const double mean_a = lab_a.mean();
  const double mean_b = lab_b.mean();
  const Plane blur_l = detail::binomial_blur5(lab_l);
  const Plane blur_a = detail::binomial_blur5(lab_a);
  const Plane blur_b = detail::binomial_blur5(lab_b);
  Plane raw = ((blur_l - mean_l).square() + (blur_a - mean_a).square() +
               (blur_b - mean_b).square())
                  .sqrt();
  return normalized_map(std::move(raw));
}

Mask threshold_mask(const SaliencyMap& map, int tau) {
  if (tau < 0 || tau > 255) throw std::invalid_argument("tau must lie in 0..255");
  Mask mask;
  mask.height = map.height;
  mask.width = map.width;
  mask.tau = tau;
  mask.inside = map.scores.unaryExpr(
      [tau](double s) { return std::llround(s * 255.0) >= tau; });
  return mask;
}

Mask load_mask(const std::string& path, int height, int width) {
  const Image img = load_image(path);
  if (img.channels != 1) throw format_error("mask file must be grayscale: " + path);
  if (img.height != height || img.width != width)
    throw shape_error("mask shape " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                      " does not match expected " + std::to_string(height) + "x" +
                      std::to_string(width));
  Mask mask;
  mask.height = height;
  mask.width = width;
  mask.tau = Mask::kImportedTau;
  mask.inside = img.planes[0].unaryExpr([](double v) { return quantize8(v) >= 128; });
  return mask;
}

Mask full_mask(int height, int width) {
  Mask mask;
  mask.height = height;
  mask.width = width;
  mask.tau = 0;
  mask.inside = BoolPlane::Constant(height, width, true);
  return mask;
}

double mask_area_fraction(const Mask& mask) {
  return static_cast<double>(mask.inside.count()) /
         (static_cast<double>(mask.height) * static_cast<double>(mask.width));
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) throw shape_error("mask_iou: shapes differ");
  const auto inter = (a.inside && b.inside).count();
  const auto uni = (a.inside || b.inside).count();
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace ssta
