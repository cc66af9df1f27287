#include "ssta/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ssta {

namespace {

void require_same_shape(const Image& x, const Image& y, const char* op) {
  if (!x.same_shape(y)) throw shape_error(std::string(op) + ": image shapes differ");
}

void require_min_dim(const Image& x, int need, const char* op) {
  if (std::min(x.height, x.width) < need)
    throw std::invalid_argument(std::string(op) + ": image too small (min dimension " +
                                std::to_string(need) + ")");
}

}  // namespace

namespace detail {

Eigen::ArrayXd gaussian_taps(int radius, double sigma) {
  Eigen::ArrayXd taps(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    taps(i + radius) = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
  return taps / taps.sum();
}

Plane filter_valid(const Plane& p, const Eigen::ArrayXd& taps) {
  const int k = static_cast<int>(taps.size());
  const int oh = static_cast<int>(p.rows()) - k + 1;
  const int ow = static_cast<int>(p.cols()) - k + 1;
  Plane rows(p.rows(), ow);
  for (int y = 0; y < static_cast<int>(p.rows()); ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += taps(i) * p(y, x + i);
      rows(y, x) = acc;
    }
  Plane out(oh, ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += taps(i) * rows(y + i, x);
      out(y, x) = acc;
    }
  return out;
}

Plane decimate2(const Plane& p) {
  const int oh = (static_cast<int>(p.rows()) + 1) / 2;
  const int ow = (static_cast<int>(p.cols()) + 1) / 2;
  Plane out(oh, ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) out(y, x) = p(2 * y, 2 * x);
  return out;
}

}  // namespace detail

double mse(const Image& x, const Image& y) {
  require_same_shape(x, y, "mse");
  double acc = 0.0;
  for (int yy = 0; yy < x.height; ++yy)
    for (int xx = 0; xx < x.width; ++xx)
      for (int c = 0; c < x.channels; ++c) {
        const double d = 255.0 * (x(yy, xx, c) - y(yy, xx, c));
        acc += d * d;
      }
  return acc / (static_cast<double>(x.height) * x.width * x.channels);
}

double psnr(const Image& x, const Image& y) {
  const double m = mse(x, y);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

namespace {

// Per-window Gaussian moments shared by ssim and its structure term.
struct WindowMoments {
  Plane mu1, mu2, var1, var2, cov;
};

WindowMoments gaussian_moments(const Plane& a, const Plane& b) {
  const Eigen::ArrayXd taps = detail::gaussian_taps(5, 1.5);
  WindowMoments m;
  m.mu1 = detail::filter_valid(a, taps);
  m.mu2 = detail::filter_valid(b, taps);
  m.var1 = detail::filter_valid(a.square(), taps) - m.mu1.square();
  m.var2 = detail::filter_valid(b.square(), taps) - m.mu2.square();
  m.cov = detail::filter_valid(a * b, taps) - m.mu1 * m.mu2;
  return m;
}

}  // namespace

double ssim(const Image& x, const Image& y) {
  require_same_shape(x, y, "ssim");
  require_min_dim(x, 11, "ssim");
  constexpr double c1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
  constexpr double c2 = 0.03 * 0.03;
  const WindowMoments m = gaussian_moments(luma(x), luma(y));
  const Plane num = (2.0 * m.mu1 * m.mu2 + c1) * (2.0 * m.cov + c2);
  const Plane den =
      (m.mu1.square() + m.mu2.square() + c1) * (m.var1 + m.var2 + c2);
  return (num / den).mean();
}

double detail::ssim_structure_mean(const Image& x, const Image& y) {
  require_same_shape(x, y, "ssim");
  require_min_dim(x, 11, "ssim");
  constexpr double c3 = 0.03 * 0.03 / 2.0;
  const WindowMoments m = gaussian_moments(luma(x), luma(y));
  const Plane sigma1 = m.var1.max(0.0).sqrt();
  const Plane sigma2 = m.var2.max(0.0).sqrt();
  return ((m.cov + c3) / (sigma1 * sigma2 + c3)).mean();
}

double uqi(const Image& x, const Image& y) {
  require_same_shape(x, y, "uqi");
  require_min_dim(x, 8, "uqi");
  const Plane a = luma(x);
  const Plane b = luma(y);
  constexpr int n = 8;
  constexpr double inv = 1.0 / (n * n);
  double acc = 0.0;
  long long windows = 0;
  for (int wy = 0; wy + n <= static_cast<int>(a.rows()); ++wy)
    for (int wx = 0; wx + n <= static_cast<int>(a.cols()); ++wx) {
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      double amin = a(wy, wx), amax = amin, bmin = b(wy, wx), bmax = bmin;
      for (int dy = 0; dy < n; ++dy)
        for (int dx = 0; dx < n; ++dx) {
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
      const double ma = sa * inv;
      const double mb = sb * inv;
      // a constant window has exactly zero variance/covariance; computing it
      // from the sums would leave cancellation residue
      const bool const_a = amin == amax;
      const bool const_b = bmin == bmax;
      const double va = const_a ? 0.0 : saa * inv - ma * ma;
      const double vb = const_b ? 0.0 : sbb * inv - mb * mb;
      const double cab = const_a || const_b ? 0.0 : sab * inv - ma * mb;
      const double den = (ma * ma + mb * mb) * (va + vb);
      if (den == 0.0) continue;
      acc += ((2.0 * ma * mb) * (2.0 * cab)) / den;
      ++windows;
    }
  if (windows == 0) throw numeric_error("uqi: all windows degenerate");
  return acc / static_cast<double>(windows);
}

double scc(const Image& x, const Image& y) {
  require_same_shape(x, y, "scc");
  require_min_dim(x, 3, "scc");
  const Plane a = luma(x);
  const Plane b = luma(y);
  const int oh = x.height - 2;
  const int ow = x.width - 2;
  auto laplacian = [](const Plane& p, int yy, int xx) {
    return 4.0 * p(yy + 1, xx + 1) - p(yy, xx + 1) - p(yy + 2, xx + 1) - p(yy + 1, xx) -
           p(yy + 1, xx + 2);
  };
  double sa = 0.0, sb = 0.0;
  const double count = static_cast<double>(oh) * ow;
  Plane ha(oh, ow), hb(oh, ow);
  for (int yy = 0; yy < oh; ++yy)
    for (int xx = 0; xx < ow; ++xx) {
      ha(yy, xx) = laplacian(a, yy, xx);
      hb(yy, xx) = laplacian(b, yy, xx);
      sa += ha(yy, xx);
      sb += hb(yy, xx);
    }
  const double ma = sa / count;
  const double mb = sb / count;
  double vaa = 0.0, vbb = 0.0, vab = 0.0;
  for (int yy = 0; yy < oh; ++yy)
    for (int xx = 0; xx < ow; ++xx) {
      const double da = ha(yy, xx) - ma;
      const double db = hb(yy, xx) - mb;
      vaa += da * da;
      vbb += db * db;
      vab += da * db;
    }
  if (vaa == 0.0 || vbb == 0.0) return 0.0;
  return vab / std::sqrt(vaa * vbb);
}

double vifp(const Image& x, const Image& y) {
  require_same_shape(x, y, "vifp");
  require_min_dim(x, 32, "vifp");
  constexpr double sigma_n_sq = 2.0;
  constexpr double eps = 1e-10;
  Plane ref = luma(x);
  Plane dist = luma(y);
  double num = 0.0;
  double den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int n = (1 << (5 - scale)) + 1;  // 17, 9, 5, 3
    const Eigen::ArrayXd taps = detail::gaussian_taps(n / 2, static_cast<double>(n) / 5.0);
    if (scale > 1) {
      if (std::min(ref.rows(), ref.cols()) < n) break;
      ref = detail::decimate2(detail::filter_valid(ref, taps));
      dist = detail::decimate2(detail::filter_valid(dist, taps));
    }
    if (std::min(ref.rows(), ref.cols()) < n) break;
    const Plane mu1 = detail::filter_valid(ref, taps);
    const Plane mu2 = detail::filter_valid(dist, taps);
    const Plane var1 = (detail::filter_valid(ref.square(), taps) - mu1.square()).max(0.0);
    const Plane var2 = (detail::filter_valid(dist.square(), taps) - mu2.square()).max(0.0);
    const Plane cov = detail::filter_valid(ref * dist, taps) - mu1 * mu2;
    const Plane g = cov / (var1 + eps);
    const Plane sv_sq = (var2 - g * cov).max(0.0);
    num += (1.0 + g.square() * var1 / (sv_sq + sigma_n_sq)).log().sum() / std::numbers::ln2;
    den += (1.0 + var1 / sigma_n_sq).log().sum() / std::numbers::ln2;
  }
  if (den == 0.0) throw numeric_error("vifp: reference carries no information");
  return num / den;
}

MetricReport metric_report(const Image& x, const Image& y) {
  require_same_shape(x, y, "metric_report");
  MetricReport r;
  auto attempt = [&](const char* name, std::optional<double>& slot, auto&& fn) {
    try {
      slot = fn();
    } catch (const shape_error&) {
      throw;
    } catch (const std::exception& e) {
      r.unavailable[name] = e.what();
    }
  };
  attempt("mse", r.mse, [&] { return mse(x, y); });
  attempt("psnr", r.psnr, [&] { return psnr(x, y); });
  attempt("ssim", r.ssim, [&] { return ssim(x, y); });
  attempt("uqi", r.uqi, [&] { return uqi(x, y); });
  attempt("scc", r.scc, [&] { return scc(x, y); });
  attempt("vifp", r.vifp, [&] { return vifp(x, y); });
  return r;
}

}  // namespace ssta
