#pragma once

#include <cmath>

#include "ssta/image.hpp"
#include "ssta/saliency.hpp"

namespace ssta {

/// Per-pixel displacement field. du moves samples along columns (u), dv
/// along rows (v); origin top-left, units of pixels. All channels of an
/// image share the same flow.
template <typename T>
struct FlowFieldT {
  int height = 0;
  int width = 0;
  PlaneT<T> du;
  PlaneT<T> dv;

  FlowFieldT() = default;
  FlowFieldT(int h, int w)
      : height(h), width(w), du(PlaneT<T>::Zero(h, w)), dv(PlaneT<T>::Zero(h, w)) {}

  static FlowFieldT zero(int h, int w) { return FlowFieldT(h, w); }

  bool same_shape(const FlowFieldT& o) const { return height == o.height && width == o.width; }

  T max_abs() const {
    if (height == 0 || width == 0) return T(0);
    return std::max(du.abs().maxCoeff(), dv.abs().maxCoeff());
  }
};

using FlowField = FlowFieldT<double>;

namespace warp_detail {

// Sampling geometry for one output pixel: clamped coordinates, the lattice
// cell and the index-clamped neighbour columns/rows.
template <typename T>
struct SamplePoint {
  int x0, x1, y0, y1;  // index-clamped neighbours
  T ax, ay;            // in-cell offsets
  bool u_interior;     // raw coordinate inside [0, w-1] (clamp inactive)
  bool v_interior;
};

template <typename T>
SamplePoint<T> locate(T u_raw, T v_raw, int h, int w) {
  SamplePoint<T> s;
  s.u_interior = u_raw >= T(0) && u_raw <= T(w - 1);
  s.v_interior = v_raw >= T(0) && v_raw <= T(h - 1);
  T u = std::min(std::max(u_raw, T(0)), T(w - 1));
  T v = std::min(std::max(v_raw, T(0)), T(h - 1));
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  s.ax = u - T(x0);
  s.ay = v - T(y0);
  s.x0 = std::min(std::max(x0, 0), w - 1);
  s.y0 = std::min(std::max(y0, 0), h - 1);
  s.x1 = std::min(x0 + 1, w - 1);
  s.y1 = std::min(y0 + 1, h - 1);
  return s;
}

}  // namespace warp_detail

/// Resample x through the flow field: output pixel (y,x) reads the source
/// at (x + du, y + dv) with bilinear interpolation over the four lattice
/// neighbours. Sampling coordinates are clamped to the grid, so border
/// behaviour is edge replication. Zero flow reproduces x bit-exactly.
template <typename T>
ImageT<T> warp(const ImageT<T>& x, const FlowFieldT<T>& f) {
  if (f.height != x.height || f.width != x.width)
    throw shape_error("warp: flow shape does not match image");
  ImageT<T> out(x.height, x.width, x.channels);
  for (int y = 0; y < x.height; ++y)
    for (int xx = 0; xx < x.width; ++xx) {
      const auto s = warp_detail::locate<T>(T(xx) + f.du(y, xx), T(y) + f.dv(y, xx),
                                            x.height, x.width);
      const T w00 = (T(1) - s.ax) * (T(1) - s.ay);
      const T w10 = s.ax * (T(1) - s.ay);
      const T w01 = (T(1) - s.ax) * s.ay;
      const T w11 = s.ax * s.ay;
      for (int c = 0; c < x.channels; ++c) {
        const auto& p = x.planes[static_cast<std::size_t>(c)];
        out(y, xx, c) = w00 * p(s.y0, s.x0) + w10 * p(s.y0, s.x1) + w01 * p(s.y1, s.x0) +
                        w11 * p(s.y1, s.x1);
      }
    }
  return out;
}

/// Masked composite with range clip: inside the mask the warped value
/// (clipped to [0,1]), outside the original pixel, bit-exactly.
template <typename T>
ImageT<T> composite(const ImageT<T>& x, const ImageT<T>& warped, const Mask& mask) {
  if (!x.same_shape(warped)) throw shape_error("composite: image shapes differ");
  if (mask.height != x.height || mask.width != x.width)
    throw shape_error("composite: mask shape does not match image");
  ImageT<T> out = x;
  for (int y = 0; y < x.height; ++y)
    for (int xx = 0; xx < x.width; ++xx) {
      if (!mask.inside(y, xx)) continue;
      for (int c = 0; c < x.channels; ++c)
        out(y, xx, c) = std::min(std::max(warped(y, xx, c), T(0)), T(1));
    }
  return out;
}

/// Backward pass of composite(x, warp(x, f), mask) with respect to the
/// flow. grad_out is dL/dx_adv. Pixels outside the mask receive zero; the
/// clip contributes sub-gradient 0 strictly outside (0,1) and 1 at the
/// boundary values themselves; the coordinate clamp zeroes the derivative
/// where it saturates. Channel contributions are summed.
template <typename T>
FlowFieldT<T> flow_gradient(const ImageT<T>& x, const FlowFieldT<T>& f, const Mask& mask,
                            const ImageT<T>& grad_out) {
  if (f.height != x.height || f.width != x.width)
    throw shape_error("flow_gradient: flow shape does not match image");
  if (!x.same_shape(grad_out)) throw shape_error("flow_gradient: grad shape does not match image");
  if (mask.height != x.height || mask.width != x.width)
    throw shape_error("flow_gradient: mask shape does not match image");
  FlowFieldT<T> g(x.height, x.width);
  for (int y = 0; y < x.height; ++y)
    for (int xx = 0; xx < x.width; ++xx) {
      if (!mask.inside(y, xx)) continue;
      const auto s = warp_detail::locate<T>(T(xx) + f.du(y, xx), T(y) + f.dv(y, xx),
                                            x.height, x.width);
      T gu = T(0);
      T gv = T(0);
      for (int c = 0; c < x.channels; ++c) {
        const auto& p = x.planes[static_cast<std::size_t>(c)];
        const T v00 = p(s.y0, s.x0);
        const T v10 = p(s.y0, s.x1);
        const T v01 = p(s.y1, s.x0);
        const T v11 = p(s.y1, s.x1);
        const T value = (T(1) - s.ax) * (T(1) - s.ay) * v00 + s.ax * (T(1) - s.ay) * v10 +
                        (T(1) - s.ax) * s.ay * v01 + s.ax * s.ay * v11;
        if (value < T(0) || value > T(1)) continue;  // clip saturated
        const T go = grad_out(y, xx, c);
        gu += go * ((T(1) - s.ay) * (v10 - v00) + s.ay * (v11 - v01));
        gv += go * ((T(1) - s.ax) * (v01 - v00) + s.ax * (v11 - v10));
      }
      g.du(y, xx) = s.u_interior ? gu : T(0);
      g.dv(y, xx) = s.v_interior ? gv : T(0);
    }
  return g;
}

/// Component-wise projection onto the infinity-norm budget: every du, dv
/// entry clamped to [-xi, xi]. Idempotent and non-expansive.
template <typename T>
FlowFieldT<T> project_flow(FlowFieldT<T> f, T xi) {
  if (xi < T(0)) throw std::invalid_argument("project_flow: xi must be >= 0");
  f.du = f.du.max(-xi).min(xi);
  f.dv = f.dv.max(-xi).min(xi);
  return f;
}

}  // namespace ssta
