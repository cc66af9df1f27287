#pragma once

#include <Eigen/Core>

#include <cmath>
#include <vector>

#include "ssta/errors.hpp"

namespace ssta {

template <typename T>
using PlaneT = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<double>;
using BoolPlane = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense raster of unit-interval intensities, stored as one plane per
/// channel; planes[c](y, x). channels is 1 (gray) or 3 (RGB). Values stay
/// continuous in [0,1]; quantization to 8 bits happens only at file I/O.
template <typename T>
struct ImageT {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<PlaneT<T>> planes;

  ImageT() = default;

  ImageT(int h, int w, int c, T fill = T(0)) : height(h), width(w), channels(c) {
    if (h < 1 || w < 1 || (c != 1 && c != 3))
      throw shape_error("image shape must satisfy h>=1, w>=1, channels in {1,3}");
    planes.assign(static_cast<std::size_t>(c), PlaneT<T>::Constant(h, w, fill));
  }

  T operator()(int y, int x, int c = 0) const { return planes[static_cast<std::size_t>(c)](y, x); }
  T& operator()(int y, int x, int c = 0) { return planes[static_cast<std::size_t>(c)](y, x); }

  bool same_shape(const ImageT& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
};

using Image = ImageT<double>;

/// 8-bit quantization with round-half-away-from-zero, clamped to [0,255].
inline int quantize8(double v) {
  const long long q = std::llround(v * 255.0);
  return q < 0 ? 0 : (q > 255 ? 255 : static_cast<int>(q));
}

inline double dequantize8(int v) { return static_cast<double>(v) / 255.0; }

template <typename T>
PlaneT<T> clamp01(const PlaneT<T>& p) {
  return p.max(T(0)).min(T(1));
}

/// Snap every intensity onto the 8-bit grid (the values a save/load round
/// trip would produce).
template <typename T>
ImageT<T> quantized(const ImageT<T>& img) {
  ImageT<T> out = img;
  for (auto& p : out.planes)
    p = p.unaryExpr([](T v) { return T(dequantize8(quantize8(static_cast<double>(v)))); });
  return out;
}

/// Rec.601 luma; identity on single-channel images.
template <typename T>
PlaneT<T> luma(const ImageT<T>& img) {
  if (img.channels == 1) return img.planes[0];
  return T(0.299) * img.planes[0] + T(0.587) * img.planes[1] + T(0.114) * img.planes[2];
}

/// Resampling with the align-corners-false convention: source coordinate
/// s = (d + 0.5) * (in/out) - 0.5, clamped to [0, in-1], then a bilinear
/// blend of the four neighbours.
template <typename T>
ImageT<T> resize_bilinear(const ImageT<T>& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw shape_error("resize target must be at least 1x1");
  ImageT<T> out(out_h, out_w, img.channels);
  const double sy_scale = static_cast<double>(img.height) / out_h;
  const double sx_scale = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * sy_scale - 0.5;
    sy = std::min(std::max(sy, 0.0), static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ay = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * sx_scale - 0.5;
      sx = std::min(std::max(sx, 0.0), static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double ax = sx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const auto& p = img.planes[static_cast<std::size_t>(c)];
        const double v = (1.0 - ay) * ((1.0 - ax) * p(y0, x0) + ax * p(y0, x1)) +
                         ay * ((1.0 - ax) * p(y1, x0) + ax * p(y1, x1));
        out(y, x, c) = static_cast<T>(v);
      }
    }
  }
  return out;
}

/// Perturbation visualization: clip(0.5 + factor*(x_adv - x), 0, 1).
/// Mid-gray marks untouched pixels.
template <typename T>
ImageT<T> amplify_diff(const ImageT<T>& x, const ImageT<T>& x_adv, T factor) {
  if (!x.same_shape(x_adv)) throw shape_error("amplify_diff: image shapes differ");
  ImageT<T> out(x.height, x.width, x.channels);
  for (int c = 0; c < x.channels; ++c) {
    const std::size_t ci = static_cast<std::size_t>(c);
    out.planes[ci] = clamp01<T>(T(0.5) + factor * (x_adv.planes[ci] - x.planes[ci]));
  }
  return out;
}

}  // namespace ssta
