#pragma once

#include <string>

#include "ssta/image.hpp"

namespace ssta {

/// Per-pixel salience scores in [0,1], same spatial shape as the source
/// image. Both extractors min-max normalize their raw scores, so the raw
/// maximum maps to exactly 1 unless the raw map is constant (then all 0).
struct SaliencyMap {
  int height = 0;
  int width = 0;
  Plane scores;
};

/// Binary region cut from a saliency map at threshold tau (0..255), or
/// imported from a mask file (tau == kImportedTau). Thresholding is
/// monotone: raising tau never adds pixels.
struct Mask {
  static constexpr int kImportedTau = -1;

  int height = 0;
  int width = 0;
  BoolPlane inside;
  int tau = kImportedTau;

  bool empty() const { return !inside.any(); }
};

/// Global-contrast salience: the 8-bit gray histogram distance
/// raw(p) = sum_g hist(g) * |gray(p) - g|, min-max normalized.
SaliencyMap lc_saliency(const Image& img);

/// Frequency-tuned salience: distance in CIELab between the image mean and
/// a binomially blurred pixel, min-max normalized.
SaliencyMap ft_saliency(const Image& img);

/// inside(p) = (round(score(p)*255) >= tau); tau must lie in 0..255.
Mask threshold_mask(const SaliencyMap& map, int tau);

/// Read an externally produced mask (8-bit grayscale, >=128 means inside),
/// checked against the expected shape.
Mask load_mask(const std::string& path, int height, int width);

Mask full_mask(int height, int width);

double mask_area_fraction(const Mask& mask);

double mask_iou(const Mask& a, const Mask& b);

namespace detail {
/// Separable 5-tap binomial blur (1,4,6,4,1)/16 with edge replication.
Plane binomial_blur5(const Plane& p);
/// sRGB (D65) to CIELab. Single-channel images map to L with a = b = 0.
void rgb_to_lab(const Image& img, Plane& lab_l, Plane& lab_a, Plane& lab_b);
}  // namespace detail

}  // namespace ssta
