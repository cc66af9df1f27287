#pragma once

#include <map>
#include <optional>
#include <string>

#include "ssta/image.hpp"

namespace ssta {

/// Full-reference quality scores for one image pair. Absent fields carry a
/// reason in `unavailable`. psnr uses +infinity as the identical-pair
/// sentinel (serialized as null).
struct MetricReport {
  std::optional<double> mse, psnr, ssim, uqi, scc, vifp;
  std::map<std::string, std::string> unavailable;
};

/// Mean of (255*(x - x'))^2 over all pixels and channels (8-bit scale).
double mse(const Image& x, const Image& y);

/// 10*log10(255^2 / mse), +infinity for identical images.
double psnr(const Image& x, const Image& y);

/// Single-scale SSIM on Rec.601 luma: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, averaged over valid positions.
/// Needs min dimension >= 11.
double ssim(const Image& x, const Image& y);

/// Universal quality index: SSIM with zero stabilizers over sliding 8x8
/// uniform windows; zero-denominator windows are skipped. Needs min
/// dimension >= 8; throws numeric_error when every window is degenerate.
double uqi(const Image& x, const Image& y);

/// Spatial correlation coefficient: Pearson correlation of the two
/// Laplacian-filtered lumas (3x3 kernel, valid region); zero variance on
/// either side gives 0 by convention. Needs min dimension >= 3.
double scc(const Image& x, const Image& y);

/// Pixel-domain visual information fidelity over 4 scales (Gaussian
/// windows 17/9/5/3, sigma N/5, x2 decimation between scales, noise
/// variance 2). Needs min dimension >= 32.
double vifp(const Image& x, const Image& y);

/// Runs every metric, converting per-metric failures into absent fields.
/// Only a shape mismatch fails the whole report.
MetricReport metric_report(const Image& x, const Image& y);

namespace detail {
/// Normalized 1-D Gaussian taps, length 2*radius+1.
Eigen::ArrayXd gaussian_taps(int radius, double sigma);
/// Separable valid-mode cross-correlation with identical row/col taps.
Plane filter_valid(const Plane& p, const Eigen::ArrayXd& taps);
/// Keep every second row and column, starting at index 0.
Plane decimate2(const Plane& p);
/// Mean SSIM structure term (sigma_xy + C3)/(sigma_x sigma_y + C3) over
/// valid windows, C3 = C2/2; the shift-invariant factor of SSIM.
double ssim_structure_mean(const Image& x, const Image& y);
}  // namespace detail

}  // namespace ssta
