#pragma once

#include <string>

#include "ssta/image.hpp"

namespace ssta {

/// Decode an 8-bit grayscale or RGB image. PNG, PPM (P6) and PGM (P5) are
/// recognized by content. Each 8-bit value v maps to v/255.
Image load_image(const std::string& path);

/// Encode with round-half-away-from-zero 8-bit quantization. The container
/// is chosen by extension: .png, .ppm (3-channel) or .pgm (1-channel).
void save_image(const Image& img, const std::string& path);

}  // namespace ssta
