#pragma once

#include <cstdint>
#include <vector>

#include "ssta/image.hpp"
#include "ssta/saliency.hpp"

namespace ssta {

/// Desk-scale labelled image set with ground-truth object footprints.
/// Split convention: the first 80% of samples train, the rest test.
struct Dataset {
  int image_size = 0;
  int num_classes = 0;
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<Mask> object_masks;

  int size() const { return static_cast<int>(images.size()); }
  int train_count() const { return size() * 4 / 5; }
  int test_count() const { return size() - train_count(); }
};

/// Deterministic synthetic scenes: one solid-color geometric shape (class =
/// shape kind) of random position and scale over a low-contrast textured
/// background. Intensities are pre-quantized to the 8-bit grid so the PNG
/// round trip is the identity. num_classes must lie in 4..10.
Dataset generate_dataset(std::uint64_t seed, int n, int image_size, int num_classes);

}  // namespace ssta
