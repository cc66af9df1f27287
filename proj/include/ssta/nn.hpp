#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssta/image.hpp"
#include "ssta/rng.hpp"

namespace ssta {

enum class LayerKind : std::uint8_t {
  kConv2d = 1,   // valid padding, stride 1
  kRelu = 2,
  kMaxPool2 = 3,  // 2x2, stride 2, trailing odd row/col dropped
  kFlatten = 4,   // channel-major, each plane row-major
  kDense = 5,
};

/// One layer of the classifier. Conv weights live in a matrix with one
/// column per output channel and rows indexed by (in_c, ky, kx); dense
/// weights are [out_dim x in_dim].
struct Layer {
  LayerKind kind;
  int out_c = 0, in_c = 0, kh = 0, kw = 0;  // conv
  int out_dim = 0, in_dim = 0;              // dense
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Feed-forward classifier over unit-interval images. All arithmetic is
/// double precision; file storage is f32.
struct Network {
  int input_h = 0, input_w = 0, input_c = 0;
  int num_classes = 0;
  std::vector<Layer> layers;
};

/// Two conv/relu/pool blocks followed by two dense layers, He-initialized
/// from the seeded stream. input_size must leave positive spatial extent
/// after both blocks (>= 20).
Network make_desk_classifier(int input_size, int channels, int num_classes, Rng& rng);
Network make_desk_classifier(int input_size, int channels, int num_classes, std::uint64_t seed);

/// Raw logits, no softmax.
Eigen::VectorXd forward(const Network& net, const Image& x);

/// Scalar functional of the logits: returns the loss and fills dlogits.
using LogitLoss =
    std::function<double(const Eigen::VectorXd& logits, Eigen::VectorXd& dlogits)>;

/// dLoss/dInput by reverse accumulation. Maxpool routes to the first
/// maximal element in scan order on ties; relu uses sub-gradient 0 at 0.
Image input_gradient(const Network& net, const Image& x, const LogitLoss& loss);

/// Prediction with ties resolved against the attacker: if the true label y
/// attains the maximum (even jointly), the prediction is y; otherwise the
/// first maximal index.
int predicted_class(const Eigen::VectorXd& logits, int y);

/// Numerically stable softmax probabilities.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct Dataset;  // dataset.hpp

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 32;
  std::uint64_t seed = 1;
  /// Amplitude of the uniform pixel noise added to training inputs.
  double noise_aug = 2.0 / 255.0;
};

struct TrainOutcome {
  Network net;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Seeded minibatch SGD with momentum on softmax cross-entropy, over the
/// dataset's 80/20 split. Bit-reproducible for a fixed seed. Throws
/// numeric_error naming the epoch if the loss leaves the finite range.
TrainOutcome train(const Dataset& data, const TrainConfig& cfg);

/// SSTANET1 container: magic, u16 version, u16 layer count, u32 input
/// dims and class count, then per layer a kind tag, dims list and f32
/// payload (weights then bias for parameterized layers).
void save_weights(const Network& net, const std::string& path);
Network load_weights(const std::string& path);

}  // namespace ssta
