#include "ssta/nn.hpp"

#include <cmath>
#include <numeric>

#include "ssta/dataset.hpp"

namespace ssta {

namespace {

// Activations flowing between layers: spatial channel planes up to the
// flatten layer, a flat vector afterwards.
struct Tensor {
  std::vector<Plane> maps;
  Eigen::VectorXd vec;
  bool flat = false;

  static Tensor from_image(const Image& img) {
    Tensor t;
    t.maps = img.planes;
    return t;
  }
};

struct LayerCache {
  // conv
  Eigen::MatrixXd cols;  // [out_pixels, in_c*kh*kw]
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  // relu: pre-activation sign
  Tensor pre;
  // maxpool: chosen source index (y*in_w + x) per output cell, per channel
  std::vector<Eigen::ArrayXXi> pool_src;
  // flatten: input spatial shape
  int flat_c = 0, flat_h = 0, flat_w = 0;
  // dense: input vector
  Eigen::VectorXd dense_in;
};

struct ParamGrad {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

Eigen::MatrixXd im2col(const std::vector<Plane>& maps, int kh, int kw, int out_h, int out_w) {
  const int in_c = static_cast<int>(maps.size());
  const int in_w = static_cast<int>(maps[0].cols());
  Eigen::MatrixXd cols(static_cast<Eigen::Index>(out_h) * out_w,
                       static_cast<Eigen::Index>(in_c) * kh * kw);
  for (int c = 0; c < in_c; ++c) {
    const Plane& p = maps[static_cast<std::size_t>(c)];
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const Eigen::Index col = (static_cast<Eigen::Index>(c) * kh + ky) * kw + kx;
        for (int y = 0; y < out_h; ++y)
          for (int x = 0; x < out_w; ++x)
            cols(static_cast<Eigen::Index>(y) * out_w + x, col) = p(y + ky, x + kx);
      }
  }
  (void)in_w;
  return cols;
}

Tensor conv_forward(const Layer& layer, const Tensor& in, LayerCache* cache) {
  const int in_h = static_cast<int>(in.maps[0].rows());
  const int in_w = static_cast<int>(in.maps[0].cols());
  const int out_h = in_h - layer.kh + 1;
  const int out_w = in_w - layer.kw + 1;
  if (out_h < 1 || out_w < 1) throw shape_error("conv2d: input smaller than kernel");
  if (static_cast<int>(in.maps.size()) != layer.in_c)
    throw shape_error("conv2d: channel count mismatch");
  Eigen::MatrixXd cols = im2col(in.maps, layer.kh, layer.kw, out_h, out_w);
  Eigen::MatrixXd out = cols * layer.weights;  // [out_pixels, out_c]
  out.rowwise() += layer.bias.transpose();
  Tensor t;
  t.maps.resize(static_cast<std::size_t>(layer.out_c));
  for (int oc = 0; oc < layer.out_c; ++oc) {
    Plane p(out_h, out_w);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) p(y, x) = out(static_cast<Eigen::Index>(y) * out_w + x, oc);
    t.maps[static_cast<std::size_t>(oc)] = std::move(p);
  }
  if (cache) {
    cache->cols = std::move(cols);
    cache->in_h = in_h;
    cache->in_w = in_w;
    cache->out_h = out_h;
    cache->out_w = out_w;
  }
  return t;
}

Tensor conv_backward(const Layer& layer, const LayerCache& cache, const Tensor& grad,
                     ParamGrad* pg, bool need_input_grad) {
  const int out_h = cache.out_h, out_w = cache.out_w;
  Eigen::MatrixXd g(static_cast<Eigen::Index>(out_h) * out_w, layer.out_c);
  for (int oc = 0; oc < layer.out_c; ++oc) {
    const Plane& p = grad.maps[static_cast<std::size_t>(oc)];
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) g(static_cast<Eigen::Index>(y) * out_w + x, oc) = p(y, x);
  }
  if (pg) {
    pg->weights = cache.cols.transpose() * g;
    pg->bias = g.colwise().sum();
  }
  Tensor t;
  if (need_input_grad) {
    Eigen::MatrixXd dcols = g * layer.weights.transpose();  // [out_pixels, in_c*kh*kw]
    t.maps.assign(static_cast<std::size_t>(layer.in_c), Plane::Zero(cache.in_h, cache.in_w));
    for (int c = 0; c < layer.in_c; ++c) {
      Plane& p = t.maps[static_cast<std::size_t>(c)];
      for (int ky = 0; ky < layer.kh; ++ky)
        for (int kx = 0; kx < layer.kw; ++kx) {
          const Eigen::Index col = (static_cast<Eigen::Index>(c) * layer.kh + ky) * layer.kw + kx;
          for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x)
              p(y + ky, x + kx) += dcols(static_cast<Eigen::Index>(y) * out_w + x, col);
        }
    }
  }
  return t;
}

Tensor relu_forward(const Tensor& in, LayerCache* cache) {
  Tensor t;
  t.flat = in.flat;
  if (in.flat) {
    t.vec = in.vec.cwiseMax(0.0);
  } else {
    t.maps.reserve(in.maps.size());
    for (const Plane& p : in.maps) t.maps.push_back(p.max(0.0));
  }
  if (cache) cache->pre = in;
  return t;
}

Tensor relu_backward(const LayerCache& cache, const Tensor& grad) {
  Tensor t;
  t.flat = grad.flat;
  if (grad.flat) {
    t.vec = (cache.pre.vec.array() > 0.0).select(grad.vec.array(), 0.0);
  } else {
    t.maps.reserve(grad.maps.size());
    for (std::size_t c = 0; c < grad.maps.size(); ++c)
      t.maps.push_back((cache.pre.maps[c] > 0.0).select(grad.maps[c], Plane::Zero(
          grad.maps[c].rows(), grad.maps[c].cols())));
  }
  return t;
}

Tensor pool_forward(const Tensor& in, LayerCache* cache) {
  const int in_h = static_cast<int>(in.maps[0].rows());
  const int in_w = static_cast<int>(in.maps[0].cols());
  const int out_h = in_h / 2;
  const int out_w = in_w / 2;
  if (out_h < 1 || out_w < 1) throw shape_error("maxpool2: input smaller than 2x2");
  Tensor t;
  t.maps.resize(in.maps.size());
  if (cache) cache->pool_src.resize(in.maps.size());
  for (std::size_t c = 0; c < in.maps.size(); ++c) {
    const Plane& p = in.maps[c];
    Plane o(out_h, out_w);
    Eigen::ArrayXXi src(out_h, out_w);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        // first maximal element in row-major scan order wins ties
        double best = p(2 * y, 2 * x);
        int best_src = (2 * y) * in_w + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const double v = p(2 * y + dy, 2 * x + dx);
            if (v > best) {
              best = v;
              best_src = (2 * y + dy) * in_w + (2 * x + dx);
            }
          }
        o(y, x) = best;
        src(y, x) = best_src;
      }
    t.maps[c] = std::move(o);
    if (cache) {
      cache->pool_src[c] = std::move(src);
      cache->in_h = in_h;
      cache->in_w = in_w;
    }
  }
  return t;
}

Tensor pool_backward(const LayerCache& cache, const Tensor& grad) {
  Tensor t;
  t.maps.assign(grad.maps.size(), Plane::Zero(cache.in_h, cache.in_w));
  for (std::size_t c = 0; c < grad.maps.size(); ++c) {
    const Plane& g = grad.maps[c];
    const Eigen::ArrayXXi& src = cache.pool_src[c];
    for (int y = 0; y < static_cast<int>(g.rows()); ++y)
      for (int x = 0; x < static_cast<int>(g.cols()); ++x) {
        const int s = src(y, x);
        t.maps[c](s / cache.in_w, s % cache.in_w) += g(y, x);
      }
  }
  return t;
}

Tensor flatten_forward(const Tensor& in, LayerCache* cache) {
  const int c = static_cast<int>(in.maps.size());
  const int h = static_cast<int>(in.maps[0].rows());
  const int w = static_cast<int>(in.maps[0].cols());
  Tensor t;
  t.flat = true;
  t.vec.resize(static_cast<Eigen::Index>(c) * h * w);
  Eigen::Index i = 0;
  for (const Plane& p : in.maps)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) t.vec(i++) = p(y, x);
  if (cache) {
    cache->flat_c = c;
    cache->flat_h = h;
    cache->flat_w = w;
  }
  return t;
}

Tensor flatten_backward(const LayerCache& cache, const Tensor& grad) {
  Tensor t;
  t.maps.resize(static_cast<std::size_t>(cache.flat_c));
  Eigen::Index i = 0;
  for (int c = 0; c < cache.flat_c; ++c) {
    Plane p(cache.flat_h, cache.flat_w);
    for (int y = 0; y < cache.flat_h; ++y)
      for (int x = 0; x < cache.flat_w; ++x) p(y, x) = grad.vec(i++);
    t.maps[static_cast<std::size_t>(c)] = std::move(p);
  }
  return t;
}

Tensor dense_forward(const Layer& layer, const Tensor& in, LayerCache* cache) {
  if (in.vec.size() != layer.in_dim) throw shape_error("dense: input size mismatch");
  Tensor t;
  t.flat = true;
  t.vec = layer.weights * in.vec + layer.bias;
  if (cache) cache->dense_in = in.vec;
  return t;
}

Tensor dense_backward(const Layer& layer, const LayerCache& cache, const Tensor& grad,
                      ParamGrad* pg, bool need_input_grad) {
  if (pg) {
    pg->weights = grad.vec * cache.dense_in.transpose();
    pg->bias = grad.vec;
  }
  Tensor t;
  t.flat = true;
  if (need_input_grad) t.vec = layer.weights.transpose() * grad.vec;
  return t;
}

Tensor run_forward(const Network& net, const Image& x, std::vector<LayerCache>* caches) {
  if (x.height != net.input_h || x.width != net.input_w || x.channels != net.input_c)
    throw shape_error("forward: input shape does not match network");
  Tensor t = Tensor::from_image(x);
  if (caches) caches->resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    LayerCache* cache = caches ? &(*caches)[i] : nullptr;
    const Layer& layer = net.layers[i];
    switch (layer.kind) {
      case LayerKind::kConv2d: t = conv_forward(layer, t, cache); break;
      case LayerKind::kRelu: t = relu_forward(t, cache); break;
      case LayerKind::kMaxPool2: t = pool_forward(t, cache); break;
      case LayerKind::kFlatten: t = flatten_forward(t, cache); break;
      case LayerKind::kDense: t = dense_forward(layer, t, cache); break;
    }
  }
  if (!t.flat) throw shape_error("network must end in a dense layer");
  return t;
}

// Backward through all layers. param_grads, when given, must be presized to
// the layer count. Returns the input gradient when requested.
Image run_backward(const Network& net, const std::vector<LayerCache>& caches,
                   const Eigen::VectorXd& dlogits, std::vector<ParamGrad>* param_grads,
                   bool need_input_grad) {
  Tensor grad;
  grad.flat = true;
  grad.vec = dlogits;
  for (std::size_t ri = net.layers.size(); ri-- > 0;) {
    const Layer& layer = net.layers[ri];
    const LayerCache& cache = caches[ri];
    ParamGrad* pg = param_grads ? &(*param_grads)[ri] : nullptr;
    const bool need_below = need_input_grad || ri > 0;
    switch (layer.kind) {
      case LayerKind::kConv2d:
        grad = conv_backward(layer, cache, grad, pg, need_below);
        break;
      case LayerKind::kRelu: grad = relu_backward(cache, grad); break;
      case LayerKind::kMaxPool2: grad = pool_backward(cache, grad); break;
      case LayerKind::kFlatten: grad = flatten_backward(cache, grad); break;
      case LayerKind::kDense:
        grad = dense_backward(layer, cache, grad, pg, need_below);
        break;
    }
  }
  Image out;
  if (need_input_grad) {
    out.height = net.input_h;
    out.width = net.input_w;
    out.channels = net.input_c;
    out.planes = std::move(grad.maps);
  }
  return out;
}

}  // namespace

Network make_desk_classifier(int input_size, int channels, int num_classes, Rng& rng) {
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (input_size < 20) throw shape_error("desk classifier needs input_size >= 20");
  Network net;
  net.input_h = net.input_w = input_size;
  net.input_c = channels;
  net.num_classes = num_classes;

  auto he_matrix = [&rng](Eigen::Index rows, Eigen::Index cols, double fan_in) {
    Eigen::MatrixXd m(rows, cols);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, stddev);
    return m;
  };
  auto conv = [&](int in_c, int out_c, int k) {
    Layer l;
    l.kind = LayerKind::kConv2d;
    l.in_c = in_c;
    l.out_c = out_c;
    l.kh = l.kw = k;
    l.weights = he_matrix(static_cast<Eigen::Index>(in_c) * k * k, out_c,
                          static_cast<double>(in_c) * k * k);
    l.bias = Eigen::VectorXd::Zero(out_c);
    return l;
  };
  auto dense = [&](int in_dim, int out_dim) {
    Layer l;
    l.kind = LayerKind::kDense;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.weights = he_matrix(out_dim, in_dim, static_cast<double>(in_dim));
    l.bias = Eigen::VectorXd::Zero(out_dim);
    return l;
  };
  auto plain = [](LayerKind kind) {
    Layer l;
    l.kind = kind;
    return l;
  };

  const int s1 = (input_size - 4) / 2;  // after conv5 + pool
  const int s2 = (s1 - 4) / 2;          // after second block
  net.layers.push_back(conv(channels, 8, 5));
  net.layers.push_back(plain(LayerKind::kRelu));
  net.layers.push_back(plain(LayerKind::kMaxPool2));
  net.layers.push_back(conv(8, 16, 5));
  net.layers.push_back(plain(LayerKind::kRelu));
  net.layers.push_back(plain(LayerKind::kMaxPool2));
  net.layers.push_back(plain(LayerKind::kFlatten));
  net.layers.push_back(dense(s2 * s2 * 16, 64));
  net.layers.push_back(plain(LayerKind::kRelu));
  net.layers.push_back(dense(64, num_classes));
  return net;
}

Network make_desk_classifier(int input_size, int channels, int num_classes, std::uint64_t seed) {
  Rng rng(seed);
  return make_desk_classifier(input_size, channels, num_classes, rng);
}

Eigen::VectorXd forward(const Network& net, const Image& x) {
  return run_forward(net, x, nullptr).vec;
}

Image input_gradient(const Network& net, const Image& x, const LogitLoss& loss) {
  std::vector<LayerCache> caches;
  const Tensor out = run_forward(net, x, &caches);
  Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(out.vec.size());
  loss(out.vec, dlogits);
  return run_backward(net, caches, dlogits, nullptr, true);
}

int predicted_class(const Eigen::VectorXd& logits, int y) {
  const double top = logits.maxCoeff();
  if (y >= 0 && y < logits.size() && logits(y) == top) return y;
  for (Eigen::Index k = 0; k < logits.size(); ++k)
    if (logits(k) == top) return static_cast<int>(k);
  return 0;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  const Eigen::ArrayXd e = shifted.exp();
  return (e / e.sum()).matrix();
}

TrainOutcome train(const Dataset& data, const TrainConfig& cfg) {
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("train: invalid config");

  Rng rng(cfg.seed);
  Network net = make_desk_classifier(data.image_size, data.images[0].channels, data.num_classes, rng);

  // Datasets too small for an 80/20 split train on everything.
  const int n_train = data.train_count() > 0 ? data.train_count() : data.size();
  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);

  std::vector<ParamGrad> vel(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (l.kind == LayerKind::kConv2d || l.kind == LayerKind::kDense) {
      vel[i].weights = Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols());
      vel[i].bias = Eigen::VectorXd::Zero(l.bias.size());
    }
  }

  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    epoch_loss = 0.0;
    int seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(stop - start);
      std::vector<ParamGrad> acc(net.layers.size());
      for (std::size_t i = 0; i < net.layers.size(); ++i)
        if (vel[i].weights.size() > 0) {
          acc[i].weights = Eigen::MatrixXd::Zero(vel[i].weights.rows(), vel[i].weights.cols());
          acc[i].bias = Eigen::VectorXd::Zero(vel[i].bias.size());
        }
      double batch_loss = 0.0;
      for (std::size_t s = start; s < stop; ++s) {
        Image x = data.images[static_cast<std::size_t>(order[s])];
        if (cfg.noise_aug > 0.0)
          for (auto& p : x.planes)
            p = clamp01<double>(p.unaryExpr([&rng, &cfg](double v) {
              return v + rng.uniform(-cfg.noise_aug, cfg.noise_aug);
            }));
        const int label = data.labels[static_cast<std::size_t>(order[s])];
        std::vector<LayerCache> caches;
        const Tensor out = run_forward(net, x, &caches);
        const Eigen::VectorXd p = softmax(out.vec);
        batch_loss += -std::log(std::max(p(label), 1e-300));
        Eigen::VectorXd dlogits = p;
        dlogits(label) -= 1.0;
        std::vector<ParamGrad> pg(net.layers.size());
        run_backward(net, caches, dlogits, &pg, false);
        for (std::size_t i = 0; i < net.layers.size(); ++i)
          if (acc[i].weights.size() > 0) {
            acc[i].weights += pg[i].weights;
            acc[i].bias += pg[i].bias;
          }
      }
      if (!std::isfinite(batch_loss))
        throw numeric_error("training diverged at epoch " + std::to_string(epoch));
      epoch_loss += batch_loss;
      seen += static_cast<int>(stop - start);
      for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (vel[i].weights.size() == 0) continue;
        Layer& l = net.layers[i];
        vel[i].weights = cfg.momentum * vel[i].weights - cfg.learning_rate * inv * acc[i].weights;
        vel[i].bias = cfg.momentum * vel[i].bias - cfg.learning_rate * inv * acc[i].bias;
        l.weights += vel[i].weights;
        l.bias += vel[i].bias;
      }
    }
    epoch_loss /= std::max(seen, 1);
  }

  auto accuracy = [&net, &data](int begin, int end) {
    if (end <= begin) return 0.0;
    int hits = 0;
    for (int i = begin; i < end; ++i) {
      const Eigen::VectorXd logits = forward(net, data.images[static_cast<std::size_t>(i)]);
      if (predicted_class(logits, data.labels[static_cast<std::size_t>(i)]) ==
          data.labels[static_cast<std::size_t>(i)])
        ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(end - begin);
  };

  TrainOutcome outcome;
  outcome.train_accuracy = accuracy(0, n_train);
  outcome.test_accuracy = accuracy(n_train, data.size());
  outcome.final_loss = epoch_loss;
  outcome.net = std::move(net);
  return outcome;
}

}  // namespace ssta
