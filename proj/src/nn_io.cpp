#include <fstream>
#include <vector>

#include "binio.hpp"
#include "ssta/nn.hpp"

namespace ssta {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'T', 'A', 'N', 'E', 'T', '1'};
constexpr std::uint16_t kVersion = 1;

std::string layer_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool2: return "maxpool2";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
  }
  return "unknown";
}

// Conv payload order: weights as (out_c, in_c, ky, kx) row-major, then
// bias. In memory the weight matrix is [(in_c*kh*kw) x out_c].
void write_layer_payload(std::ostream& out, const Layer& l) {
  if (l.kind == LayerKind::kConv2d) {
    for (int oc = 0; oc < l.out_c; ++oc)
      for (int ic = 0; ic < l.in_c; ++ic)
        for (int ky = 0; ky < l.kh; ++ky)
          for (int kx = 0; kx < l.kw; ++kx)
            binio::write_f32(out, static_cast<float>(l.weights(
                                      (static_cast<Eigen::Index>(ic) * l.kh + ky) * l.kw + kx, oc)));
    for (int oc = 0; oc < l.out_c; ++oc) binio::write_f32(out, static_cast<float>(l.bias(oc)));
  } else if (l.kind == LayerKind::kDense) {
    for (int r = 0; r < l.out_dim; ++r)
      for (int c = 0; c < l.in_dim; ++c) binio::write_f32(out, static_cast<float>(l.weights(r, c)));
    for (int r = 0; r < l.out_dim; ++r) binio::write_f32(out, static_cast<float>(l.bias(r)));
  }
}

void read_layer_payload(std::istream& in, Layer& l, std::size_t index, const std::string& path) {
  auto next = [&](float& v) {
    if (!binio::read_f32(in, v))
      throw format_error("truncated tensor payload in layer " + std::to_string(index) + " (" +
                         layer_name(l.kind) + "): " + path);
  };
  if (l.kind == LayerKind::kConv2d) {
    l.weights.resize(static_cast<Eigen::Index>(l.in_c) * l.kh * l.kw, l.out_c);
    l.bias.resize(l.out_c);
    float v = 0.0f;
    for (int oc = 0; oc < l.out_c; ++oc)
      for (int ic = 0; ic < l.in_c; ++ic)
        for (int ky = 0; ky < l.kh; ++ky)
          for (int kx = 0; kx < l.kw; ++kx) {
            next(v);
            l.weights((static_cast<Eigen::Index>(ic) * l.kh + ky) * l.kw + kx, oc) = v;
          }
    for (int oc = 0; oc < l.out_c; ++oc) {
      next(v);
      l.bias(oc) = v;
    }
  } else if (l.kind == LayerKind::kDense) {
    l.weights.resize(l.out_dim, l.in_dim);
    l.bias.resize(l.out_dim);
    float v = 0.0f;
    for (int r = 0; r < l.out_dim; ++r)
      for (int c = 0; c < l.in_dim; ++c) {
        next(v);
        l.weights(r, c) = v;
      }
    for (int r = 0; r < l.out_dim; ++r) {
      next(v);
      l.bias(r) = v;
    }
  }
}

}  // namespace

void save_weights(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open file for writing: " + path);
  binio::write_bytes(out, kMagic, 8);
  binio::write_u16(out, kVersion);
  binio::write_u16(out, static_cast<std::uint16_t>(net.layers.size()));
  binio::write_u32(out, static_cast<std::uint32_t>(net.input_h));
  binio::write_u32(out, static_cast<std::uint32_t>(net.input_w));
  binio::write_u32(out, static_cast<std::uint32_t>(net.input_c));
  binio::write_u32(out, static_cast<std::uint32_t>(net.num_classes));
  for (const Layer& l : net.layers) {
    out.put(static_cast<char>(l.kind));
    switch (l.kind) {
      case LayerKind::kConv2d: {
        out.put(4);
        for (int d : {l.out_c, l.in_c, l.kh, l.kw}) binio::write_u32(out, static_cast<std::uint32_t>(d));
        break;
      }
      case LayerKind::kDense: {
        out.put(2);
        for (int d : {l.out_dim, l.in_dim}) binio::write_u32(out, static_cast<std::uint32_t>(d));
        break;
      }
      default: out.put(0); break;
    }
    write_layer_payload(out, l);
  }
  if (!out) throw io_error("write failed: " + path);
}

Network load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  char magic[8];
  if (!binio::read_bytes(in, magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw format_error("bad weights magic (want SSTANET1): " + path);
  std::uint16_t version = 0, layer_count = 0;
  if (!binio::read_u16(in, version)) throw format_error("truncated weights header: " + path);
  if (version != kVersion)
    throw format_error("unsupported weights version " + std::to_string(version) + ": " + path);
  if (!binio::read_u16(in, layer_count)) throw format_error("truncated weights header: " + path);

  Network net;
  for (auto* field : {&net.input_h, &net.input_w, &net.input_c, &net.num_classes}) {
    std::uint32_t v = 0;
    if (!binio::read_u32(in, v)) throw format_error("truncated weights header: " + path);
    *field = static_cast<int>(v);
  }

  net.layers.resize(layer_count);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& l = net.layers[i];
    const int kind = in.get();
    if (kind < 1 || kind > 5)
      throw format_error("unknown layer kind in layer " + std::to_string(i) + ": " + path);
    l.kind = static_cast<LayerKind>(kind);
    const int ndims = in.get();
    if (ndims < 0 || ndims > 4) throw format_error("bad dims in layer " + std::to_string(i) + ": " + path);
    std::vector<std::uint32_t> d(static_cast<std::size_t>(ndims));
    for (auto& v : d)
      if (!binio::read_u32(in, v))
        throw format_error("truncated dims in layer " + std::to_string(i) + ": " + path);
    if (l.kind == LayerKind::kConv2d) {
      if (ndims != 4) throw format_error("conv2d layer needs 4 dims: " + path);
      l.out_c = static_cast<int>(d[0]);
      l.in_c = static_cast<int>(d[1]);
      l.kh = static_cast<int>(d[2]);
      l.kw = static_cast<int>(d[3]);
      if (l.out_c < 1 || l.in_c < 1 || l.kh < 1 || l.kw < 1)
        throw format_error("invalid conv2d dims in layer " + std::to_string(i) + ": " + path);
    } else if (l.kind == LayerKind::kDense) {
      if (ndims != 2) throw format_error("dense layer needs 2 dims: " + path);
      l.out_dim = static_cast<int>(d[0]);
      l.in_dim = static_cast<int>(d[1]);
      if (l.out_dim < 1 || l.in_dim < 1)
        throw format_error("invalid dense dims in layer " + std::to_string(i) + ": " + path);
    } else if (ndims != 0) {
      throw format_error("unexpected dims for parameterless layer " + std::to_string(i) + ": " + path);
    }
    read_layer_payload(in, l, i, path);
  }
  return net;
}

}  // namespace ssta
