#include "ssta/flow_io.hpp"

#include <fstream>

#include "binio.hpp"

namespace ssta {

namespace {
constexpr char kMagic[8] = {'S', 'S', 'T', 'A', 'F', 'L', 'O', '1'};
}

void save_flow(const FlowField& flow, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open file for writing: " + path);
  binio::write_bytes(out, kMagic, 8);
  binio::write_u32(out, static_cast<std::uint32_t>(flow.height));
  binio::write_u32(out, static_cast<std::uint32_t>(flow.width));
  for (const auto* plane : {&flow.du, &flow.dv})
    for (int y = 0; y < flow.height; ++y)
      for (int x = 0; x < flow.width; ++x)
        binio::write_f32(out, static_cast<float>((*plane)(y, x)));
  if (!out) throw io_error("write failed: " + path);
}

FlowField load_flow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  char magic[8];
  if (!binio::read_bytes(in, magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw format_error("bad flow magic (want SSTAFLO1): " + path);
  std::uint32_t h = 0, w = 0;
  if (!binio::read_u32(in, h) || !binio::read_u32(in, w))
    throw format_error("truncated flow header: " + path);
  if (h < 1 || w < 1 || h > (1u << 20) || w > (1u << 20))
    throw format_error("invalid flow dimensions: " + path);
  FlowField flow(static_cast<int>(h), static_cast<int>(w));
  for (auto* plane : {&flow.du, &flow.dv})
    for (int y = 0; y < flow.height; ++y)
      for (int x = 0; x < flow.width; ++x) {
        float v = 0.0f;
        if (!binio::read_f32(in, v)) throw format_error("truncated flow payload: " + path);
        (*plane)(y, x) = static_cast<double>(v);
      }
  return flow;
}

}  // namespace ssta
