#pragma once

// Internal little-endian binary stream helpers shared by the file codecs.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "ssta/errors.hpp"

namespace ssta::binio {

inline void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void write_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  write_bytes(out, b, 2);
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  write_bytes(out, b, 4);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

inline bool read_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

inline bool read_u16(std::istream& in, std::uint16_t& v) {
  unsigned char b[2];
  if (!read_bytes(in, b, 2)) return false;
  v = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  return true;
}

inline bool read_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!read_bytes(in, b, 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

inline bool read_f32(std::istream& in, float& v) {
  std::uint32_t bits;
  if (!read_u32(in, bits)) return false;
  std::memcpy(&v, &bits, 4);
  return true;
}

}  // namespace ssta::binio
