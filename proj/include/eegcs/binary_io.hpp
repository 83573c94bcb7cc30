#pragma once

// Internal: little-endian primitives shared by the container and checkpoint formats.

#include "eegcs/error.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace eegcs::detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  template <typename UInt>
  void put(UInt v) {
    char bytes[sizeof(UInt)];
    for (size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(bytes, sizeof(UInt));
  }
  void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(const char* p, size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}

  template <typename UInt>
  UInt get(const char* what) {
    unsigned char bytes[sizeof(UInt)];
    read_exact(reinterpret_cast<char*>(bytes), sizeof(UInt), what);
    UInt v = 0;
    for (size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
    return v;
  }
  float get_f32(const char* what) { return std::bit_cast<float>(get<std::uint32_t>(what)); }
  double get_f64(const char* what) { return std::bit_cast<double>(get<std::uint64_t>(what)); }

  void read_exact(char* dst, size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) throw FormatError(std::string("truncated payload while reading ") + what);
  }

 private:
  std::istream& in_;
};

}  // namespace eegcs::detail
