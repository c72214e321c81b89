#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace bolt {

// CRC-32 (IEEE, reflected polynomial 0xEDB88320), table-driven.
inline std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed = 0) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (~(c & 1u) + 1u));
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = ~seed;
  for (std::uint8_t b : data) crc = (crc >> 8) ^ table[(crc ^ b) & 0xFFu];
  return ~crc;
}

// FNV-1a 64-bit, used for state fingerprints and payload digests.
class Fnv64 {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 1099511628211ULL;
    }
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 7; i >= 0; --i) {
      b[i] = static_cast<std::uint8_t>(v);
      v >>= 8;
    }
    bytes(b, 8);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

inline std::uint64_t fnv64(std::span<const std::uint8_t> data) {
  Fnv64 h;
  h.bytes(data.data(), data.size());
  return h.value();
}

}  // namespace bolt
