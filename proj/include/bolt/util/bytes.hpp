#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace bolt {

// Big-endian wire/file encoding helpers. Every on-disk and on-wire integer in
// this project is big-endian.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::vector<std::uint8_t>&& seed) : buf_(std::move(seed)) {}

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 24));
    buf_.push_back(static_cast<std::uint8_t>(v >> 16));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v >> 32));
    u32(static_cast<std::uint32_t>(v));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void bytes32(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b.data(), b.size());
  }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }

  // Patches a previously written u32 at byte offset `at`.
  void patch_u32(std::size_t at, std::uint32_t v) {
    buf_[at + 0] = static_cast<std::uint8_t>(v >> 24);
    buf_[at + 1] = static_cast<std::uint8_t>(v >> 16);
    buf_[at + 2] = static_cast<std::uint8_t>(v >> 8);
    buf_[at + 3] = static_cast<std::uint8_t>(v);
  }

  std::size_t size() const { return buf_.size(); }
  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked big-endian reader. All accessors return false on underrun
// instead of throwing so malformed frames turn into protocol errors.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : buf_(b) {}

  bool u8(std::uint8_t* out) {
    if (pos_ + 1 > buf_.size()) return false;
    *out = buf_[pos_++];
    return true;
  }
  bool u32(std::uint32_t* out) {
    if (pos_ + 4 > buf_.size()) return false;
    *out = (std::uint32_t{buf_[pos_]} << 24) | (std::uint32_t{buf_[pos_ + 1]} << 16) |
           (std::uint32_t{buf_[pos_ + 2]} << 8) | std::uint32_t{buf_[pos_ + 3]};
    pos_ += 4;
    return true;
  }
  bool u64(std::uint64_t* out) {
    std::uint32_t hi = 0;
    std::uint32_t lo = 0;
    if (!u32(&hi) || !u32(&lo)) return false;
    *out = (std::uint64_t{hi} << 32) | lo;
    return true;
  }
  bool raw(void* p, std::size_t n) {
    if (pos_ + n > buf_.size()) return false;
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
    return true;
  }
  bool bytes32(std::vector<std::uint8_t>* out) {
    std::uint32_t n = 0;
    if (!u32(&n) || pos_ + n > buf_.size()) return false;
    out->assign(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return true;
  }
  bool str32(std::string* out) {
    std::uint32_t n = 0;
    if (!u32(&n) || pos_ + n > buf_.size()) return false;
    out->assign(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return true;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace bolt
