#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "nab/errors.hpp"

namespace nab {

// Bit string of fixed length. Bit i lives in byte i/8 at position i%8
// (LSB-first); unused high bits of the last byte are kept zero so equality
// and digests work on the raw byte vector.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(size_t nbits) : nbits_(nbits), bytes_((nbits + 7) / 8, 0) {}

  static BitVec zeros(size_t nbits) { return BitVec(nbits); }

  static BitVec from_bytes(std::vector<uint8_t> bytes, size_t nbits) {
    BitVec v(nbits);
    for (size_t i = 0; i < v.bytes_.size() && i < bytes.size(); ++i) v.bytes_[i] = bytes[i];
    v.clear_tail();
    return v;
  }

  static BitVec random(size_t nbits, std::mt19937_64& rng) {
    BitVec v(nbits);
    for (auto& b : v.bytes_) b = static_cast<uint8_t>(rng());
    v.clear_tail();
    return v;
  }

  size_t size() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }
  const std::vector<uint8_t>& bytes() const { return bytes_; }

  bool get(size_t i) const { return (bytes_[i >> 3] >> (i & 7)) & 1; }
  void set(size_t i, bool b) {
    uint8_t m = static_cast<uint8_t>(1u << (i & 7));
    if (b)
      bytes_[i >> 3] |= m;
    else
      bytes_[i >> 3] &= static_cast<uint8_t>(~m);
  }

  // Reads `width` (<= 64) bits starting at bit `pos`; bits past the end read 0.
  uint64_t get_word(size_t pos, int width) const {
    uint64_t w = 0;
    for (int i = 0; i < width; ++i) {
      size_t p = pos + i;
      if (p < nbits_ && get(p)) w |= (1ull << i);
    }
    return w;
  }

  void set_word(size_t pos, int width, uint64_t val) {
    for (int i = 0; i < width; ++i) {
      size_t p = pos + i;
      if (p < nbits_) set(p, (val >> i) & 1);
    }
  }

  BitVec slice(size_t pos, size_t len) const {
    BitVec out(len);
    for (size_t i = 0; i < len; ++i) {
      size_t p = pos + i;
      out.set(i, p < nbits_ ? get(p) : false);
    }
    return out;
  }

  void splice(size_t pos, const BitVec& src) {
    for (size_t i = 0; i < src.size() && pos + i < nbits_; ++i) set(pos + i, src.get(i));
  }

  // Zero-extends (or truncates) to nbits.
  BitVec resized(size_t nbits) const {
    BitVec out(nbits);
    for (size_t i = 0; i < nbits && i < nbits_; ++i) out.set(i, get(i));
    return out;
  }

  BitVec& operator^=(const BitVec& o) {
    if (o.nbits_ != nbits_) throw validation_error("BitVec xor: length mismatch");
    for (size_t i = 0; i < bytes_.size(); ++i) bytes_[i] ^= o.bytes_[i];
    return *this;
  }

  friend bool operator==(const BitVec& a, const BitVec& b) {
    return a.nbits_ == b.nbits_ && a.bytes_ == b.bytes_;
  }
  friend bool operator!=(const BitVec& a, const BitVec& b) { return !(a == b); }

  bool is_zero() const {
    for (uint8_t b : bytes_)
      if (b) return false;
    return true;
  }

  uint64_t fnv1a() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto eat = [&h](uint64_t x) {
      for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
      }
    };
    eat(nbits_);
    for (uint8_t b : bytes_) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::string hex() const {
    static const char* d = "0123456789abcdef";
    std::string s;
    s.reserve(bytes_.size() * 2);
    for (uint8_t b : bytes_) {
      s.push_back(d[b >> 4]);
      s.push_back(d[b & 15]);
    }
    return s;
  }

 private:
  void clear_tail() {
    if (nbits_ % 8) bytes_.back() &= static_cast<uint8_t>((1u << (nbits_ % 8)) - 1);
  }

  size_t nbits_ = 0;
  std::vector<uint8_t> bytes_;
};

}  // namespace nab
