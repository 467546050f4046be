#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "nab/bitvec.hpp"
#include "nab/errors.hpp"

namespace nab {

using Payload = std::vector<uint8_t>;

// One message slot in a node's dispute-control claims: where it traveled
// and what the node says it carried. Phase-1 slots are per tree; silence is
// recorded distinctly so a silent hop and a zero payload stay different
// claims.
struct ClaimKey {
  int phase = 1;  // 1 or 2
  int tree = 0;   // phase-1 tree index, 0 for phase 2
  int tail = 0;
  int head = 0;
  friend bool operator<(const ClaimKey& a, const ClaimKey& b) {
    return std::tie(a.phase, a.tree, a.tail, a.head) < std::tie(b.phase, b.tree, b.tail, b.head);
  }
  friend bool operator==(const ClaimKey& a, const ClaimKey& b) {
    return std::tie(a.phase, a.tree, a.tail, a.head) == std::tie(b.phase, b.tree, b.tail, b.head);
  }
};

struct ClaimEntry {
  bool silent = false;
  BitVec payload;
  friend bool operator==(const ClaimEntry& a, const ClaimEntry& b) {
    return a.silent == b.silent && a.payload == b.payload;
  }
};

// Everything a node claims to have sent and received in Phases 1-2 of one
// instance; serialized canonically (sorted keys, explicit lengths) so
// "mismatch" is plain bit-inequality.
struct Claims {
  std::map<ClaimKey, ClaimEntry> sent;
  std::map<ClaimKey, ClaimEntry> received;

  friend bool operator==(const Claims& a, const Claims& b) {
    return a.sent == b.sent && a.received == b.received;
  }

  Payload serialize() const {
    Payload out;
    auto put32 = [&out](uint32_t v) {
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    };
    auto put_side = [&](const std::map<ClaimKey, ClaimEntry>& side) {
      put32(static_cast<uint32_t>(side.size()));
      for (const auto& [k, e] : side) {
        put32(static_cast<uint32_t>(k.phase));
        put32(static_cast<uint32_t>(k.tree));
        put32(static_cast<uint32_t>(k.tail));
        put32(static_cast<uint32_t>(k.head));
        out.push_back(e.silent ? 1 : 0);
        put32(static_cast<uint32_t>(e.payload.size()));
        for (uint8_t b : e.payload.bytes()) out.push_back(b);
      }
    };
    put_side(sent);
    put_side(received);
    return out;
  }

  static Claims parse(const Payload& in) {
    size_t pos = 0;
    auto get8 = [&]() {
      if (pos >= in.size()) throw validation_error("claims parse: truncated");
      return in[pos++];
    };
    auto get32 = [&]() {
      uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= uint32_t(get8()) << (8 * i);
      return v;
    };
    Claims c;
    auto get_side = [&](std::map<ClaimKey, ClaimEntry>& side) {
      uint32_t count = get32();
      if (count > 100000) throw validation_error("claims parse: implausible entry count");
      for (uint32_t i = 0; i < count; ++i) {
        ClaimKey k;
        k.phase = static_cast<int>(get32());
        k.tree = static_cast<int>(get32());
        k.tail = static_cast<int>(get32());
        k.head = static_cast<int>(get32());
        ClaimEntry e;
        e.silent = get8() != 0;
        uint32_t nbits = get32();
        if (nbits > 100000000) throw validation_error("claims parse: implausible payload size");
        std::vector<uint8_t> bytes((nbits + 7) / 8);
        for (auto& b : bytes) b = get8();
        e.payload = BitVec::from_bytes(std::move(bytes), nbits);
        if (side.count(k)) throw validation_error("claims parse: duplicate key");
        side.emplace(k, std::move(e));
      }
    };
    get_side(c.sent);
    get_side(c.received);
    if (pos != in.size()) throw validation_error("claims parse: trailing bytes");
    return c;
  }
};

}  // namespace nab
