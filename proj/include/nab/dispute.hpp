#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "nab/rng.hpp"

namespace nab {

// Accumulated dispute pairs and identified-faulty nodes across instances;
// drives the G_k -> G_{k+1} evolution. Pairs are unordered (stored a < b).
struct DisputeLedger {
  std::set<std::pair<int, int>> disputes;
  std::set<int> identified_faulty;

  struct Event {
    int k = 0;
    std::vector<std::pair<int, int>> new_disputes;
    std::vector<int> new_faulty;
  };
  std::vector<Event> history;

  static std::pair<int, int> norm(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

  bool disputed(int a, int b) const { return disputes.count(norm(a, b)) != 0; }

  bool add_dispute(int a, int b) { return disputes.insert(norm(a, b)).second; }

  int dispute_count(int v) const {
    int c = 0;
    for (const auto& [a, b] : disputes)
      if (a == v || b == v) ++c;
    return c;
  }

  uint64_t hash() const {
    uint64_t h = mix64(0x6c6564676572ull);
    for (const auto& [a, b] : disputes) h = mix64(h, uint64_t(a), uint64_t(b));
    for (int v : identified_faulty) h = mix64(h, uint64_t(v), 0x66ull);
    return h;
  }
};

}  // namespace nab
