#pragma once

// Shared fixture graphs for tests and the acceptance suite.

#include <vector>

#include "nab/graph.hpp"

namespace nab::fixtures {

inline Digraph bidirected_complete(int n, int cap = 1) {
  std::vector<Edge> es;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j) es.push_back({i, j, cap});
  return Digraph(n, std::move(es));
}

inline Digraph k4() { return bidirected_complete(4); }
inline Digraph k5() { return bidirected_complete(5); }
inline Digraph k7() { return bidirected_complete(7); }

// The classic one-way diamond; used for graph-op examples only (it is not a
// valid protocol network: node 2 cannot reach node 3).
inline Digraph diamond() {
  return Digraph(4, {{1, 2, 1}, {1, 3, 1}, {2, 4, 1}, {3, 4, 1}});
}

// Diamond core (1-2, 1-3, 2-4, 3-4 bidirected) plus a 2-3 chord and a hub
// node 5; vertex connectivity 3, so it admits f = 1.
inline Digraph diamond_aug5() {
  std::vector<Edge> es;
  auto bi = [&es](int a, int b, int c) {
    es.push_back({a, b, c});
    es.push_back({b, a, c});
  };
  bi(1, 2, 2);
  bi(1, 3, 1);
  bi(2, 4, 1);
  bi(3, 4, 2);
  bi(2, 3, 1);
  bi(5, 1, 1);
  bi(5, 2, 1);
  bi(5, 3, 1);
  bi(5, 4, 1);
  return Digraph(5, std::move(es));
}

// Diamond core on 1..4 plus three hub nodes 5..7 attached everywhere;
// vertex connectivity 5, so it admits f = 2 at n = 7.
inline Digraph diamond_aug7() {
  std::vector<Edge> es;
  auto bi = [&es](int a, int b, int c) {
    es.push_back({a, b, c});
    es.push_back({b, a, c});
  };
  bi(1, 2, 2);
  bi(1, 3, 1);
  bi(2, 4, 1);
  bi(3, 4, 2);
  bi(2, 3, 1);
  for (int hub = 5; hub <= 7; ++hub)
    for (int v = 1; v <= 7; ++v)
      if (v != hub) bi(std::min(hub, v), std::max(hub, v), 1);
  // bi() above double-adds hub-hub pairs; rebuild cleanly instead.
  std::map<std::pair<int, int>, int> caps;
  for (const auto& e : es) caps[{e.tail, e.head}] = e.cap;
  es.clear();
  for (const auto& [k, c] : caps) es.push_back({k.first, k.second, c});
  return Digraph(7, std::move(es));
}

// Bidirected unit graph on {1-2, 1-3, 1-4, 2-3, 3-4} with no 2-4 link.
// With the pair (2,3) in dispute the candidate subgraphs are {1,2,4} and
// {1,3,4}, and U_k = 2 (the {1,2,4} companion is a star at node 1).
inline Digraph fig1b() {
  std::vector<Edge> es;
  for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 2}, {1, 3}, {1, 4}, {2, 3}, {3, 4}}) {
    es.push_back({a, b, 1});
    es.push_back({b, a, 1});
  }
  return Digraph(4, std::move(es));
}

// Mincuts from the source are (2, 3, 2) for nodes (2, 3, 4), so gamma = 2.
inline Digraph fig1() {
  return Digraph(4, {{1, 2, 1}, {1, 3, 2}, {2, 3, 1}, {2, 4, 1}, {3, 2, 1}, {3, 4, 1}});
}

// cap(1->2) = 2 and node 1 has no other out-edge, so every 2-packing uses
// link (1,2) in both trees.
inline Digraph fig2() {
  return Digraph(4, {{1, 2, 2}, {2, 3, 1}, {2, 4, 1}, {3, 4, 1}, {4, 3, 1}});
}

// Deterministic random connected digraph with the model connectivity; used
// by the sweep suites. Starts from a bidirected cycle and adds bidirected
// chords until every ordered pair has >= 2f+1 vertex-disjoint paths.
inline Digraph random_model_graph(int n, int f, int max_cap, uint64_t seed) {
  auto rng = make_rng(seed);
  std::map<std::pair<int, int>, int> caps;
  auto cap_rand = [&]() { return 1 + static_cast<int>(rng() % max_cap); };
  auto add_bi = [&](int a, int b) {
    if (caps.count({a, b})) return;
    caps[{a, b}] = cap_rand();
    caps[{b, a}] = cap_rand();
  };
  for (int i = 1; i <= n; ++i) add_bi(i, i % n + 1);
  auto build = [&]() {
    std::vector<Edge> es;
    for (const auto& [k, c] : caps) es.push_back({k.first, k.second, c});
    return Digraph(n, std::move(es));
  };
  int need = 2 * f + 1;
  while (true) {
    Digraph g = build();
    bool deficient = false;
    for (int a = 1; a <= n && !deficient; ++a)
      for (int b = 1; b <= n; ++b) {
        if (a == b) continue;
        if (vertex_connectivity(g, a, b) < need) {
          deficient = true;
          break;
        }
      }
    if (!deficient) return g;
    // add a random absent bidirected chord and retry
    std::vector<std::pair<int, int>> absent;
    for (int a = 1; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b)
        if (!caps.count({a, b})) absent.push_back({a, b});
    if (absent.empty()) throw internal_error("random_model_graph: complete graph still infeasible");
    auto pick = absent[rng() % absent.size()];
    add_bi(pick.first, pick.second);
  }
}

}  // namespace nab::fixtures
