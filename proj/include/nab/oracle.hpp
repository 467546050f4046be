#pragma once

// Test-support module: independent oracles for the test, selftest and
// acceptance suites. Everything here is deliberately brute force and shares
// no code path with the library implementations it checks.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "nab/graph.hpp"

namespace nab::oracle {

// Schoolbook GF(2^m) multiply: 128-bit polynomial product, then long
// division by the full modulus.
inline uint64_t gf_mul_schoolbook(int m, uint64_t modulus_low, uint64_t a, uint64_t b) {
  // product as two 64-bit halves
  uint64_t lo = 0, hi = 0;
  for (int i = 0; i < m; ++i) {
    if (!((a >> i) & 1)) continue;
    for (int j = 0; j < m; ++j) {
      if (!((b >> j) & 1)) continue;
      int k = i + j;
      if (k < 64)
        lo ^= (1ull << k);
      else
        hi ^= (1ull << (k - 64));
    }
  }
  // reduce: modulus = x^m + modulus_low
  for (int k = 2 * m - 2; k >= m; --k) {
    bool bit = (k < 64) ? ((lo >> k) & 1) : ((hi >> (k - 64)) & 1);
    if (!bit) continue;
    if (k < 64)
      lo ^= (1ull << k);
    else
      hi ^= (1ull << (k - 64));
    int shift = k - m;
    for (int j = 0; j <= m; ++j) {
      bool mbit = (j == m) ? true : ((modulus_low >> j) & 1);
      if (!mbit) continue;
      int p = shift + j;
      if (p == k) continue;  // the leading term we just cleared
      if (p < 64)
        lo ^= (1ull << p);
      else
        hi ^= (1ull << (p - 64));
    }
  }
  return lo;
}

// Minimum s-t edge cut by enumerating every vertex bipartition with s on the
// source side and t on the sink side.
inline long long enumerate_min_cut(const Digraph& g, int s, int t) {
  const auto& nodes = g.nodes();
  int n = static_cast<int>(nodes.size());
  std::map<int, int> pos;
  for (int i = 0; i < n; ++i) pos[nodes[i]] = i;
  long long best = -1;
  for (uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (!((mask >> pos.at(s)) & 1)) continue;
    if ((mask >> pos.at(t)) & 1) continue;
    long long cut = 0;
    for (const auto& e : g.edges()) {
      bool tin = (mask >> pos.at(e.tail)) & 1;
      bool hin = (mask >> pos.at(e.head)) & 1;
      if (tin && !hin) cut += e.cap;
    }
    if (best < 0 || cut < best) best = cut;
  }
  return best;
}

inline long long enumerate_min_cut_undirected(const UndirectedCompanion& u, int a, int b) {
  const auto& nodes = u.nodes();
  int n = static_cast<int>(nodes.size());
  std::map<int, int> pos;
  for (int i = 0; i < n; ++i) pos[nodes[i]] = i;
  long long best = -1;
  for (uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (!((mask >> pos.at(a)) & 1)) continue;
    if ((mask >> pos.at(b)) & 1) continue;
    long long cut = 0;
    for (const auto& e : u.edges()) {
      bool uin = (mask >> pos.at(e.u)) & 1;
      bool vin = (mask >> pos.at(e.v)) & 1;
      if (uin != vin) cut += e.cap;
    }
    if (best < 0 || cut < best) best = cut;
  }
  return best;
}

// Certifies a directed packing: every tree is an arborescence rooted at
// `root` spanning all nodes, and total per-edge usage stays within capacity.
inline bool check_arborescence_packing(const Digraph& g, int root, const TreePacking& p,
                                       int expected_trees) {
  if (static_cast<int>(p.trees.size()) != expected_trees) return false;
  std::map<std::pair<int, int>, int> usage;
  for (const auto& tree : p.trees) {
    if (static_cast<int>(tree.size()) != g.n() - 1) return false;
    std::map<int, int> indeg;
    for (const auto& e : tree) {
      if (g.edge_index(e.tail, e.head) < 0) return false;
      indeg[e.head]++;
      usage[{e.tail, e.head}]++;
    }
    if (indeg.count(root)) return false;
    for (int v : g.nodes())
      if (v != root && indeg[v] != 1) return false;
    // every node reachable from root using tree arcs
    std::set<int> seen{root};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& e : tree)
        if (seen.count(e.tail) && !seen.count(e.head)) {
          seen.insert(e.head);
          grew = true;
        }
    }
    if (static_cast<int>(seen.size()) != g.n()) return false;
  }
  for (const auto& [uv, used] : usage) {
    int idx = g.edge_index(uv.first, uv.second);
    if (idx < 0 || used > g.edge(idx).cap) return false;
  }
  return true;
}

inline bool check_undirected_tree_packing(const UndirectedCompanion& u, const TreePacking& p,
                                          int expected_trees) {
  if (static_cast<int>(p.trees.size()) != expected_trees) return false;
  std::map<std::pair<int, int>, int> usage;
  for (const auto& tree : p.trees) {
    if (static_cast<int>(tree.size()) != u.n() - 1) return false;
    for (const auto& e : tree) {
      if (e.tail >= e.head) return false;
      if (u.cap(e.tail, e.head) <= 0) return false;
      usage[{e.tail, e.head}]++;
    }
    // acyclic + spanning via union-find
    std::map<int, int> parent;
    for (int v : u.nodes()) parent[v] = v;
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& e : tree) {
      int a = find(e.tail), b = find(e.head);
      if (a == b) return false;
      parent[a] = b;
    }
    std::set<int> roots;
    for (int v : u.nodes()) roots.insert(find(v));
    if (roots.size() != 1) return false;
  }
  for (const auto& [uv, used] : usage)
    if (used > u.cap(uv.first, uv.second)) return false;
  return true;
}

// Exhaustive search for k arc-disjoint-in-units spanning arborescences
// (feasibility oracle for tiny graphs).
inline bool arborescence_packing_exists(const Digraph& g, int root, int k) {
  // enumerate all arborescences: every node except the root picks one
  // in-edge; keep the choices whose union is reachable from the root
  std::vector<std::vector<int>> arbs;  // as edge-index lists
  const auto& edges = g.edges();
  std::vector<int> others;
  for (int v : g.nodes())
    if (v != root) others.push_back(v);
  std::vector<int> chosen;
  std::function<void(size_t)> pick_parent = [&](size_t vi) {
    if (vi == others.size()) {
      std::set<int> seen{root};
      bool grew = true;
      while (grew) {
        grew = false;
        for (int ei : chosen)
          if (seen.count(edges[ei].tail) && !seen.count(edges[ei].head)) {
            seen.insert(edges[ei].head);
            grew = true;
          }
      }
      if (static_cast<int>(seen.size()) == g.n()) arbs.push_back(chosen);
      return;
    }
    for (size_t i = 0; i < edges.size(); ++i) {
      if (edges[i].head != others[vi]) continue;
      chosen.push_back(static_cast<int>(i));
      pick_parent(vi + 1);
      chosen.pop_back();
    }
  };
  pick_parent(0);
  // pick k of them with joint usage within capacities
  std::vector<int> usage(edges.size(), 0);
  std::function<bool(size_t, int)> pick = [&](size_t from, int left) {
    if (left == 0) return true;
    for (size_t i = from; i < arbs.size(); ++i) {
      bool ok = true;
      for (int ei : arbs[i])
        if (usage[ei] + 1 > edges[ei].cap) {
          ok = false;
          break;
        }
      if (!ok) continue;
      for (int ei : arbs[i]) usage[ei]++;
      if (pick(i, left - 1)) return true;  // same arborescence may repeat if caps allow
      for (int ei : arbs[i]) usage[ei]--;
    }
    return false;
  };
  return pick(0, k);
}

inline bool undirected_tree_packing_exists(const UndirectedCompanion& u, int k) {
  std::vector<std::vector<std::pair<int, int>>> trees;  // all spanning trees
  const auto& edges = u.edges();
  int n = u.n();
  std::vector<std::pair<int, int>> all;
  for (const auto& e : edges) all.push_back({e.u, e.v});
  // enumerate spanning trees: choose n-1 edges, check acyclic+spanning
  std::vector<int> idx(all.size());
  for (size_t i = 0; i < all.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<int> comb;
  std::function<void(size_t)> choose = [&](size_t from) {
    if (static_cast<int>(comb.size()) == n - 1) {
      std::map<int, int> parent;
      for (int v : u.nodes()) parent[v] = v;
      std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
      };
      for (int ci : comb) {
        int a = find(all[ci].first), b = find(all[ci].second);
        if (a == b) return;
        parent[a] = b;
      }
      trees.push_back({});
      for (int ci : comb) trees.back().push_back(all[ci]);
      return;
    }
    for (size_t i = from; i < all.size(); ++i) {
      comb.push_back(static_cast<int>(i));
      choose(i + 1);
      comb.pop_back();
    }
  };
  choose(0);
  std::map<std::pair<int, int>, int> usage;
  std::function<bool(size_t, int)> pick = [&](size_t from, int left) {
    if (left == 0) return true;
    for (size_t i = from; i < trees.size(); ++i) {
      bool ok = true;
      for (auto& e : trees[i])
        if (usage[e] + 1 > u.cap(e.first, e.second)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      for (auto& e : trees[i]) usage[e]++;
      if (pick(i, left - 1)) return true;
      for (auto& e : trees[i]) usage[e]--;
    }
    return false;
  };
  return pick(0, k);
}

}  // namespace nab::oracle
