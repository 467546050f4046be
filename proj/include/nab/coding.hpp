#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nab/errors.hpp"
#include "nab/gf.hpp"
#include "nab/graph.hpp"
#include "nab/rng.hpp"

namespace nab {

// Candidate fault-free node sets: every member has n-f nodes, excludes
// identified-faulty nodes and contains no disputing pair.
struct SubgraphFamily {
  std::vector<std::vector<int>> members;  // each sorted ascending
};

// The per-edge equality-check matrices for one G_k. Entries of C_e are drawn
// independently and uniformly; shape is rho x z_e per directed edge.
struct CodingAssignment {
  int rho = 0;
  FieldSpec field = FieldSpec::make(8);
  std::map<std::pair<int, int>, FieldMatrix> per_edge;
  uint64_t seed = 0;
};

// U_k and rho_k for a subgraph family: U_k is the minimum pairwise min-cut
// over the undirected companions of the members; rho_k = floor(U_k / 2).
inline std::pair<int, int> compute_rho(const SubgraphFamily& omega, const Digraph& g) {
  if (omega.members.empty()) throw validation_error("compute_rho: empty subgraph family");
  int u_k = -1;
  for (const auto& h : omega.members) {
    auto comp = undirected_companion(g.induced(h));
    int pm = pairwise_min_cut(comp);
    if (u_k < 0 || pm < u_k) u_k = pm;
  }
  if (u_k < 2)
    throw model_violation("equality check impossible: U_k = " + std::to_string(u_k) +
                          " < 2 over the candidate subgraphs");
  return {u_k, u_k / 2};
}

// Fresh random assignment; entry order is canonical (edges sorted, row
// major), so a fixed seed reproduces the assignment byte for byte.
inline CodingAssignment generate(const Digraph& g_k, int rho, const FieldSpec& field,
                                 uint64_t seed) {
  if (rho < 1) throw validation_error("generate: rho must be >= 1");
  CodingAssignment a;
  a.rho = rho;
  a.field = field;
  a.seed = seed;
  auto rng = make_rng(mix64(seed, 0x636f64696e67ull));
  for (const auto& e : g_k.edges())
    a.per_edge.emplace(std::make_pair(e.tail, e.head), random_matrix(field, rho, e.cap, rng));
  return a;
}

// Negation in GF(2^m) is the identity, so the paper's -C_e blocks equal C_e;
// the sign parameter is kept for fidelity to the block formulas.
enum class BlockSign { plus, minus };
inline const FieldMatrix& signed_block(const FieldMatrix& c, BlockSign) { return c; }

// The Appendix-C expansion for one candidate subgraph H: per-edge expanded
// blocks B_e and their horizontal concatenation C_H. Nodes of H are renamed
// 1..|H| in ascending original-id order; the reference node is the last.
struct ExpandedSystem {
  std::vector<int> h_nodes;                        // sorted original ids
  int rho = 0;
  std::vector<std::pair<int, int>> edges;          // edges within H, canonical order
  std::map<std::pair<int, int>, FieldMatrix> b_blocks;
  FieldMatrix c_h;                                 // (|H|-1) * rho rows
  struct Column {
    std::pair<int, int> edge;  // directed edge the coded symbol travels on
    int symbol;                // index within that edge's z_e symbols
  };
  std::vector<Column> columns;

  int renamed(int original) const {
    auto it = std::lower_bound(h_nodes.begin(), h_nodes.end(), original);
    if (it == h_nodes.end() || *it != original)
      throw validation_error("ExpandedSystem: node not in H");
    return static_cast<int>(it - h_nodes.begin()) + 1;
  }
  int reference_node() const { return h_nodes.back(); }
};

inline ExpandedSystem expand_system(const CodingAssignment& a, const std::vector<int>& h) {
  ExpandedSystem sys;
  sys.h_nodes = h;
  std::sort(sys.h_nodes.begin(), sys.h_nodes.end());
  sys.rho = a.rho;
  std::set<int> hset(sys.h_nodes.begin(), sys.h_nodes.end());
  int w = static_cast<int>(sys.h_nodes.size()) - 1;
  int ref = sys.reference_node();

  int total_cols = 0;
  for (const auto& [edge, c_e] : a.per_edge) {
    if (!hset.count(edge.first) || !hset.count(edge.second)) continue;
    sys.edges.push_back(edge);
    total_cols += c_e.cols();
  }
  sys.c_h = FieldMatrix(w * a.rho, total_cols);
  int col0 = 0;
  for (const auto& edge : sys.edges) {
    const FieldMatrix& c_e = a.per_edge.at(edge);
    FieldMatrix b(w * a.rho, c_e.cols());
    auto place = [&](int node, BlockSign sign) {
      if (node == ref) return;  // the reference node's block row is omitted
      int block = sys.renamed(node) - 1;
      const FieldMatrix& src = signed_block(c_e, sign);
      for (int r = 0; r < a.rho; ++r)
        for (int c = 0; c < c_e.cols(); ++c) b.at(block * a.rho + r, c) = src.at(r, c);
    };
    place(edge.first, BlockSign::plus);
    place(edge.second, BlockSign::minus);
    for (int r = 0; r < b.rows(); ++r)
      for (int c = 0; c < b.cols(); ++c) sys.c_h.at(r, col0 + c) = b.at(r, c);
    for (int c = 0; c < b.cols(); ++c) sys.columns.push_back({edge, c});
    sys.b_blocks.emplace(edge, std::move(b));
    col0 += c_e.cols();
  }
  return sys;
}

// Adjacency matrix of a spanning tree of H's undirected companion, with the
// reference node's row omitted: column r for directed edge (i,j) carries +1
// at row i and -1 at row j (equal in characteristic 2).
inline FieldMatrix adjacency_matrix(const std::vector<int>& h,
                                    const std::vector<std::pair<int, int>>& tree_edges) {
  std::vector<int> hs = h;
  std::sort(hs.begin(), hs.end());
  int w = static_cast<int>(hs.size()) - 1;
  if (static_cast<int>(tree_edges.size()) != w)
    throw validation_error("adjacency_matrix: a spanning tree of H needs |H|-1 edges");
  // spanning-tree validation on the undirected image
  {
    std::map<int, int> parent;
    for (int v : hs) parent[v] = v;
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (auto [i, j] : tree_edges) {
      if (!std::binary_search(hs.begin(), hs.end(), i) ||
          !std::binary_search(hs.begin(), hs.end(), j))
        throw validation_error("adjacency_matrix: edge endpoint outside H");
      int a = find(i), b = find(j);
      if (a == b) throw validation_error("adjacency_matrix: edges do not form a spanning tree");
      parent[a] = b;
    }
  }
  int ref = hs.back();
  auto renamed = [&](int v) {
    return static_cast<int>(std::lower_bound(hs.begin(), hs.end(), v) - hs.begin()) + 1;
  };
  FieldMatrix a(w, w);
  uint64_t one = 1;
  for (int r = 0; r < w; ++r) {
    auto [i, j] = tree_edges[r];
    if (i != ref) a.at(renamed(i) - 1, r) ^= one;
    if (j != ref) a.at(renamed(j) - 1, r) ^= one;  // -1 == +1 in characteristic 2
  }
  return a;
}

// Square submatrix M_H of C_H assembled from rho spanning matrices: iterate
// trees in packing order and edges in tree order, each claiming the lowest
// unclaimed C_H column that rides the matching undirected edge.
inline FieldMatrix assemble_MH(const ExpandedSystem& sys, const TreePacking& packing) {
  int w = static_cast<int>(sys.h_nodes.size()) - 1;
  if (static_cast<int>(packing.trees.size()) != sys.rho)
    throw validation_error("assemble_MH: packing must contain exactly rho trees");
  FieldMatrix m(w * sys.rho, w * sys.rho);
  std::vector<bool> claimed(sys.columns.size(), false);
  int out_col = 0;
  for (const auto& tree : packing.trees) {
    if (static_cast<int>(tree.size()) != w)
      throw validation_error("assemble_MH: tree does not span H");
    for (const auto& te : tree) {
      int found = -1;
      for (size_t c = 0; c < sys.columns.size(); ++c) {
        if (claimed[c]) continue;
        auto [t, h] = sys.columns[c].edge;
        bool same = (t == te.tail && h == te.head) || (t == te.head && h == te.tail);
        if (same) {
          found = static_cast<int>(c);
          break;
        }
      }
      if (found < 0)
        throw validation_error("assemble_MH: no unclaimed coded symbol for tree edge (" +
                               std::to_string(te.tail) + "," + std::to_string(te.head) + ")");
      claimed[found] = true;
      for (int r = 0; r < m.rows(); ++r) m.at(r, out_col) = sys.c_h.at(r, found);
      ++out_col;
    }
  }
  return m;
}

struct VerifyResult {
  bool correct = false;
  std::vector<int> witness_h;        // failing subgraph, when incorrect
  std::vector<uint64_t> witness_d;   // nonzero D_H with D_H * C_H = 0
};

// Exact correctness check of the (EC) condition: the assignment is correct
// iff C_H has full row rank for every H in Omega (rank is necessary and
// sufficient; the M_H construction above is kept for diagnostics).
inline VerifyResult verify_correct(const CodingAssignment& a, const SubgraphFamily& omega) {
  for (const auto& h : omega.members) {
    auto sys = expand_system(a, h);
    int want = sys.c_h.rows();
    if (rank(a.field, sys.c_h) < want) {
      auto d = left_null_vector(a.field, sys.c_h);
      if (!d) throw internal_error("verify_correct: rank-deficient C_H without a null vector");
      return {false, sys.h_nodes, *d};
    }
  }
  return {true, {}, {}};
}

// Theorem 1 lower bound on the probability that a random assignment is
// correct: 1 - 2^{-m} * C(n, n-f) * (n-f-1) * rho, clamped to [0, 1].
inline double theorem1_bound(int n, int f, int rho, int m) {
  if (n < 3 * f + 1) throw validation_error("theorem1_bound: n < 3f+1");
  if (m < 1) throw validation_error("theorem1_bound: m < 1");
  double binom = 1.0;
  for (int i = 0; i < f; ++i) binom = binom * double(n - i) / double(i + 1);  // C(n,f) = C(n,n-f)
  double p = 1.0 - std::ldexp(binom * double(n - f - 1) * double(rho), -m);
  return std::min(1.0, std::max(0.0, p));
}

// Generate-and-verify with bounded retry: failures are vanishingly rare
// (Theorem 1), and seed+1 regeneration keeps runs deterministic.
inline CodingAssignment make_verified_assignment(const Digraph& g_k, const SubgraphFamily& omega,
                                                 int rho, const FieldSpec& field, uint64_t seed,
                                                 int max_retries = 16) {
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    auto a = generate(g_k, rho, field, seed + attempt);
    if (verify_correct(a, omega).correct) return a;
  }
  throw internal_error("make_verified_assignment: no correct assignment in " +
                       std::to_string(max_retries) + " attempts (seed " + std::to_string(seed) +
                       ")");
}

// X_i * C_e: the coded symbols node i places on edge e.
inline std::vector<uint64_t> code_symbols(const FieldSpec& f, const std::vector<uint64_t>& x,
                                          const FieldMatrix& c_e) {
  if (static_cast<int>(x.size()) != c_e.rows())
    throw validation_error("code_symbols: symbol count does not match rho");
  std::vector<uint64_t> y(c_e.cols(), 0);
  for (int r = 0; r < c_e.rows(); ++r) {
    if (!x[r]) continue;
    for (int c = 0; c < c_e.cols(); ++c) {
      uint64_t v = c_e.at(r, c);
      if (v) y[c] ^= f.mul(x[r], v);
    }
  }
  return y;
}

}  // namespace nab
