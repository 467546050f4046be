#pragma once

#include <algorithm>
#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nab/errors.hpp"
#include "nab/rng.hpp"

namespace nab {

struct Edge {
  int tail = 0;
  int head = 0;
  int cap = 1;
  friend bool operator==(const Edge& a, const Edge& b) {
    return a.tail == b.tail && a.head == b.head && a.cap == b.cap;
  }
  friend bool operator<(const Edge& a, const Edge& b) {
    return std::tie(a.tail, a.head, a.cap) < std::tie(b.tail, b.head, b.cap);
  }
};

// Capacitated directed simple graph. Nodes carry their original 1-based ids
// so induced subgraphs and the evolving G_k keep stable identities; node 1
// is the broadcast source whenever present.
class Digraph {
 public:
  Digraph() = default;

  Digraph(int n, std::vector<Edge> edges) {
    std::vector<int> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = i + 1;
    init(std::move(nodes), std::move(edges));
  }

  Digraph(std::vector<int> nodes, std::vector<Edge> edges) {
    init(std::move(nodes), std::move(edges));
  }

  // Text format: first line "n <count>", then one "<tail> <head> <capacity>"
  // line per edge, 1-indexed; '#' starts a comment.
  static Digraph parse(std::istream& in) {
    std::string line;
    int n = -1;
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      if (n < 0) {
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag != "n") throw validation_error("graph parse: expected 'n <count>' header");
        if (!(ls >> n) || n <= 0) throw validation_error("graph parse: bad node count");
        continue;
      }
      int t, h, c;
      if (!(ls >> t)) continue;
      if (!(ls >> h >> c)) throw validation_error("graph parse: bad edge line: " + line);
      edges.push_back({t, h, c});
    }
    if (n < 0) throw validation_error("graph parse: missing 'n <count>' header");
    return Digraph(n, std::move(edges));
  }

  static Digraph parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  std::string format() const {
    std::ostringstream out;
    out << "n " << (nodes_.empty() ? 0 : nodes_.back()) << "\n";
    for (const auto& e : edges_) out << e.tail << " " << e.head << " " << e.cap << "\n";
    return out.str();
  }

  int n() const { return static_cast<int>(nodes_.size()); }
  const std::vector<int>& nodes() const { return nodes_; }
  bool has_node(int v) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), v);
  }
  const std::vector<Edge>& edges() const { return edges_; }

  int edge_index(int tail, int head) const {
    auto it = index_.find({tail, head});
    return it == index_.end() ? -1 : it->second;
  }
  const Edge& edge(int idx) const { return edges_[idx]; }

  const std::vector<int>& out_edges(int v) const { return out_.at(v); }
  const std::vector<int>& in_edges(int v) const { return in_.at(v); }

  // Subgraph induced on `keep` (present nodes only), original ids retained.
  Digraph induced(const std::vector<int>& keep) const {
    std::vector<int> ks = keep;
    std::sort(ks.begin(), ks.end());
    std::set<int> kset(ks.begin(), ks.end());
    std::vector<Edge> es;
    for (const auto& e : edges_)
      if (kset.count(e.tail) && kset.count(e.head)) es.push_back(e);
    return Digraph(std::move(ks), std::move(es));
  }

  Digraph without_edges(const std::set<std::pair<int, int>>& drop) const {
    std::vector<Edge> es;
    for (const auto& e : edges_)
      if (!drop.count({e.tail, e.head})) es.push_back(e);
    return Digraph(nodes_, std::move(es));
  }

  uint64_t signature() const {
    uint64_t h = mix64(0x6e61625f67726170ull, nodes_.size());
    for (int v : nodes_) h = mix64(h, uint64_t(v));
    for (const auto& e : edges_) h = mix64(h, uint64_t(e.tail), uint64_t(e.head), uint64_t(e.cap));
    return h;
  }

 private:
  void init(std::vector<int> nodes, std::vector<Edge> edges) {
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
      throw validation_error("graph: duplicate node id");
    for (int v : nodes)
      if (v < 1) throw validation_error("graph: node ids are 1-based");
    nodes_ = std::move(nodes);
    std::sort(edges.begin(), edges.end());
    std::set<int> nset(nodes_.begin(), nodes_.end());
    for (const auto& e : edges) {
      if (!nset.count(e.tail) || !nset.count(e.head))
        throw validation_error("graph: edge endpoint not a node");
      if (e.tail == e.head) throw validation_error("graph: self-loop");
      if (e.cap < 1) throw validation_error("graph: capacities must be positive integers");
    }
    edges_ = std::move(edges);
    for (int v : nodes_) {
      out_[v] = {};
      in_[v] = {};
    }
    for (size_t i = 0; i < edges_.size(); ++i) {
      const auto& e = edges_[i];
      auto key = std::make_pair(e.tail, e.head);
      if (index_.count(key)) throw validation_error("graph: parallel edge (graph must be simple)");
      index_[key] = static_cast<int>(i);
      out_[e.tail].push_back(static_cast<int>(i));
      in_[e.head].push_back(static_cast<int>(i));
    }
  }

  std::vector<int> nodes_;
  std::vector<Edge> edges_;
  std::map<std::pair<int, int>, int> index_;
  std::map<int, std::vector<int>> out_, in_;
};

struct UndirectedEdge {
  int u = 0;
  int v = 0;  // u < v
  int cap = 0;
};

// Undirected companion: capacity of {u,v} is the sum of the two directed
// capacities between u and v.
class UndirectedCompanion {
 public:
  UndirectedCompanion() = default;
  UndirectedCompanion(std::vector<int> nodes, std::vector<UndirectedEdge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    std::sort(nodes_.begin(), nodes_.end());
    std::sort(edges_.begin(), edges_.end(), [](const UndirectedEdge& a, const UndirectedEdge& b) {
      return std::tie(a.u, a.v) < std::tie(b.u, b.v);
    });
  }

  int n() const { return static_cast<int>(nodes_.size()); }
  const std::vector<int>& nodes() const { return nodes_; }
  const std::vector<UndirectedEdge>& edges() const { return edges_; }

  int cap(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (const auto& e : edges_)
      if (e.u == a && e.v == b) return e.cap;
    return 0;
  }

  // Bidirected expansion: each undirected edge becomes two antiparallel arcs
  // of the same capacity, so s-t max-flow equals the undirected min-cut.
  Digraph bidirected() const {
    std::vector<Edge> es;
    for (const auto& e : edges_) {
      es.push_back({e.u, e.v, e.cap});
      es.push_back({e.v, e.u, e.cap});
    }
    return Digraph(nodes_, std::move(es));
  }

 private:
  std::vector<int> nodes_;
  std::vector<UndirectedEdge> edges_;
};

inline UndirectedCompanion undirected_companion(const Digraph& g) {
  std::map<std::pair<int, int>, int> caps;
  for (const auto& e : g.edges()) {
    auto key = std::minmax(e.tail, e.head);
    caps[{key.first, key.second}] += e.cap;
  }
  std::vector<UndirectedEdge> es;
  for (const auto& [k, c] : caps) es.push_back({k.first, k.second, c});
  return UndirectedCompanion(g.nodes(), std::move(es));
}

namespace detail {

// Edmonds-Karp max-flow over dense small-integer node ids (with reverse
// arcs). Deterministic: BFS scans arcs in insertion order.
class MaxFlow {
 public:
  explicit MaxFlow(int num_ids)
      : adj_(num_ids), pred_arc_(num_ids, -1), seen_(num_ids, 0) {}

  void add_arc(int u, int v, long long cap) {
    adj_[u].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({v, cap});
    adj_[v].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({u, 0});
  }

  long long run(int s, int t, long long limit = -1) {
    long long flow = 0;
    while (limit < 0 || flow < limit) {
      ++epoch_;
      seen_[s] = epoch_;
      queue_.clear();
      queue_.push_back(s);
      bool found = false;
      while (!queue_.empty() && !found) {
        int u = queue_.front();
        queue_.pop_front();
        for (int ai : adj_[u]) {
          const Arc& a = arcs_[ai];
          if (a.cap <= 0 || seen_[a.to] == epoch_) continue;
          seen_[a.to] = epoch_;
          pred_arc_[a.to] = ai;
          if (a.to == t) {
            found = true;
            break;
          }
          queue_.push_back(a.to);
        }
      }
      if (!found) break;
      long long push = -1;
      for (int v = t; v != s;) {
        const Arc& a = arcs_[pred_arc_[v]];
        push = (push < 0) ? a.cap : std::min(push, a.cap);
        v = arcs_[pred_arc_[v] ^ 1].to;
      }
      if (limit >= 0) push = std::min(push, limit - flow);
      for (int v = t; v != s;) {
        arcs_[pred_arc_[v]].cap -= push;
        arcs_[pred_arc_[v] ^ 1].cap += push;
        v = arcs_[pred_arc_[v] ^ 1].to;
      }
      flow += push;
    }
    return flow;
  }

  // Net flow on the i-th added arc.
  long long arc_flow(int arc_idx) const { return arcs_[2 * arc_idx + 1].cap; }

 private:
  struct Arc {
    int to;
    long long cap;
  };
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> pred_arc_;
  std::vector<uint32_t> seen_;
  uint32_t epoch_ = 0;
  std::deque<int> queue_;
};

inline int max_node_id(const Digraph& g) { return g.nodes().empty() ? 0 : g.nodes().back(); }

}  // namespace detail

// Max-flow value from s to t, which equals the minimum s-t edge cut.
inline int mincut(const Digraph& g, int s, int t) {
  if (s == t) throw validation_error("mincut: s and t must differ");
  if (!g.has_node(s) || !g.has_node(t)) throw validation_error("mincut: node not in graph");
  detail::MaxFlow mf(detail::max_node_id(g) + 1);
  for (const auto& e : g.edges()) mf.add_arc(e.tail, e.head, e.cap);
  return static_cast<int>(mf.run(s, t));
}

// gamma: min over non-source nodes of the source min-cut; 0 when some node
// is unreachable.
inline int broadcast_rate(const Digraph& g, int s) {
  if (!g.has_node(s)) throw validation_error("broadcast_rate: source not in graph");
  int best = -1;
  for (int v : g.nodes()) {
    if (v == s) continue;
    int c = mincut(g, s, v);
    if (best < 0 || c < best) best = c;
    if (best == 0) break;
  }
  return best < 0 ? 0 : best;  // single-node graph broadcasts trivially at rate 0
}

inline int undirected_mincut(const UndirectedCompanion& u, int a, int b) {
  if (a == b) throw validation_error("undirected_mincut: endpoints must differ");
  return mincut(u.bidirected(), a, b);
}

inline int pairwise_min_cut(const UndirectedCompanion& u) {
  int best = -1;
  Digraph bd = u.bidirected();
  const auto& ns = u.nodes();
  for (size_t i = 0; i < ns.size(); ++i)
    for (size_t j = i + 1; j < ns.size(); ++j) {
      int c = mincut(bd, ns[i], ns[j]);
      if (best < 0 || c < best) best = c;
    }
  return best < 0 ? 0 : best;
}

// Unit-capacity spanning structures. For directed packings every tree is an
// arborescence rooted at the requested root; for undirected packings edges
// are stored with u < v. Each tree uses one capacity unit per edge it
// contains; `usage` totals units per edge across trees.
struct TreePacking {
  std::vector<std::vector<Edge>> trees;
  std::map<std::pair<int, int>, int> usage;

  void recount() {
    usage.clear();
    for (const auto& t : trees)
      for (const auto& e : t) usage[{e.tail, e.head}] += 1;
  }
};

namespace detail {

inline bool residual_rate_at_least(const Digraph& g, const std::vector<int>& caps, int root,
                                   int need) {
  if (need <= 0) return true;
  for (int v : g.nodes()) {
    if (v == root) continue;
    detail::MaxFlow mf(max_node_id(g) + 1);
    for (size_t i = 0; i < g.edges().size(); ++i)
      if (caps[i] > 0) mf.add_arc(g.edges()[i].tail, g.edges()[i].head, caps[i]);
    if (mf.run(root, v, need) < need) return false;
  }
  return true;
}

// One arborescence whose unit usage keeps every residual source min-cut at
// least `remaining`; arcs are chosen greedily with that test and the search
// backtracks if it ever dead-ends (it should not, by Edmonds' theorem via
// Lovasz's construction).
inline bool extract_arborescence(const Digraph& g, std::vector<int>& caps, int root, int remaining,
                                 std::vector<Edge>& out_tree) {
  struct Frame {
    std::set<int> reached;
    std::vector<Edge> tree;
    std::vector<int> caps;
    size_t next_candidate = 0;
  };
  const auto& edges = g.edges();
  std::vector<Frame> stack;
  stack.push_back({{root}, {}, caps, 0});
  while (!stack.empty()) {
    Frame& fr = stack.back();
    if (static_cast<int>(fr.reached.size()) == g.n()) {
      caps = fr.caps;
      out_tree = fr.tree;
      return true;
    }
    bool advanced = false;
    for (size_t i = fr.next_candidate; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      if (!fr.reached.count(e.tail) || fr.reached.count(e.head)) continue;
      if (fr.caps[i] <= 0) continue;
      Frame next = fr;
      next.caps[i] -= 1;
      if (!residual_rate_at_least(g, next.caps, root, remaining)) continue;
      next.reached.insert(e.head);
      next.tree.push_back({e.tail, e.head, 1});
      next.next_candidate = 0;
      fr.next_candidate = i + 1;  // resume here if we ever backtrack
      stack.push_back(std::move(next));
      advanced = true;
      break;
    }
    if (!advanced) stack.pop_back();
  }
  return false;
}

}  // namespace detail

// k arc-disjoint-in-units spanning arborescences rooted at `root`
// (Edmonds' branching theorem guarantees feasibility for k <= gamma).
inline TreePacking pack_arborescences(const Digraph& g, int root, int k) {
  if (k < 0) throw validation_error("pack_arborescences: negative k");
  if (!g.has_node(root)) throw validation_error("pack_arborescences: root not in graph");
  int gamma = broadcast_rate(g, root);
  if (k > gamma)
    throw infeasible_error("pack_arborescences: k = " + std::to_string(k) +
                           " exceeds broadcast rate " + std::to_string(gamma));
  std::vector<int> caps;
  for (const auto& e : g.edges()) caps.push_back(e.cap);
  TreePacking packing;
  for (int t = k; t >= 1; --t) {
    std::vector<Edge> tree;
    if (!detail::extract_arborescence(g, caps, root, t - 1, tree))
      throw internal_error("pack_arborescences: extraction failed below the Edmonds bound");
    packing.trees.push_back(std::move(tree));
  }
  packing.recount();
  return packing;
}

namespace detail {

// k-forest maintenance for the matroid-union spanning tree packer.
class ForestSet {
 public:
  ForestSet(const std::vector<int>& nodes, int k) : nodes_(nodes), forests_(k) {}

  // Forest adjacency is tiny; path queries walk it directly.
  bool connected(int f, int a, int b) const { return !path(f, a, b).empty() || a == b; }

  // Edge ids along the unique a-b path in forest f (empty when disconnected).
  std::vector<int> path(int f, int a, int b) const {
    if (a == b) return {};
    std::map<int, std::pair<int, int>> pred;  // node -> (prev node, via edge)
    std::deque<int> q{a};
    std::set<int> seen{a};
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (const auto& [eid, uv] : forests_[f]) {
        int next = -1;
        if (uv.first == u && !seen.count(uv.second)) next = uv.second;
        if (uv.second == u && !seen.count(uv.first)) next = uv.first;
        if (next < 0) continue;
        pred[next] = {u, eid};
        if (next == b) {
          std::vector<int> out;
          for (int v = b; v != a;) {
            out.push_back(pred[v].second);
            v = pred[v].first;
          }
          return out;
        }
        seen.insert(next);
        q.push_back(next);
      }
    }
    return {};
  }

  void insert(int f, int eid, std::pair<int, int> uv) { forests_[f][eid] = uv; }
  void erase(int f, int eid) { forests_[f].erase(eid); }
  int forest_of(int eid) const {
    for (size_t f = 0; f < forests_.size(); ++f)
      if (forests_[f].count(eid)) return static_cast<int>(f);
    return -1;
  }
  size_t size(int f) const { return forests_[f].size(); }
  std::vector<std::pair<int, int>> edges(int f) const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [eid, uv] : forests_[f]) out.push_back(uv);
    return out;
  }

 private:
  std::vector<int> nodes_;
  std::vector<std::map<int, std::pair<int, int>>> forests_;
};

}  // namespace detail

// k spanning trees of the companion with per-edge unit usage within capacity,
// found by matroid-union augmentation over the capacity-expanded multigraph
// (Nash-Williams/Tutte guarantee feasibility for k <= floor(mincut/2)).
inline TreePacking pack_undirected_trees(const UndirectedCompanion& u, int k) {
  if (k < 0) throw validation_error("pack_undirected_trees: negative k");
  int n = u.n();
  if (k == 0) {
    return TreePacking{};
  }
  // Unit elements, canonical order.
  std::vector<std::pair<int, int>> unit;  // (u,v) per capacity unit
  for (const auto& e : u.edges())
    for (int c = 0; c < e.cap; ++c) unit.push_back({e.u, e.v});

  detail::ForestSet forests(u.nodes(), k);
  int inserted = 0;
  for (int e0 = 0; e0 < static_cast<int>(unit.size()); ++e0) {
    // BFS over exchange moves: label[e] = predecessor element wanting e's slot.
    std::map<int, int> label;
    std::deque<int> q{e0};
    label[e0] = -1;
    bool placed = false;
    while (!q.empty() && !placed) {
      int f = q.front();
      q.pop_front();
      auto [x, y] = unit[f];
      for (int i = 0; i < k && !placed; ++i) {
        if (forests.forest_of(f) == i) continue;
        if (!forests.connected(i, x, y)) {
          // Augment: move f into i, then walk labels back to e0.
          int cur = f, target = i;
          while (cur != -1) {
            int home = forests.forest_of(cur);
            if (home >= 0) forests.erase(home, cur);
            forests.insert(target, cur, unit[cur]);
            cur = label[cur];
            target = home;
          }
          placed = true;
        } else {
          for (int h : forests.path(i, x, y)) {
            if (!label.count(h)) {
              label[h] = f;
              q.push_back(h);
            }
          }
        }
      }
    }
    if (placed) ++inserted;
  }
  if (inserted != k * (n - 1))
    throw infeasible_error("pack_undirected_trees: only " + std::to_string(inserted) + " of " +
                           std::to_string(k * (n - 1)) + " tree edges embeddable");
  TreePacking packing;
  for (int f = 0; f < k; ++f) {
    std::vector<Edge> tree;
    for (auto [a, b] : forests.edges(f)) tree.push_back({std::min(a, b), std::max(a, b), 1});
    std::sort(tree.begin(), tree.end());
    if (static_cast<int>(tree.size()) != n - 1)
      throw internal_error("pack_undirected_trees: forest is not a spanning tree");
    packing.trees.push_back(std::move(tree));
  }
  packing.recount();
  return packing;
}

// Max number of internally-vertex-disjoint a->b paths (Menger), via the
// standard vertex-splitting reduction; a direct a->b edge counts once.
inline int vertex_connectivity(const Digraph& g, int a, int b) {
  if (a == b) throw validation_error("vertex_connectivity: endpoints must differ");
  detail::MaxFlow mf(2 * detail::max_node_id(g) + 2);
  auto vin = [](int v) { return 2 * v; };
  auto vout = [](int v) { return 2 * v + 1; };
  for (int v : g.nodes())
    if (v != a && v != b) mf.add_arc(vin(v), vout(v), 1);
  mf.add_arc(vin(a), vout(a), g.n());
  mf.add_arc(vin(b), vout(b), g.n());
  for (const auto& e : g.edges()) mf.add_arc(vout(e.tail), vin(e.head), 1);
  return static_cast<int>(mf.run(vout(a), vin(b)));
}

// `count` internally-vertex-disjoint directed a->b node paths, recovered
// from an integral unit flow on the split graph.
inline std::vector<std::vector<int>> vertex_disjoint_paths(const Digraph& g, int a, int b,
                                                           int count) {
  if (a == b) throw validation_error("vertex_disjoint_paths: endpoints must differ");
  if (count <= 0) return {};
  detail::MaxFlow mf(2 * detail::max_node_id(g) + 2);
  auto vin = [](int v) { return 2 * v; };
  auto vout = [](int v) { return 2 * v + 1; };
  int arc_id = 0;
  std::map<int, int> split_arc;  // node -> arc id of its vin->vout arc
  for (int v : g.nodes()) {
    if (v != a && v != b) {
      mf.add_arc(vin(v), vout(v), 1);
      split_arc[v] = arc_id;
    } else {
      mf.add_arc(vin(v), vout(v), g.n());
    }
    ++arc_id;
  }
  std::map<std::pair<int, int>, int> edge_arc;
  for (const auto& e : g.edges()) {
    mf.add_arc(vout(e.tail), vin(e.head), 1);
    edge_arc[{e.tail, e.head}] = arc_id++;
  }
  long long flow = mf.run(vout(a), vin(b), count);
  if (flow < count)
    throw infeasible_error("vertex_disjoint_paths: only " + std::to_string(flow) +
                           " disjoint paths exist (need " + std::to_string(count) + ")");
  // Decompose: repeatedly walk saturated edge arcs from a to b.
  std::set<int> used;
  std::vector<std::vector<int>> paths;
  for (int p = 0; p < count; ++p) {
    std::vector<int> path{a};
    int cur = a;
    while (cur != b) {
      int next = -1;
      for (const auto& [uv, ai] : edge_arc) {
        if (uv.first != cur || used.count(ai)) continue;
        if (mf.arc_flow(ai) > 0) {
          next = uv.second;
          used.insert(ai);
          break;
        }
      }
      if (next < 0) throw internal_error("vertex_disjoint_paths: flow decomposition failed");
      path.push_back(next);
      cur = next;
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

// Model gate from the problem setup: n >= 3f+1 and vertex connectivity at
// least 2f+1 between every ordered node pair.
inline void validate_model(const Digraph& g, int f) {
  if (f < 0) throw validation_error("f must be nonnegative");
  if (g.n() < 3 * f + 1)
    throw model_violation("model requires n >= 3f+1 (n = " + std::to_string(g.n()) +
                          ", f = " + std::to_string(f) + ")");
  int need = 2 * f + 1;
  for (int a : g.nodes())
    for (int b : g.nodes()) {
      if (a == b) continue;
      int kappa = vertex_connectivity(g, a, b);
      if (kappa < need)
        throw model_violation("model requires connectivity >= 2f+1: pair (" + std::to_string(a) +
                              "," + std::to_string(b) + ") has only " + std::to_string(kappa) +
                              " vertex-disjoint paths (need " + std::to_string(need) + ")");
    }
}

}  // namespace nab
