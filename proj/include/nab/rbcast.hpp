#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nab/adversary.hpp"
#include "nab/claims.hpp"
#include "nab/errors.hpp"
#include "nab/graph.hpp"

namespace nab {

// Per-link bit counters for one phase or round, indexed like g.edges().
struct LinkBits {
  explicit LinkBits(const Digraph& g) : graph(&g), bits(g.edges().size(), 0) {}

  void add(int edge_idx, long long b) { bits[edge_idx] += b; }
  void accumulate(const LinkBits& o) {
    for (size_t i = 0; i < bits.size(); ++i) bits[i] += o.bits[i];
  }
  long long total() const {
    long long t = 0;
    for (auto b : bits) t += b;
    return t;
  }
  // Time the phase occupies: max over links of ceil(bits / capacity).
  long long time_units() const {
    long long t = 0;
    for (size_t i = 0; i < bits.size(); ++i) {
      long long cap = graph->edges()[i].cap;
      t = std::max(t, (bits[i] + cap - 1) / cap);
    }
    return t;
  }

  const Digraph* graph;
  std::vector<long long> bits;
};

// Reliable point-to-point transport over the original graph: each ordered
// pair gets 2f+1 vertex-disjoint paths fixed up front, the same copy rides
// every path, and the receiver takes the majority. Faulty interior relays
// may corrupt or drop the copies passing through them; with at most f
// faults the majority is intact whenever the endpoints are fault-free.
class EmulatedNet {
 public:
  EmulatedNet(const Digraph& g, int f) : g_(g), f_(f) {
    for (int a : g.nodes())
      for (int b : g.nodes()) {
        if (a == b) continue;
        auto node_paths = vertex_disjoint_paths(g, a, b, 2 * f + 1);
        PairPaths pp;
        std::set<int> interiors;
        for (auto& np : node_paths) {
          PathInfo pi;
          pi.nodes = np;
          for (size_t i = 0; i + 1 < np.size(); ++i) {
            int idx = g.edge_index(np[i], np[i + 1]);
            if (idx < 0) throw internal_error("EmulatedNet: path uses a missing edge");
            pi.edges.push_back(idx);
            pp.all_edges.push_back(idx);
          }
          for (size_t i = 1; i + 1 < np.size(); ++i) interiors.insert(np[i]);
          pp.paths.push_back(std::move(pi));
        }
        pp.interiors.assign(interiors.begin(), interiors.end());
        paths_.emplace(std::make_pair(a, b), std::move(pp));
      }
  }

  const Digraph& graph() const { return g_; }
  int f() const { return f_; }

  struct SendCtx {
    uint64_t run_seed = 0;
    int k = 0;
    uint64_t stream = 0;  // disambiguates repeated sends between the same pair
  };

  // Returns what dst decodes. `payload_bits` is the true wire size of the
  // payload (flags are 1 bit even though Payload is byte-granular).
  Payload send(int src, int dst, const Payload& payload, long long payload_bits,
               const Payload& fallback, const std::set<int>& fault_set, const Strategy& strat,
               const SendCtx& ctx, LinkBits& acct) const {
    const PairPaths& pp = paths_.at({src, dst});
    // fast path: nothing on these routes can interfere with the copies
    bool faulty_interior = false;
    if (strat.path_relay || !strat.refuse_edges.empty()) {
      for (int v : pp.interiors)
        if (fault_set.count(v)) {
          faulty_interior = true;
          break;
        }
    }
    bool interferes = faulty_interior ||
                      (!strat.refuse_edges.empty() && fault_set.count(src) != 0);
    if (!interferes) {
      for (int e : pp.all_edges) acct.add(e, payload_bits);
      return payload;
    }
    size_t npaths = pp.paths.size();
    std::vector<const Payload*> copies(npaths, nullptr);   // nullptr = dropped
    std::vector<std::optional<Payload>> altered(npaths);   // storage for modified copies
    for (size_t pi = 0; pi < npaths; ++pi) {
      const PathInfo& path = pp.paths[pi];
      const Payload* copy = &payload;
      for (size_t hop = 0; hop < path.edges.size(); ++hop) {
        int tail = path.nodes[hop];
        const Edge& e = g_.edges()[path.edges[hop]];
        // a refusing node stays silent on its cut edges even as the sender
        if (fault_set.count(tail) && strat.refuses(e.tail, e.head)) {
          copy = nullptr;
          break;
        }
        bool tail_faulty = tail != src && fault_set.count(tail) != 0;
        if (tail_faulty && strat.path_relay) {
          PathCtx pctx;
          pctx.run_seed = ctx.run_seed;
          pctx.k = ctx.k;
          pctx.node = tail;
          pctx.path_src = src;
          pctx.path_dst = dst;
          pctx.hop = e;
          pctx.copy_index = static_cast<int>(pi);
          pctx.stream = ctx.stream;
          Payload mod = strat.path_relay(pctx, *copy);
          mod.resize(copy->size());  // relays cannot change the wire size
          altered[pi] = std::move(mod);
          copy = &*altered[pi];
        }
        acct.add(path.edges[hop], payload_bits);
      }
      copies[pi] = copy;
    }
    // strict majority among the 2f+1 copies; anything else decodes to the
    // caller's default (the missing-message rule)
    int need = f_ + 1;
    for (size_t i = 0; i < npaths; ++i) {
      if (!copies[i]) continue;
      int count = 0;
      for (size_t j = 0; j < npaths; ++j)
        if (copies[j] && *copies[j] == *copies[i]) ++count;
      if (count >= need) return *copies[i];
    }
    return fallback;
  }

 private:
  struct PathInfo {
    std::vector<int> nodes;
    std::vector<int> edges;
  };
  struct PairPaths {
    std::vector<PathInfo> paths;
    std::vector<int> all_edges;   // concatenated path edges, for bulk accounting
    std::vector<int> interiors;   // interior relay nodes across all paths
  };
  const Digraph g_;
  int f_;
  std::map<std::pair<int, int>, PairPaths> paths_;
};

// Exponential information gathering over the emulated complete graph.
// Labels are sender sequences without repeats rooted at the broadcaster;
// t+1 rounds tolerate t faults among the participants (t < |participants|/3).
// Instances are round-stepped so several broadcasts can share rounds (and
// their time accounting).
class EigInstance {
 public:
  EigInstance(const EmulatedNet& net, std::vector<int> participants, int broadcaster,
              Payload value, int t, Payload default_value)
      : net_(&net),
        participants_(std::move(participants)),
        broadcaster_(broadcaster),
        value_(std::move(value)),
        t_(t),
        default_(std::move(default_value)) {
    std::sort(participants_.begin(), participants_.end());
    if (!std::binary_search(participants_.begin(), participants_.end(), broadcaster_))
      throw validation_error("EigInstance: broadcaster not a participant");
    if (static_cast<int>(participants_.size()) <= 3 * t_)
      throw validation_error("EigInstance: need n > 3t");
    if (value_.size() != default_.size())
      throw validation_error("EigInstance: default must match the value size");
    // level 1: the root label (broadcaster)
    labels_.push_back({broadcaster_});
    level_begin_ = {0, 0, 1};
    for (int lvl = 2; lvl <= t_ + 1; ++lvl) {
      size_t begin = level_begin_[lvl - 1];
      size_t end = level_begin_[lvl];
      for (size_t li = begin; li < end; ++li) {
        for (int j : participants_) {
          if (contains(labels_[li], j)) continue;
          labels_.push_back(labels_[li]);
          labels_.back().push_back(j);
          children_[static_cast<int>(li)].push_back(static_cast<int>(labels_.size()) - 1);
        }
      }
      level_begin_.push_back(labels_.size());
    }
    for (int v : participants_) tree_[v].assign(labels_.size(), std::nullopt);
  }

  int rounds() const { return t_ + 1; }

  // Runs EIG round r (1-based). Bits go to `acct`; the caller owns round
  // time (so parallel broadcasts can share rounds).
  void run_round(int r, const std::set<int>& fault_set, const Strategy& strat, uint64_t run_seed,
                 int k, LinkBits& acct) {
    if (r < 1 || r > rounds()) throw validation_error("EigInstance: bad round index");
    long long value_bits = std::max<size_t>(1, value_.size() * 8);
    if (r == 1) {
      tree_[broadcaster_][0] = value_;
      for (int j : participants_) {
        if (j == broadcaster_) continue;
        Payload msg = value_;
        if (fault_set.count(broadcaster_) && strat.eig_message) {
          EigCtx ectx = eig_ctx(run_seed, k, broadcaster_, j, 0, r);
          msg = strat.eig_message(ectx, msg);
          msg.resize(value_.size());
        }
        tree_[j][0] = transport(broadcaster_, j, msg, value_bits, run_seed, k, r, 0, fault_set,
                                strat, acct);
      }
      return;
    }
    // round r: every participant relays its level r-1 values
    size_t lb = level_begin_[r - 1], le = level_begin_[r];
    std::map<int, std::vector<std::optional<Payload>>> incoming;  // per recipient: new level slots
    size_t new_lb = level_begin_[r], new_le = level_begin_[r + 1];
    for (int j : participants_) incoming[j].assign(new_le - new_lb, std::nullopt);

    for (int sender : participants_) {
      // bundle all forwardable labels in canonical order
      std::vector<int> fwd;
      for (size_t li = lb; li < le; ++li)
        if (!contains(labels_[li], sender)) fwd.push_back(static_cast<int>(li));
      if (fwd.empty()) continue;
      bool sender_faulty = fault_set.count(sender) != 0;
      for (int j : participants_) {
        if (j == sender) continue;
        Payload bundle;
        bundle.reserve(fwd.size() * value_.size());
        for (int li : fwd) {
          Payload piece = tree_[sender][li] ? *tree_[sender][li] : default_;
          if (sender_faulty && strat.eig_message) {
            EigCtx ectx = eig_ctx(run_seed, k, broadcaster_, j, li, r);
            ectx.node = sender;
            piece = strat.eig_message(ectx, piece);
            piece.resize(value_.size());
          }
          bundle.insert(bundle.end(), piece.begin(), piece.end());
        }
        Payload got = transport(sender, j, bundle, value_bits * fwd.size(), run_seed, k, r,
                                mix64(uint64_t(sender), uint64_t(j)), fault_set, strat, acct);
        got.resize(bundle.size());
        for (size_t fi = 0; fi < fwd.size(); ++fi) {
          int child = child_label(fwd[fi], sender);
          if (child < 0) continue;
          Payload piece(got.begin() + fi * value_.size(), got.begin() + (fi + 1) * value_.size());
          incoming[j][child - static_cast<int>(new_lb)] = std::move(piece);
        }
      }
      // store the sender's relays in its own tree as well
      for (int li : fwd) {
        int child = child_label(li, sender);
        if (child < 0) continue;
        incoming[sender][child - static_cast<int>(new_lb)] =
            tree_[sender][li] ? *tree_[sender][li] : default_;
      }
    }
    for (int j : participants_)
      for (size_t s = 0; s < incoming[j].size(); ++s)
        if (incoming[j][s]) tree_[j][new_lb + s] = incoming[j][s];
  }

  // Recursive majority resolution; the broadcaster decides its own value.
  std::map<int, Payload> decide() const {
    std::map<int, Payload> out;
    for (int v : participants_) {
      if (v == broadcaster_) {
        out[v] = value_;
        continue;
      }
      out[v] = resolve(v, 0, 1);
    }
    return out;
  }

  const std::vector<std::vector<int>>& labels() const { return labels_; }

 private:
  static bool contains(const std::vector<int>& seq, int v) {
    return std::find(seq.begin(), seq.end(), v) != seq.end();
  }

  EigCtx eig_ctx(uint64_t run_seed, int k, int b, int recipient, int label_id, int round) const {
    EigCtx e;
    e.run_seed = run_seed;
    e.k = k;
    e.node = b;
    e.broadcaster = b;
    e.recipient = recipient;
    e.label_id = label_id;
    e.round = round;
    return e;
  }

  Payload transport(int src, int dst, const Payload& msg, long long bits, uint64_t run_seed, int k,
                    int round, uint64_t stream, const std::set<int>& fault_set,
                    const Strategy& strat, LinkBits& acct) const {
    EmulatedNet::SendCtx sctx;
    sctx.run_seed = run_seed;
    sctx.k = k;
    sctx.stream = mix64(uint64_t(broadcaster_), uint64_t(round), stream);
    Payload fallback(msg.size(), 0);
    return net_->send(src, dst, msg, bits, fallback, fault_set, strat, sctx, acct);
  }

  int child_label(int li, int appended) const {
    auto it = children_.find(li);
    if (it == children_.end()) return -1;
    for (int c : it->second)
      if (labels_[c].back() == appended) return c;
    return -1;
  }

  Payload resolve(int v, int li, int level) const {
    const auto& stored = tree_.at(v)[li];
    if (level == t_ + 1 || !children_.count(li)) return stored ? *stored : default_;
    const auto& kids = children_.at(li);
    if (kids.empty()) return stored ? *stored : default_;
    std::map<Payload, int> votes;
    for (int c : kids) votes[resolve(v, c, level + 1)]++;
    int half = static_cast<int>(kids.size()) / 2;
    for (const auto& [val, count] : votes)
      if (count > half) return val;
    return default_;
  }

  const EmulatedNet* net_;
  std::vector<int> participants_;
  int broadcaster_;
  Payload value_;
  int t_;
  Payload default_;
  std::vector<std::vector<int>> labels_;
  std::vector<size_t> level_begin_;  // level_begin_[lvl] = first label index of level lvl
  std::map<int, std::vector<int>> children_;
  std::map<int, std::vector<std::optional<Payload>>> tree_;
};

struct BroadcastResult {
  std::map<int, Payload> decided;
  LinkBits bits;
  long long time = 0;
};

// Convenience wrapper: one reliable broadcast of a small value, with its own
// per-round time accounting.
inline BroadcastResult broadcast_small(const EmulatedNet& net, std::vector<int> participants,
                                       int broadcaster, const Payload& value, int t,
                                       const Payload& default_value,
                                       const std::set<int>& fault_set, const Strategy& strat,
                                       uint64_t run_seed = 0, int k = 0) {
  EigInstance eig(net, std::move(participants), broadcaster, value, t, default_value);
  BroadcastResult res{{}, LinkBits(net.graph()), 0};
  for (int r = 1; r <= eig.rounds(); ++r) {
    LinkBits round_bits(net.graph());
    eig.run_round(r, fault_set, strat, run_seed, k, round_bits);
    res.time += round_bits.time_units();
    res.bits.accumulate(round_bits);
  }
  res.decided = eig.decide();
  return res;
}

// Direct reliable transmission of one payload (spec op emulate_send).
inline Payload emulate_send(const EmulatedNet& net, int src, int dst, const Payload& payload,
                            long long payload_bits, const std::set<int>& fault_set,
                            const Strategy& strat, LinkBits& acct, uint64_t run_seed = 0,
                            int k = 0, uint64_t stream = 0) {
  EmulatedNet::SendCtx ctx;
  ctx.run_seed = run_seed;
  ctx.k = k;
  ctx.stream = stream;
  Payload fallback(payload.size(), 0);
  return net.send(src, dst, payload, payload_bits, fallback, fault_set, strat, ctx, acct);
}

}  // namespace nab
