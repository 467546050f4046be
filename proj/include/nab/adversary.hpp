#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nab/bitvec.hpp"
#include "nab/claims.hpp"
#include "nab/errors.hpp"
#include "nab/graph.hpp"
#include "nab/rng.hpp"

namespace nab {

// Hook contexts. Every field that identifies the call site participates in
// the rng derivation, so a strategy is a deterministic function of
// (seed, instance, round, edge) and failures replay exactly.
struct HookCtx {
  uint64_t run_seed = 0;
  int k = 0;     // instance index
  int node = 0;  // the faulty node acting
};

struct Phase1Ctx : HookCtx {
  int tree = 0;
  Edge edge;
  int out_index = 0;  // position among this node's out-arcs in the tree
};

struct Phase2Ctx : HookCtx {
  Edge edge;
};

struct FlagCtx : HookCtx {};
struct Dc1Ctx : HookCtx {};

struct PathCtx : HookCtx {
  int path_src = 0;
  int path_dst = 0;
  Edge hop;
  int copy_index = 0;
  uint64_t stream = 0;  // caller-chosen tag separating repeated sends
};

struct EigCtx : HookCtx {
  int broadcaster = 0;
  int recipient = 0;
  int label_id = 0;
  int round = 0;
};

// A Byzantine strategy: interception hooks for each place a faulty node
// speaks. Unset hooks mean protocol-faithful behavior. Hooks are only ever
// invoked for nodes in the configured fault set; the routers enforce that,
// which is what keeps traffic between fault-free nodes untouchable.
struct Strategy {
  std::string name = "honest";
  bool touches_paths = false;                   // emulate_send fast-path hint
  std::set<std::pair<int, int>> refuse_edges;   // silent-cut W

  // phase 1: symbol to emit on a tree arc; nullopt = stay silent
  std::function<std::optional<BitVec>(const Phase1Ctx&, const BitVec& honest)> phase1_send;
  // phase 2, exact mode: coded symbols to emit; nullopt = silent
  std::function<std::optional<std::vector<uint64_t>>(const Phase2Ctx&,
                                                     const std::vector<uint64_t>& honest)>
      phase2_send;
  // phase 2, accounting mode: the value stand-in to emit; nullopt = silent
  std::function<std::optional<BitVec>(const Phase2Ctx&, const BitVec& honest)> phase2_send_value;
  // flag round: the 1-bit flag this node broadcasts
  std::function<int(const FlagCtx&, int honest)> flag;
  // dispute control: the claims this node broadcasts
  std::function<Claims(const Dc1Ctx&, const Claims& honest)> dc1_claims;
  // dispute control: the input the (faulty) source broadcasts
  std::function<BitVec(const Dc1Ctx&, const BitVec& honest)> dc1_input;
  // emulated-link relay: what a faulty interior node forwards
  std::function<Payload(const PathCtx&, const Payload& copy)> path_relay;
  // EIG relay: per-label, per-recipient message content
  std::function<Payload(const EigCtx&, const Payload& honest)> eig_message;

  bool refuses(int tail, int head) const { return refuse_edges.count({tail, head}) != 0; }
};

namespace detail {

template <typename Rng>
inline BitVec flip_random_bit(BitVec v, Rng& rng) {
  if (v.size() == 0) return v;
  size_t i = rng() % v.size();
  v.set(i, !v.get(i));
  return v;
}

inline std::set<std::pair<int, int>> parse_edge_list(const std::string& text) {
  std::set<std::pair<int, int>> out;
  std::string tok;
  auto flush = [&]() {
    if (tok.empty()) return;
    auto dash = tok.find('-');
    auto arrow = tok.find('>');
    if (arrow != std::string::npos) {
      int a = std::stoi(tok.substr(0, arrow)), b = std::stoi(tok.substr(arrow + 1));
      out.insert({a, b});
    } else if (dash != std::string::npos) {
      int a = std::stoi(tok.substr(0, dash)), b = std::stoi(tok.substr(dash + 1));
      out.insert({a, b});
      out.insert({b, a});
    } else {
      throw validation_error("silent-cut edge list: expected 'a-b' or 'a>b', got '" + tok + "'");
    }
    tok.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else if (!isspace(static_cast<unsigned char>(c))) {
      tok.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace detail

inline std::vector<std::string> strategy_catalog() {
  return {"honest",       "phase1-equivocator", "phase1-corruptor", "phase2-liar",
          "false-flagger", "dc1-liar",           "dc1-self-inconsistent", "silent-cut",
          "path-corruptor", "combined"};
}

// Builds a catalog strategy. Parameters (from the experiment config):
//   cut = "1-2,3>4"            edges refused by silent-cut / combined
//   phases = p1,p2,flag,dc1,path   combined: which sub-behaviors are active
//                                  (default all; regression runs pin one)
inline Strategy make_strategy(const std::string& name,
                              const std::map<std::string, std::string>& params = {},
                              uint64_t seed = 0) {
  Strategy s;
  s.name = name;
  (void)seed;  // hooks derive randomness from call contexts, not from here

  auto equivocate = [](const Phase1Ctx& ctx, const BitVec& honest) -> std::optional<BitVec> {
    // send s to the first subtree and s xor 1 to the others
    if (ctx.out_index == 0) return honest;
    BitVec v = honest;
    if (v.size() > 0) v.set(0, !v.get(0));
    return v;
  };
  auto corrupt_p1 = [](const Phase1Ctx& ctx, const BitVec& honest) -> std::optional<BitVec> {
    SmallRng rng(mix64(ctx.run_seed, 0xf1, ctx.k, ctx.tree, ctx.edge.tail, ctx.edge.head));
    if (rng() % 2 == 0) return honest;  // corrupt roughly half the hops
    return detail::flip_random_bit(honest, rng);
  };
  auto lie_p2 = [](const Phase2Ctx& ctx,
                   const std::vector<uint64_t>& honest) -> std::optional<std::vector<uint64_t>> {
    SmallRng rng(mix64(ctx.run_seed, 0xf2, ctx.k, ctx.edge.tail, ctx.edge.head));
    if (rng() % 2 == 0) return honest;  // lie to a chosen subset of neighbors
    std::vector<uint64_t> bad = honest;
    if (!bad.empty()) bad[rng() % bad.size()] ^= (1 + rng() % 0xff);
    return bad;
  };
  auto lie_p2_value = [](const Phase2Ctx& ctx, const BitVec& honest) -> std::optional<BitVec> {
    SmallRng rng(mix64(ctx.run_seed, 0xf2, ctx.k, ctx.edge.tail, ctx.edge.head));
    if (rng() % 2 == 0) return honest;
    return detail::flip_random_bit(honest, rng);
  };
  auto lie_claims = [](const Dc1Ctx& ctx, const Claims& honest) {
    SmallRng rng(mix64(ctx.run_seed, 0xdc, ctx.k, ctx.node));
    Claims c = honest;
    if (!c.received.empty()) {
      size_t pick = rng() % c.received.size();
      auto it = c.received.begin();
      std::advance(it, pick);
      it->second.silent = false;
      it->second.payload = detail::flip_random_bit(it->second.payload, rng);
    }
    return c;
  };
  auto self_inconsistent = [](const Dc1Ctx& ctx, const Claims& honest) {
    SmallRng rng(mix64(ctx.run_seed, 0xdd, ctx.k, ctx.node));
    Claims c = honest;
    if (!c.sent.empty()) {
      size_t pick = rng() % c.sent.size();
      auto it = c.sent.begin();
      std::advance(it, pick);
      it->second.silent = false;
      it->second.payload = detail::flip_random_bit(it->second.payload, rng);
    }
    return c;
  };
  auto corrupt_path = [](const PathCtx& ctx, const Payload& copy) {
    SmallRng rng(mix64(ctx.run_seed, 0xce, ctx.k, ctx.node, ctx.hop.tail, ctx.hop.head,
                       ctx.copy_index, ctx.stream));
    Payload bad = copy;
    if (!bad.empty()) bad[rng() % bad.size()] ^= static_cast<uint8_t>(1 + rng() % 0xff);
    return bad;
  };

  if (name == "honest") {
    // control group: all hooks unset
  } else if (name == "phase1-equivocator") {
    s.phase1_send = equivocate;
  } else if (name == "phase1-corruptor") {
    s.phase1_send = corrupt_p1;
  } else if (name == "phase2-liar") {
    s.phase2_send = lie_p2;
    s.phase2_send_value = lie_p2_value;
  } else if (name == "false-flagger") {
    s.flag = [](const FlagCtx&, int) { return 1; };
  } else if (name == "dc1-liar") {
    s.dc1_claims = lie_claims;
  } else if (name == "dc1-self-inconsistent") {
    s.dc1_claims = self_inconsistent;
  } else if (name == "silent-cut") {
    auto it = params.find("cut");
    if (it == params.end())
      throw validation_error("silent-cut strategy needs a cut=<edge list> parameter");
    s.refuse_edges = detail::parse_edge_list(it->second);
    s.touches_paths = true;  // refusals also apply to emulated-path hops
  } else if (name == "path-corruptor") {
    s.path_relay = corrupt_path;
    s.touches_paths = true;
  } else if (name == "combined") {
    std::set<std::string> phases{"p1", "p2", "flag", "dc1", "path"};
    if (auto it = params.find("phases"); it != params.end()) {
      phases.clear();
      std::string tok;
      for (char ch : it->second + ",") {
        if (ch == ',') {
          if (!tok.empty()) phases.insert(tok);
          tok.clear();
        } else if (!isspace(static_cast<unsigned char>(ch))) {
          tok.push_back(ch);
        }
      }
      for (const auto& p : phases)
        if (p != "p1" && p != "p2" && p != "flag" && p != "dc1" && p != "path")
          throw validation_error("combined: unknown phase '" + p + "' in schedule");
    }
    if (phases.count("p1")) s.phase1_send = corrupt_p1;
    if (phases.count("p2")) {
      s.phase2_send = lie_p2;
      s.phase2_send_value = lie_p2_value;
    }
    if (phases.count("flag")) s.flag = [](const FlagCtx&, int) { return 1; };
    if (phases.count("dc1")) s.dc1_claims = lie_claims;
    if (phases.count("path")) {
      s.path_relay = corrupt_path;
      s.touches_paths = true;
    }
    if (auto it = params.find("cut"); it != params.end())
      s.refuse_edges = detail::parse_edge_list(it->second);
  } else {
    throw validation_error("unknown adversary strategy '" + name + "'");
  }
  return s;
}

}  // namespace nab
