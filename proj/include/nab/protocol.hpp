#pragma once

#include <algorithm>
#include <cassert>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nab/adversary.hpp"
#include "nab/analysis.hpp"
#include "nab/bitvec.hpp"
#include "nab/claims.hpp"
#include "nab/coding.hpp"
#include "nab/dispute.hpp"
#include "nab/errors.hpp"
#include "nab/gf.hpp"
#include "nab/graph.hpp"
#include "nab/rbcast.hpp"

namespace nab {

enum class FieldMode { exact, accounting };

struct InstanceInput {
  int k = 1;
  BitVec x;   // the source's input, L bits
  int L = 0;
};

// Tree arcs in forwarding order with per-node routing lookups; shared by
// phase 1 and the DC3 recomputation so both derive identical routes.
struct TreeRoutes {
  struct Arc {
    int tail, head;
  };
  std::vector<std::vector<Arc>> arcs;                      // per tree, BFS order from the root
  std::vector<std::map<int, std::pair<int, int>>> in_arc;  // per tree: head -> (tail, arc idx)
  std::vector<std::map<int, std::vector<int>>> out_arcs;   // per tree: tail -> arc idxs (ordered)
  int depth = 0;                                           // max hops over all trees

  TreeRoutes(const TreePacking& packing, int root) {
    for (const auto& tree : packing.trees) {
      std::vector<Arc> ordered;
      std::map<int, std::pair<int, int>> in;
      std::map<int, std::vector<int>> out;
      std::map<int, int> hops{{root, 0}};
      std::set<size_t> used;
      bool grew = true;
      while (grew) {
        grew = false;
        for (size_t i = 0; i < tree.size(); ++i) {
          if (used.count(i)) continue;
          const Edge& e = tree[i];
          if (!hops.count(e.tail) || hops.count(e.head)) continue;
          used.insert(i);
          int idx = static_cast<int>(ordered.size());
          ordered.push_back({e.tail, e.head});
          in[e.head] = {e.tail, idx};
          out[e.tail].push_back(idx);
          hops[e.head] = hops[e.tail] + 1;
          depth = std::max(depth, hops[e.head]);
          grew = true;
        }
      }
      if (used.size() != tree.size())
        throw internal_error("TreeRoutes: packing tree is not an arborescence from the root");
      arcs.push_back(std::move(ordered));
      in_arc.push_back(std::move(in));
      out_arcs.push_back(std::move(out));
    }
  }
};

namespace detail {

// Symbols in phase 1 are ceil(L_pad / gamma) bits each.
inline int phase1_symbol_bits(int l_pad, int gamma) { return (l_pad + gamma - 1) / gamma; }

inline std::vector<uint64_t> unpack_symbols(const FieldSpec& field, const BitVec& v, int rho) {
  std::vector<uint64_t> out(rho);
  for (int i = 0; i < rho; ++i) out[i] = v.get_word(size_t(i) * field.m(), field.m());
  return out;
}

inline BitVec pack_symbols(const FieldSpec& field, const std::vector<uint64_t>& syms) {
  BitVec v(syms.size() * field.m());
  for (size_t i = 0; i < syms.size(); ++i) v.set_word(i * field.m(), field.m(), syms[i]);
  return v;
}

}  // namespace detail

struct Phase1Result {
  std::map<int, BitVec> x_values;   // per node, L_pad bits
  std::map<int, Claims> claims;     // truthful phase-1 records per node
  LinkBits bits;
  long long time = 0;
  int depth = 0;
};

// Unreliable broadcast: the padded value splits into gamma symbols, one per
// arborescence, forwarded hop by hop. Faulty relays may substitute or stay
// silent on their outgoing hops; links themselves never corrupt, so a
// receiver's record equals what the tail actually emitted.
inline Phase1Result phase1(const Digraph& acct_graph, const Digraph& g_k, const BitVec& x_padded,
                           const TreeRoutes& routes, const std::set<int>& fault_set,
                           const Strategy& strat, uint64_t run_seed, int k) {
  int gamma = static_cast<int>(routes.arcs.size());
  Phase1Result res{{}, {}, LinkBits(acct_graph), 0, routes.depth};
  int sym_bits = detail::phase1_symbol_bits(static_cast<int>(x_padded.size()), gamma);
  for (int v : g_k.nodes()) {
    res.x_values[v] = BitVec(x_padded.size());
    res.claims[v] = Claims{};
  }
  res.x_values[1] = x_padded;  // the source reads its own input

  for (int t = 0; t < gamma; ++t) {
    std::map<int, std::optional<BitVec>> held;  // symbol each node holds for this tree
    held[1] = x_padded.slice(size_t(t) * sym_bits, sym_bits);
    for (const auto& arc : routes.arcs[t]) {
      // honest relay forwards what it holds; a missing symbol reads as zeros
      BitVec honest = held[arc.tail] ? *held[arc.tail] : BitVec(sym_bits);
      std::optional<BitVec> emitted = honest;
      if (fault_set.count(arc.tail)) {
        if (strat.refuses(arc.tail, arc.head)) {
          emitted.reset();
        } else if (strat.phase1_send) {
          Phase1Ctx ctx;
          ctx.run_seed = run_seed;
          ctx.k = k;
          ctx.node = arc.tail;
          ctx.tree = t;
          ctx.edge = {arc.tail, arc.head, 1};
          const auto& outs = routes.out_arcs[t].at(arc.tail);
          ctx.out_index = static_cast<int>(
              std::find(outs.begin(), outs.end(),
                        static_cast<int>(&arc - routes.arcs[t].data())) -
              outs.begin());
          emitted = strat.phase1_send(ctx, honest);
          if (emitted) *emitted = emitted->resized(sym_bits);
        }
      }
      ClaimKey key{1, t, arc.tail, arc.head};
      ClaimEntry entry;
      entry.silent = !emitted.has_value();
      entry.payload = emitted ? *emitted : BitVec(0);
      res.claims[arc.tail].sent[key] = entry;
      res.claims[arc.head].received[key] = entry;  // links are reliable
      held[arc.head] = emitted ? *emitted : BitVec(sym_bits);
      if (emitted) {
        int eidx = acct_graph.edge_index(arc.tail, arc.head);
        if (eidx < 0) throw internal_error("phase1: tree arc missing from the base graph");
        res.bits.add(eidx, sym_bits);
      }
    }
    // reassemble
    for (int v : g_k.nodes()) {
      if (v == 1) continue;
      BitVec sym = held.count(v) && held[v] ? *held[v] : BitVec(sym_bits);
      res.x_values[v].splice(size_t(t) * sym_bits, sym);
    }
  }
  res.time = res.bits.time_units();
  return res;
}

struct Phase2Result {
  std::map<int, int> honest_flags;  // protocol-prescribed flag per node (0 null, 1 mismatch)
  std::map<int, Claims> claims;     // truthful phase-2 records
  LinkBits bits;
  long long time = 0;
};

// Equality check (Algorithm 1): one round of coded exchanges on every edge
// of G_k. No forwarding happens, so nothing a faulty node does can alter
// traffic between two fault-free nodes; hooks apply only to faulty tails.
inline Phase2Result phase2_check(const Digraph& acct_graph, const Digraph& g_k, FieldMode mode,
                                 const CodingAssignment* assignment, int rho, int value_sym_bits,
                                 const std::map<int, BitVec>& x_values,
                                 const std::set<int>& fault_set, const Strategy& strat,
                                 uint64_t run_seed, int k) {
  Phase2Result res{{}, {}, LinkBits(acct_graph), 0};
  for (int v : g_k.nodes()) {
    res.honest_flags[v] = 0;
    res.claims[v] = Claims{};
  }
  for (const auto& e : g_k.edges()) {
    int eidx = acct_graph.edge_index(e.tail, e.head);
    ClaimKey key{2, 0, e.tail, e.head};
    bool tail_faulty = fault_set.count(e.tail) != 0;
    std::optional<BitVec> wire;  // what actually travels, encoded as bits
    long long wire_bits = 0;
    if (mode == FieldMode::exact) {
      const FieldSpec& field = assignment->field;
      auto xi = detail::unpack_symbols(field, x_values.at(e.tail), rho);
      auto honest_y = code_symbols(field, xi, assignment->per_edge.at({e.tail, e.head}));
      std::optional<std::vector<uint64_t>> y = honest_y;
      if (tail_faulty) {
        if (strat.refuses(e.tail, e.head)) {
          y.reset();
        } else if (strat.phase2_send) {
          Phase2Ctx ctx;
          ctx.run_seed = run_seed;
          ctx.k = k;
          ctx.node = e.tail;
          ctx.edge = e;
          y = strat.phase2_send(ctx, honest_y);
          if (y) {
            y->resize(honest_y.size());
            for (auto& s : *y) s &= field.mask();
          }
        }
      }
      wire_bits = static_cast<long long>(e.cap) * field.m();
      if (y) wire = detail::pack_symbols(field, *y);
      // receiver check: Y_d == X_i C_d, with a missing message read as zeros
      auto xj = detail::unpack_symbols(field, x_values.at(e.head), rho);
      auto expect = code_symbols(field, xj, assignment->per_edge.at({e.tail, e.head}));
      auto got = y ? *y : std::vector<uint64_t>(expect.size(), 0);
      if (got != expect) res.honest_flags[e.head] = 1;
    } else {
      // accounting mode: the full value stands in for an ideal code; the
      // wire still carries z_e symbols of ceil(L/rho) bits for accounting
      const BitVec& honest_v = x_values.at(e.tail);
      std::optional<BitVec> v = honest_v;
      if (tail_faulty) {
        if (strat.refuses(e.tail, e.head)) {
          v.reset();
        } else if (strat.phase2_send_value) {
          Phase2Ctx ctx;
          ctx.run_seed = run_seed;
          ctx.k = k;
          ctx.node = e.tail;
          ctx.edge = e;
          v = strat.phase2_send_value(ctx, honest_v);
          if (v) *v = v->resized(honest_v.size());
        }
      }
      wire_bits = static_cast<long long>(e.cap) * value_sym_bits;
      wire = v;
      auto got = v ? *v : BitVec(x_values.at(e.head).size());
      if (!(got == x_values.at(e.head))) res.honest_flags[e.head] = 1;
    }
    ClaimEntry entry;
    entry.silent = !wire.has_value();
    entry.payload = wire ? *wire : BitVec(0);
    res.claims[e.tail].sent[key] = entry;
    res.claims[e.head].received[key] = entry;
    if (wire) res.bits.add(eidx, wire_bits);
  }
  res.time = res.bits.time_units();
  return res;
}

struct FlagRoundResult {
  std::map<int, int> decided_flags;  // per broadcaster, as agreed by the fault-free nodes
  bool run_phase3 = false;
  LinkBits bits;
  long long time = 0;
};

// Flag-round bits and time do not depend on the flag values (payloads are
// one byte either way), so runs where no faulty node can interfere with the
// broadcast machinery reuse a single costed simulation per (graph, t).
struct FlagRoundCostCache {
  struct Entry {
    std::vector<long long> bits;
    long long time = 0;
  };
  std::map<uint64_t, Entry> entries;
};

// Step 2.2: every node (mismatch or not) reliably broadcasts its 1-bit
// flag; the n broadcasts run in lockstep rounds and share round time.
inline FlagRoundResult phase2_flags(const EmulatedNet& net, const std::vector<int>& participants,
                                    int t, const std::map<int, int>& honest_flags,
                                    const std::set<int>& fault_set, const Strategy& strat,
                                    uint64_t run_seed, int k,
                                    FlagRoundCostCache* cost_cache = nullptr) {
  FlagRoundResult res{{}, false, LinkBits(net.graph()), 0};
  std::map<int, int> values;
  for (int b : participants) {
    int flag = honest_flags.at(b);
    if (fault_set.count(b) && strat.flag) {
      FlagCtx ctx;
      ctx.run_seed = run_seed;
      ctx.k = k;
      ctx.node = b;
      flag = strat.flag(ctx, flag) ? 1 : 0;
    }
    values[b] = flag;
  }
  // Shortcut: with no EIG lying and no path interference possible, every
  // broadcast resolves to its sent value and the cost is value-independent.
  bool can_interfere = !fault_set.empty() &&
                       (strat.eig_message != nullptr || strat.path_relay != nullptr ||
                        !strat.refuse_edges.empty());
  if (!can_interfere && cost_cache) {
    uint64_t key = mix64(0x666c6167ull, uint64_t(t));
    for (int p : participants) key = mix64(key, uint64_t(p));
    auto it = cost_cache->entries.find(key);
    if (it == cost_cache->entries.end()) {
      std::map<int, int> zeros;
      for (int p : participants) zeros[p] = 0;
      auto costed = phase2_flags(net, participants, t, zeros, {}, Strategy{}, 0, 0, nullptr);
      FlagRoundCostCache::Entry e;
      e.bits = costed.bits.bits;
      e.time = costed.time;
      it = cost_cache->entries.emplace(key, std::move(e)).first;
    }
    res.bits.bits = it->second.bits;
    res.time = it->second.time;
    res.decided_flags = values;
    for (auto& [node, flag] : res.decided_flags) res.run_phase3 = res.run_phase3 || flag;
    return res;
  }
  std::vector<std::unique_ptr<EigInstance>> eigs;
  for (int b : participants) {
    eigs.push_back(std::make_unique<EigInstance>(net, participants, b,
                                                 Payload{static_cast<uint8_t>(values[b])}, t,
                                                 Payload{0}));
  }
  int rounds = eigs.front()->rounds();
  for (int r = 1; r <= rounds; ++r) {
    LinkBits round_bits(net.graph());
    for (auto& e : eigs) e->run_round(r, fault_set, strat, run_seed, k, round_bits);
    res.time += round_bits.time_units();
    res.bits.accumulate(round_bits);
  }
  for (size_t i = 0; i < participants.size(); ++i) {
    auto decided = eigs[i]->decide();
    std::optional<Payload> agreed;
    for (int v : participants) {
      if (fault_set.count(v)) continue;
      if (!agreed)
        agreed = decided.at(v);
      else if (!(decided.at(v) == *agreed))
        throw internal_error("phase2_flags: fault-free nodes disagree on a broadcast flag");
    }
    // all participants faulty cannot happen (n - f > f)
    res.decided_flags[participants[i]] = agreed && !agreed->empty() && (*agreed)[0] ? 1 : 0;
  }
  for (auto& [node, flag] : res.decided_flags) res.run_phase3 = res.run_phase3 || flag;
  return res;
}

struct Phase3Result {
  BitVec agreed_input;  // the DC1-broadcast source value (padded domain)
  std::vector<std::pair<int, int>> new_disputes;
  std::vector<int> new_faulty;
  LinkBits bits;
  long long time = 0;
};

namespace detail {

// What node i must have sent, given what it claims to have received (and
// the broadcast input when i is the source). Mirrors phase1/phase2 exactly.
struct PrescribedBehavior {
  Claims claims;  // prescribed sent entries (received side left empty)
  int flag = 0;   // prescribed equality-check flag
};

inline PrescribedBehavior prescribe(int node, const Claims& claimed, const BitVec& source_input,
                                    const Digraph& g_k, const TreeRoutes& routes, FieldMode mode,
                                    const CodingAssignment* assignment, int rho, int l_pad) {
  PrescribedBehavior out;
  int gamma = static_cast<int>(routes.arcs.size());
  int sym_bits = phase1_symbol_bits(l_pad, gamma);
  // phase-1 forwards
  BitVec x_i(l_pad);
  if (node == 1) x_i = source_input.resized(l_pad);
  for (int t = 0; t < gamma; ++t) {
    BitVec held(sym_bits);
    if (node == 1) {
      held = x_i.slice(size_t(t) * sym_bits, sym_bits);
    } else if (routes.in_arc[t].count(node)) {
      int tail = routes.in_arc[t].at(node).first;
      ClaimKey key{1, t, tail, node};
      auto it = claimed.received.find(key);
      if (it != claimed.received.end() && !it->second.silent)
        held = it->second.payload.resized(sym_bits);
      x_i.splice(size_t(t) * sym_bits, held);
    }
    if (routes.out_arcs[t].count(node)) {
      for (int ai : routes.out_arcs[t].at(node)) {
        const auto& arc = routes.arcs[t][ai];
        ClaimKey key{1, t, arc.tail, arc.head};
        out.claims.sent[key] = ClaimEntry{false, held};
      }
    }
  }
  // phase-2 sends from the reassembled value
  for (const auto& e : g_k.edges()) {
    ClaimKey key{2, 0, e.tail, e.head};
    if (e.tail == node) {
      ClaimEntry entry;
      entry.silent = false;
      if (mode == FieldMode::exact) {
        auto xi = unpack_symbols(assignment->field, x_i, rho);
        entry.payload =
            pack_symbols(assignment->field, code_symbols(assignment->field, xi,
                                                         assignment->per_edge.at({e.tail, e.head})));
      } else {
        entry.payload = x_i;
      }
      out.claims.sent[key] = std::move(entry);
    }
    if (e.head == node) {
      // prescribed flag: does the claimed incoming traffic check out?
      auto it = claimed.received.find(key);
      BitVec got;
      if (mode == FieldMode::exact) {
        got = (it != claimed.received.end() && !it->second.silent)
                  ? it->second.payload.resized(size_t(e.cap) * assignment->field.m())
                  : BitVec(size_t(e.cap) * assignment->field.m());
        auto xj = unpack_symbols(assignment->field, x_i, rho);
        BitVec expect = pack_symbols(
            assignment->field,
            code_symbols(assignment->field, xj, assignment->per_edge.at({e.tail, e.head})));
        if (!(got == expect)) out.flag = 1;
      } else {
        got = (it != claimed.received.end() && !it->second.silent)
                  ? it->second.payload.resized(l_pad)
                  : BitVec(l_pad);
        if (!(got == x_i)) out.flag = 1;
      }
    }
  }
  return out;
}

// The claim keys an honest node would populate; anything else is malformed.
inline bool keys_match_prescribed(int node, const Claims& claimed, const Digraph& g_k,
                                  const TreeRoutes& routes) {
  std::set<ClaimKey> want_sent, want_recv;
  for (size_t t = 0; t < routes.arcs.size(); ++t) {
    for (const auto& arc : routes.arcs[t]) {
      ClaimKey key{1, static_cast<int>(t), arc.tail, arc.head};
      if (arc.tail == node) want_sent.insert(key);
      if (arc.head == node) want_recv.insert(key);
    }
  }
  for (const auto& e : g_k.edges()) {
    ClaimKey key{2, 0, e.tail, e.head};
    if (e.tail == node) want_sent.insert(key);
    if (e.head == node) want_recv.insert(key);
  }
  std::set<ClaimKey> got_sent, got_recv;
  for (const auto& [k, v] : claimed.sent) got_sent.insert(k);
  for (const auto& [k, v] : claimed.received) got_recv.insert(k);
  return got_sent == want_sent && got_recv == want_recv;
}

}  // namespace detail

// Dispute control (DC1-DC4). Every node reliably broadcasts its claims and
// the source its input; mismatched claims yield disputes, deterministically
// inconsistent nodes are identified faulty, and the explaining-set
// intersection shrinks the graph for the next instance.
inline Phase3Result phase3(const Digraph& acct_graph, const Digraph& g_k, const EmulatedNet& net,
                           int t, const BitVec& x_padded, const std::map<int, Claims>& honest_claims,
                           const std::map<int, int>& broadcast_flags, const TreeRoutes& routes,
                           FieldMode mode, const CodingAssignment* assignment, int rho, int l_pad,
                           int f, const std::set<int>& fault_set, const Strategy& strat,
                           DisputeLedger& ledger, uint64_t run_seed, int k) {
  (void)acct_graph;
  Phase3Result res{BitVec(), {}, {}, LinkBits(net.graph()), 0};
  const auto participants = g_k.nodes();

  // DC1: lockstep reliable broadcasts of claims and the source input
  std::vector<std::unique_ptr<EigInstance>> eigs;
  std::vector<int> broadcasters;
  for (int i : participants) {
    Claims c = honest_claims.at(i);
    if (fault_set.count(i) && strat.dc1_claims) {
      Dc1Ctx ctx;
      ctx.run_seed = run_seed;
      ctx.k = k;
      ctx.node = i;
      c = strat.dc1_claims(ctx, c);
    }
    Payload blob = c.serialize();
    eigs.push_back(std::make_unique<EigInstance>(net, participants, i, blob, t,
                                                 Payload(blob.size(), 0)));
    broadcasters.push_back(i);
  }
  {
    BitVec input_bc = x_padded;
    if (fault_set.count(1) && strat.dc1_input) {
      Dc1Ctx ctx;
      ctx.run_seed = run_seed;
      ctx.k = k;
      ctx.node = 1;
      input_bc = strat.dc1_input(ctx, x_padded).resized(x_padded.size());
    }
    Payload blob(input_bc.bytes().begin(), input_bc.bytes().end());
    eigs.push_back(std::make_unique<EigInstance>(net, participants, 1, blob, t,
                                                 Payload(blob.size(), 0)));
    broadcasters.push_back(1);
  }
  int rounds = eigs.front()->rounds();
  for (int r = 1; r <= rounds; ++r) {
    LinkBits round_bits(net.graph());
    for (auto& e : eigs) e->run_round(r, fault_set, strat, run_seed, k, round_bits);
    res.time += round_bits.time_units();
    res.bits.accumulate(round_bits);
  }

  auto agreed_payload = [&](size_t idx) {
    auto decided = eigs[idx]->decide();
    std::optional<Payload> agreed;
    for (int v : participants) {
      if (fault_set.count(v)) continue;
      if (!agreed)
        agreed = decided.at(v);
      else if (!(decided.at(v) == *agreed))
        throw internal_error("phase3: fault-free nodes disagree on a DC1 broadcast");
    }
    return *agreed;
  };

  std::map<int, std::optional<Claims>> claims;  // nullopt = malformed
  for (size_t i = 0; i < participants.size(); ++i) {
    Payload blob = agreed_payload(i);
    try {
      claims[participants[i]] = Claims::parse(blob);
    } catch (const validation_error&) {
      claims[participants[i]] = std::nullopt;
    }
  }
  {
    Payload xblob = agreed_payload(participants.size());
    res.agreed_input = BitVec::from_bytes(xblob, x_padded.size());
  }

  // DC2: claimed sends vs claimed receives, per message slot
  std::set<std::pair<int, int>> dc2;
  auto compare_side = [&](int a, int b) {
    // slots from a to b (phase 1 per tree, phase 2 per edge)
    if (!claims[a] || !claims[b]) return;  // malformedness handled by DC3
    for (const auto& [key, entry] : claims[a]->sent) {
      if (key.tail != a || key.head != b) continue;
      auto it = claims[b]->received.find(key);
      if (it == claims[b]->received.end() || !(it->second == entry))
        dc2.insert(DisputeLedger::norm(a, b));
    }
    for (const auto& [key, entry] : claims[b]->received) {
      if (key.tail != a || key.head != b) continue;
      if (!claims[a]->sent.count(key)) dc2.insert(DisputeLedger::norm(a, b));
    }
  };
  for (const auto& e : g_k.edges()) compare_side(e.tail, e.head);

  // DC3: claims must be the deterministic protocol image of the claimed
  // receives (and the broadcast input for the source), including the flag
  std::set<int> dc3;
  for (int i : participants) {
    if (!claims[i] || !detail::keys_match_prescribed(i, *claims[i], g_k, routes)) {
      dc3.insert(i);
      continue;
    }
    auto pres = detail::prescribe(i, *claims[i], res.agreed_input, g_k, routes, mode, assignment,
                                  rho, l_pad);
    bool ok = true;
    for (const auto& [key, want] : pres.claims.sent) {
      auto it = claims[i]->sent.find(key);
      if (it == claims[i]->sent.end()) {
        ok = false;
        break;
      }
      const ClaimEntry& got = it->second;
      // a silent claim never matches the prescribed (always-speaking) relay
      if (got.silent != false || !(got.payload == want.payload)) {
        ok = false;
        break;
      }
    }
    if (ok && broadcast_flags.count(i) && broadcast_flags.at(i) != pres.flag) ok = false;
    if (!ok) dc3.insert(i);
  }

  // record disputes: DC2 pairs plus every neighbor of a DC3-identified node
  for (const auto& [a, b] : dc2)
    if (ledger.add_dispute(a, b)) res.new_disputes.push_back({a, b});
  for (int i : dc3) {
    for (const auto& e : g_k.edges()) {
      if (e.tail != i && e.head != i) continue;
      int other = (e.tail == i) ? e.head : e.tail;
      if (ledger.add_dispute(i, other)) res.new_disputes.push_back(DisputeLedger::norm(i, other));
    }
    if (!ledger.identified_faulty.count(i)) {
      ledger.identified_faulty.insert(i);
      res.new_faulty.push_back(i);
    }
  }

  // DC4: intersect every explaining set (lexicographic subset order)
  {
    int n = net.graph().n();
    const auto& all_nodes = net.graph().nodes();
    std::map<int, int> pos;
    for (size_t i = 0; i < all_nodes.size(); ++i) pos[all_nodes[i]] = static_cast<int>(i);
    uint64_t inter = ~0ull;
    bool any = false;
    for (uint64_t fm = 0; fm < (1ull << n); ++fm) {
      if (__builtin_popcountll(fm) > f) continue;
      bool covers = true;
      for (const auto& [a, b] : ledger.disputes) {
        if (!((fm >> pos.at(a)) & 1) && !((fm >> pos.at(b)) & 1)) {
          covers = false;
          break;
        }
      }
      if (covers) {
        inter &= fm;
        any = true;
      }
    }
    if (!any)
      throw internal_error("phase3: no explaining set exists (more than f nodes required)");
    for (size_t i = 0; i < all_nodes.size(); ++i) {
      if (!((inter >> i) & 1)) continue;
      int v = all_nodes[i];
      if (!ledger.identified_faulty.count(v)) {
        ledger.identified_faulty.insert(v);
        res.new_faulty.push_back(v);
      }
    }
  }

  if (res.new_disputes.empty() && res.new_faulty.empty())
    throw internal_error("phase3 made no progress: no new dispute or identified node");
  DisputeLedger::Event ev;
  ev.k = k;
  ev.new_disputes = res.new_disputes;
  ev.new_faulty = res.new_faulty;
  ledger.history.push_back(ev);
  return res;
}

// Next instance's graph: drop identified nodes, their incident edges, and
// every edge between disputed pairs.
inline Digraph evolve_graph(const Digraph& g_k, const DisputeLedger& ledger) {
  std::vector<int> keep_nodes;
  for (int v : g_k.nodes())
    if (!ledger.identified_faulty.count(v)) keep_nodes.push_back(v);
  Digraph induced = g_k.induced(keep_nodes);
  std::set<std::pair<int, int>> drop;
  for (const auto& e : induced.edges())
    if (ledger.disputed(e.tail, e.head)) drop.insert({e.tail, e.head});
  return induced.without_edges(drop);
}

struct InstanceTrace {
  int k = 0;
  int n_k = 0;
  int gamma_k = 0;
  int rho_k = 0;
  int m = 0;  // field width (exact) or symbol bits (accounting)
  int u_k = 0;
  int depth = 0;
  long long t_phase1 = 0, t_phase2 = 0, t_flags = 0, t_phase3 = 0, t_total = 0;
  std::vector<long long> link_bits;  // per original edge
  int mismatch_flags = 0;            // decided MISMATCH count in the flag round
  bool accept = false;
  bool ran_phase3 = false;
  bool default_output = false;
  bool phase1_only = false;
  int new_disputes = 0, new_faulty = 0;
  bool agreement = false, validity = false;
  uint64_t y_digest = 0;
};

struct InstanceResult {
  std::map<int, BitVec> outputs;  // per fault-free node, L bits
  InstanceTrace trace;
};

// Seed-independent per-graph artifacts (paths, packings, candidate
// subgraph families, flag-round costs); one experiment owns its own by
// default, and sweeps over many seeds share one instance.
struct GraphArtifacts {
  explicit GraphArtifacts(const Digraph& g, int f) : net(g, f) { validate_model(g, f); }
  struct OmegaInfo {
    SubgraphFamily family;
    int u_k = 0;
    int rho_full = 0;
  };
  EmulatedNet net;
  std::map<uint64_t, std::pair<TreePacking, TreeRoutes>> packings;
  std::map<uint64_t, OmegaInfo> omegas;
  std::map<uint64_t, int> rates;  // broadcast_rate per graph signature
  FlagRoundCostCache flag_costs;
};

// Per-experiment protocol driver: owns the evolving graph, the dispute
// ledger, and the caches that make repeated instances cheap (packings and
// verified assignments are reused until the graph changes).
class Simulation {
 public:
  struct Params {
    int f = 1;
    FieldMode mode = FieldMode::exact;
    int min_m = 16;       // exact mode: smallest acceptable symbol width
    uint64_t seed = 0;    // determinism root (adversary + assignments)
  };

  Simulation(const Digraph& g, Params params, std::set<int> fault_set, Strategy strat,
             std::shared_ptr<GraphArtifacts> shared = nullptr)
      : original_(g),
        params_(params),
        fault_set_(std::move(fault_set)),
        strat_(std::move(strat)),
        art_(shared ? std::move(shared) : std::make_shared<GraphArtifacts>(g, params.f)),
        g_k_(g) {
    if (static_cast<int>(fault_set_.size()) > params_.f)
      throw validation_error("fault set larger than f");
    for (int v : fault_set_)
      if (!g.has_node(v)) throw validation_error("fault set contains unknown node");
  }

  const Digraph& original() const { return original_; }
  const Digraph& current_graph() const { return g_k_; }
  const DisputeLedger& ledger() const { return ledger_; }
  const EmulatedNet& net() const { return art_->net; }
  int k() const { return k_; }
  int phase3_count() const { return phase3_count_; }

  InstanceResult run_instance(const BitVec& x, int L) {
    InstanceInput input;
    input.k = k_;
    input.x = x;
    input.L = L;
    return run_instance(input);
  }

  InstanceResult run_instance(const InstanceInput& input) {
    const BitVec& x = input.x;
    const int L = input.L;
    if (static_cast<int>(x.size()) != L) throw validation_error("run_instance: |x| != L");
    if (L < 1) throw validation_error("run_instance: L must be >= 1");
    InstanceResult out;
    InstanceTrace& tr = out.trace;
    tr.k = k_;
    tr.n_k = g_k_.n();
    tr.link_bits.assign(original_.edges().size(), 0);

    int removed = original_.n() - g_k_.n();
    std::set<int> live_fault;
    for (int v : fault_set_)
      if (g_k_.has_node(v)) live_fault.insert(v);

    if (!g_k_.has_node(1)) {
      // all fault-free nodes know the source is faulty: default output
      tr.default_output = true;
      BitVec def(L);
      for (int v : g_k_.nodes())
        if (!fault_set_.count(v)) out.outputs[v] = def;
      finish(out, x, L);
      ++k_;
      return out;
    }

    uint64_t gsig = g_k_.signature();
    auto rit = art_->rates.find(gsig);
    if (rit == art_->rates.end()) rit = art_->rates.emplace(gsig, broadcast_rate(g_k_, 1)).first;
    int gamma = rit->second;
    tr.gamma_k = gamma;

    if (removed >= params_.f) {
      // everyone left is fault-free: phase 1 alone suffices
      tr.phase1_only = true;
      const TreeRoutes& routes = routes_for(g_k_, gamma);
      auto p1 = phase1(original_, g_k_, x, routes, live_fault, strat_, params_.seed, k_);
      tr.t_phase1 = p1.time;
      tr.depth = p1.depth;
      add_bits(tr, p1.bits);
      for (int v : g_k_.nodes())
        if (!fault_set_.count(v)) out.outputs[v] = p1.x_values.at(v).resized(L);
      tr.accept = true;
      finish(out, x, L);
      ++k_;
      return out;
    }

    // full three-phase instance
    const auto& omega_info = omega_for();
    const SubgraphFamily& omega = omega_info.family;
    int u_k = omega_info.u_k, rho_full = omega_info.rho_full;
    tr.u_k = u_k;
    int rho, m, l_pad;
    const CodingAssignment* assignment = nullptr;
    if (params_.mode == FieldMode::exact) {
      rho = std::max(1, std::min(rho_full, L / std::max(1, params_.min_m)));
      m = (L + rho - 1) / rho;
      if (m > 32 && m != 64) {
        if (m < 64)
          m = 64;
        else
          throw validation_error("field width " + std::to_string(m) +
                                 " unsupported; use accounting mode");
      }
      l_pad = rho * m;
      assignment = &assignment_for(omega, rho, m);
    } else {
      rho = rho_full;
      m = (L + rho - 1) / rho;  // symbol size stand-in
      l_pad = L;
    }
    tr.rho_k = rho;
    tr.m = m;

    const TreeRoutes& routes = routes_for(g_k_, gamma);
    BitVec x_padded = x.resized(l_pad);

    auto p1 = phase1(original_, g_k_, x_padded, routes, live_fault, strat_, params_.seed, k_);
    tr.t_phase1 = p1.time;
    tr.depth = p1.depth;
    add_bits(tr, p1.bits);

    auto p2 = phase2_check(original_, g_k_, params_.mode, assignment, rho, m, p1.x_values,
                           live_fault, strat_, params_.seed, k_);
    tr.t_phase2 = p2.time;
    add_bits(tr, p2.bits);

    int t_eig = params_.f - removed;
    auto fl = phase2_flags(art_->net, g_k_.nodes(), t_eig, p2.honest_flags, live_fault, strat_,
                           params_.seed, k_, &art_->flag_costs);
    tr.t_flags = fl.time;
    add_bits(tr, fl.bits);
    for (const auto& [node, flag] : fl.decided_flags) tr.mismatch_flags += flag;

    if (!fl.run_phase3) {
      tr.accept = true;
      for (int v : g_k_.nodes())
        if (!fault_set_.count(v)) out.outputs[v] = p1.x_values.at(v).resized(L);
      finish(out, x, L);
      ++k_;
      return out;
    }

    // merge phase-1 and phase-2 claims
    std::map<int, Claims> honest_claims;
    for (int v : g_k_.nodes()) {
      Claims c = p1.claims.at(v);
      for (const auto& [key, e] : p2.claims.at(v).sent) c.sent[key] = e;
      for (const auto& [key, e] : p2.claims.at(v).received) c.received[key] = e;
      honest_claims[v] = std::move(c);
    }
    tr.ran_phase3 = true;
    ++phase3_count_;
    auto p3 = phase3(original_, g_k_, art_->net, t_eig, x_padded, honest_claims, fl.decided_flags,
                     routes, params_.mode, assignment, rho, l_pad, params_.f, live_fault, strat_,
                     ledger_, params_.seed, k_);
    tr.t_phase3 = p3.time;
    add_bits(tr, p3.bits);
    tr.new_disputes = static_cast<int>(p3.new_disputes.size());
    tr.new_faulty = static_cast<int>(p3.new_faulty.size());
    for (int v : g_k_.nodes())
      if (!fault_set_.count(v)) out.outputs[v] = p3.agreed_input.resized(L);

    g_k_ = evolve_graph(g_k_, ledger_);
    finish(out, x, L);
    ++k_;
    return out;
  }

 private:
  void add_bits(InstanceTrace& tr, const LinkBits& b) {
    for (size_t i = 0; i < b.bits.size(); ++i) tr.link_bits[i] += b.bits[i];
  }

  void finish(InstanceResult& out, const BitVec& x, int L) {
    InstanceTrace& tr = out.trace;
    tr.t_total = tr.t_phase1 + tr.t_phase2 + tr.t_flags + tr.t_phase3;
    // ground-truth verdicts
    tr.agreement = true;
    std::optional<BitVec> first;
    for (const auto& [v, y] : out.outputs) {
      if (!first)
        first = y;
      else if (!(y == *first))
        tr.agreement = false;
    }
    tr.validity = true;
    if (!fault_set_.count(1)) {
      BitVec want = x.resized(L);
      for (const auto& [v, y] : out.outputs)
        if (!(y == want)) tr.validity = false;
    }
    tr.y_digest = first ? first->fnv1a() : 0;
    // capacity discipline: bits on a link never exceed cap * time
    for (size_t i = 0; i < tr.link_bits.size(); ++i) {
      long long cap = original_.edges()[i].cap;
      if (tr.link_bits[i] > cap * std::max(tr.t_total, 1ll))
        throw internal_error("capacity discipline violated on a link");
    }
  }

  const TreeRoutes& routes_for(const Digraph& g, int gamma) {
    uint64_t sig = mix64(g.signature(), uint64_t(gamma));
    auto it = art_->packings.find(sig);
    if (it == art_->packings.end()) {
      TreePacking p = pack_arborescences(g, 1, gamma);
      TreeRoutes r(p, 1);
      it = art_->packings.emplace(sig, std::make_pair(std::move(p), std::move(r))).first;
    }
    return it->second.second;
  }

  const GraphArtifacts::OmegaInfo& omega_for() {
    uint64_t sig = mix64(g_k_.signature(), ledger_.hash());
    auto it = art_->omegas.find(sig);
    if (it == art_->omegas.end()) {
      GraphArtifacts::OmegaInfo info;
      info.family = enumerate_omega(g_k_, params_.f, ledger_, original_.n());
      auto [u, rho] = compute_rho(info.family, g_k_);
      info.u_k = u;
      info.rho_full = rho;
      it = art_->omegas.emplace(sig, std::move(info)).first;
    }
    return it->second;
  }

  const CodingAssignment& assignment_for(const SubgraphFamily& omega, int rho, int m) {
    uint64_t sig = mix64(g_k_.signature(), ledger_.hash(), uint64_t(rho), uint64_t(m));
    auto it = assignments_.find(sig);
    if (it == assignments_.end()) {
      auto field = FieldSpec::make(m);
      uint64_t seed = mix64(params_.seed, sig);
      it = assignments_.emplace(sig, make_verified_assignment(g_k_, omega, rho, field, seed))
               .first;
    }
    return it->second;
  }

  Digraph original_;
  Params params_;
  std::set<int> fault_set_;
  Strategy strat_;
  std::shared_ptr<GraphArtifacts> art_;
  Digraph g_k_;
  DisputeLedger ledger_;
  int k_ = 1;
  int phase3_count_ = 0;
  std::map<uint64_t, CodingAssignment> assignments_;
};

}  // namespace nab
