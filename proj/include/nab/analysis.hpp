#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nab/coding.hpp"
#include "nab/dispute.hpp"
#include "nab/errors.hpp"
#include "nab/graph.hpp"
#include "nab/rational.hpp"

namespace nab {

// Candidate fault-free subgraphs of G_k: all (n-f)-node subsets of V_k with
// no internal dispute pair. n is the original network size, so members keep
// size n-f even after nodes are identified and removed.
inline SubgraphFamily enumerate_omega(const Digraph& g_k, int f, const DisputeLedger& ledger,
                                      int original_n) {
  int keep = original_n - f;
  const auto& nodes = g_k.nodes();
  SubgraphFamily fam;
  if (static_cast<int>(nodes.size()) < keep)
    throw internal_error("enumerate_omega: fewer than n-f nodes remain");
  std::vector<int> comb;
  std::function<void(size_t)> rec = [&](size_t from) {
    if (static_cast<int>(comb.size()) == keep) {
      fam.members.push_back(comb);
      return;
    }
    if (nodes.size() - from + comb.size() < static_cast<size_t>(keep)) return;
    for (size_t i = from; i < nodes.size(); ++i) {
      bool clean = true;
      for (int prev : comb)
        if (ledger.disputed(prev, nodes[i])) {
          clean = false;
          break;
        }
      if (!clean) continue;
      comb.push_back(nodes[i]);
      rec(i + 1);
      comb.pop_back();
    }
  };
  rec(0);
  if (fam.members.empty())
    throw internal_error("enumerate_omega: empty family (impossible with <= f faults)");
  return fam;
}

inline SubgraphFamily enumerate_omega(const Digraph& g, int f) {
  return enumerate_omega(g, f, DisputeLedger{}, g.n());
}

// rho* = floor(U_1 / 2), the worst-case equality-check rate over all
// reachable G_k (U_k >= U_1 because Omega_k is a subfamily of Omega_1 and
// edges inside a dispute-free member never get removed).
inline int rho_star(const Digraph& g, int f) {
  auto omega1 = enumerate_omega(g, f);
  return compute_rho(omega1, g).second;
}

inline int u1_value(const Digraph& g, int f) {
  auto omega1 = enumerate_omega(g, f);
  return compute_rho(omega1, g).first;
}

enum class GammaMode { exact, incident };

// The family of residual graphs Psi_W over explainable removed-edge sets W.
// `exact` enumerates every explainable W (all subsets of every candidate
// fault set's incident edges); `incident` restricts W to the full incident
// edge set of each candidate fault set.
inline std::vector<Digraph> enumerate_gamma_family(const Digraph& g, int f, GammaMode mode) {
  int n = g.n();
  int edge_count = static_cast<int>(g.edges().size());
  if (mode == GammaMode::exact && n > 6)
    throw validation_error("gamma family: exact mode is gated to n <= 6");
  if (mode == GammaMode::incident && n > 8)
    throw validation_error("gamma family: incident mode is gated to n <= 8");
  if (edge_count > 62) throw validation_error("gamma family: too many edges for mask enumeration");

  const auto& nodes = g.nodes();
  std::map<int, int> node_pos;
  for (size_t i = 0; i < nodes.size(); ++i) node_pos[nodes[i]] = static_cast<int>(i);

  // candidate fault sets F (|F| <= f) as node masks, with their incident
  // edge masks
  std::vector<std::pair<uint64_t, uint64_t>> cands;  // (node mask, incident edge mask)
  for (uint64_t fm = 0; fm < (1ull << n); ++fm) {
    if (__builtin_popcountll(fm) > f) continue;
    uint64_t em = 0;
    for (int e = 0; e < edge_count; ++e) {
      const Edge& ed = g.edges()[e];
      if ((fm >> node_pos[ed.tail]) & 1 || (fm >> node_pos[ed.head]) & 1) em |= (1ull << e);
    }
    cands.push_back({fm, em});
  }

  // enumerate explainable W; residual graphs are deduped on
  // (removed-node mask, kept-edge mask) since different W can induce the
  // same Psi_W
  std::unordered_set<uint64_t> seen_w;
  std::set<std::pair<uint64_t, uint64_t>> psi_seen;
  std::vector<Digraph> family;
  auto process_w = [&](uint64_t w) {
    if (!seen_w.insert(w).second) return;
    // intersect all explaining sets
    uint64_t inter = ~0ull;
    bool any = false;
    for (const auto& [fm, em] : cands) {
      if ((w & ~em) != 0) continue;  // F does not cover W
      inter &= fm;
      any = true;
    }
    if (!any) return;  // unexplainable (cannot happen for w drawn from a candidate)
    if ((inter >> node_pos[1]) & 1) return;  // source removed: Psi_W not in Gamma
    std::vector<int> keep_nodes;
    for (size_t i = 0; i < nodes.size(); ++i)
      if (!((inter >> i) & 1)) keep_nodes.push_back(nodes[i]);
    std::vector<Edge> keep_edges;
    uint64_t kept_mask = 0;
    std::set<int> keep_set(keep_nodes.begin(), keep_nodes.end());
    for (int e = 0; e < edge_count; ++e) {
      if ((w >> e) & 1) continue;
      const Edge& ed = g.edges()[e];
      if (keep_set.count(ed.tail) && keep_set.count(ed.head)) {
        keep_edges.push_back(ed);
        kept_mask |= (1ull << e);
      }
    }
    if (!psi_seen.insert({inter, kept_mask}).second) return;
    family.push_back(Digraph(keep_nodes, keep_edges));
  };

  if (mode == GammaMode::incident) {
    for (const auto& [fm, em] : cands) {
      (void)fm;
      process_w(em);
    }
  } else {
    for (const auto& [fm, em] : cands) {
      (void)fm;
      // all submasks of em, including 0 and em itself
      uint64_t sub = em;
      while (true) {
        process_w(sub);
        if (sub == 0) break;
        sub = (sub - 1) & em;
      }
    }
  }
  return family;
}

inline int gamma_star(const Digraph& g, int f, GammaMode mode) {
  auto family = enumerate_gamma_family(g, f, mode);
  int best = -1;
  for (const auto& psi : family) {
    int rate = broadcast_rate(psi, 1);
    if (best < 0 || rate < best) best = rate;
  }
  if (best < 0) throw internal_error("gamma_star: empty Gamma family");
  return best;
}

inline Rational t_nab(int gamma_star_v, int rho_star_v) {
  if (gamma_star_v < 1 || rho_star_v < 1)
    throw validation_error("t_nab: gamma* and rho* must be >= 1");
  return Rational(static_cast<long long>(gamma_star_v) * rho_star_v, gamma_star_v + rho_star_v);
}

inline int capacity_upper(int gamma_star_v, int rho_star_v) {
  if (gamma_star_v < 1 || rho_star_v < 1)
    throw validation_error("capacity_upper: gamma* and rho* must be >= 1");
  return std::min(gamma_star_v, 2 * rho_star_v);
}

struct Theorem3Result {
  std::string case_label;
  bool pass = false;
};

// T_NAB >= C_upper / 3 always, and >= C_upper / 2 when gamma* <= rho*.
inline Theorem3Result theorem3_certify(int gamma_star_v, int rho_star_v) {
  Rational t = t_nab(gamma_star_v, rho_star_v);
  Rational cap(capacity_upper(gamma_star_v, rho_star_v));
  Theorem3Result res;
  if (gamma_star_v <= rho_star_v)
    res.case_label = "gamma*<=rho*";
  else if (gamma_star_v <= 2 * rho_star_v)
    res.case_label = "gamma*<=2rho*";
  else
    res.case_label = "gamma*>2rho*";
  res.pass = (t >= cap / Rational(3));
  if (gamma_star_v <= rho_star_v) res.pass = res.pass && (t >= cap / Rational(2));
  return res;
}

struct AnalysisReport {
  int n = 0;
  int f = 0;
  int u1 = 0;
  int rho_star = 0;
  int gamma_star = 0;
  std::string gamma_mode;
  size_t gamma_family_size = 0;
  std::optional<int> gamma_star_exact;     // populated when both modes run
  std::optional<int> gamma_star_incident;
  Rational t_nab;
  int capacity_upper = 0;
  Rational ratio;  // t_nab / capacity_upper
  std::string theorem3_case;
  bool theorem3_pass = false;

  std::string render() const {
    std::ostringstream out;
    out << "n                 = " << n << "\n";
    out << "f                 = " << f << "\n";
    out << "U_1               = " << u1 << "\n";
    out << "rho_star          = " << rho_star << "\n";
    out << "gamma_star        = " << gamma_star << " (" << gamma_mode << " mode)\n";
    if (gamma_star_exact && gamma_star_incident && *gamma_star_exact != *gamma_star_incident)
      out << "gamma_star_modes  = exact " << *gamma_star_exact << " vs incident "
          << *gamma_star_incident << " (DISCREPANCY)\n";
    out << "gamma_family_size = " << gamma_family_size << "\n";
    out << "t_nab             = " << t_nab.str() << "\n";
    out << "capacity_upper    = " << capacity_upper << "\n";
    out << "ratio             = " << ratio.str() << "\n";
    out << "theorem3_case     = " << theorem3_case << "\n";
    out << "theorem3_pass     = " << (theorem3_pass ? "yes" : "no") << "\n";
    return out.str();
  }

  static std::string csv_header() {
    return "n,f,u1,rho_star,gamma_star,gamma_mode,gamma_family_size,t_nab,capacity_upper,ratio,"
           "theorem3_case,theorem3_pass";
  }
  std::string csv_row() const {
    std::ostringstream out;
    out << n << "," << f << "," << u1 << "," << rho_star << "," << gamma_star << "," << gamma_mode
        << "," << gamma_family_size << "," << t_nab.str() << "," << capacity_upper << ","
        << ratio.str() << "," << theorem3_case << "," << (theorem3_pass ? 1 : 0);
    return out.str();
  }
};

// gamma mode selection: exact where gated in, incident otherwise; when
// `both_when_possible` and n <= 6, both run and discrepancies are flagged
// in the report rather than assumed away.
inline AnalysisReport analyze(const Digraph& g, int f,
                              std::optional<GammaMode> forced_mode = std::nullopt,
                              bool both_when_possible = true) {
  validate_model(g, f);
  AnalysisReport rep;
  rep.n = g.n();
  rep.f = f;
  auto omega1 = enumerate_omega(g, f);
  auto [u, rho] = compute_rho(omega1, g);
  rep.u1 = u;
  rep.rho_star = rho;

  GammaMode mode = forced_mode ? *forced_mode
                               : (g.n() <= 6 ? GammaMode::exact : GammaMode::incident);
  auto family = enumerate_gamma_family(g, f, mode);
  rep.gamma_family_size = family.size();
  int gs = -1;
  for (const auto& psi : family) {
    int rate = broadcast_rate(psi, 1);
    if (gs < 0 || rate < gs) gs = rate;
  }
  rep.gamma_star = gs;
  rep.gamma_mode = (mode == GammaMode::exact) ? "exact" : "incident";
  if (both_when_possible && g.n() <= 6) {
    rep.gamma_star_exact = (mode == GammaMode::exact) ? gs : gamma_star(g, f, GammaMode::exact);
    rep.gamma_star_incident =
        (mode == GammaMode::incident) ? gs : gamma_star(g, f, GammaMode::incident);
  }

  rep.t_nab = t_nab(rep.gamma_star, rep.rho_star);
  rep.capacity_upper = capacity_upper(rep.gamma_star, rep.rho_star);
  rep.ratio = rep.t_nab / Rational(rep.capacity_upper);
  auto t3 = theorem3_certify(rep.gamma_star, rep.rho_star);
  rep.theorem3_case = t3.case_label;
  rep.theorem3_pass = t3.pass;
  if (!t3.pass) throw internal_error("theorem3 certification failed (formula bug)");
  return rep;
}

}  // namespace nab
