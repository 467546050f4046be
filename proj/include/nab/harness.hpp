#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nab/analysis.hpp"
#include "nab/errors.hpp"
#include "nab/protocol.hpp"

namespace nab {

// Flat key = value experiment configuration ('#' comments allowed).
// Recognized keys are documented in the README; unknown keys are rejected
// so typos fail loudly.
struct ExperimentConfig {
  std::string graph_path;
  int f = 1;
  int L = 64;
  int Q = 1;
  uint64_t seed = 0;
  std::string adversary = "honest";
  std::map<std::string, std::string> adversary_params;
  std::set<int> fault_set;
  FieldMode field_mode = FieldMode::exact;
  int min_m = 16;
  bool pipelined = false;
  std::optional<GammaMode> gamma_mode;  // nullopt = auto (exact when n <= 6)

  static ExperimentConfig parse(std::istream& in) {
    ExperimentConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        std::istringstream probe(line);
        std::string tok;
        if (probe >> tok)
          throw validation_error("config line " + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t");
        size_t b = s.find_last_not_of(" \t");
        return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
      };
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (key.empty()) throw validation_error("config line " + std::to_string(lineno) + ": empty key");
      if (key == "graph") {
        c.graph_path = val;
      } else if (key == "f") {
        c.f = std::stoi(val);
      } else if (key == "L") {
        c.L = std::stoi(val);
      } else if (key == "Q") {
        c.Q = std::stoi(val);
      } else if (key == "seed") {
        c.seed = std::stoull(val);
      } else if (key == "adversary") {
        c.adversary = val;
      } else if (key.rfind("adversary.", 0) == 0) {
        c.adversary_params[key.substr(10)] = val;
      } else if (key == "fault_set") {
        std::istringstream fs(val);
        std::string tok;
        while (std::getline(fs, tok, ',')) {
          if (!tok.empty()) c.fault_set.insert(std::stoi(tok));
        }
      } else if (key == "field_mode") {
        if (val == "exact")
          c.field_mode = FieldMode::exact;
        else if (val == "accounting")
          c.field_mode = FieldMode::accounting;
        else
          throw validation_error("config: field_mode must be exact or accounting");
      } else if (key == "min_m") {
        c.min_m = std::stoi(val);
      } else if (key == "accounting") {
        if (val == "sequential")
          c.pipelined = false;
        else if (val == "pipelined")
          c.pipelined = true;
        else
          throw validation_error("config: accounting must be sequential or pipelined");
      } else if (key == "gamma_mode") {
        if (val == "exact")
          c.gamma_mode = GammaMode::exact;
        else if (val == "incident")
          c.gamma_mode = GammaMode::incident;
        else if (val == "auto")
          c.gamma_mode = std::nullopt;
        else
          throw validation_error("config: gamma_mode must be exact, incident or auto");
      } else {
        throw validation_error("config: unknown key '" + key + "'");
      }
    }
    if (c.L < 1) throw validation_error("config: L must be >= 1");
    if (c.Q < 1) throw validation_error("config: Q must be >= 1");
    if (c.f < 0) throw validation_error("config: f must be >= 0");
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file: " + path);
    auto c = parse(in);
    if (c.graph_path.empty()) throw validation_error("config: missing graph = <path>");
    return c;
  }
};

inline Digraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open graph file: " + path);
  return Digraph::parse(in);
}

// Per-run record: one row per instance plus totals, and the measured
// throughput under the selected accounting mode.
struct RunTrace {
  std::vector<InstanceTrace> instances;
  long long total_time = 0;          // sequential accounting
  long long pipelined_time = -1;     // set when pipelined accounting is on
  long long flag_cost = 0;           // max observed flag-round time
  long long dc_cost = 0;             // max observed phase-3 time
  long long dc_total = 0;
  int phase3_count = 0;
  double throughput = 0;             // L*Q / t under the selected accounting
  int L = 0, Q = 0;

  std::string csv(const Digraph& g) const {
    std::ostringstream out;
    out << "k,n_k,gamma_k,rho_k,m,u_k,depth,t_phase1,t_phase2,t_flags,t_phase3,t_total,accept,"
           "ran_phase3,phase1_only,default_output,mismatch_flags,new_disputes,new_faulty,"
           "agreement,validity,y_digest,bits_per_link\n";
    auto bits_col = [&g](const std::vector<long long>& bits) {
      std::ostringstream s;
      for (size_t i = 0; i < bits.size(); ++i) {
        if (i) s << ";";
        s << g.edges()[i].tail << ">" << g.edges()[i].head << ":" << bits[i];
      }
      return s.str();
    };
    std::vector<long long> total_bits(g.edges().size(), 0);
    for (const auto& tr : instances) {
      for (size_t i = 0; i < tr.link_bits.size(); ++i) total_bits[i] += tr.link_bits[i];
      out << tr.k << "," << tr.n_k << "," << tr.gamma_k << "," << tr.rho_k << "," << tr.m << ","
          << tr.u_k << "," << tr.depth << "," << tr.t_phase1 << "," << tr.t_phase2 << ","
          << tr.t_flags << "," << tr.t_phase3 << "," << tr.t_total << "," << tr.accept << ","
          << tr.ran_phase3 << "," << tr.phase1_only << "," << tr.default_output << ","
          << tr.mismatch_flags << "," << tr.new_disputes << "," << tr.new_faulty << ","
          << tr.agreement << "," << tr.validity << "," << std::hex << tr.y_digest << std::dec
          << "," << bits_col(tr.link_bits) << "\n";
    }
    long long sum_p1 = 0, sum_p2 = 0, sum_fl = 0, sum_p3 = 0;
    int accepts = 0, p3s = 0;
    for (const auto& tr : instances) {
      sum_p1 += tr.t_phase1;
      sum_p2 += tr.t_phase2;
      sum_fl += tr.t_flags;
      sum_p3 += tr.t_phase3;
      accepts += tr.accept;
      p3s += tr.ran_phase3;
    }
    out << "total,,,,,,," << sum_p1 << "," << sum_p2 << "," << sum_fl << "," << sum_p3 << ","
        << total_time << "," << accepts << "," << p3s << ",,,,,,,," << ","
        << bits_col(total_bits) << "\n";
    return out.str();
  }

  std::string summary() const {
    std::ostringstream out;
    out << "instances        = " << Q << "\n";
    out << "total_time       = " << total_time << " (sequential)\n";
    if (pipelined_time >= 0) out << "pipelined_time   = " << pipelined_time << "\n";
    out << "phase3_count     = " << phase3_count << "\n";
    out << "flag_cost_max    = " << flag_cost << "\n";
    out << "dc_cost_max      = " << dc_cost << "\n";
    out << "throughput       = " << std::setprecision(6) << std::fixed << throughput
        << " bits/time-unit\n";
    return out.str();
  }
};

// Appendix-D pipelined accounting: rounds of (L/gamma* + L/rho + flag cost);
// phase-1 propagation advances one hop per round, so Q instances complete in
// Q + depth - 1 rounds; dispute-control time is added on top unchanged.
// Pure accounting over an already-collected trace, no re-simulation. Runs
// that reduced to Phase 1 throughout (the all-faults-identified and f = 0
// special cases) reserve no equality-check slot in the round.
inline long long pipelined_accounting(const RunTrace& trace, int gamma_star_v, int rho_eff,
                                      long long flag_cost) {
  bool any_phase2 = false;
  int depth = 1;
  for (const auto& tr : trace.instances) {
    depth = std::max(depth, tr.depth);
    any_phase2 = any_phase2 || (!tr.phase1_only && !tr.default_output);
  }
  long long round_len = (trace.L + gamma_star_v - 1) / gamma_star_v;
  if (any_phase2) round_len += (trace.L + rho_eff - 1) / rho_eff + flag_cost;
  long long rounds = trace.Q + depth - 1;
  return rounds * round_len + trace.dc_total;
}

struct ExperimentResult {
  RunTrace trace;
  AnalysisReport analysis;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Digraph& g,
                                       std::shared_ptr<GraphArtifacts> shared = nullptr) {
  ExperimentResult result;
  result.analysis = analyze(g, cfg.f, cfg.gamma_mode);

  Simulation::Params params;
  params.f = cfg.f;
  params.mode = cfg.field_mode;
  params.min_m = cfg.min_m;
  params.seed = cfg.seed;
  Strategy strat = make_strategy(cfg.adversary, cfg.adversary_params, cfg.seed);
  Simulation sim(g, params, cfg.fault_set, strat, std::move(shared));

  RunTrace& trace = result.trace;
  trace.L = cfg.L;
  trace.Q = cfg.Q;
  int rho_eff = result.analysis.rho_star;
  for (int q = 0; q < cfg.Q; ++q) {
    auto xrng = make_rng(mix64(cfg.seed, 0x696e707574ull, uint64_t(q)));
    BitVec x = BitVec::random(cfg.L, xrng);
    auto res = sim.run_instance(x, cfg.L);
    const InstanceTrace& tr = res.trace;
    if (!tr.agreement || !tr.validity)
      throw internal_error("protocol violation at instance " + std::to_string(tr.k) +
                           " (replay with seed " + std::to_string(cfg.seed) + ")");
    trace.total_time += tr.t_total;
    trace.flag_cost = std::max(trace.flag_cost, tr.t_flags);
    trace.dc_cost = std::max(trace.dc_cost, tr.t_phase3);
    trace.dc_total += tr.t_phase3;
    if (tr.ran_phase3) ++trace.phase3_count;
    if (tr.rho_k > 0) rho_eff = std::min(rho_eff, tr.rho_k);
    trace.instances.push_back(tr);
  }

  // amortized time-bound sanity check (the paper's accounting identity,
  // ceiling-quantized): Q * (L/gamma* + L/rho + c_flag) + f(f+1) * c_dc
  {
    long long l_pad_max = 0;
    for (const auto& tr : trace.instances)
      l_pad_max = std::max(l_pad_max, static_cast<long long>(tr.rho_k) * tr.m);
    l_pad_max = std::max<long long>(l_pad_max, cfg.L);
    long long per_instance = (l_pad_max + result.analysis.gamma_star - 1) / result.analysis.gamma_star +
                             (cfg.L + rho_eff - 1) / rho_eff + trace.flag_cost;
    long long bound = static_cast<long long>(cfg.Q) * per_instance +
                      static_cast<long long>(cfg.f) * (cfg.f + 1) * trace.dc_cost;
    if (trace.total_time > bound)
      throw internal_error("time accounting exceeded the amortized bound (" +
                           std::to_string(trace.total_time) + " > " + std::to_string(bound) + ")");
  }
  if (trace.phase3_count > cfg.f * (cfg.f + 1))
    throw internal_error("phase 3 ran more than f(f+1) times");

  if (cfg.pipelined) {
    trace.pipelined_time =
        pipelined_accounting(trace, result.analysis.gamma_star, rho_eff, trace.flag_cost);
    trace.throughput = double(cfg.L) * cfg.Q / double(trace.pipelined_time);
  } else {
    trace.throughput = double(cfg.L) * cfg.Q / double(std::max(trace.total_time, 1ll));
  }
  return result;
}

}  // namespace nab
