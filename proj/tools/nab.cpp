// Command-line front end: static analysis, protocol simulation, coding
// verification, tree packings, and a self-test battery.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>

#include "nab/harness.hpp"
#include "nab/oracle.hpp"

using namespace nab;

namespace {

int cmd_analyze(const std::string& graph_path, int f, const std::string& mode, bool csv) {
  Digraph g = load_graph(graph_path);
  std::optional<GammaMode> gm;
  if (mode == "exact") gm = GammaMode::exact;
  else if (mode == "incident") gm = GammaMode::incident;
  else if (mode != "auto") throw validation_error("--gamma-mode must be exact, incident or auto");
  auto rep = analyze(g, f, gm);
  if (csv) {
    std::cout << AnalysisReport::csv_header() << "\n" << rep.csv_row() << "\n";
  } else {
    std::cout << rep.render();
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path) {
  auto cfg = ExperimentConfig::load(config_path);
  Digraph g = load_graph(cfg.graph_path);
  auto res = run_experiment(cfg, g);
  std::string csv = res.trace.csv(g);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw validation_error("cannot write trace file: " + out_path);
    out << csv;
    std::cout << "trace written to " << out_path << "\n";
  } else {
    std::cout << csv;
  }
  std::cout << "\n" << res.analysis.render() << "\n" << res.trace.summary();
  return 0;
}

int cmd_verify_coding(const std::string& graph_path, int f, int rho, int m, int trials,
                      uint64_t seed) {
  Digraph g = load_graph(graph_path);
  validate_model(g, f);
  auto omega = enumerate_omega(g, f);
  auto field = FieldSpec::make(m);
  int correct = 0;
  for (int t = 0; t < trials; ++t) {
    auto a = generate(g, rho, field, mix64(seed, uint64_t(t)));
    auto res = verify_correct(a, omega);
    if (res.correct) {
      ++correct;
    } else {
      // counterexamples must be genuine left-null witnesses
      auto sys = expand_system(a, res.witness_h);
      for (int c = 0; c < sys.c_h.cols(); ++c) {
        uint64_t dot = 0;
        for (int r = 0; r < sys.c_h.rows(); ++r)
          dot ^= field.mul(res.witness_d[r], sys.c_h.at(r, c));
        if (dot != 0) throw internal_error("verify-coding: bogus counterexample witness");
      }
    }
  }
  double rate = double(correct) / trials;
  double bound = theorem1_bound(g.n(), f, rho, m);
  double sigma = std::sqrt(std::max(bound * (1 - bound), 1e-12) / trials);
  bool pass = rate >= bound - 3 * sigma;
  std::cout << "trials          = " << trials << "\n";
  std::cout << "correct         = " << correct << "\n";
  std::cout << "empirical_rate  = " << rate << "\n";
  std::cout << "theorem1_bound  = " << bound << "\n";
  std::cout << "pass (>= bound - 3 sigma) = " << (pass ? "yes" : "no") << "\n";
  return pass ? 0 : 2;
}

int cmd_pack(const std::string& graph_path, int root, int k, bool undirected) {
  Digraph g = load_graph(graph_path);
  if (undirected) {
    auto u = undirected_companion(g);
    auto p = pack_undirected_trees(u, k);
    bool ok = oracle::check_undirected_tree_packing(u, p, k);
    for (size_t t = 0; t < p.trees.size(); ++t) {
      std::cout << "tree " << t + 1 << ":";
      for (const auto& e : p.trees[t]) std::cout << " " << e.tail << "-" << e.head;
      std::cout << "\n";
    }
    std::cout << "checker = " << (ok ? "ok" : "INVALID") << "\n";
    return ok ? 0 : 2;
  }
  auto p = pack_arborescences(g, root, k);
  bool ok = oracle::check_arborescence_packing(g, root, p, k);
  for (size_t t = 0; t < p.trees.size(); ++t) {
    std::cout << "tree " << t + 1 << ":";
    for (const auto& e : p.trees[t]) std::cout << " " << e.tail << ">" << e.head;
    std::cout << "\n";
  }
  std::cout << "usage:";
  for (const auto& [uv, n] : p.usage) std::cout << " " << uv.first << ">" << uv.second << ":" << n;
  std::cout << "\nchecker = " << (ok ? "ok" : "INVALID") << "\n";
  return ok ? 0 : 2;
}

int cmd_selftest(uint64_t seed) {
  int failures = 0;
  auto report = [&failures](const std::string& name, bool ok) {
    std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };
  std::vector<Edge> k4_edges;
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 4; ++j)
      if (i != j) k4_edges.push_back({i, j, 1});
  Digraph k4(4, k4_edges);

  {  // field axioms and inverse on sampled elements
    bool ok = true;
    for (int m : {4, 8, 16, 32, 64}) {
      auto fl = FieldSpec::make(m);
      auto rng = make_rng(mix64(seed, m));
      for (int i = 0; i < 100 && ok; ++i) {
        uint64_t a = fl.random_element(rng), b = fl.random_element(rng), c = fl.random_element(rng);
        ok = ok && fl.add(a, a) == 0;
        ok = ok && fl.mul(a, fl.add(b, c)) == fl.add(fl.mul(a, b), fl.mul(a, c));
        if (a) ok = ok && fl.mul(a, fl.inv(a)) == 1;
      }
    }
    report("field axioms (sampled)", ok);
  }
  {  // max-flow equals brute-force min-cut
    bool ok = true;
    auto rng = make_rng(mix64(seed, 1));
    for (int it = 0; it < 40 && ok; ++it) {
      int n = 2 + static_cast<int>(rng() % 5);
      std::vector<Edge> es;
      for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b)
          if (a != b && rng() % 100 < 60) es.push_back({a, b, 1 + static_cast<int>(rng() % 4)});
      Digraph g(n, es);
      ok = ok && mincut(g, 1, n) == oracle::enumerate_min_cut(g, 1, n);
    }
    report("max-flow vs cut enumeration", ok);
  }
  {  // packings pass their independent checkers
    bool ok = true;
    auto rng = make_rng(mix64(seed, 2));
    for (int it = 0; it < 15 && ok; ++it) {
      int n = 3 + static_cast<int>(rng() % 4);
      std::vector<Edge> es;
      for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b)
          if (a != b && rng() % 100 < 70) es.push_back({a, b, 1 + static_cast<int>(rng() % 3)});
      Digraph g(n, es);
      int gamma = broadcast_rate(g, 1);
      if (gamma > 0)
        ok = ok && oracle::check_arborescence_packing(g, 1, pack_arborescences(g, 1, gamma), gamma);
      auto u = undirected_companion(g);
      int half = pairwise_min_cut(u) / 2;
      if (half > 0)
        ok = ok && oracle::check_undirected_tree_packing(u, pack_undirected_trees(u, half), half);
    }
    report("tree packings vs independent checker", ok);
  }
  {  // Theorem 1 Monte Carlo on K4
    auto omega = enumerate_omega(k4, 1);
    auto field = FieldSpec::make(16);
    int okc = 0, trials = 200;
    for (int t = 0; t < trials; ++t)
      if (verify_correct(generate(k4, 2, field, mix64(seed, 3, t)), omega).correct) ++okc;
    double bound = theorem1_bound(4, 1, 2, 16);
    double sigma = std::sqrt(bound * (1 - bound) / trials);
    report("Theorem 1 Monte Carlo (K4)", double(okc) / trials >= bound - 3 * sigma);
  }
  {  // protocol safety micro-sweep
    bool ok = true;
    for (const auto& name : strategy_catalog()) {
      std::map<std::string, std::string> params;
      if (name == "silent-cut" || name == "combined") params["cut"] = "2-3";
      Simulation::Params p;
      p.f = 1;
      p.seed = mix64(seed, 4);
      Simulation sim(k4, p, {2}, make_strategy(name, params));
      auto rng = make_rng(mix64(seed, 5));
      for (int q = 0; q < 5 && ok; ++q) {
        auto res = sim.run_instance(BitVec::random(48, rng), 48);
        ok = ok && res.trace.agreement && res.trace.validity;
      }
      ok = ok && sim.phase3_count() <= 2;
      if (!ok) break;
    }
    report("protocol safety micro-sweep (K4, all strategies)", ok);
  }
  {  // bound certification arithmetic
    bool ok = true;
    for (int g = 1; g <= 10 && ok; ++g)
      for (int r = 1; r <= 10 && ok; ++r) ok = theorem3_certify(g, r).pass;
    report("Theorem 3 certification grid", ok);
  }
  std::cout << (failures ? "selftest FAILED\n" : "selftest passed\n");
  return failures ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"network-aware byzantine broadcast simulator and analyzer"};
  app.require_subcommand(1);

  std::string graph_path, mode = "auto", config_path, out_path;
  int f = 1, rho = 2, m = 16, trials = 1000, root = 1, k = 1;
  uint64_t seed = 0;
  bool csv = false, undirected = false;

  auto* analyze_cmd = app.add_subcommand("analyze", "compute rates and capacity bounds");
  analyze_cmd->add_option("graph", graph_path, "graph file")->required();
  analyze_cmd->add_option("--f", f, "fault budget")->required();
  analyze_cmd->add_option("--gamma-mode", mode, "exact | incident | auto");
  analyze_cmd->add_flag("--csv", csv, "emit one CSV row instead of the text block");

  auto* run_cmd = app.add_subcommand("run", "run a configured experiment");
  run_cmd->add_option("config", config_path, "experiment config file")->required();
  run_cmd->add_option("--out", out_path, "write the CSV trace here");

  auto* verify_cmd = app.add_subcommand("verify-coding", "Theorem 1 Monte Carlo");
  verify_cmd->add_option("graph", graph_path, "graph file")->required();
  verify_cmd->add_option("--f", f, "fault budget")->required();
  verify_cmd->add_option("--rho", rho, "symbols per value")->required();
  verify_cmd->add_option("--m", m, "field width")->required();
  verify_cmd->add_option("--trials", trials, "random assignments to test");
  verify_cmd->add_option("--seed", seed, "rng seed");

  auto* pack_cmd = app.add_subcommand("pack", "compute a certified tree packing");
  pack_cmd->add_option("graph", graph_path, "graph file")->required();
  pack_cmd->add_option("--root", root, "arborescence root");
  pack_cmd->add_option("--k", k, "number of trees")->required();
  pack_cmd->add_flag("--undirected", undirected, "pack spanning trees of the companion");

  auto* self_cmd = app.add_subcommand("selftest", "run the property battery");
  self_cmd->add_option("--seed", seed, "rng seed");

  try {
    app.parse(argc, argv);
    if (analyze_cmd->parsed()) return cmd_analyze(graph_path, f, mode, csv);
    if (run_cmd->parsed()) return cmd_run(config_path, out_path);
    if (verify_cmd->parsed()) return cmd_verify_coding(graph_path, f, rho, m, trials, seed);
    if (pack_cmd->parsed()) return cmd_pack(graph_path, root, k, undirected);
    if (self_cmd->parsed()) return cmd_selftest(seed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const internal_error& e) {
    std::cerr << "invariant breach: " << e.what() << "\n";
    return 2;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const infeasible_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
