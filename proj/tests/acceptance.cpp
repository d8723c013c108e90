// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "physarum/physarum.hpp"
#include "support/oracles.hpp"

using namespace physarum;
using json = nlohmann::ordered_json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  json payload;  // machine-readable results, no wall times
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FlowInstance random_instance(std::size_t n, std::uint64_t seed, Orientation mode = Orientation::directed) {
  GenSpec spec;
  spec.node_count = n;
  spec.seed = seed;
  spec.mode = mode;
  return random_directed_connected(spec).instance;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Rounded max flow against the oracle on 50 random directed graphs.
Outcome oracle_maxflow_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  CppaConfig cfg;
  cfg.epsilon = 5e-5;
  cfg.k = 0.85;
  Outcome out;
  out.payload = json::array();
  int exact = 0, close = 0;
  const int count = 50;
  for (int i = 0; i < count; ++i) {
    const std::size_t n = 20 + static_cast<std::size_t>(i * 7) % 41;
    const auto inst = random_instance(n, 1000 + static_cast<std::uint64_t>(i));
    const auto r = cppa_maxflow(inst.graph, inst.source, inst.sink, cfg);
    const double o = oracle_maxflow(inst.graph, inst.source, inst.sink).value;
    const double gap = std::abs(r.value() - o);
    exact += gap == 0.0 ? 1 : 0;
    close += gap < 0.5 ? 1 : 0;
    out.payload.push_back({{"n", n}, {"max_flow", r.value()}, {"oracle", o}, {"iterations", r.iterations},
                           {"status", std::string(to_string(r.status))}});
  }
  const double secs = seconds_since(t0);
  out.pass = exact >= 0.95 * count && close == count && secs < 60.0;
  out.detail = fmt("%.0f/%.0f exact, %.0f within 0.5, %.1f s", exact, count, close, secs);
  return out;
}

// Rounded max flow exact and min cost within 1 of the oracle at eps = 1e-6.
Outcome oracle_mcmf_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  CppaConfig cfg;
  cfg.epsilon = 1e-6;
  Outcome out;
  out.payload = json::array();
  int mf_ok = 0, ok = 0;
  double worst = 0.0;
  const int count = 30;
  for (int i = 0; i < count; ++i) {
    const std::size_t n = 10 + static_cast<std::size_t>(i * 7) % 41;
    const auto inst = random_instance(n, 2000 + static_cast<std::uint64_t>(i));
    const auto r = cppa_mcmf(inst.graph, inst.source, inst.sink, cfg);
    const auto o = oracle_mcmf(inst.graph, inst.source, inst.sink);
    const bool mf = r.max_flow == o.max_flow;
    const double err = std::abs(r.min_cost - o.min_cost);
    mf_ok += mf ? 1 : 0;
    ok += mf && err <= 1.0 ? 1 : 0;
    worst = std::max(worst, err);
    out.payload.push_back({{"n", n}, {"max_flow", r.max_flow}, {"min_cost", r.min_cost}, {"oracle_max_flow", o.max_flow},
                           {"oracle_min_cost", o.min_cost}});
  }
  const double secs = seconds_since(t0);
  out.pass = ok == count && secs < 120.0;
  out.detail = fmt("%.0f/%.0f pass (max flow exact on %.0f), worst cost error %.3g", ok, count, mf_ok, worst) +
               fmt(", %.1f s", secs);
  return out;
}

// Min-cost error shrinks as epsilon tightens.
Outcome epsilon_sensitivity() {
  const auto inst = random_instance(50, 3000);
  const auto o = oracle_mcmf(inst.graph, inst.source, inst.sink);
  const std::vector<double> eps{5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-6};
  std::vector<double> err;
  Outcome out;
  out.payload = json::array();
  for (double e : eps) {
    CppaConfig cfg;
    cfg.epsilon = e;
    const auto r = cppa_mcmf(inst.graph, inst.source, inst.sink, cfg);
    err.push_back(std::abs(r.min_cost - o.min_cost));
    out.payload.push_back({{"epsilon", e}, {"max_flow", r.max_flow}, {"min_cost", r.min_cost}, {"error", err.back()}});
  }
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < err.size(); ++i) monotone = monotone && err[i + 1] <= 1.05 * err[i] + 1e-9;
  out.pass = monotone && err.front() > err.back();
  std::string list;
  for (double e : err) list += (list.empty() ? "" : " ") + fmt("%.4g", e);
  out.detail = "errors [" + list + "]";
  return out;
}

// k = 1 stalls, k = 0.85 is exact, a small k converges to a wrong value.
Outcome k_sensitivity() {
  Outcome out;
  out.payload = json::array();
  bool k1_stalls = true, k085_exact = true, small_wrong = false, spread_ok = true;
  double worst_spread = 0.0;
  for (std::uint64_t seed = 4000; seed < 4003; ++seed) {
    const auto inst = random_instance(40, seed);
    const double o = oracle_maxflow(inst.graph, inst.source, inst.sink).value;
    std::vector<long> converged_iterations;
    json rows = json::array();
    for (double k : {1.0, 0.85, 0.3, 0.2, 0.1}) {
      CppaConfig cfg;
      cfg.k = k;
      cfg.max_iterations = 20000;
      const auto r = cppa_maxflow(inst.graph, inst.source, inst.sink, cfg);
      const bool exact = r.value() == o;
      if (k == 1.0) k1_stalls = k1_stalls && !r.converged();
      if (k == 0.85) k085_exact = k085_exact && r.converged() && exact;
      if (k <= 0.3 && r.converged() && !exact) small_wrong = true;
      if (k < 1.0 && r.converged()) converged_iterations.push_back(r.iterations);
      rows.push_back({{"k", k}, {"max_flow", r.value()}, {"iterations", r.iterations},
                      {"status", std::string(to_string(r.status))}});
    }
    if (!converged_iterations.empty()) {
      const auto [lo, hi] = std::minmax_element(converged_iterations.begin(), converged_iterations.end());
      const double spread = static_cast<double>(*hi) / static_cast<double>(std::max(1L, *lo));
      worst_spread = std::max(worst_spread, spread);
      spread_ok = spread_ok && spread < 10.0;
    }
    out.payload.push_back({{"seed", seed}, {"oracle", o}, {"runs", rows}});
  }
  out.pass = k1_stalls && k085_exact && small_wrong && spread_ok;
  out.detail = std::string("k=1 stalls: ") + (k1_stalls ? "yes" : "no") + ", k=0.85 exact: " +
               (k085_exact ? "yes" : "no") + ", small k wrong: " + (small_wrong ? "yes" : "no") +
               fmt(", iteration spread %.2fx", worst_spread);
  return out;
}

// Hearn network: the capped run respects capacities, the plain run does not.
Outcome hearn_capacity_control() {
  const auto h = hearn_network();
  CtapConfig cfg;
  cfg.k = 0.85;
  cfg.rgap_target = 1e-4;
  const auto capped = cppa_ctap(h.network, h.demands, cfg);
  cfg.capacitated = false;
  const auto plain = cppa_ctap(h.network, h.demands, cfg);
  const double capped_excess = capped.violations.max_relative_excess();
  const double plain_excess = plain.violations.max_relative_excess();
  Outcome out;
  out.payload = {{"capped", {{"flows", capped.link_flows}, {"rgap", capped.rgap}, {"iterations", capped.iterations},
                             {"status", std::string(to_string(capped.status))}}},
                 {"uncapacitated", {{"flows", plain.link_flows}, {"rgap", plain.rgap}, {"iterations", plain.iterations},
                                    {"status", std::string(to_string(plain.status))}}}};
  out.pass = capped.rgap <= 1e-4 && capped_excess <= 0.05 && plain_excess >= 0.10;
  out.detail = fmt("capped excess %.4f rgap %.3g, uncapacitated excess %.4f", capped_excess, capped.rgap, plain_excess) +
               " (capped status " + std::string(to_string(capped.status)) + ")";
  return out;
}

// Three parallel routes: the shortest one fills first and stays pinned.
Outcome three_path_demonstration() {
  const auto fx = three_path_fixture();
  const Graph& g = fx.instance.graph;
  CppaConfig cfg;
  cfg.max_iterations = 20000;
  auto solve = [&](double inflow) {
    return run(g, g.lengths(), source_sink_injections(g.node_count(), fx.instance.source, fx.instance.sink, inflow), cfg);
  };
  const auto r10 = solve(10);
  const auto r20 = solve(20);
  const auto r80 = solve(80);
  const double a = route_flow(fx, r10.state.flow, 0);
  const double b = std::max(std::abs(route_flow(fx, r10.state.flow, 1)), std::abs(route_flow(fx, r10.state.flow, 2)));
  const double c = route_flow(fx, r20.state.flow, 0);
  Outcome out;
  out.payload = {{"inflow_10", r10.state.flow}, {"inflow_20", r20.state.flow},
                 {"inflow_80_status", std::string(to_string(r80.status))}};
  out.pass = std::abs(a - 10) <= 1e-2 && b <= 1e-2 && std::abs(c - 10) <= 1e-1 && r80.status == RunStatus::non_converging;
  out.detail = fmt("inflow 10: route 1 %.6f, others <= %.2e; inflow 20: route 1 %.6f", a, b, c) +
               "; inflow 80: " + std::string(to_string(r80.status));
  return out;
}

// Solve residuals, dense agreement, and conservation along traced iterates of
// undirected runs (directed runs clamp reverse flow and do not conserve it).
Outcome numerical_core() {
  Rng rng(7000);
  double worst_residual = 0.0;  // residual / max(1, |b|)
  double worst_dense = 0.0;     // relative difference to the dense oracle
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = trial < 30 ? 2 + static_cast<std::size_t>(rng.uniform_int(0, 48)) : 500;
    const Graph g = testing_support::random_connected_graph(rng, n, n > 50 ? 0.01 : 0.2, Orientation::undirected);
    std::vector<double> d(g.arc_count());
    for (double& x : d) x = std::pow(10.0, -4.0 + 8.0 * rng.uniform01());
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      b[i] = rng.uniform01() - 0.5;
      b[0] -= b[i];
    }
    const auto ground = static_cast<NodeId>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    const auto sys = assemble(g, d, b, ground);
    const auto p = solve(sys);
    worst_residual = std::max(worst_residual, norm2(poisson_residual(sys, p.pressure)) / std::max(1.0, norm2(b)));
    if (n <= 50) {
      const auto ref = testing_support::dense_pressures(g, sys.weights, b, ground);
      double scale = 0.0, diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        scale = std::max(scale, std::abs(ref[i]));
        diff = std::max(diff, std::abs(ref[i] - p.pressure[i]));
      }
      worst_dense = std::max(worst_dense, diff / std::max(scale, 1e-300));
    }
  }

  double worst_conservation = 0.0;  // max residual / injection over traced iterates
  double worst_trace_residual = 0.0;
  std::size_t rows = 0;
  auto check_trace = [&](const ConvergenceTrace& t, double injection, double bnorm) {
    for (const TraceRow& row : t.rows) {
      worst_conservation = std::max(worst_conservation, row.conservation_residual / injection);
      worst_trace_residual = std::max(worst_trace_residual, row.poisson_residual / std::max(1.0, bnorm));
      ++rows;
    }
  };
  for (std::uint64_t seed = 7100; seed < 7105; ++seed) {
    const Graph g = testing_support::random_connected_graph(rng, 30, 0.15, Orientation::undirected);
    const double inflow = 3.0;
    CppaConfig cfg;
    cfg.max_iterations = 3000;
    const auto r = run(g, g.lengths(), source_sink_injections(30, 0, 29, inflow), cfg);
    check_trace(r.trace, inflow, inflow * std::sqrt(2.0));
    const auto inst = random_instance(25, seed, Orientation::undirected);
    const auto mf = cppa_maxflow(inst.graph, inst.source, inst.sink, cfg);
    check_trace(mf.trace, mf.inflow, mf.inflow * std::sqrt(2.0));
  }

  Outcome out;
  out.payload = {{"residual", worst_residual}, {"dense", worst_dense}, {"conservation", worst_conservation},
                 {"trace_residual", worst_trace_residual}, {"rows", rows}};
  out.pass = worst_residual <= 1e-10 && worst_dense <= 1e-8 && worst_conservation <= 1e-6 && worst_trace_residual <= 1e-10;
  out.detail = fmt("solve residual %.2e, dense diff %.2e, conservation %.2e, trace residual %.2e", worst_residual,
                   worst_dense, worst_conservation, worst_trace_residual) +
               " over " + std::to_string(rows) + " traced iterates";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle max-flow equivalence", oracle_maxflow_equivalence},
      {"oracle min-cost flow equivalence", oracle_mcmf_equivalence},
      {"epsilon sensitivity", epsilon_sensitivity},
      {"k sensitivity", k_sensitivity},
      {"capacity control on the Hearn network", hearn_capacity_control},
      {"three-path demonstration", three_path_demonstration},
      {"numerical core", numerical_core},
  };

  bool all = true;
  std::vector<std::string> first;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    first.push_back(o.payload.dump());
    all = all && o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }

  std::size_t same = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string again;
    try {
      again = criteria[i].second().payload.dump();
    } catch (const std::exception& e) {
      again = e.what();
    }
    same += again == first[i] ? 1 : 0;
    if (again != first[i]) std::printf("  criterion %zu differs on repeat\n", i + 1);
  }
  const bool deterministic = same == criteria.size();
  all = all && deterministic;
  std::printf("%s 8 determinism: %zu/%zu criteria reproduced byte-identical results\n", deterministic ? "PASS" : "FAIL",
              same, criteria.size());
  return all ? 0 : 1;
}
