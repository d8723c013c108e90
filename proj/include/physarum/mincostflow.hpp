#pragma once

// Minimum-cost maximum flow: a capacitated Physarum max-flow run fixes the
// flow value, then a second run on the original graph routes that value
// with arc lengths equal to unit costs. An exact successive-shortest-path
// solver serves as the reference.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "physarum/cppa.hpp"
#include "physarum/graph.hpp"
#include "physarum/maxflow.hpp"

namespace physarum {

/// Lengths must stay positive for the flow law, so zero costs are raised to
/// this floor.
inline constexpr double kCostFloor = 1e-6;

inline std::vector<double> cost_lengths(const Graph& graph) {
  std::vector<double> out(graph.arc_count());
  for (const Arc& a : graph.arcs()) out[static_cast<std::size_t>(a.id)] = std::max(a.unit_cost, kCostFloor);
  return out;
}

/// Flow-dependent unit cost c(Q) with derivative c'(Q).
struct UnitCostFunction {
  std::function<double(double)> cost;
  std::function<double(double)> derivative;
};

/// Marginal cost c(Q) + Q c'(Q), the length that makes the flow law route
/// toward minimum total cost when unit costs depend on flow.
inline double marginal_cost_length(const UnitCostFunction& f, double flow) {
  const double q = std::abs(flow);
  return std::max(f.cost(q) + q * f.derivative(q), kCostFloor);
}

/// LengthUpdate that recomputes every arc's marginal-cost length from the
/// flows of the step just taken.
inline LengthUpdate marginal_cost_update(std::vector<UnitCostFunction> per_arc) {
  return [fs = std::move(per_arc)](const SolverState& s, std::vector<double>& lengths) {
    for (std::size_t i = 0; i < lengths.size() && i < fs.size(); ++i)
      if (fs[i].cost) lengths[i] = marginal_cost_length(fs[i], s.flow[i]);
  };
}

inline double total_cost(const Graph& graph, std::span<const double> flows) {
  require_arc_vector(graph, flows, "flows");
  double cost = 0.0;
  for (const Arc& a : graph.arcs()) cost += std::abs(flows[static_cast<std::size_t>(a.id)]) * a.unit_cost;
  return cost;
}

enum class Phase2Injection {
  automatic,  // rounded when every capacity is an integer, raw otherwise
  raw,
  rounded,
};

struct McmfOptions {
  Phase2Injection injection = Phase2Injection::automatic;
  /// Optional flow-dependent unit costs; empty means constant costs.
  std::vector<UnitCostFunction> cost_functions;
};

struct McmfResult {
  double max_flow = 0.0;       // value injected in the second phase
  double min_cost = 0.0;
  std::vector<double> flows;
  long phase1_iterations = 0;
  long phase2_iterations = 0;
  RunStatus phase1_status = RunStatus::max_iterations_exceeded;
  RunStatus phase2_status = RunStatus::max_iterations_exceeded;
  MaxFlowResult phase1;
  ConvergenceTrace phase2_trace;

  bool converged() const noexcept {
    return phase1_status == RunStatus::converged && phase2_status == RunStatus::converged;
  }
};

inline McmfResult cppa_mcmf(const Graph& graph, NodeId source, NodeId sink, const CppaConfig& config,
                            const McmfOptions& options = {}) {
  McmfResult out;
  out.phase1 = cppa_maxflow(graph, source, sink, config);
  out.phase1_iterations = out.phase1.iterations;
  out.phase1_status = out.phase1.status;

  const bool round = options.injection == Phase2Injection::rounded ||
                     (options.injection == Phase2Injection::automatic && graph.integral_capacities());
  out.max_flow = round ? std::round(out.phase1.max_flow) : out.phase1.max_flow;
  out.max_flow = std::max(out.max_flow, 0.0);

  if (out.max_flow <= 0.0) {
    out.flows.assign(graph.arc_count(), 0.0);
    out.phase2_status = RunStatus::converged;
    return out;
  }

  CppaConfig cfg = config;
  cfg.ground = source;
  const auto injections = source_sink_injections(graph.node_count(), source, sink, out.max_flow);
  const auto lengths = cost_lengths(graph);
  LengthUpdate update;
  if (!options.cost_functions.empty()) update = marginal_cost_update(options.cost_functions);
  const RunResult phase2 = run(graph, lengths, injections, cfg, std::nullopt, update);

  out.flows = phase2.state.flow;
  out.min_cost = total_cost(graph, out.flows);
  out.phase2_iterations = phase2.iterations;
  out.phase2_status = phase2.status;
  out.phase2_trace = phase2.trace;
  return out;
}

struct OracleMcmf {
  double max_flow = 0.0;
  double min_cost = 0.0;
  std::vector<double> flows;
};

/// Successive shortest paths. Each augmenting path is a cheapest path in the
/// residual network found by Bellman-Ford label correcting (residual reverse
/// arcs have negative cost); ties keep the first label found in arc order.
inline OracleMcmf oracle_mcmf(const Graph& graph, NodeId source, NodeId sink) {
  require_terminals(graph, source, sink);
  auto net = detail::ResidualNetwork::from_graph(graph);
  const std::size_t n = graph.node_count();
  const double inf = std::numeric_limits<double>::infinity();
  const double eps = 1e-12;

  OracleMcmf out;
  std::vector<double> dist(n);
  std::vector<std::ptrdiff_t> via(n);
  for (;;) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(via.begin(), via.end(), -1);
    dist[static_cast<std::size_t>(source)] = 0.0;
    for (std::size_t round = 0; round + 1 < n; ++round) {
      bool relaxed = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (dist[u] == inf) continue;
        for (std::size_t e : net.out[u]) {
          const auto& arc = net.arcs[e];
          const auto v = static_cast<std::size_t>(arc.to);
          if (arc.cap > eps && dist[u] + arc.cost < dist[v] - 1e-12) {
            dist[v] = dist[u] + arc.cost;
            via[v] = static_cast<std::ptrdiff_t>(e);
            relaxed = true;
          }
        }
      }
      if (!relaxed) break;
    }
    if (dist[static_cast<std::size_t>(sink)] == inf) break;

    double push = inf;
    for (NodeId v = sink; v != source;) {
      const auto e = static_cast<std::size_t>(via[static_cast<std::size_t>(v)]);
      push = std::min(push, net.arcs[e].cap);
      v = net.arcs[e ^ 1].to;
    }
    for (NodeId v = sink; v != source;) {
      const auto e = static_cast<std::size_t>(via[static_cast<std::size_t>(v)]);
      net.arcs[e].cap -= push;
      net.arcs[e ^ 1].cap += push;
      v = net.arcs[e ^ 1].to;
    }
    out.max_flow += push;
    out.min_cost += push * dist[static_cast<std::size_t>(sink)];
  }
  out.flows = net.base_flows(graph.arc_count());
  return out;
}

}  // namespace physarum
