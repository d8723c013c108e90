#pragma once

// Maximum flow through the capacitated Physarum iteration, plus an exact
// shortest-augmenting-path oracle used to verify it.
//
// A long, wide virtual route from source to sink is added to the instance
// and the whole augmented graph is driven with an inflow equal to the
// virtual route's capacity. Once the iteration settles, every base route is
// saturated in order of length and the virtual route carries the remainder,
// so the max flow is the inflow minus the virtual flow.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "physarum/cppa.hpp"
#include "physarum/graph.hpp"

namespace physarum {

struct AugmentedGraph {
  Graph graph;
  std::size_t base_arc_count = 0;
  std::size_t base_node_count = 0;
  std::vector<ArcId> virtual_arcs;
  std::optional<NodeId> virtual_node;
  double virtual_length = 0.0;
  double virtual_capacity = 0.0;
  NodeId source = 0;
  NodeId sink = 0;

  /// The virtual arc that ends at the sink; its flow is the virtual flow.
  ArcId virtual_outlet() const { return virtual_arcs.back(); }
};

inline void require_terminals(const Graph& g, NodeId source, NodeId sink) {
  const auto n = static_cast<NodeId>(g.node_count());
  if (source < 0 || source >= n || sink < 0 || sink >= n)
    throw Error(ErrorCode::out_of_range_node, "source/sink outside the graph");
  if (source == sink) throw Error(ErrorCode::invalid_config, "source equals sink");
}

/// Virtual route of length 100 * sum(L) and capacity 100 * sum(C). When the
/// base graph already joins source and sink directly, the route passes
/// through an extra node so the two are not parallel.
inline AugmentedGraph embed_virtual_path(const Graph& graph, NodeId source, NodeId sink) {
  require_terminals(graph, source, sink);
  double sum_length = 0.0;
  double sum_capacity = 0.0;
  bool direct = false;
  for (const Arc& a : graph.arcs()) {
    sum_length += a.length;
    sum_capacity += a.capacity;
    direct = direct || (a.tail == source && a.head == sink) || (a.tail == sink && a.head == source);
  }

  AugmentedGraph aug;
  aug.base_arc_count = graph.arc_count();
  aug.base_node_count = graph.node_count();
  aug.virtual_length = 100.0 * sum_length;
  aug.virtual_capacity = 100.0 * sum_capacity;
  aug.source = source;
  aug.sink = sink;

  std::vector<ArcSpec> specs = arc_specs(graph);
  std::size_t nodes = graph.node_count();
  if (direct) {
    const auto v = static_cast<NodeId>(nodes++);
    aug.virtual_node = v;
    specs.push_back({source, v, aug.virtual_length / 2.0, aug.virtual_capacity, 0.0});
    specs.push_back({v, sink, aug.virtual_length / 2.0, aug.virtual_capacity, 0.0});
  } else {
    specs.push_back({source, sink, aug.virtual_length, aug.virtual_capacity, 0.0});
  }
  for (std::size_t i = graph.arc_count(); i < specs.size(); ++i) aug.virtual_arcs.push_back(static_cast<ArcId>(i));
  aug.graph = build_graph(nodes, specs, graph.mode(), /*allow_parallel=*/true);
  return aug;
}

/// Same topology, capacities and costs with every length set to 1.
inline Graph with_unit_lengths(const Graph& graph) {
  auto specs = arc_specs(graph);
  for (auto& s : specs) s.length = 1.0;
  return build_graph(graph.node_count(), specs, graph.mode(), /*allow_parallel=*/true);
}

struct MaxFlowResult {
  double max_flow = 0.0;
  std::optional<double> rounded;  // set when every capacity is an integer
  std::vector<double> flows;      // base arcs only
  double inflow = 0.0;
  double virtual_flow = 0.0;
  long iterations = 0;
  RunStatus status = RunStatus::max_iterations_exceeded;
  ConvergenceTrace trace;

  bool converged() const noexcept { return status == RunStatus::converged; }
  double value() const noexcept { return rounded.value_or(max_flow); }
};

inline MaxFlowResult cppa_maxflow(const Graph& graph, NodeId source, NodeId sink, const CppaConfig& config) {
  const Graph unit = with_unit_lengths(graph);
  const AugmentedGraph aug = embed_virtual_path(unit, source, sink);
  const double inflow = aug.virtual_capacity;
  const auto injections = source_sink_injections(aug.graph.node_count(), source, sink, inflow);

  CppaConfig cfg = config;
  cfg.ground = source;
  const RunResult run_result = run(aug.graph, aug.graph.lengths(), injections, cfg);

  MaxFlowResult out;
  out.inflow = inflow;
  out.virtual_flow = run_result.state.flow[static_cast<std::size_t>(aug.virtual_outlet())];
  out.max_flow = inflow - out.virtual_flow;
  if (graph.integral_capacities()) out.rounded = std::round(out.max_flow);
  out.flows.assign(run_result.state.flow.begin(), run_result.state.flow.begin() + static_cast<std::ptrdiff_t>(aug.base_arc_count));
  out.iterations = run_result.iterations;
  out.status = run_result.status;
  out.trace = run_result.trace;
  return out;
}

struct OracleFlow {
  double value = 0.0;
  std::vector<double> flows;  // signed for undirected arcs
  std::vector<bool> source_side;  // reachable from source in the final residual graph
};

namespace detail {

struct ResidualArc {
  NodeId to;
  double cap;
  double cost;
  ArcId origin;  // base arc id
  int sign;      // +1 forward copy, -1 reverse copy of an undirected arc
};

// Residual network with paired arcs: arc 2i and 2i+1 are mutual reverses.
struct ResidualNetwork {
  std::vector<ResidualArc> arcs;
  std::vector<std::vector<std::size_t>> out;

  explicit ResidualNetwork(std::size_t n) : out(n) {}

  void add(NodeId from, NodeId to, double cap, double cost, ArcId origin, int sign) {
    out[static_cast<std::size_t>(from)].push_back(arcs.size());
    arcs.push_back({to, cap, cost, origin, sign});
    out[static_cast<std::size_t>(to)].push_back(arcs.size());
    arcs.push_back({from, 0.0, -cost, origin, -sign});
  }

  static ResidualNetwork from_graph(const Graph& g) {
    ResidualNetwork net(g.node_count());
    for (const Arc& a : g.arcs()) {
      net.add(a.tail, a.head, a.capacity, a.unit_cost, a.id, +1);
      if (!g.directed()) net.add(a.head, a.tail, a.capacity, a.unit_cost, a.id, -1);
    }
    return net;
  }

  // Net flow per base arc, tail -> head positive.
  std::vector<double> base_flows(std::size_t arc_count) const {
    std::vector<double> f(arc_count, 0.0);
    for (std::size_t e = 0; e < arcs.size(); e += 2) {
      const double pushed = arcs[e + 1].cap;  // reverse residual equals flow sent
      f[static_cast<std::size_t>(arcs[e].origin)] += arcs[e].sign * pushed;
    }
    return f;
  }
};

}  // namespace detail

/// Edmonds-Karp: BFS augmenting paths, ties broken by arc id order.
inline OracleFlow oracle_maxflow(const Graph& graph, NodeId source, NodeId sink) {
  require_terminals(graph, source, sink);
  auto net = detail::ResidualNetwork::from_graph(graph);
  const std::size_t n = graph.node_count();
  const double eps = 1e-12;

  OracleFlow out;
  std::vector<std::ptrdiff_t> via(n);
  for (;;) {
    std::fill(via.begin(), via.end(), -1);
    std::deque<NodeId> queue{source};
    via[static_cast<std::size_t>(source)] = -2;
    while (!queue.empty() && via[static_cast<std::size_t>(sink)] == -1) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (std::size_t e : net.out[static_cast<std::size_t>(u)]) {
        const auto& arc = net.arcs[e];
        if (arc.cap > eps && via[static_cast<std::size_t>(arc.to)] == -1) {
          via[static_cast<std::size_t>(arc.to)] = static_cast<std::ptrdiff_t>(e);
          queue.push_back(arc.to);
        }
      }
    }
    if (via[static_cast<std::size_t>(sink)] == -1) break;

    double push = std::numeric_limits<double>::infinity();
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
    out.value += push;
  }

  out.flows = net.base_flows(graph.arc_count());
  out.source_side.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) out.source_side[i] = via[i] != -1;
  return out;
}

/// Capacity of the cut separating `source_side` from the rest; arcs count in
/// the forward direction only for directed graphs.
inline double cut_capacity(const Graph& graph, const std::vector<bool>& source_side) {
  double total = 0.0;
  for (const Arc& a : graph.arcs()) {
    const bool t = source_side[static_cast<std::size_t>(a.tail)];
    const bool h = source_side[static_cast<std::size_t>(a.head)];
    if (t && !h) total += a.capacity;
    else if (!graph.directed() && h && !t) total += a.capacity;
  }
  return total;
}

}  // namespace physarum
