#pragma once

// Link-capacitated traffic assignment with one Physarum subnetwork per
// origin. Each origin keeps its own conductivities and routes its demand
// over the shared link travel times; capacity is apportioned between origins
// by their share of the aggregate link flow, and travel times relax toward
// the BPR volume-delay value of the aggregate flow.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "physarum/cppa.hpp"
#include "physarum/error.hpp"
#include "physarum/graph.hpp"
#include "physarum/laplacian.hpp"

namespace physarum {

struct BprParams {
  double alpha = 0.15;
  double beta = 4.0;
};

struct TrafficLink {
  NodeId tail = 0;
  NodeId head = 0;
  double capacity = 1.0;
  double free_flow_time = 1.0;
  BprParams bpr;
};

/// Directed network; arc length holds the free-flow time.
struct TrafficNetwork {
  Graph graph;
  std::vector<BprParams> bpr;

  double free_flow_time(ArcId a) const { return graph.arc(a).length; }
  double capacity(ArcId a) const { return graph.arc(a).capacity; }
  std::size_t link_count() const noexcept { return graph.arc_count(); }

  std::vector<TrafficLink> links() const {
    std::vector<TrafficLink> out;
    for (const Arc& a : graph.arcs())
      out.push_back({a.tail, a.head, a.capacity, a.length, bpr[static_cast<std::size_t>(a.id)]});
    return out;
  }
};

inline TrafficNetwork make_traffic_network(std::size_t node_count, std::span<const TrafficLink> links) {
  std::vector<ArcSpec> specs;
  TrafficNetwork net;
  for (const TrafficLink& l : links) {
    specs.push_back({l.tail, l.head, l.free_flow_time, l.capacity, 0.0});
    net.bpr.push_back(l.bpr);
  }
  net.graph = build_graph(node_count, specs, Orientation::directed);
  return net;
}

struct OdDemand {
  NodeId origin = 0;
  NodeId destination = 0;
  double demand = 0.0;
};

inline void validate_demands(const TrafficNetwork& net, std::span<const OdDemand> demands) {
  const auto n = static_cast<NodeId>(net.graph.node_count());
  for (const OdDemand& d : demands) {
    if (d.origin < 0 || d.origin >= n || d.destination < 0 || d.destination >= n)
      throw Error(ErrorCode::out_of_range_node, "OD pair outside the network");
    if (d.origin == d.destination)
      throw Error(ErrorCode::non_positive_demand, "origin equals destination " + std::to_string(d.origin));
    if (!(d.demand > 0.0)) throw Error(ErrorCode::non_positive_demand, "demand must be positive");
  }
}

/// All demand leaving one origin.
struct OriginDemand {
  NodeId origin = 0;
  std::vector<std::pair<NodeId, double>> destinations;
  double total = 0.0;
};

inline std::vector<OriginDemand> group_by_origin(std::span<const OdDemand> demands) {
  std::map<NodeId, OriginDemand> by_origin;
  for (const OdDemand& d : demands) {
    auto& g = by_origin[d.origin];
    g.origin = d.origin;
    g.destinations.emplace_back(d.destination, d.demand);
    g.total += d.demand;
  }
  std::vector<OriginDemand> out;
  for (auto& [_, g] : by_origin) out.push_back(std::move(g));
  return out;
}

/// BPR volume-delay function.
inline double travel_time(double t0, double flow, double capacity, double alpha, double beta) {
  return t0 * (1.0 + alpha * std::pow(std::max(flow, 0.0) / capacity, beta));
}

inline std::vector<double> origin_injections(std::size_t node_count, const OriginDemand& od) {
  std::vector<double> b(node_count, 0.0);
  b.at(static_cast<std::size_t>(od.origin)) += od.total;
  for (const auto& [dest, amount] : od.destinations) b.at(static_cast<std::size_t>(dest)) -= amount;
  return b;
}

/// Pressures for one origin subnetwork, grounded at the origin. Anti-parallel
/// links add into the same Laplacian entry.
inline PressureVector origin_pressures(const TrafficNetwork& net, std::span<const double> conductivity,
                                       std::span<const double> times, const OriginDemand& od) {
  const auto b = origin_injections(net.graph.node_count(), od);
  const PoissonSystem sys = assemble(net.graph, conductivity, times, b, od.origin);
  try {
    return solve(sys);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::disconnected_injection) throw;
    throw Error(ErrorCode::disconnected_od_pair, "origin " + std::to_string(od.origin) + ": " + e.what());
  }
}

inline std::vector<double> origin_flows(const TrafficNetwork& net, std::span<const double> conductivity,
                                        std::span<const double> times, std::span<const double> pressure) {
  return edge_flows(net.graph, conductivity, times, pressure);
}

/// Capacitated adaptation for one origin's stream. The stream's share of the
/// aggregate flow sets both the threshold and the capacity it is held to.
inline double ctap_adapt(double q_r, double d_r, double drop, double length, double capacity, double k,
                         double q_all) noexcept {
  const double share = q_all < 1e-12 ? 1.0 : std::min(1.0, q_r / q_all);
  const double flux = std::abs(q_r);
  if (flux <= k * share * capacity) return (flux + d_r) / 2.0;
  const double magnitude = std::abs(drop);
  if (magnitude < 1e-15) return d_r;
  const double capped = share * capacity * length / magnitude;
  return std::isfinite(capped) ? capped : d_r;
}

/// Averaged relaxation of each link time toward the BPR time of the
/// aggregate flow.
inline std::vector<double> update_travel_times(const TrafficNetwork& net, std::span<const double> times,
                                               std::span<const double> aggregate) {
  std::vector<double> out(times.size());
  for (const Arc& a : net.graph.arcs()) {
    const auto i = static_cast<std::size_t>(a.id);
    const auto& p = net.bpr[i];
    out[i] = 0.5 * (times[i] + travel_time(a.length, aggregate[i], a.capacity, p.alpha, p.beta));
  }
  return out;
}

/// Shortest travel time from `origin` to every node (Dijkstra; nonnegative
/// times). Unreachable nodes get +inf.
inline std::vector<double> shortest_times(const Graph& graph, std::span<const double> times, NodeId origin) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(graph.node_count(), inf);
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[static_cast<std::size_t>(origin)] = 0.0;
  heap.emplace(0.0, origin);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (ArcId id : graph.incident(u)) {
      const Arc& a = graph.arc(id);
      if (a.tail != u) continue;
      const double nd = d + times[static_cast<std::size_t>(id)];
      if (nd < dist[static_cast<std::size_t>(a.head)]) {
        dist[static_cast<std::size_t>(a.head)] = nd;
        heap.emplace(nd, a.head);
      }
    }
  }
  return dist;
}

/// Relative gap 1 - (sum_rs demand * shortest time) / (sum_a flow * time).
inline double rgap(const TrafficNetwork& net, std::span<const double> flows, std::span<const double> times,
                   std::span<const OdDemand> demands) {
  require_arc_vector(net.graph, flows, "flows");
  require_arc_vector(net.graph, times, "times");
  double denominator = 0.0;
  for (std::size_t i = 0; i < flows.size(); ++i) denominator += flows[i] * times[i];
  if (!(denominator > 0.0)) throw Error(ErrorCode::zero_denominator, "total flow-weighted time is zero");

  double numerator = 0.0;
  for (const OriginDemand& od : group_by_origin(demands)) {
    const auto dist = shortest_times(net.graph, times, od.origin);
    for (const auto& [dest, amount] : od.destinations) {
      const double d = dist[static_cast<std::size_t>(dest)];
      if (!std::isfinite(d))
        throw Error(ErrorCode::disconnected_od_pair,
                    std::to_string(od.origin) + " -> " + std::to_string(dest) + " has no path");
      numerator += amount * d;
    }
  }
  return 1.0 - numerator / denominator;
}

struct CtapConfig {
  double k = 0.85;
  double rgap_target = 1e-4;
  long max_iterations = 20000;
  double initial_conductivity = 0.5;
  /// false: every origin uses the uncapped rule D' = (|Q| + D) / 2.
  bool capacitated = true;
  /// 0 picks every iteration up to 100 links, every 10th beyond.
  long rgap_every = 0;

  void validate() const {
    if (!(k > 0.0 && k <= 1.0)) throw Error(ErrorCode::invalid_config, "k must lie in (0, 1]");
    if (!(rgap_target > 0.0)) throw Error(ErrorCode::invalid_config, "rgap target must be positive");
    if (max_iterations < 1) throw Error(ErrorCode::invalid_config, "max_iterations must be >= 1");
    if (rgap_every < 0) throw Error(ErrorCode::invalid_config, "rgap cadence must be >= 0");
  }

  long rgap_cadence(std::size_t links) const noexcept { return rgap_every > 0 ? rgap_every : (links <= 100 ? 1 : 10); }
};

struct CtapState {
  std::vector<OriginDemand> origins;
  std::vector<std::vector<double>> conductivity;  // per origin, per link
  std::vector<std::vector<double>> flow;          // per origin, per link
  std::vector<double> aggregate;
  std::vector<double> travel_time;
  long iteration = 0;
  double rgap = 1.0;
};

inline CtapState initial_ctap_state(const TrafficNetwork& net, std::span<const OdDemand> demands,
                                    const CtapConfig& config) {
  CtapState s;
  s.origins = group_by_origin(demands);
  const std::size_t m = net.link_count();
  s.conductivity.assign(s.origins.size(), std::vector<double>(m, config.initial_conductivity));
  s.flow.assign(s.origins.size(), std::vector<double>(m, 0.0));
  s.aggregate.assign(m, 0.0);
  s.travel_time = net.graph.lengths();
  return s;
}

/// One sweep: per-origin pressures and flows, aggregation, per-origin
/// adaptation, travel-time relaxation.
inline void ctap_iterate(const TrafficNetwork& net, CtapState& s, const CtapConfig& config) {
  const std::size_t m = net.link_count();
  std::vector<std::vector<double>> pressures(s.origins.size());
  for (std::size_t r = 0; r < s.origins.size(); ++r) {
    PressureVector p = origin_pressures(net, s.conductivity[r], s.travel_time, s.origins[r]);
    s.flow[r] = origin_flows(net, s.conductivity[r], s.travel_time, p.pressure);
    pressures[r] = std::move(p.pressure);
  }

  std::fill(s.aggregate.begin(), s.aggregate.end(), 0.0);
  for (const auto& q : s.flow)
    for (std::size_t i = 0; i < m; ++i) s.aggregate[i] += q[i];

  for (std::size_t r = 0; r < s.origins.size(); ++r) {
    for (const Arc& a : net.graph.arcs()) {
      const auto i = static_cast<std::size_t>(a.id);
      const double q = s.flow[r][i];
      const double d = s.conductivity[r][i];
      if (!config.capacitated) {
        s.conductivity[r][i] = (std::abs(q) + d) / 2.0;
        continue;
      }
      const double drop = pressures[r][static_cast<std::size_t>(a.tail)] - pressures[r][static_cast<std::size_t>(a.head)];
      s.conductivity[r][i] = ctap_adapt(q, d, drop, s.travel_time[i], a.capacity, config.k, s.aggregate[i]);
    }
  }

  s.travel_time = update_travel_times(net, s.travel_time, s.aggregate);
  ++s.iteration;
}

/// Worst per-origin conservation residual relative to that origin's demand.
inline double max_origin_residual(const TrafficNetwork& net, const CtapState& s) {
  double worst = 0.0;
  for (std::size_t r = 0; r < s.origins.size(); ++r) {
    const auto b = origin_injections(net.graph.node_count(), s.origins[r]);
    for (double res : conservation_residuals(net.graph, s.flow[r], b))
      worst = std::max(worst, std::abs(res) / s.origins[r].total);
  }
  return worst;
}

/// Relative residual every origin must meet before an RGAP counts.
inline constexpr double kOriginResidualTolerance = 1e-6;

struct CtapResult {
  std::vector<double> link_flows;
  std::vector<double> link_times;
  std::vector<std::pair<long, double>> rgap_trace;
  ViolationReport violations;  // capacity check at zero tolerance
  std::vector<std::vector<double>> origin_flows;
  double max_origin_residual = 0.0;  // worst per-origin conservation residual / origin demand
  double rgap = 1.0;
  long iterations = 0;
  long rgap_cadence = 1;
  RunStatus status = RunStatus::max_iterations_exceeded;

  bool converged() const noexcept { return status == RunStatus::converged; }
};

inline CtapResult cppa_ctap(const TrafficNetwork& net, std::span<const OdDemand> demands, const CtapConfig& config) {
  config.validate();
  validate_demands(net, demands);
  if (demands.empty()) throw Error(ErrorCode::non_positive_demand, "no demands");

  CtapState s = initial_ctap_state(net, demands, config);
  CtapResult out;
  out.rgap_cadence = config.rgap_cadence(net.link_count());

  while (s.iteration < config.max_iterations) {
    // A stream forced through links it may not fill has its conductivity
    // shrink geometrically until the link reads as absent. The previous
    // state is kept and the run flagged.
    CtapState before = s;
    try {
      ctap_iterate(net, s, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::disconnected_od_pair || s.iteration == 0) throw;
      s = std::move(before);
      out.status = RunStatus::non_converging;
      break;
    }
    const bool last = s.iteration == config.max_iterations;
    if (s.iteration % out.rgap_cadence == 0 || last) {
      s.rgap = rgap(net, s.aggregate, s.travel_time, demands);
      out.rgap_trace.emplace_back(s.iteration, s.rgap);
      if (s.rgap <= config.rgap_target && max_origin_residual(net, s) <= kOriginResidualTolerance) {
        out.status = RunStatus::converged;
        break;
      }
    }
  }

  out.link_flows = s.aggregate;
  out.link_times = s.travel_time;
  out.rgap = s.rgap;
  out.iterations = s.iteration;
  out.violations = validate_capacity(net.graph, s.aggregate, 0.0);
  out.origin_flows = s.flow;
  out.max_origin_residual = max_origin_residual(net, s);
  return out;
}

}  // namespace physarum
