#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "physarum/error.hpp"

namespace physarum {

using NodeId = std::int32_t;
using ArcId = std::int32_t;

/// Undirected arcs carry signed flow (positive means tail -> head); directed
/// arcs are clamped to nonnegative flow by the solvers, never by storage.
enum class Orientation { undirected, directed };

constexpr std::string_view to_string(Orientation o) noexcept {
  return o == Orientation::directed ? "directed" : "undirected";
}

struct ArcSpec {
  NodeId tail = 0;
  NodeId head = 0;
  double length = 1.0;
  double capacity = 1.0;
  double unit_cost = 0.0;
};

struct Arc {
  ArcId id = 0;
  NodeId tail = 0;
  NodeId head = 0;
  double length = 1.0;
  double capacity = 1.0;
  double unit_cost = 0.0;
};

/// Immutable problem instance. Build through build_graph() so every
/// invariant (endpoints in range, positive length/capacity, no self-loops)
/// holds for the lifetime of the object.
class Graph {
 public:
  Graph() = default;

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t arc_count() const noexcept { return arcs_.size(); }
  Orientation mode() const noexcept { return mode_; }
  bool directed() const noexcept { return mode_ == Orientation::directed; }

  const std::vector<Arc>& arcs() const noexcept { return arcs_; }
  const Arc& arc(ArcId id) const { return arcs_.at(static_cast<std::size_t>(id)); }

  /// Arcs touching `node` in insertion order.
  std::span<const ArcId> incident(NodeId node) const {
    const auto n = static_cast<std::size_t>(node);
    return {incident_.data() + offsets_.at(n), offsets_.at(n + 1) - offsets_.at(n)};
  }

  std::vector<double> lengths() const {
    std::vector<double> out(arcs_.size());
    std::transform(arcs_.begin(), arcs_.end(), out.begin(), [](const Arc& a) { return a.length; });
    return out;
  }

  std::vector<double> capacities() const {
    std::vector<double> out(arcs_.size());
    std::transform(arcs_.begin(), arcs_.end(), out.begin(), [](const Arc& a) { return a.capacity; });
    return out;
  }

  bool integral_capacities() const {
    return std::all_of(arcs_.begin(), arcs_.end(),
                       [](const Arc& a) { return std::isfinite(a.capacity) && a.capacity == std::round(a.capacity); });
  }

  friend Graph build_graph(std::size_t, std::span<const ArcSpec>, Orientation, bool);

 private:
  std::size_t node_count_ = 0;
  Orientation mode_ = Orientation::undirected;
  std::vector<Arc> arcs_;
  std::vector<std::size_t> offsets_{0};
  std::vector<ArcId> incident_;
};

inline Graph build_graph(std::size_t node_count, std::span<const ArcSpec> specs, Orientation mode,
                         bool allow_parallel = false) {
  Graph g;
  g.node_count_ = node_count;
  g.mode_ = mode;
  g.arcs_.reserve(specs.size());

  std::set<std::pair<NodeId, NodeId>> seen;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ArcSpec& s = specs[i];
    const std::string where = "arc " + std::to_string(i);
    if (s.tail < 0 || s.head < 0 || static_cast<std::size_t>(s.tail) >= node_count ||
        static_cast<std::size_t>(s.head) >= node_count)
      throw Error(ErrorCode::out_of_range_node, where + " endpoint outside [0, " + std::to_string(node_count) + ")");
    if (s.tail == s.head) throw Error(ErrorCode::self_loop, where + " joins node " + std::to_string(s.tail) + " to itself");
    if (!(s.length > 0.0)) throw Error(ErrorCode::non_positive_length, where);
    if (!(s.capacity > 0.0)) throw Error(ErrorCode::non_positive_capacity, where);
    if (!(s.unit_cost >= 0.0)) throw Error(ErrorCode::negative_cost, where);

    if (!allow_parallel) {
      auto key = std::make_pair(s.tail, s.head);
      if (mode == Orientation::undirected && key.first > key.second) std::swap(key.first, key.second);
      if (!seen.insert(key).second) throw Error(ErrorCode::parallel_arc, where + " duplicates an earlier arc");
    }
    g.arcs_.push_back(Arc{static_cast<ArcId>(i), s.tail, s.head, s.length, s.capacity, s.unit_cost});
  }

  // CSR adjacency: counting pass, then a stable fill in arc order.
  std::vector<std::size_t> degree(node_count, 0);
  for (const Arc& a : g.arcs_) {
    ++degree[static_cast<std::size_t>(a.tail)];
    ++degree[static_cast<std::size_t>(a.head)];
  }
  g.offsets_.assign(node_count + 1, 0);
  std::partial_sum(degree.begin(), degree.end(), g.offsets_.begin() + 1);
  g.incident_.resize(g.offsets_.back());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const Arc& a : g.arcs_) {
    g.incident_[cursor[static_cast<std::size_t>(a.tail)]++] = a.id;
    g.incident_[cursor[static_cast<std::size_t>(a.head)]++] = a.id;
  }
  return g;
}

inline Graph build_graph(std::size_t node_count, const std::vector<ArcSpec>& specs, Orientation mode,
                         bool allow_parallel = false) {
  return build_graph(node_count, std::span<const ArcSpec>(specs), mode, allow_parallel);
}

/// Arc list of an existing graph, for building derived instances.
inline std::vector<ArcSpec> arc_specs(const Graph& g) {
  std::vector<ArcSpec> out;
  out.reserve(g.arc_count());
  for (const Arc& a : g.arcs()) out.push_back({a.tail, a.head, a.length, a.capacity, a.unit_cost});
  return out;
}

struct CapacityViolation {
  ArcId arc = 0;
  double flow = 0.0;
  double capacity = 0.0;
  double relative_excess = 0.0;
};

struct NodeResidual {
  NodeId node = 0;
  double residual = 0.0;
};

struct ViolationReport {
  std::vector<CapacityViolation> capacity;  // sorted by relative excess, descending
  std::vector<NodeResidual> conservation;   // nodes whose |residual| exceeds the tolerance
  std::vector<double> residuals;            // every node's residual (empty for capacity checks)

  bool ok() const noexcept { return capacity.empty() && conservation.empty(); }

  double max_relative_excess() const noexcept { return capacity.empty() ? 0.0 : capacity.front().relative_excess; }

  double max_abs_residual() const noexcept {
    double m = 0.0;
    for (double r : residuals) m = std::max(m, std::abs(r));
    return m;
  }
};

inline double relative_excess(double flow, double capacity) noexcept {
  return std::max(0.0, std::abs(flow) / capacity - 1.0);
}

inline void require_arc_vector(const Graph& g, std::span<const double> values, const char* what) {
  if (values.size() != g.arc_count())
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + " has " + std::to_string(values.size()) +
                                                   " entries for " + std::to_string(g.arc_count()) + " arcs");
}

inline void require_node_vector(const Graph& g, std::span<const double> values, const char* what) {
  if (values.size() != g.node_count())
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + " has " + std::to_string(values.size()) +
                                                   " entries for " + std::to_string(g.node_count()) + " nodes");
}

/// r_i = injection_i + inflow_i - outflow_i, with signed arc flow measured
/// tail -> head.
inline std::vector<double> conservation_residuals(const Graph& g, std::span<const double> flow,
                                                  std::span<const double> injections) {
  require_arc_vector(g, flow, "flow");
  require_node_vector(g, injections, "injections");
  std::vector<double> r(injections.begin(), injections.end());
  for (const Arc& a : g.arcs()) {
    const double q = flow[static_cast<std::size_t>(a.id)];
    r[static_cast<std::size_t>(a.tail)] -= q;
    r[static_cast<std::size_t>(a.head)] += q;
  }
  return r;
}

inline ViolationReport validate_conservation(const Graph& g, std::span<const double> flow,
                                             std::span<const double> injections, double tol) {
  ViolationReport report;
  report.residuals = conservation_residuals(g, flow, injections);
  for (std::size_t i = 0; i < report.residuals.size(); ++i)
    if (std::abs(report.residuals[i]) > tol) report.conservation.push_back({static_cast<NodeId>(i), report.residuals[i]});
  return report;
}

inline ViolationReport validate_capacity(const Graph& g, std::span<const double> flow, double rel_tol) {
  require_arc_vector(g, flow, "flow");
  ViolationReport report;
  for (const Arc& a : g.arcs()) {
    const double q = flow[static_cast<std::size_t>(a.id)];
    if (std::abs(q) > (1.0 + rel_tol) * a.capacity)
      report.capacity.push_back({a.id, q, a.capacity, relative_excess(q, a.capacity)});
  }
  std::stable_sort(report.capacity.begin(), report.capacity.end(),
                   [](const CapacityViolation& x, const CapacityViolation& y) { return x.relative_excess > y.relative_excess; });
  return report;
}

inline double max_relative_excess(const Graph& g, std::span<const double> flow, std::size_t arc_limit = SIZE_MAX) {
  double m = 0.0;
  const std::size_t n = std::min(arc_limit, g.arc_count());
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, relative_excess(flow[i], g.arcs()[i].capacity));
  return m;
}

/// Injection vector with +amount at `source` and -amount at `sink`.
inline std::vector<double> source_sink_injections(std::size_t node_count, NodeId source, NodeId sink, double amount) {
  std::vector<double> b(node_count, 0.0);
  b.at(static_cast<std::size_t>(source)) += amount;
  b.at(static_cast<std::size_t>(sink)) -= amount;
  return b;
}

}  // namespace physarum
