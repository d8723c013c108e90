#pragma once

// Capacitated Physarum iteration. One step solves the network Poisson
// system for the current conductivities, evaluates arc flows, and adapts
// each conductivity: arcs at or under k * capacity relax toward their flow,
// arcs above it are rescaled so the next flow at the same pressures equals
// their capacity.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "physarum/error.hpp"
#include "physarum/graph.hpp"
#include "physarum/laplacian.hpp"

namespace physarum {

struct CppaConfig {
  double k = 0.85;
  double epsilon = 5e-5;
  long max_iterations = 100000;
  NodeId ground = 0;
  double initial_conductivity = 0.5;
  /// false reverts to the uncapped Physarum rule D' = (|Q| + D) / 2.
  bool capacitated = true;
  /// Iterations without a new minimum of the L1 change before the run is
  /// flagged as oscillating.
  long oscillation_window = 500;
  bool stop_on_oscillation = false;
  /// A small L1 change only counts as convergence once no arc is above
  /// (1 + tol) * capacity; otherwise the run keeps going.
  double feasibility_tolerance = 1e-2;
  long trace_stride = 1;

  void validate() const {
    if (!(k > 0.0 && k <= 1.0)) throw Error(ErrorCode::invalid_config, "k must lie in (0, 1]");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_config, "epsilon must be positive");
    if (max_iterations < 1) throw Error(ErrorCode::invalid_config, "max_iterations must be >= 1");
    if (!(initial_conductivity > 0.0)) throw Error(ErrorCode::invalid_config, "initial conductivity must be positive");
    if (trace_stride < 1) throw Error(ErrorCode::invalid_config, "trace_stride must be >= 1");
  }
};

/// 5e-5 below 400 nodes, 1e-4 from there on.
inline double default_epsilon(std::size_t node_count) noexcept { return node_count < 400 ? 5e-5 : 1e-4; }

struct SolverState {
  std::vector<double> conductivity;
  std::vector<double> flow;
  std::vector<double> pressure;
  long iteration = 0;
  double last_change = std::numeric_limits<double>::infinity();
  double last_change_linf = std::numeric_limits<double>::infinity();
  double poisson_residual = 0.0;
};

enum class RunStatus { converged, non_converging, max_iterations_exceeded };

constexpr std::string_view to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::non_converging: return "non_converging";
    case RunStatus::max_iterations_exceeded: return "max_iterations_exceeded";
  }
  return "unknown";
}

struct TraceRow {
  long iteration = 0;
  double l1_change = 0.0;
  double linf_change = 0.0;
  double max_rel_excess = 0.0;
  double conservation_residual = 0.0;  // max |r_i| of the evaluated flows
  double poisson_residual = 0.0;
  std::optional<double> rgap;
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;
  long stride = 1;
  std::optional<long> oscillation_detected_at;
};

struct RunResult {
  SolverState state;
  ConvergenceTrace trace;
  RunStatus status = RunStatus::max_iterations_exceeded;
  long iterations = 0;  // steps taken; state may be an earlier, better iterate

  bool converged() const noexcept { return status == RunStatus::converged; }
};

/// Per-arc capacitated adaptation for one step.
inline double adapt_conductivity(double q, double d, double p_tail, double p_head, double length, double capacity,
                                 double k) noexcept {
  const double flux = std::abs(q);
  if (flux <= k * capacity) return (flux + d) / 2.0;
  const double drop = std::abs(p_tail - p_head);
  if (drop < 1e-15) return d;
  const double capped = capacity * length / drop;
  return std::isfinite(capped) ? capped : d;
}

inline SolverState initial_state(const Graph& graph, const CppaConfig& config) {
  SolverState s;
  s.conductivity.assign(graph.arc_count(), config.initial_conductivity);
  s.flow.assign(graph.arc_count(), 0.0);
  s.pressure.assign(graph.node_count(), 0.0);
  return s;
}

inline SolverState step(const Graph& graph, std::span<const double> lengths, std::span<const double> injections,
                        const SolverState& state, const CppaConfig& config) {
  const PoissonSystem sys = assemble(graph, state.conductivity, lengths, injections, config.ground);
  PressureVector p = solve(sys);

  SolverState next;
  next.flow = edge_flows(graph, state.conductivity, lengths, p.pressure);
  next.conductivity.resize(graph.arc_count());
  double l1 = 0.0;
  double linf = 0.0;
  for (const Arc& a : graph.arcs()) {
    const auto i = static_cast<std::size_t>(a.id);
    const double q = next.flow[i];
    const double d = state.conductivity[i];
    next.conductivity[i] =
        config.capacitated
            ? adapt_conductivity(q, d, p.pressure[static_cast<std::size_t>(a.tail)],
                                 p.pressure[static_cast<std::size_t>(a.head)], lengths[i], a.capacity, config.k)
            : (std::abs(q) + d) / 2.0;
    const double dq = std::abs(q - (state.flow.empty() ? 0.0 : state.flow[i]));
    l1 += dq;
    linf = std::max(linf, dq);
  }
  next.pressure = std::move(p.pressure);
  next.poisson_residual = p.residual_norm;
  next.iteration = state.iteration + 1;
  next.last_change = l1;
  next.last_change_linf = linf;
  return next;
}

inline bool converged(const SolverState& state, const CppaConfig& config, std::size_t node_count) noexcept {
  return state.iteration >= 1 && state.last_change < static_cast<double>(node_count) * config.epsilon;
}

/// Called after every step with the new state; may rewrite the lengths used
/// by the next step (marginal-cost lengths for flow-dependent unit costs).
using LengthUpdate = std::function<void(const SolverState&, std::vector<double>& lengths)>;

inline RunResult run(const Graph& graph, std::span<const double> lengths, std::span<const double> injections,
                     const CppaConfig& config, std::optional<SolverState> start = std::nullopt,
                     const LengthUpdate& update_lengths = {}) {
  config.validate();
  require_arc_vector(graph, lengths, "lengths");
  require_node_vector(graph, injections, "injections");

  RunResult result;
  result.trace.stride = config.trace_stride;
  SolverState state = start ? std::move(*start) : initial_state(graph, config);
  std::vector<double> current_lengths(lengths.begin(), lengths.end());

  SolverState best;
  double best_change = std::numeric_limits<double>::infinity();
  long best_at = state.iteration;
  const long first = state.iteration;

  auto record = [&](const SolverState& s) {
    TraceRow row;
    row.iteration = s.iteration;
    row.l1_change = s.last_change;
    row.linf_change = s.last_change_linf;
    row.max_rel_excess = max_relative_excess(graph, s.flow);
    row.conservation_residual = 0.0;
    for (double r : conservation_residuals(graph, s.flow, injections))
      row.conservation_residual = std::max(row.conservation_residual, std::abs(r));
    row.poisson_residual = s.poisson_residual;
    result.trace.rows.push_back(row);
  };

  bool collapsed = false;
  for (long it = 0; it < config.max_iterations; ++it) {
    // Demand above what the capacities carry shrinks the capped
    // conductivities geometrically until the network splits. Arcs held
    // between k*C and C grow theirs without bound until the Laplacian is
    // numerically singular.
    try {
      state = step(graph, current_lengths, injections, state, config);
    } catch (const Error& e) {
      const bool breakdown = e.code() == ErrorCode::disconnected_injection || e.code() == ErrorCode::singular_system;
      if (!breakdown || state.iteration == first) throw;
      collapsed = true;
      break;
    }
    const bool done = converged(state, config, graph.node_count()) &&
                      max_relative_excess(graph, state.flow) <= config.feasibility_tolerance;
    if ((state.iteration - first) % config.trace_stride == 0 || done) record(state);

    if (state.last_change < best_change) {
      best_change = state.last_change;
      best_at = state.iteration;
      best = state;
    } else if (!result.trace.oscillation_detected_at && state.iteration - best_at >= config.oscillation_window) {
      result.trace.oscillation_detected_at = state.iteration;
      if (config.stop_on_oscillation) break;
    }

    if (done) {
      result.status = RunStatus::converged;
      result.iterations = state.iteration;
      result.state = std::move(state);
      return result;
    }
    if (update_lengths) update_lengths(state, current_lengths);
  }

  if (result.trace.rows.empty() || result.trace.rows.back().iteration != state.iteration) record(state);
  result.iterations = state.iteration;
  result.status = collapsed || result.trace.oscillation_detected_at ? RunStatus::non_converging
                                                                    : RunStatus::max_iterations_exceeded;
  result.state = best.conductivity.empty() ? std::move(state) : std::move(best);
  return result;
}

}  // namespace physarum
