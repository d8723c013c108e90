#pragma once

// Text formats and run reports.
//
// Flow instances use DIMACS lines with 1-based node ids:
//   c <comment>            (`c mode undirected` switches orientation)
//   p max|min <nodes> <arcs>
//   n <id> s|t
//   a <tail> <head> <cap> [<cost>] [<length>]   cost only under `p min`
// Traffic networks are rows `tail head capacity t0 [alpha beta]`, demands
// rows `origin destination demand`; `#` starts a comment and an optional
// `nodes <n>` row fixes the node count.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "physarum/ctap.hpp"
#include "physarum/error.hpp"
#include "physarum/gen.hpp"
#include "physarum/graph.hpp"
#include "physarum/maxflow.hpp"
#include "physarum/mincostflow.hpp"

namespace physarum {

namespace detail {

inline std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

[[noreturn]] inline void syntax_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::syntax_error, "line " + std::to_string(line) + ": " + what);
}

inline double parse_real(std::string_view word, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
  if (ec != std::errc() || ptr != word.data() + word.size() || !std::isfinite(v))
    syntax_error(line, "bad number '" + std::string(word) + "'");
  return v;
}

inline long long parse_integer(std::string_view word, std::size_t line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
  if (ec != std::errc() || ptr != word.data() + word.size())
    syntax_error(line, "bad integer '" + std::string(word) + "'");
  return v;
}

inline NodeId parse_node(std::string_view word, std::size_t line, std::size_t node_count) {
  const long long id = parse_integer(word, line);
  if (id < 1 || static_cast<std::size_t>(id) > node_count)
    syntax_error(line, "node " + std::to_string(id) + " outside 1.." + std::to_string(node_count));
  return static_cast<NodeId>(id - 1);
}

// Shortest text that reads back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string format_summary(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

struct FlowFile {
  FlowInstance instance;
  bool has_costs = false;  // `p min`
};

/// `mode` applies unless the text carries a `c mode` line.
inline FlowFile parse_flow_instance(std::string_view text, Orientation mode = Orientation::directed) {
  std::optional<std::size_t> nodes;
  std::size_t declared_arcs = 0;
  bool costs = false;
  std::optional<NodeId> source;
  std::optional<NodeId> sink;
  std::vector<ArcSpec> arcs;

  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 1; ln <= lines.size(); ++ln) {
    const auto w = detail::split_words(lines[ln - 1]);
    if (w.empty()) continue;
    if (w[0] == "c") {
      if (w.size() >= 3 && w[1] == "mode") {
        if (w[2] == "directed") mode = Orientation::directed;
        else if (w[2] == "undirected") mode = Orientation::undirected;
        else detail::syntax_error(ln, "unknown mode '" + std::string(w[2]) + "'");
      }
      continue;
    }
    if (w[0] == "p") {
      if (nodes) throw Error(ErrorCode::duplicate_problem_line, "line " + std::to_string(ln) + ": second problem line");
      if (w.size() != 4) detail::syntax_error(ln, "expected 'p max|min <nodes> <arcs>'");
      if (w[1] == "min") costs = true;
      else if (w[1] != "max") detail::syntax_error(ln, "unknown problem '" + std::string(w[1]) + "'");
      const long long n = detail::parse_integer(w[2], ln);
      const long long m = detail::parse_integer(w[3], ln);
      if (n < 2 || m < 0) detail::syntax_error(ln, "need at least 2 nodes and a nonnegative arc count");
      nodes = static_cast<std::size_t>(n);
      declared_arcs = static_cast<std::size_t>(m);
      continue;
    }
    if (!nodes) detail::syntax_error(ln, "'" + std::string(w[0]) + "' line before the problem line");
    if (w[0] == "n") {
      if (w.size() != 3) detail::syntax_error(ln, "expected 'n <id> s|t'");
      const NodeId id = detail::parse_node(w[1], ln, *nodes);
      if (w[2] == "s") source = id;
      else if (w[2] == "t") sink = id;
      else detail::syntax_error(ln, "node designator must be s or t");
    } else if (w[0] == "a") {
      const std::size_t fixed = costs ? 5 : 4;
      if (w.size() != fixed && w.size() != fixed + 1)
        detail::syntax_error(ln, costs ? "expected 'a <u> <v> <cap> <cost> [<length>]'" : "expected 'a <u> <v> <cap> [<length>]'");
      ArcSpec a;
      a.tail = detail::parse_node(w[1], ln, *nodes);
      a.head = detail::parse_node(w[2], ln, *nodes);
      a.capacity = detail::parse_real(w[3], ln);
      if (costs) a.unit_cost = detail::parse_real(w[4], ln);
      if (w.size() == fixed + 1) a.length = detail::parse_real(w[fixed], ln);
      arcs.push_back(a);
    } else {
      detail::syntax_error(ln, "unknown line type '" + std::string(w[0]) + "'");
    }
  }
  if (!nodes) throw Error(ErrorCode::syntax_error, "no problem line");
  if (!source || !sink) throw Error(ErrorCode::missing_source_or_sink, "both 'n <id> s' and 'n <id> t' are required");
  if (arcs.size() != declared_arcs)
    throw Error(ErrorCode::syntax_error, "problem line declares " + std::to_string(declared_arcs) + " arcs, found " +
                                             std::to_string(arcs.size()));
  FlowFile out;
  out.has_costs = costs;
  out.instance = {build_graph(*nodes, arcs, mode), *source, *sink};
  return out;
}

inline std::string write_flow_instance(const FlowInstance& inst, bool with_costs = true) {
  std::ostringstream os;
  const Graph& g = inst.graph;
  if (!g.directed()) os << "c mode undirected\n";
  os << "p " << (with_costs ? "min" : "max") << ' ' << g.node_count() << ' ' << g.arc_count() << '\n';
  os << "n " << inst.source + 1 << " s\n";
  os << "n " << inst.sink + 1 << " t\n";
  for (const Arc& a : g.arcs()) {
    os << "a " << a.tail + 1 << ' ' << a.head + 1 << ' ' << detail::format_real(a.capacity);
    if (with_costs) os << ' ' << detail::format_real(a.unit_cost);
    if (a.length != 1.0) os << ' ' << detail::format_real(a.length);
    os << '\n';
  }
  return os.str();
}

inline TrafficNetwork parse_traffic_network(std::string_view text) {
  std::vector<TrafficLink> links;
  std::size_t nodes = 0;
  std::optional<std::size_t> declared;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 1; ln <= lines.size(); ++ln) {
    auto line = lines[ln - 1];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto w = detail::split_words(line);
    if (w.empty()) continue;
    if (w[0] == "nodes") {
      if (w.size() != 2) detail::syntax_error(ln, "expected 'nodes <n>'");
      const long long n = detail::parse_integer(w[1], ln);
      if (n < 1) detail::syntax_error(ln, "node count must be positive");
      declared = static_cast<std::size_t>(n);
      continue;
    }
    if (w.size() != 4 && w.size() != 6) detail::syntax_error(ln, "expected 'tail head capacity t0 [alpha beta]'");
    const long long tail = detail::parse_integer(w[0], ln);
    const long long head = detail::parse_integer(w[1], ln);
    if (tail < 1 || head < 1) detail::syntax_error(ln, "node ids are 1-based");
    TrafficLink l;
    l.tail = static_cast<NodeId>(tail - 1);
    l.head = static_cast<NodeId>(head - 1);
    l.capacity = detail::parse_real(w[2], ln);
    l.free_flow_time = detail::parse_real(w[3], ln);
    if (w.size() == 6) l.bpr = {detail::parse_real(w[4], ln), detail::parse_real(w[5], ln)};
    links.push_back(l);
    nodes = std::max({nodes, static_cast<std::size_t>(tail), static_cast<std::size_t>(head)});
  }
  if (declared) {
    if (*declared < nodes) throw Error(ErrorCode::syntax_error, "a link uses a node beyond the declared count");
    nodes = *declared;
  }
  return make_traffic_network(nodes, links);
}

inline std::vector<OdDemand> parse_demands(std::string_view text) {
  std::vector<OdDemand> out;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 1; ln <= lines.size(); ++ln) {
    auto line = lines[ln - 1];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto w = detail::split_words(line);
    if (w.empty()) continue;
    if (w.size() != 3) detail::syntax_error(ln, "expected 'origin destination demand'");
    const long long o = detail::parse_integer(w[0], ln);
    const long long d = detail::parse_integer(w[1], ln);
    if (o < 1 || d < 1) detail::syntax_error(ln, "node ids are 1-based");
    const double amount = detail::parse_real(w[2], ln);
    if (o == d) throw Error(ErrorCode::non_positive_demand, "line " + std::to_string(ln) + ": origin equals destination");
    if (!(amount > 0.0)) throw Error(ErrorCode::non_positive_demand, "line " + std::to_string(ln) + ": demand must be positive");
    out.push_back({static_cast<NodeId>(o - 1), static_cast<NodeId>(d - 1), amount});
  }
  return out;
}

struct TrafficFiles {
  TrafficNetwork network;
  std::vector<OdDemand> demands;
};

inline TrafficFiles parse_traffic_instance(std::string_view network_text, std::string_view demand_text) {
  TrafficFiles out{parse_traffic_network(network_text), parse_demands(demand_text)};
  validate_demands(out.network, out.demands);
  return out;
}

inline std::string write_traffic_network(const TrafficNetwork& net) {
  std::ostringstream os;
  os << "# tail head capacity t0 alpha beta\n";
  os << "nodes " << net.graph.node_count() << '\n';
  for (const TrafficLink& l : net.links())
    os << l.tail + 1 << ' ' << l.head + 1 << ' ' << detail::format_real(l.capacity) << ' '
       << detail::format_real(l.free_flow_time) << ' ' << detail::format_real(l.bpr.alpha) << ' '
       << detail::format_real(l.bpr.beta) << '\n';
  return os.str();
}

inline std::string write_demands(std::span<const OdDemand> demands) {
  std::ostringstream os;
  os << "# origin destination demand\n";
  for (const OdDemand& d : demands)
    os << d.origin + 1 << ' ' << d.destination + 1 << ' ' << detail::format_real(d.demand) << '\n';
  return os.str();
}

using ordered_json = nlohmann::ordered_json;

/// Everything a run produced. `results` holds the problem-specific numbers;
/// `links` is filled for traffic runs.
struct RunReport {
  std::string kind;  // maxflow | mcmf | ctap
  ordered_json instance = ordered_json::object();
  ordered_json config = ordered_json::object();
  ordered_json results = ordered_json::object();
  long iterations = 0;
  std::string status;
  double wall_seconds = 0.0;
  ordered_json violations = ordered_json::object();
  std::string trace_file;
  ordered_json links = ordered_json::array();
};

enum class ReportFormat { json, csv };

inline ordered_json report_json(const RunReport& r) {
  ordered_json j;
  j["kind"] = r.kind;
  j["instance"] = r.instance;
  j["config"] = r.config;
  j["results"] = r.results;
  j["iterations"] = r.iterations;
  j["status"] = r.status;
  j["violations"] = r.violations;
  if (!r.links.empty()) j["links"] = r.links;
  if (!r.trace_file.empty()) j["trace_file"] = r.trace_file;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

namespace detail {

inline void flatten(const ordered_json& j, const std::string& prefix, std::ostringstream& os) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object()) flatten(v, key, os);
    else if (v.is_number_float()) os << key << ',' << format_summary(v.get<double>()) << '\n';
    else if (v.is_string()) os << key << ',' << v.get<std::string>() << '\n';
    else if (!v.is_array()) os << key << ',' << v.dump() << '\n';
  }
}

}  // namespace detail

/// JSON keeps every double exactly (shortest round-trip form); CSV is a
/// key,value summary at 6 significant digits followed by the link table for
/// traffic runs.
inline std::string write_report(const RunReport& r, ReportFormat format) {
  if (format == ReportFormat::json) return report_json(r).dump(2) + "\n";
  std::ostringstream os;
  os << "field,value\n";
  ordered_json j = report_json(r);
  j.erase("links");
  detail::flatten(j, "", os);
  if (!r.links.empty()) {
    os << "\nlink,tail,head,capacity,flow,relative_excess,time\n";
    for (const auto& l : r.links)
      os << l["link"].get<long>() << ',' << l["tail"].get<long>() << ',' << l["head"].get<long>() << ','
         << detail::format_summary(l["capacity"].get<double>()) << ',' << detail::format_summary(l["flow"].get<double>())
         << ',' << detail::format_summary(l["relative_excess"].get<double>()) << ','
         << detail::format_summary(l["time"].get<double>()) << '\n';
  }
  return os.str();
}

/// iteration,l1_change,max_rel_excess[,rgap]
inline std::string write_trace_csv(const ConvergenceTrace& trace) {
  bool with_rgap = false;
  for (const TraceRow& row : trace.rows) with_rgap = with_rgap || row.rgap.has_value();
  std::ostringstream os;
  os << "iteration,l1_change,max_rel_excess" << (with_rgap ? ",rgap" : "") << '\n';
  for (const TraceRow& row : trace.rows) {
    os << row.iteration << ',' << detail::format_real(row.l1_change) << ',' << detail::format_real(row.max_rel_excess);
    if (with_rgap) os << ',' << (row.rgap ? detail::format_real(*row.rgap) : std::string());
    os << '\n';
  }
  return os.str();
}

inline std::string write_rgap_csv(const std::vector<std::pair<long, double>>& rgap_trace) {
  std::ostringstream os;
  os << "iteration,rgap\n";
  for (const auto& [it, g] : rgap_trace) os << it << ',' << detail::format_real(g) << '\n';
  return os.str();
}

inline ordered_json config_json(const CppaConfig& c) {
  return {{"k", c.k},
          {"epsilon", c.epsilon},
          {"max_iterations", c.max_iterations},
          {"initial_conductivity", c.initial_conductivity},
          {"capacitated", c.capacitated}};
}

inline ordered_json violations_json(const ViolationReport& v) {
  return {{"capacity_violations", v.capacity.size()},
          {"max_relative_excess", v.max_relative_excess()},
          {"max_conservation_residual", v.max_abs_residual()}};
}

/// Report for a max-flow run; `oracle` adds the exact value and the gap.
inline RunReport maxflow_report(const Graph& graph, const MaxFlowResult& r, const CppaConfig& config,
                                ordered_json instance, std::optional<double> oracle = std::nullopt) {
  RunReport rep;
  rep.kind = "maxflow";
  rep.instance = std::move(instance);
  rep.instance["nodes"] = graph.node_count();
  rep.instance["arcs"] = graph.arc_count();
  rep.instance["mode"] = graph.directed() ? "directed" : "undirected";
  rep.config = config_json(config);
  rep.results["max_flow"] = r.max_flow;
  if (r.rounded) rep.results["max_flow_rounded"] = *r.rounded;
  rep.results["inflow"] = r.inflow;
  rep.results["virtual_flow"] = r.virtual_flow;
  if (oracle) {
    rep.results["oracle_max_flow"] = *oracle;
    rep.results["gap"] = std::abs(r.value() - *oracle);
  }
  rep.iterations = r.iterations;
  rep.status = std::string(to_string(r.status));
  rep.violations = violations_json(validate_capacity(graph, r.flows, 0.0));
  return rep;
}

inline RunReport mcmf_report(const Graph& graph, const McmfResult& r, const CppaConfig& config,
                             ordered_json instance, std::optional<OracleMcmf> oracle = std::nullopt) {
  RunReport rep;
  rep.kind = "mcmf";
  rep.instance = std::move(instance);
  rep.instance["nodes"] = graph.node_count();
  rep.instance["arcs"] = graph.arc_count();
  rep.instance["mode"] = graph.directed() ? "directed" : "undirected";
  rep.config = config_json(config);
  rep.results["max_flow"] = r.max_flow;
  rep.results["min_cost"] = r.min_cost;
  rep.results["phase1_max_flow"] = r.phase1.max_flow;
  rep.results["phase1_iterations"] = r.phase1_iterations;
  rep.results["phase2_iterations"] = r.phase2_iterations;
  rep.results["phase1_status"] = std::string(to_string(r.phase1_status));
  rep.results["phase2_status"] = std::string(to_string(r.phase2_status));
  if (oracle) {
    rep.results["oracle_max_flow"] = oracle->max_flow;
    rep.results["oracle_min_cost"] = oracle->min_cost;
    rep.results["max_flow_gap"] = std::abs(r.max_flow - oracle->max_flow);
    rep.results["min_cost_gap"] = std::abs(r.min_cost - oracle->min_cost);
  }
  rep.iterations = r.phase1_iterations + r.phase2_iterations;
  rep.status = std::string(to_string(r.converged() ? RunStatus::converged
                                                   : (r.phase1_status != RunStatus::converged ? r.phase1_status
                                                                                              : r.phase2_status)));
  rep.violations = violations_json(validate_capacity(graph, r.flows, 0.0));
  return rep;
}

inline RunReport ctap_report(const TrafficNetwork& net, const CtapResult& r, const CtapConfig& config,
                             ordered_json instance) {
  RunReport rep;
  rep.kind = "ctap";
  rep.instance = std::move(instance);
  rep.instance["nodes"] = net.graph.node_count();
  rep.instance["links"] = net.link_count();
  rep.config = {{"k", config.k},
                {"rgap_target", config.rgap_target},
                {"max_iterations", config.max_iterations},
                {"initial_conductivity", config.initial_conductivity},
                {"capacitated", config.capacitated},
                {"rgap_cadence", r.rgap_cadence}};
  rep.results["rgap"] = r.rgap;
  rep.results["total_flow_time"] = [&] {
    double t = 0.0;
    for (std::size_t i = 0; i < r.link_flows.size(); ++i) t += r.link_flows[i] * r.link_times[i];
    return t;
  }();
  rep.results["max_origin_residual"] = r.max_origin_residual;
  rep.iterations = r.iterations;
  rep.status = std::string(to_string(r.status));
  rep.violations = violations_json(r.violations);
  for (const Arc& a : net.graph.arcs()) {
    const auto i = static_cast<std::size_t>(a.id);
    rep.links.push_back({{"link", a.id + 1},
                         {"tail", a.tail + 1},
                         {"head", a.head + 1},
                         {"capacity", a.capacity},
                         {"flow", r.link_flows[i]},
                         {"relative_excess", relative_excess(r.link_flows[i], a.capacity)},
                         {"time", r.link_times[i]}});
  }
  return rep;
}

}  // namespace physarum
