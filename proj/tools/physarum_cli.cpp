// physarum: command-line front end for the capacitated Physarum solvers.
//
// Exit codes: 0 success, 2 parse error, 3 solver did not converge (the report
// is still written), 4 internal error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "physarum/physarum.hpp"

namespace fs = std::filesystem;
using namespace physarum;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitInternal = 4;

struct ParseFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_parse_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::syntax_error:
    case ErrorCode::missing_source_or_sink:
    case ErrorCode::duplicate_problem_line:
    case ErrorCode::non_positive_demand:
    case ErrorCode::out_of_range_node:
    case ErrorCode::non_positive_length:
    case ErrorCode::non_positive_capacity:
    case ErrorCode::negative_cost:
    case ErrorCode::self_loop:
    case ErrorCode::parallel_arc:
      return true;
    default:
      return false;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseFailure("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double to_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseFailure("bad number for " + what + ": '" + s + "'");
  }
}

std::uint64_t to_seed(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseFailure("bad integer for " + what + ": '" + s + "'");
  }
}

Orientation parse_mode(const std::string& s) {
  if (s == "directed") return Orientation::directed;
  if (s == "undirected") return Orientation::undirected;
  throw ParseFailure("mode must be directed or undirected");
}

// `n=..,seed=..,p=..`
GenSpec parse_gen_spec(const std::string& text, Orientation mode) {
  GenSpec spec;
  spec.mode = mode;
  for (const std::string& kv : split(text, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseFailure("--gen expects key=value pairs, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "n") spec.node_count = static_cast<std::size_t>(to_seed(value, "n"));
    else if (key == "seed") spec.seed = to_seed(value, "seed");
    else if (key == "p") spec.connect_probability = to_real(value, "p");
    else throw ParseFailure("unknown --gen key '" + key + "'");
  }
  return spec;
}

struct FlowArgs {
  std::string input;
  std::string gen;
  double k = 0.85;
  std::optional<double> epsilon;
  long max_iters = 100000;
  std::string mode = "directed";
  bool oracle = false;
  std::string out;
  std::string epsilon_sweep;
};

struct LoadedInstance {
  FlowInstance instance;
  ordered_json descriptor;
  std::optional<std::uint64_t> seed;
};

LoadedInstance load_instance(const FlowArgs& a) {
  const Orientation mode = parse_mode(a.mode);
  if (!a.input.empty()) {
    FlowFile f = parse_flow_instance(read_file(a.input), mode);
    return {std::move(f.instance), ordered_json{{"input", a.input}}, std::nullopt};
  }
  const GenSpec spec = parse_gen_spec(a.gen, mode);
  GeneratedInstance g = random_directed_connected(spec);
  ordered_json d{{"gen", {{"n", spec.node_count}, {"seed", spec.seed}, {"p", spec.connect_probability}}},
                 {"seed_used", g.seed_used},
                 {"retries", g.retries}};
  return {std::move(g.instance), std::move(d), spec.seed};
}

CppaConfig flow_config(const FlowArgs& a, const Graph& g) {
  CppaConfig c;
  c.k = a.k;
  c.epsilon = a.epsilon.value_or(default_epsilon(g.node_count()));
  c.max_iterations = a.max_iters;
  return c;
}

fs::path trace_path(const std::string& out) {
  fs::path p(out);
  return p.replace_extension(".trace.csv");
}

void emit(RunReport& rep, const std::string& out, const std::string& trace_csv) {
  if (out.empty()) {
    std::cout << write_report(rep, ReportFormat::json);
    return;
  }
  const fs::path tp = trace_path(out);
  rep.trace_file = tp.filename().string();
  write_file(tp, trace_csv);
  write_file(out, write_report(rep, ReportFormat::json));
  fs::path csv(out);
  write_file(csv.replace_extension(".csv"), write_report(rep, ReportFormat::csv));
}

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_maxflow(const FlowArgs& a) {
  LoadedInstance li = load_instance(a);
  const Graph& g = li.instance.graph;
  const CppaConfig cfg = flow_config(a, g);
  MaxFlowResult r;
  const double wall = timed([&] { r = cppa_maxflow(g, li.instance.source, li.instance.sink, cfg); });
  std::optional<double> oracle;
  if (a.oracle) oracle = oracle_maxflow(g, li.instance.source, li.instance.sink).value;
  RunReport rep = maxflow_report(g, r, cfg, li.descriptor, oracle);
  if (li.seed) rep.config["seed"] = *li.seed;
  rep.wall_seconds = wall;
  emit(rep, a.out, write_trace_csv(r.trace));
  std::cerr << "max_flow " << r.value() << " iterations " << r.iterations << " " << to_string(r.status) << "\n";
  return r.converged() ? 0 : kExitNotConverged;
}

int run_mcmf(const FlowArgs& a) {
  LoadedInstance li = load_instance(a);
  const Graph& g = li.instance.graph;
  const CppaConfig cfg = flow_config(a, g);
  std::optional<OracleMcmf> oracle;
  if (a.oracle) oracle = oracle_mcmf(g, li.instance.source, li.instance.sink);

  McmfResult r;
  const double wall = timed([&] { r = cppa_mcmf(g, li.instance.source, li.instance.sink, cfg); });
  RunReport rep = mcmf_report(g, r, cfg, li.descriptor, oracle);
  if (li.seed) rep.config["seed"] = *li.seed;
  rep.wall_seconds = wall;
  bool all_converged = r.converged();

  if (!a.epsilon_sweep.empty()) {
    ordered_json sweep = ordered_json::array();
    for (const std::string& e : split(a.epsilon_sweep, ',')) {
      CppaConfig c = cfg;
      c.epsilon = to_real(e, "--epsilon-sweep");
      const McmfResult s = cppa_mcmf(g, li.instance.source, li.instance.sink, c);
      ordered_json row{{"epsilon", c.epsilon},
                       {"max_flow", s.max_flow},
                       {"min_cost", s.min_cost},
                       {"phase1_iterations", s.phase1_iterations},
                       {"phase2_iterations", s.phase2_iterations},
                       {"converged", s.converged()}};
      if (oracle) row["min_cost_gap"] = std::abs(s.min_cost - oracle->min_cost);
      sweep.push_back(std::move(row));
      all_converged = all_converged && s.converged();
    }
    rep.results["epsilon_sweep"] = std::move(sweep);
  }
  emit(rep, a.out, write_trace_csv(r.phase2_trace));
  std::cerr << "max_flow " << r.max_flow << " min_cost " << r.min_cost << " "
            << (r.converged() ? "converged" : "not converged") << "\n";
  return all_converged ? 0 : kExitNotConverged;
}

struct CtapArgs {
  std::string network;
  std::string demands;
  double k = 0.85;
  double rgap_target = 1e-4;
  bool uncapacitated = false;
  std::string out;
};

int run_ctap(const CtapArgs& a) {
  TrafficFiles tf = parse_traffic_instance(read_file(a.network), read_file(a.demands));
  CtapConfig cfg;
  cfg.k = a.k;
  cfg.rgap_target = a.rgap_target;
  cfg.capacitated = !a.uncapacitated;
  CtapResult r;
  const double wall = timed([&] { r = cppa_ctap(tf.network, tf.demands, cfg); });
  RunReport rep = ctap_report(tf.network, r, cfg, ordered_json{{"network", a.network}, {"demands", a.demands}});
  rep.wall_seconds = wall;
  emit(rep, a.out, write_rgap_csv(r.rgap_trace));
  std::cerr << "rgap " << r.rgap << " max_relative_excess " << r.violations.max_relative_excess() << " "
            << to_string(r.status) << "\n";
  return r.converged() ? 0 : kExitNotConverged;
}

struct GenArgs {
  std::string kind;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t n = 20;
  double p = 0.7;
  std::size_t width = 3;
  std::size_t depth = 3;
};

int run_gen(const GenArgs& a) {
  if (a.kind == "random") {
    GenSpec spec;
    spec.node_count = a.n;
    spec.seed = a.seed;
    spec.connect_probability = a.p;
    write_file(a.out, write_flow_instance(random_directed_connected(spec).instance));
  } else if (a.kind == "grid") {
    write_file(a.out, write_flow_instance(grid_on_pipe(a.width, a.depth, a.seed)));
  } else if (a.kind == "threepath") {
    write_file(a.out, write_flow_instance(three_path_fixture().instance));
  } else if (a.kind == "hearn") {
    const TrafficInstance h = hearn_network();
    write_file(a.out, write_traffic_network(h.network));
    write_file(a.out + ".demands", write_demands(h.demands));
  } else {
    throw ParseFailure("--kind must be random, grid, hearn or threepath");
  }
  return 0;
}

struct BenchArgs {
  std::string suite;
  std::string sizes = "20,40,60";
  int repeats = 10;
  std::uint64_t seed = 1;
  std::string out;
};

// Traffic instance from a random flow graph: capacities scaled by 10, free
// flow time equal to the unit cost, two origins each sending 30% of their
// own max flow to the last node.
TrafficInstance bench_traffic(std::size_t n, std::uint64_t seed) {
  GenSpec spec;
  spec.node_count = n;
  spec.seed = seed;
  const FlowInstance inst = random_directed_connected(spec).instance;
  std::vector<TrafficLink> links;
  for (const Arc& arc : inst.graph.arcs()) links.push_back({arc.tail, arc.head, 10.0 * arc.capacity, arc.unit_cost, {}});
  TrafficInstance t;
  t.network = make_traffic_network(n, links);
  for (NodeId o : {NodeId{0}, NodeId{1}}) {
    const double mf = oracle_maxflow(inst.graph, o, inst.sink).value;
    if (mf > 0.0) t.demands.push_back({o, inst.sink, 0.3 * 10.0 * mf});
  }
  return t;
}

int run_bench(const BenchArgs& a) {
  if (a.suite != "mf" && a.suite != "mcmf" && a.suite != "ctap") throw ParseFailure("--suite must be mf, mcmf or ctap");
  if (a.repeats < 1) throw ParseFailure("--repeats must be >= 1");
  std::vector<std::size_t> sizes;
  for (const std::string& s : split(a.sizes, ',')) sizes.push_back(static_cast<std::size_t>(to_seed(s, "--sizes")));
  const fs::path dir(a.out);
  fs::create_directories(dir / "instances");

  ordered_json runs = ordered_json::array();
  std::ostringstream summary;
  summary << "size,repeats,mean_seconds,mean_iterations,exact,mean_gap,converged\n";
  bool all_converged = true;

  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const std::size_t n = sizes[si];
    double seconds = 0.0, iterations = 0.0, gap = 0.0;
    int exact = 0, converged_count = 0;
    for (int rep = 0; rep < a.repeats; ++rep) {
      const std::uint64_t seed = a.seed + 1000 * si + static_cast<std::uint64_t>(rep);
      const std::string stem = a.suite + "_n" + std::to_string(n) + "_r" + std::to_string(rep);
      ordered_json row{{"size", n}, {"repeat", rep}, {"seed", seed}};
      double wall = 0.0;
      long its = 0;
      double g = 0.0;
      bool conv = false;

      if (a.suite == "ctap") {
        const TrafficInstance t = bench_traffic(n, seed);
        write_file(dir / "instances" / (stem + ".net"), write_traffic_network(t.network));
        write_file(dir / "instances" / (stem + ".demands"), write_demands(t.demands));
        CtapConfig cfg;
        CtapResult r;
        wall = timed([&] { r = cppa_ctap(t.network, t.demands, cfg); });
        its = r.iterations;
        conv = r.converged();
        g = r.violations.max_relative_excess();
        row["instance"] = "instances/" + stem + ".net";
        row["rgap"] = r.rgap;
        row["max_relative_excess"] = g;
      } else {
        GenSpec spec;
        spec.node_count = n;
        spec.seed = seed;
        const GeneratedInstance gi = random_directed_connected(spec);
        const FlowInstance& inst = gi.instance;
        write_file(dir / "instances" / (stem + ".min"), write_flow_instance(inst));
        CppaConfig cfg;
        cfg.epsilon = default_epsilon(n);
        row["instance"] = "instances/" + stem + ".min";
        row["seed_used"] = gi.seed_used;
        if (a.suite == "mf") {
          MaxFlowResult r;
          wall = timed([&] { r = cppa_maxflow(inst.graph, inst.source, inst.sink, cfg); });
          const double o = oracle_maxflow(inst.graph, inst.source, inst.sink).value;
          its = r.iterations;
          conv = r.converged();
          g = std::abs(r.value() - o);
          row["max_flow"] = r.value();
          row["oracle_max_flow"] = o;
        } else {
          McmfResult r;
          wall = timed([&] { r = cppa_mcmf(inst.graph, inst.source, inst.sink, cfg); });
          const OracleMcmf o = oracle_mcmf(inst.graph, inst.source, inst.sink);
          its = r.phase1_iterations + r.phase2_iterations;
          conv = r.converged();
          g = std::abs(r.min_cost - o.min_cost);
          row["max_flow"] = r.max_flow;
          row["min_cost"] = r.min_cost;
          row["oracle_max_flow"] = o.max_flow;
          row["oracle_min_cost"] = o.min_cost;
        }
        row["gap"] = g;
        exact += g < 0.5 ? 1 : 0;
      }
      row["iterations"] = its;
      row["converged"] = conv;
      row["wall_seconds"] = wall;
      runs.push_back(std::move(row));
      seconds += wall;
      iterations += static_cast<double>(its);
      gap += g;
      converged_count += conv ? 1 : 0;
      all_converged = all_converged && conv;
    }
    const double r = a.repeats;
    summary << n << ',' << a.repeats << ',' << seconds / r << ',' << iterations / r << ','
            << (a.suite == "ctap" ? std::string() : std::to_string(exact)) << ',' << gap / r << ','
            << converged_count << '\n';
  }
  ordered_json report{{"suite", a.suite}, {"sizes", sizes}, {"repeats", a.repeats}, {"seed", a.seed}, {"runs", runs}};
  write_file(dir / "bench.json", report.dump(2) + "\n");
  write_file(dir / "summary.csv", summary.str());
  std::cout << summary.str();
  return all_converged ? 0 : kExitNotConverged;
}

void add_flow_options(CLI::App* cmd, FlowArgs& a) {
  auto* input = cmd->add_option("--input", a.input, "DIMACS instance file");
  auto* gen = cmd->add_option("--gen", a.gen, "generate a random instance: n=..,seed=..,p=..");
  input->excludes(gen);
  cmd->add_option("--k", a.k, "capacity threshold k");
  cmd->add_option("--epsilon", a.epsilon, "stopping tolerance per node");
  cmd->add_option("--max-iters", a.max_iters, "iteration cap");
  cmd->add_option("--mode", a.mode, "directed|undirected");
  cmd->add_flag("--oracle", a.oracle, "also run the exact oracle and report the gap");
  cmd->add_option("--out", a.out, "report path (json; csv summary and trace written alongside)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacitated Physarum network flow solver"};
  app.require_subcommand(1);

  FlowArgs mf;
  auto* maxflow = app.add_subcommand("maxflow", "maximum flow");
  add_flow_options(maxflow, mf);

  FlowArgs mc;
  auto* mcmf = app.add_subcommand("mcmf", "minimum-cost maximum flow");
  add_flow_options(mcmf, mc);
  mcmf->add_option("--epsilon-sweep", mc.epsilon_sweep, "comma-separated epsilons to rerun with");

  CtapArgs ct;
  auto* ctap = app.add_subcommand("ctap", "capacitated traffic assignment");
  ctap->add_option("--network", ct.network, "link file")->required();
  ctap->add_option("--demands", ct.demands, "demand file")->required();
  ctap->add_option("--k", ct.k, "capacity threshold k");
  ctap->add_option("--rgap-target", ct.rgap_target, "stop once RGAP falls to this value");
  ctap->add_flag("--uncapacitated", ct.uncapacitated, "plain adaptation without the capacity cap");
  ctap->add_option("--out", ct.out, "report path");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "write a generated instance");
  gen->add_option("--kind", ga.kind, "random|grid|hearn|threepath")->required();
  gen->add_option("--seed", ga.seed, "seed");
  gen->add_option("--out", ga.out, "output file")->required();
  gen->add_option("--n", ga.n, "random: node count");
  gen->add_option("--p", ga.p, "random: connect probability");
  gen->add_option("--width", ga.width, "grid: frame width");
  gen->add_option("--depth", ga.depth, "grid: frame count");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "repeated runs over generated instances");
  bench->add_option("--suite", ba.suite, "mf|mcmf|ctap")->required();
  bench->add_option("--sizes", ba.sizes, "comma-separated node counts");
  bench->add_option("--repeats", ba.repeats, "instances per size");
  bench->add_option("--seed", ba.seed, "base seed");
  bench->add_option("--out", ba.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*maxflow || *mcmf) {
      FlowArgs& a = *maxflow ? mf : mc;
      if (a.input.empty() == a.gen.empty()) throw ParseFailure("give exactly one of --input and --gen");
      return *maxflow ? run_maxflow(a) : run_mcmf(a);
    }
    if (*ctap) return run_ctap(ct);
    if (*gen) return run_gen(ga);
    if (*bench) return run_bench(ba);
  } catch (const ParseFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_parse_error(e.code()) ? kExitParse : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
