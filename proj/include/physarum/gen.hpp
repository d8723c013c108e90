#pragma once

// Seeded instance generators and the fixed demonstration networks.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the C++ standard. The standard distributions are not, so the mappings to
// doubles and integers are done here:
//   uniform01()        = (next() >> 11) * 2^-53
//   uniform_int(lo,hi) = lo + next() % span, redrawing while next() falls in
//                        the incomplete top bucket
//   chance(p)          = uniform01() < p
// Together with the draw order documented on each generator this makes every
// instance reproducible from its seed on any platform.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "physarum/ctap.hpp"
#include "physarum/graph.hpp"
#include "physarum/maxflow.hpp"

namespace physarum {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return uniform01() < p; }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span + 1) % span;
    std::uint64_t x = next();
    while (x > limit) x = next();
    return lo + static_cast<std::int64_t>(x % span);
  }

 private:
  std::mt19937_64 engine_;
};

struct FlowInstance {
  Graph graph;
  NodeId source = 0;
  NodeId sink = 0;
};

struct IntRange {
  std::int64_t lo = 1;
  std::int64_t hi = 10;
};

/// How a node pair becomes an arc.
enum class PairSampling {
  /// One draw per unordered pair; a hit adds one arc with a fair-coin
  /// direction.
  unordered,
  /// One draw per ordered pair; the pair keeps an arc only when exactly one
  /// direction was drawn, so there are no two-way links. Expected arc count
  /// 2p(1-p) n(n-1)/2.
  ordered_exclusive,
};

struct GenSpec {
  std::size_t node_count = 20;
  std::uint64_t seed = 1;
  double connect_probability = 0.7;
  IntRange capacity_range{1, 10};
  IntRange cost_range{1, 10};
  double length_constant = 1.0;
  PairSampling sampling = PairSampling::unordered;
  Orientation mode = Orientation::directed;
};

/// Draw order per pair (i < j, row-major): unordered: connect, direction,
/// capacity, cost; ordered_exclusive: i->j, j->i, then capacity, cost when
/// exactly one fired. Source is node 0, sink is node n-1.
inline FlowInstance random_directed(const GenSpec& spec) {
  if (spec.node_count < 2) throw Error(ErrorCode::invalid_config, "random graph needs at least 2 nodes");
  if (!(spec.connect_probability >= 0.0 && spec.connect_probability <= 1.0))
    throw Error(ErrorCode::invalid_config, "connect probability must lie in [0, 1]");
  if (spec.capacity_range.lo > spec.capacity_range.hi || spec.cost_range.lo > spec.cost_range.hi)
    throw Error(ErrorCode::invalid_config, "empty capacity or cost range");

  Rng rng(spec.seed);
  std::vector<ArcSpec> arcs;
  const auto n = static_cast<NodeId>(spec.node_count);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      NodeId tail = i;
      NodeId head = j;
      if (spec.sampling == PairSampling::unordered) {
        if (!rng.chance(spec.connect_probability)) continue;
        if (!rng.chance(0.5)) std::swap(tail, head);
      } else {
        const bool forward = rng.chance(spec.connect_probability);
        const bool backward = rng.chance(spec.connect_probability);
        if (forward == backward) continue;
        if (backward) std::swap(tail, head);
      }
      const auto cap = static_cast<double>(rng.uniform_int(spec.capacity_range.lo, spec.capacity_range.hi));
      const auto cost = static_cast<double>(rng.uniform_int(spec.cost_range.lo, spec.cost_range.hi));
      arcs.push_back({tail, head, spec.length_constant, cap, cost});
    }
  }
  return {build_graph(spec.node_count, arcs, spec.mode), 0, n - 1};
}

struct GeneratedInstance {
  FlowInstance instance;
  std::uint64_t seed_used = 0;
  int retries = 0;
};

/// random_directed, re-drawn with seed + 1, seed + 2, ... until the oracle
/// max flow is positive.
inline GeneratedInstance random_directed_connected(GenSpec spec, int max_retries = 1000) {
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    FlowInstance inst = random_directed(spec);
    if (oracle_maxflow(inst.graph, inst.source, inst.sink).value > 0.0)
      return {std::move(inst), spec.seed, attempt};
    ++spec.seed;
  }
  throw Error(ErrorCode::invalid_config, "no connected instance within the retry budget");
}

/// Grids-on-pipe: `depth` frames, each a width x width lattice whose links
/// carry capacity hi * width^2, joined frame to frame by a random one-to-one
/// matching with capacities drawn from `capacity_range`. Source is the first
/// node of the first frame, sink the last node of the last frame. Draws: per
/// frame boundary, a Fisher-Yates shuffle (index i from width^2-1 down to 1)
/// followed by one capacity per matched pair in frame order.
inline FlowInstance grid_on_pipe(std::size_t width, std::size_t depth, std::uint64_t seed,
                                 IntRange capacity_range = {1, 10}, Orientation mode = Orientation::undirected) {
  if (width < 2 || depth < 2) throw Error(ErrorCode::invalid_config, "grid width and depth must be >= 2");
  Rng rng(seed);
  const std::size_t frame = width * width;
  const double in_frame_capacity = static_cast<double>(capacity_range.hi) * static_cast<double>(frame);
  auto id = [&](std::size_t f, std::size_t r, std::size_t c) { return static_cast<NodeId>(f * frame + r * width + c); };

  std::vector<ArcSpec> arcs;
  for (std::size_t f = 0; f < depth; ++f) {
    for (std::size_t r = 0; r < width; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        if (c + 1 < width) arcs.push_back({id(f, r, c), id(f, r, c + 1), 1.0, in_frame_capacity, 1.0});
        if (r + 1 < width) arcs.push_back({id(f, r, c), id(f, r + 1, c), 1.0, in_frame_capacity, 1.0});
        if (mode == Orientation::directed) {
          if (c + 1 < width) arcs.push_back({id(f, r, c + 1), id(f, r, c), 1.0, in_frame_capacity, 1.0});
          if (r + 1 < width) arcs.push_back({id(f, r + 1, c), id(f, r, c), 1.0, in_frame_capacity, 1.0});
        }
      }
    }
  }
  std::vector<std::size_t> perm(frame);
  for (std::size_t f = 0; f + 1 < depth; ++f) {
    for (std::size_t i = 0; i < frame; ++i) perm[i] = i;
    for (std::size_t i = frame - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
    for (std::size_t i = 0; i < frame; ++i) {
      const auto cap = static_cast<double>(rng.uniform_int(capacity_range.lo, capacity_range.hi));
      arcs.push_back({static_cast<NodeId>(f * frame + i), static_cast<NodeId>((f + 1) * frame + perm[i]), 1.0, cap, 1.0});
    }
  }
  const auto nodes = frame * depth;
  return {build_graph(nodes, arcs, mode), 0, static_cast<NodeId>(nodes - 1)};
}

/// Three disjoint two-arc routes from node 0 to node 1 through nodes 2, 3
/// and 4. Route i has total length i and capacity 10 i, so route 1 is the
/// shortest and the max flow is 60. Undirected.
struct ThreePathFixture {
  FlowInstance instance;
  std::array<std::array<ArcId, 2>, 3> routes{};
  std::array<double, 4> inflow_schedule{10.0, 20.0, 40.0, 80.0};
  double max_flow = 60.0;
};

inline ThreePathFixture three_path_fixture() {
  constexpr std::array<double, 3> lengths{1.0, 2.0, 3.0};
  constexpr std::array<double, 3> capacities{10.0, 20.0, 30.0};
  ThreePathFixture fx;
  std::vector<ArcSpec> arcs;
  for (std::size_t r = 0; r < 3; ++r) {
    const auto mid = static_cast<NodeId>(2 + r);
    fx.routes[r] = {static_cast<ArcId>(arcs.size()), static_cast<ArcId>(arcs.size() + 1)};
    arcs.push_back({0, mid, lengths[r] / 2.0, capacities[r], 1.0});
    arcs.push_back({mid, 1, lengths[r] / 2.0, capacities[r], 1.0});
  }
  fx.instance = {build_graph(5, arcs, Orientation::undirected), 0, 1};
  return fx;
}

/// Flow on a route of the fixture: the flow on its sink-side arc.
inline double route_flow(const ThreePathFixture& fx, std::span<const double> flows, std::size_t route) {
  return flows[static_cast<std::size_t>(fx.routes.at(route)[1])];
}

struct TrafficInstance {
  TrafficNetwork network;
  std::vector<OdDemand> demands;
};

/// Nine-node, eighteen-link network with four OD demands. Nodes are the
/// 1-based labels minus one; every link has free-flow time 1 and BPR
/// parameters (0.15, 4).
inline TrafficInstance hearn_network() {
  struct Row {
    int tail, head;
    double capacity;
  };
  constexpr std::array<Row, 18> rows{{{1, 5, 12.02}, {1, 6, 18.02}, {2, 5, 43.59}, {2, 6, 26.59}, {5, 6, 50},
                                      {5, 7, 25},    {5, 9, 35},    {6, 5, 50},    {6, 8, 25},    {6, 9, 35},
                                      {7, 3, 25},    {7, 4, 24},    {7, 8, 50},    {8, 2, 39},    {8, 4, 43},
                                      {8, 7, 50},    {9, 7, 35},    {9, 8, 25}}};
  std::vector<TrafficLink> links;
  for (const Row& r : rows) links.push_back({r.tail - 1, r.head - 1, r.capacity, 1.0, BprParams{}});
  TrafficInstance inst;
  inst.network = make_traffic_network(9, links);
  inst.demands = {{0, 2, 10.0}, {0, 3, 20.0}, {1, 2, 30.0}, {1, 3, 40.0}};
  return inst;
}

}  // namespace physarum
