#include <gtest/gtest.h>

#include "physarum/gen.hpp"
#include "physarum/mincostflow.hpp"
#include "support/oracles.hpp"

using namespace physarum;

namespace {

// Route A: 0 -> 1 -> 3 at unit cost 1 per arc; route B: 0 -> 2 -> 3 at cost 2.
Graph parallel_routes() {
  return build_graph(4, std::vector<ArcSpec>{{0, 1, 1, 2, 1}, {1, 3, 1, 2, 1}, {0, 2, 1, 2, 2}, {2, 3, 1, 2, 2}},
                     Orientation::directed);
}

}  // namespace

TEST(CostLengths, IdentityAndFloor) {
  const Graph g = build_graph(3, std::vector<ArcSpec>{{0, 1, 1, 1, 7}, {1, 2, 1, 1, 0}}, Orientation::directed);
  const auto l = cost_lengths(g);
  EXPECT_DOUBLE_EQ(l[0], 7.0);
  EXPECT_DOUBLE_EQ(l[1], kCostFloor);
}

TEST(CostLengths, MarginalCostHook) {
  const UnitCostFunction f{[](double q) { return 1.0 + q; }, [](double) { return 1.0; }};
  EXPECT_DOUBLE_EQ(marginal_cost_length(f, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(marginal_cost_length(f, -2.0), 5.0);
  const UnitCostFunction zero{[](double) { return 0.0; }, [](double) { return 0.0; }};
  EXPECT_DOUBLE_EQ(marginal_cost_length(zero, 3.0), kCostFloor);
}

TEST(TotalCost, Examples) {
  const Graph g = parallel_routes();
  EXPECT_DOUBLE_EQ(total_cost(g, std::vector<double>(4, 0.0)), 0.0);
  const Graph one = build_graph(2, std::vector<ArcSpec>{{0, 1, 1, 5, 3}}, Orientation::directed);
  EXPECT_DOUBLE_EQ(total_cost(one, std::vector<double>{2.0}), 6.0);
  EXPECT_DOUBLE_EQ(total_cost(g, oracle_mcmf(g, 0, 3).flows), 12.0);
  EXPECT_THROW(total_cost(g, std::vector<double>{1.0}), Error);
}

TEST(OracleMcmf, Examples) {
  const auto a = oracle_mcmf(parallel_routes(), 0, 3);
  EXPECT_EQ(a.max_flow, 4.0);
  EXPECT_EQ(a.min_cost, 12.0);

  const Graph diamond = build_graph(4, std::vector<ArcSpec>{{0, 1, 1, 3, 1}, {0, 2, 1, 2, 1}, {1, 3, 1, 2, 1}, {2, 3, 1, 3, 1}},
                                    Orientation::directed);
  const auto d = oracle_mcmf(diamond, 0, 3);
  EXPECT_EQ(d.max_flow, 4.0);
  EXPECT_EQ(d.min_cost, 8.0);

  const Graph one = build_graph(2, std::vector<ArcSpec>{{0, 1, 1, 5, 3}}, Orientation::directed);
  const auto s = oracle_mcmf(one, 0, 1);
  EXPECT_EQ(s.max_flow, 5.0);
  EXPECT_EQ(s.min_cost, 15.0);
}

TEST(OracleMcmf, MatchesBruteForceEnumeration) {
  physarum::Rng rng(55);
  int checked = 0;
  while (checked < 40) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(3, 5));
    const Graph g = testing_support::random_small_graph(rng, n, 0.7, Orientation::directed, 3);
    if (g.arc_count() > 8) continue;
    const auto sink = static_cast<NodeId>(n - 1);
    const auto brute = testing_support::brute_mcmf(g, 0, sink);
    const auto o = oracle_mcmf(g, 0, sink);
    EXPECT_DOUBLE_EQ(o.max_flow, brute.max_flow);
    EXPECT_DOUBLE_EQ(o.min_cost, brute.min_cost);
    EXPECT_DOUBLE_EQ(total_cost(g, o.flows), o.min_cost);
    EXPECT_DOUBLE_EQ(o.max_flow, oracle_maxflow(g, 0, sink).value);
    ++checked;
  }
}

TEST(CppaMcmf, ParallelRoutes) {
  const Graph g = parallel_routes();
  CppaConfig cfg;
  cfg.epsilon = 1e-6;
  const auto r = cppa_mcmf(g, 0, 3, cfg);
  EXPECT_EQ(r.max_flow, 4.0);
  EXPECT_NEAR(r.min_cost, 12.0, 0.05);
  EXPECT_NEAR(r.min_cost, total_cost(g, r.flows), 1e-12);
  EXPECT_EQ(r.phase1.value(), r.max_flow);
}

TEST(CppaMcmf, SingleArc) {
  const Graph one = build_graph(2, std::vector<ArcSpec>{{0, 1, 1, 5, 3}}, Orientation::directed);
  const auto r = cppa_mcmf(one, 0, 1, CppaConfig{});
  EXPECT_EQ(r.max_flow, 5.0);
  EXPECT_NEAR(r.min_cost, 15.0, 1e-6);
  EXPECT_TRUE(r.converged());
}

TEST(CppaMcmf, ZeroMaxFlow) {
  const Graph split = build_graph(4, std::vector<ArcSpec>{{0, 1, 1, 3, 1}, {2, 3, 1, 3, 1}}, Orientation::directed);
  const auto r = cppa_mcmf(split, 0, 3, CppaConfig{});
  EXPECT_EQ(r.max_flow, 0.0);
  EXPECT_EQ(r.min_cost, 0.0);
}

TEST(CppaMcmf, RawInjectionOption) {
  const Graph g = parallel_routes();
  McmfOptions opt;
  opt.injection = Phase2Injection::raw;
  const auto r = cppa_mcmf(g, 0, 3, CppaConfig{}, opt);
  EXPECT_EQ(r.max_flow, r.phase1.max_flow);
  EXPECT_NEAR(r.max_flow, 4.0, 0.05);
}

TEST(CppaMcmf, SecondPhaseConservesFlow) {
  const Graph g = parallel_routes();
  const auto r = cppa_mcmf(g, 0, 3, CppaConfig{});
  const auto b = source_sink_injections(4, 0, 3, r.max_flow);
  EXPECT_TRUE(validate_conservation(g, r.flows, b, 1e-6 * r.max_flow).ok());
  EXPECT_TRUE(validate_capacity(g, r.flows, 1e-2).ok());
}
