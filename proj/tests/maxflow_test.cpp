#include <gtest/gtest.h>

#include "physarum/gen.hpp"
#include "physarum/maxflow.hpp"
#include "support/oracles.hpp"

using namespace physarum;

namespace {

Graph diamond(Orientation mode = Orientation::directed) {
  return build_graph(4, std::vector<ArcSpec>{{0, 1, 1, 3}, {0, 2, 1, 2}, {1, 3, 1, 2}, {2, 3, 1, 3}}, mode);
}

}  // namespace

TEST(EmbedVirtualPath, LengthAndCapacity) {
  std::vector<ArcSpec> arcs;
  for (NodeId i = 0; i < 187; ++i) arcs.push_back({i, i + 1, 1.0, 1.0});
  const Graph g = build_graph(188, arcs, Orientation::undirected);
  const auto aug = embed_virtual_path(g, 0, 187);
  EXPECT_DOUBLE_EQ(aug.virtual_length, 18700.0);
  EXPECT_FALSE(aug.virtual_node.has_value());
  ASSERT_EQ(aug.virtual_arcs.size(), 1u);
  EXPECT_DOUBLE_EQ(aug.graph.arc(aug.virtual_outlet()).length, 18700.0);

  EXPECT_DOUBLE_EQ(embed_virtual_path(diamond(), 0, 3).virtual_capacity, 1000.0);
}

TEST(EmbedVirtualPath, VirtualNodeWhenSourceAndSinkAreAdjacent) {
  const Graph g = build_graph(2, std::vector<ArcSpec>{{1, 0, 1.0, 5.0}}, Orientation::directed);
  const auto aug = embed_virtual_path(g, 0, 1);
  ASSERT_TRUE(aug.virtual_node.has_value());
  EXPECT_EQ(*aug.virtual_node, 2);
  EXPECT_EQ(aug.graph.node_count(), 3u);
  ASSERT_EQ(aug.virtual_arcs.size(), 2u);
  const Arc& in = aug.graph.arc(aug.virtual_arcs[0]);
  const Arc& out = aug.graph.arc(aug.virtual_arcs[1]);
  EXPECT_EQ(in.tail, 0);
  EXPECT_EQ(in.head, 2);
  EXPECT_EQ(out.tail, 2);
  EXPECT_EQ(out.head, 1);
  EXPECT_DOUBLE_EQ(in.length + out.length, aug.virtual_length);
}

TEST(EmbedVirtualPath, VirtualRouteIsTheLongest) {
  physarum::Rng rng(2);
  const Graph g = testing_support::random_small_graph(rng, 10, 0.5, Orientation::directed);
  const auto aug = embed_virtual_path(with_unit_lengths(g), 0, 9);
  EXPECT_GT(aug.virtual_length, static_cast<double>(g.arc_count()));
}

TEST(CppaMaxflow, SingleArc) {
  const Graph g = build_graph(2, std::vector<ArcSpec>{{0, 1, 1.0, 5.0}}, Orientation::directed);
  const auto r = cppa_maxflow(g, 0, 1, CppaConfig{});
  EXPECT_NEAR(r.max_flow, 5.0, 0.05);
  ASSERT_TRUE(r.rounded.has_value());
  EXPECT_EQ(*r.rounded, 5.0);
}

TEST(CppaMaxflow, Diamond) {
  for (auto mode : {Orientation::directed, Orientation::undirected}) {
    const auto r = cppa_maxflow(diamond(mode), 0, 3, CppaConfig{});
    EXPECT_NEAR(r.max_flow, 4.0, 0.05);
    EXPECT_EQ(r.value(), 4.0);
    EXPECT_TRUE(r.converged());
    EXPECT_GE(r.virtual_flow, 0.0);
  }
}

TEST(CppaMaxflow, TwoDisjointPaths) {
  const Graph g = build_graph(4, std::vector<ArcSpec>{{0, 1, 1, 1}, {1, 3, 1, 1}, {0, 2, 1, 2}, {2, 3, 1, 2}},
                              Orientation::directed);
  const auto r = cppa_maxflow(g, 0, 3, CppaConfig{});
  EXPECT_NEAR(r.max_flow, 3.0, 0.05);
  EXPECT_EQ(r.flows.size(), 4u);
}

TEST(CppaMaxflow, NonIntegralCapacitiesAreNotRounded) {
  const Graph g = build_graph(3, std::vector<ArcSpec>{{0, 1, 1, 2.5}, {1, 2, 1, 1.25}}, Orientation::directed);
  const auto r = cppa_maxflow(g, 0, 2, CppaConfig{});
  EXPECT_FALSE(r.rounded.has_value());
  EXPECT_NEAR(r.value(), 1.25, 0.02);
}

TEST(CppaMaxflow, AgreesWithOracleOnSmallRandomGraphs) {
  physarum::Rng rng(77);
  int exact = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto mode = t % 2 ? Orientation::directed : Orientation::undirected;
    const Graph g = testing_support::random_small_graph(rng, 9, 0.45, mode);
    const double o = oracle_maxflow(g, 0, 8).value;
    if (o == 0.0) continue;
    const auto r = cppa_maxflow(g, 0, 8, CppaConfig{});
    EXPECT_LT(std::abs(r.max_flow - o), 0.5) << "trial " << t;
    exact += r.value() == o;
    EXPECT_LE(max_relative_excess(g, r.flows), 5e-2);
  }
  EXPECT_GT(exact, 0);
}

TEST(OracleMaxflow, Examples) {
  const auto o = oracle_maxflow(diamond(), 0, 3);
  EXPECT_EQ(o.value, 4.0);
  EXPECT_EQ(cut_capacity(diamond(), o.source_side), 4.0);

  const Graph split = build_graph(4, std::vector<ArcSpec>{{0, 1, 1, 3}, {2, 3, 1, 3}}, Orientation::directed);
  EXPECT_EQ(oracle_maxflow(split, 0, 3).value, 0.0);

  const Graph one = build_graph(2, std::vector<ArcSpec>{{0, 1, 1, 5}}, Orientation::directed);
  EXPECT_EQ(oracle_maxflow(one, 0, 1).value, 5.0);
  // Directed arc pointing the wrong way carries nothing; undirected carries.
  EXPECT_EQ(oracle_maxflow(one, 1, 0).value, 0.0);
  const Graph undirected = build_graph(2, std::vector<ArcSpec>{{0, 1, 1, 5}}, Orientation::undirected);
  EXPECT_EQ(oracle_maxflow(undirected, 1, 0).value, 5.0);
  EXPECT_EQ(oracle_maxflow(undirected, 1, 0).flows[0], -5.0);
}

TEST(OracleMaxflow, MatchesBruteForceMinCut) {
  physarum::Rng rng(123);
  for (int t = 0; t < 60; ++t) {
    const auto mode = t % 2 ? Orientation::directed : Orientation::undirected;
    const auto n = static_cast<std::size_t>(rng.uniform_int(3, 10));
    const Graph g = testing_support::random_small_graph(rng, n, 0.5, mode, 10);
    const auto s = 0;
    const auto sink = static_cast<NodeId>(n - 1);
    const auto o = oracle_maxflow(g, s, sink);
    EXPECT_DOUBLE_EQ(o.value, testing_support::brute_min_cut(g, s, sink)) << "trial " << t;
    EXPECT_DOUBLE_EQ(o.value, cut_capacity(g, o.source_side));
    EXPECT_TRUE(validate_capacity(g, o.flows, 0.0).ok());
  }
}

TEST(OracleMaxflow, BadTerminals) {
  EXPECT_THROW(oracle_maxflow(diamond(), 0, 0), Error);
  EXPECT_THROW(oracle_maxflow(diamond(), 0, 9), Error);
  EXPECT_THROW(cppa_maxflow(diamond(), 2, 2, CppaConfig{}), Error);
}
