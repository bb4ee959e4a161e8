#include <cmath>
#include <functional>

#include <gtest/gtest.h>
#include <json.hpp>

#include "figforge/error.hpp"
#include "figforge/search/explorer.hpp"
#include "figforge/search/tree.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::search;
using nlohmann::json;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no figforge::Error thrown";
  return ErrorKind::kIo;
}

NodeId child(DrawingTree& tree, NodeId parent, double quality, int iteration = 1) {
  return tree.add_child(parent, scene::Canvas(), agents::DrawingChoice{}, "c", quality, "",
                        iteration, 0);
}

agents::Backends scenario_backends(test::PathScenario& s) {
  agents::Backends b;
  b.parser = &s.backend();
  b.drawer = &s.backend();
  b.evaluator = &s.backend();
  return b;
}

agents::ConceptGraph graph_of(std::vector<std::pair<std::string, int>> concepts,
                              std::vector<std::pair<std::string, std::string>> edges) {
  agents::ConceptGraph g;
  g.theme = "t";
  for (auto& [id, hint] : concepts) g.concepts.push_back({id, id, "", hint});
  for (auto& [s, t] : edges) g.edges.push_back({s, t, ""});
  return g;
}

std::vector<std::string> ids(const std::vector<agents::Concept>& order) {
  std::vector<std::string> out;
  for (const auto& c : order) out.push_back(c.id);
  return out;
}

}  // namespace

TEST(Uct, HandValues) {
  EXPECT_DOUBLE_EQ(uct_value(0, 0, 1.0), 2.0 + std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(uct_value(1, 1, 1.0), 1.0 + 1.0);
  EXPECT_DOUBLE_EQ(uct_value(3, 7, 0.5), 0.5 + 0.5 * 0.5);
  EXPECT_DOUBLE_EQ(uct_value(2, 5, 0.0), 2.0 / 3.0);
}

TEST(Params, ValidationAndJson) {
  SearchParams p;
  p.validate();
  p.a1 = 4;
  p.beta = 0.25;
  EXPECT_EQ(search_params_from_json(to_json(p)), p);
  SearchParams bad;
  bad.a1 = 0;
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::kInvalidArgument);
  bad = SearchParams{};
  bad.beta = -1;
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::kInvalidArgument);
  bad = SearchParams{};
  bad.a2 = -1;
  EXPECT_EQ(kind_of([&] { DrawingTree(scene::Canvas(), bad, 1); }), ErrorKind::kInvalidArgument);
}

TEST(Tree, OwnScoreIsQualityGainOverParent) {
  DrawingTree tree(scene::Canvas(), SearchParams{}, 3);
  NodeId a = child(tree, tree.root(), 0.4);
  NodeId b = child(tree, a, 0.3);
  EXPECT_DOUBLE_EQ(tree.node(a).own_score, 0.4);
  EXPECT_DOUBLE_EQ(tree.node(b).own_score, 0.3 - 0.4);
  EXPECT_EQ(tree.node(b).concepts_done, 2);
  EXPECT_EQ(tree.path_to(b), (std::vector<NodeId>{0, a, b}));
  EXPECT_TRUE(tree.invariant_problems().empty());
  EXPECT_EQ(tree.seed(), 3u);
}

TEST(Tree, RanksOrderByOwnScoreThenCreation) {
  DrawingTree tree(scene::Canvas(), SearchParams{}, 1);
  NodeId a = child(tree, 0, 0.2);
  NodeId b = child(tree, 0, 0.5);
  NodeId c = child(tree, 0, 0.2);
  assign_ranks(tree, {a, b, c});
  EXPECT_EQ(tree.node(b).rank, 0);
  EXPECT_EQ(tree.node(a).rank, 1);
  EXPECT_EQ(tree.node(c).rank, 2);
}

TEST(Backprop, HandWorkedTree) {
  DrawingTree tree(scene::Canvas(), SearchParams{}, 1);
  NodeId a = child(tree, 0, 0.5);           // own 0.5
  NodeId b = child(tree, 0, 0.3);           // own 0.3
  NodeId a1 = child(tree, a, 0.9);          // own 0.4
  NodeId a2 = child(tree, a, 0.4);          // own -0.1
  NodeId a1x = child(tree, a1, 1.0);        // own 0.1
  NodeId old = child(tree, b, 0.9, 0);      // earlier iteration, ignored
  auto f = backpropagate(tree, {a, b}, 1);
  EXPECT_DOUBLE_EQ(f.at(a1x), 0.1);
  EXPECT_DOUBLE_EQ(f.at(a1), 0.4 + 0.1);
  EXPECT_DOUBLE_EQ(f.at(a2), -0.1);
  EXPECT_DOUBLE_EQ(f.at(a), 0.5 + (0.5 + -0.1) / 2.0);
  EXPECT_DOUBLE_EQ(f.at(b), 0.3);
  (void)old;
  EXPECT_EQ(select_best(tree, {a, b}, f), a);
  EXPECT_EQ(tree.terminal(), a);
}

TEST(Select, TiesPreferLowerRank) {
  DrawingTree tree(scene::Canvas(), SearchParams{}, 1);
  NodeId a = child(tree, 0, 0.2);
  NodeId b = child(tree, 0, 0.2);
  tree.node(a).rank = 1;
  tree.node(b).rank = 0;
  std::map<NodeId, double> f = {{a, 0.7}, {b, 0.7}};
  EXPECT_EQ(select_best(tree, {a, b}, f), b);
}

TEST(Simulation, TargetMaximisesUct) {
  DrawingTree tree(scene::Canvas(), SearchParams{}, 1);
  NodeId a = child(tree, 0, 0.5);
  NodeId b = child(tree, 0, 0.3);
  assign_ranks(tree, {a, b});
  // a: rank 0, no children -> highest.
  EXPECT_EQ(pick_simulation_target(tree, {a, b}), a);
  // Give a three children: 2 + sqrt(0.5) = 2.707 vs b: 1 + sqrt(2) = 2.414.
  for (int i = 0; i < 3; ++i) child(tree, a, 0.6);
  EXPECT_EQ(pick_simulation_target(tree, {a, b}), a);
  for (int i = 0; i < 20; ++i) child(tree, a, 0.6);
  // a: 2 + sqrt(2/24) = 2.289 < 2.414.
  EXPECT_EQ(pick_simulation_target(tree, {a, b}), b);
}

TEST(ConceptOrder, DependenciesFirst) {
  auto g = graph_of({{"loss", 0}, {"decoder", 1}, {"encoder", 2}},
                    {{"encoder", "decoder"}, {"decoder", "loss"}});
  Warnings w;
  EXPECT_EQ(ids(concept_order(g, &w)), (std::vector<std::string>{"encoder", "decoder", "loss"}));
  EXPECT_TRUE(w.empty());
}

TEST(ConceptOrder, IndependentConceptsFollowHints) {
  auto g = graph_of({{"b", 1}, {"a", 0}, {"c", 2}}, {});
  EXPECT_EQ(ids(concept_order(g, nullptr)), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(ConceptOrder, CycleIsBrokenWithWarning) {
  auto g = graph_of({{"a", 0}, {"b", 1}}, {{"a", "b"}, {"b", "a"}});
  Warnings w;
  EXPECT_EQ(ids(concept_order(g, &w)), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(w.size(), 1u);
}

TEST(Explorer, RunDrawsEveryConceptInOrder) {
  test::PathScenario s(3, 2, 5);
  SearchParams params;
  params.a1 = 2;
  params.a2 = 2;
  DrawingTree tree;
  auto result = run(s.paper(), s.repository(), s.provider(), scenario_backends(s), params, 5, tree);
  EXPECT_EQ(result.iterations.size(), 3u);
  EXPECT_EQ(s.decode(result.canvas).size(), 3u);
  EXPECT_EQ(tree.node(tree.terminal()).concepts_done, 3);
  EXPECT_TRUE(tree.invariant_problems().empty());
  // One usage per concept on the winning path.
  EXPECT_EQ(result.usages.size(), 3u);
  for (const auto& u : result.usages) EXPECT_DOUBLE_EQ(u.score, 0.5);
  // The selected child of each iteration is the next node on the path.
  auto path = tree.path_to(tree.terminal());
  for (std::size_t i = 0; i < result.iterations.size(); ++i) {
    EXPECT_EQ(result.iterations[i].selected, path[i + 1]);
  }
}

TEST(Explorer, DeterministicAcrossRuns) {
  auto once = [] {
    test::PathScenario s(3, 3, 9);
    DrawingTree tree;
    SearchParams params;
    run(s.paper(), s.repository(), s.provider(), scenario_backends(s), params, 9, tree);
    return to_json(tree).dump();
  };
  EXPECT_EQ(once(), once());
}

TEST(Explorer, ExpansionRegeneratesWhenAllBelowThreshold) {
  test::PathScenario s(2, 2, 1);
  int drawer_calls = 0;
  figforge::testing::FunctionBackend flat([&](const agents::ChatRequest& r) {
    if (r.role == "evaluator") return std::string(R"({"score":0.0,"feedback":"flat"})");
    if (r.role == "drawer") ++drawer_calls;
    return s.backend().complete(r);
  });
  agents::Backends b = agents::Backends::uniform(flat);
  Explorer explorer(s.repository(), s.provider(), b);
  explorer.prepare(agents::parse_paper(s.paper(), flat));
  SearchParams params;
  params.a1 = 2;
  params.a2 = 0;
  params.max_regen_rounds = 2;
  DrawingTree tree(scene::Canvas(), params, 1);
  auto summary = explorer.iterate(tree, 1);
  EXPECT_EQ(summary.regen_rounds, 2);
  EXPECT_EQ(drawer_calls, 2 * 3);
  EXPECT_EQ(tree.size(), 3u);
}

TEST(Explorer, FailedSlotsAreDroppedAndTotalFailureThrows) {
  test::PathScenario s(2, 2, 1);
  int calls = 0;
  figforge::testing::FunctionBackend flaky([&](const agents::ChatRequest& r) -> std::string {
    if (r.role == "drawer" && json::parse(r.user_content).value("variant", 0) == 1) {
      throw Error(ErrorKind::kBackendFailure, "slot down");
    }
    ++calls;
    return s.backend().complete(r);
  });
  Explorer explorer(s.repository(), s.provider(), agents::Backends::uniform(flaky));
  explorer.prepare(agents::parse_paper(s.paper(), flaky));
  SearchParams params;
  params.a1 = 2;
  params.a2 = 0;
  DrawingTree tree(scene::Canvas(), params, 1);
  auto children = explorer.expand(tree, tree.root(), 1);
  EXPECT_EQ(children.size(), 1u);
  EXPECT_FALSE(explorer.warnings().empty());

  figforge::testing::FunctionBackend dead([&](const agents::ChatRequest& r) -> std::string {
    if (r.role == "drawer") throw Error(ErrorKind::kBackendFailure, "down");
    return s.backend().complete(r);
  });
  Explorer stuck(s.repository(), s.provider(), agents::Backends::uniform(dead));
  stuck.prepare(agents::parse_paper(s.paper(), dead));
  DrawingTree empty_tree(scene::Canvas(), params, 1);
  EXPECT_EQ(kind_of([&] { stuck.expand(empty_tree, empty_tree.root(), 1); }),
            ErrorKind::kExpansionFailure);
}

TEST(Explorer, EmptyRepositoryIsPrecondition) {
  test::PathScenario s(2, 2, 1);
  middleware::Repository empty;
  Explorer explorer(empty, s.provider(), scenario_backends(s));
  EXPECT_EQ(kind_of([&] { explorer.prepare(agents::parse_paper(s.paper(), s.backend())); }),
            ErrorKind::kPrecondition);
}

TEST(TreeJson, CarriesFinalScores) {
  DrawingTree tree(scene::Canvas(), SearchParams{}, 1);
  NodeId a = child(tree, 0, 0.5);
  auto f = backpropagate(tree, {a}, 1);
  auto j = to_json(tree, &f);
  ASSERT_TRUE(j.contains("nodes"));
  EXPECT_EQ(j.at("nodes").size(), 2u);
}
