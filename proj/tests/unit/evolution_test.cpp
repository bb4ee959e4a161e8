#include <functional>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "figforge/error.hpp"
#include "figforge/evolution/evolution.hpp"
#include "figforge/middleware/json_io.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::evolution;
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

/// Proposes a body that reads an undeclared parameter.
class BrokenConstructor final : public middleware::ConstructorPort {
 public:
  std::vector<json> extract(const middleware::ExtractionInput&) override { return {}; }
  std::vector<std::string> find_redundant(const std::string&, const std::string&,
                                          const std::vector<middleware::Middleware>&) override {
    return {};
  }
  json mutate(const middleware::Middleware& parent) override {
    json p = middleware::proposal_json(parent);
    p["body"][0]["x"] = "ghost * 2";
    return p;
  }
  json crossover(const std::vector<middleware::Middleware>& parents) override {
    return mutate(parents.front());
  }
};

middleware::Repository scored_repository(const retrieval::EmbeddingProvider& provider) {
  middleware::Repository repo;
  repo.add(test::box_middleware("weak", "vision", "encoder"), "vision", "encoder", provider);
  repo.add(test::box_middleware("strong", "vision", "decoder"), "vision", "decoder", provider);
  repo.add(test::box_middleware("young", "vision", "decoder"), "vision", "decoder", provider);
  repo.add(test::box_middleware("other", "graphs", "readout"), "graphs", "readout", provider);
  for (int i = 0; i < 3; ++i) repo.record_usage("weak", 0.2);
  for (int i = 0; i < 3; ++i) repo.record_usage("strong", 0.9);
  repo.record_usage("young", 0.1);
  return repo;
}

struct Scripted {
  retrieval::TrigramEmbedding provider;
  agents::ScriptedBackend chat{{test::fixtures_dir() / "transcripts" / "base"}};
  pipeline::Services services() {
    pipeline::Services s;
    s.provider = &provider;
    s.backends = agents::Backends::uniform(chat);
    return s;
  }
};

}  // namespace

TEST(Sample, DistinctSeededAndClamped) {
  std::mt19937_64 a(11);
  std::mt19937_64 b(11);
  auto s1 = sample_indices(10, 4, a);
  EXPECT_EQ(s1, sample_indices(10, 4, b));
  EXPECT_EQ(std::set<std::size_t>(s1.begin(), s1.end()).size(), 4u);
  for (auto i : s1) EXPECT_LT(i, 10u);
  std::mt19937_64 c(1);
  EXPECT_EQ(sample_indices(3, 8, c).size(), 3u);
}

TEST(Config, ValidationAndJson) {
  EvolutionConfig config;
  config.validate();
  config.batch_size = 3;
  config.epsilon = 0.2;
  auto back = evolution_config_from_json(to_json(config));
  EXPECT_EQ(to_json(back), to_json(config));
  EvolutionConfig bad;
  bad.batch_size = 0;
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::kInvalidArgument);
  bad = EvolutionConfig{};
  bad.max_iterations = -1;
  EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::kInvalidArgument);
}

TEST(Selection, DeletesOnlyProvenWeakMiddlewares) {
  retrieval::TrigramEmbedding provider;
  auto repo = scored_repository(provider);
  EvolutionConfig config;  // tau 0.5, N_min 3
  EXPECT_EQ(op_selection(repo, config), std::vector<std::string>{"weak"});
  EXPECT_EQ(repo.find("weak"), nullptr);
  EXPECT_NE(repo.find("young"), nullptr);
  EXPECT_NE(repo.find("strong"), nullptr);
  EXPECT_TRUE(repo.concepts("vision") == std::vector<std::string>{"decoder"});
}

TEST(Mutation, AddsVariantUnderParentConcept) {
  retrieval::TrigramEmbedding provider;
  auto repo = scored_repository(provider);
  test::StubConstructor stub;
  auto id = op_mutation(repo, "strong", stub, provider);
  EXPECT_EQ(id, "strong~mut1");
  const auto* child = repo.find(id);
  ASSERT_NE(child, nullptr);
  EXPECT_EQ(child->concept_id, "decoder");
  EXPECT_EQ(child->theme, "vision");
  EXPECT_EQ(child->provenance.kind, middleware::ProvenanceKind::kMutated);
  EXPECT_EQ(child->provenance.parents, std::vector<std::string>{"strong"});
  EXPECT_EQ(child->usage_n, 0);
  EXPECT_EQ(op_mutation(repo, "strong", stub, provider), "strong~mut2");
}

TEST(Mutation, InvalidProposalLeavesRepositoryUnchanged) {
  retrieval::TrigramEmbedding provider;
  auto repo = scored_repository(provider);
  const auto before = repo.to_json();
  BrokenConstructor broken;
  EXPECT_EQ(kind_of([&] { op_mutation(repo, "strong", broken, provider); }), ErrorKind::kValidation);
  EXPECT_EQ(repo.to_json(), before);
  test::StubConstructor stub;
  EXPECT_EQ(kind_of([&] { op_mutation(repo, "missing", stub, provider); }), ErrorKind::kUnknownId);
}

TEST(Crossover, OffspringJoinsBestParentConcept) {
  retrieval::TrigramEmbedding provider;
  auto repo = scored_repository(provider);
  test::StubConstructor stub;
  auto id = op_crossover(repo, {"weak", "strong"}, stub, provider);
  EXPECT_EQ(id, "weak~x1");
  const auto* child = repo.find(id);
  ASSERT_NE(child, nullptr);
  EXPECT_EQ(child->concept_id, "decoder");
  EXPECT_EQ(child->provenance.kind, middleware::ProvenanceKind::kCrossover);
  EXPECT_EQ(child->provenance.parents, (std::vector<std::string>{"weak", "strong"}));
  EXPECT_EQ(kind_of([&] { op_crossover(repo, {"weak"}, stub, provider); }), ErrorKind::kPrecondition);
  EXPECT_EQ(kind_of([&] { op_crossover(repo, {"weak", "other"}, stub, provider); }),
            ErrorKind::kPrecondition);
}

TEST(Objective, MeanQualityPlusMeanInvokedEfficacy) {
  retrieval::TrigramEmbedding provider;
  figforge::testing::RuleBackend rule;
  pipeline::Services services;
  services.provider = &provider;
  services.backends = agents::Backends::uniform(rule);
  auto store = pipeline::ExperienceStore::load(test::fixtures_dir() / "store.json");
  auto repo = middleware::Repository::load(test::fixtures_dir() / "repository.json");
  auto accepted = store.accepted();
  std::vector<const pipeline::ExperiencePair*> batch = {accepted[0], accepted[1]};
  auto report = evaluate_objective(repo, batch, services, search::SearchParams{}, 7);
  double quality = 0.0;
  for (const auto& p : report.papers) {
    ASSERT_TRUE(p.quality.has_value()) << p.id << ": " << p.error;
    quality += *p.quality;
  }
  quality /= static_cast<double>(report.papers.size());
  double mes = 0.0;
  for (const auto& [id, value] : report.invoked_mes) {
    EXPECT_DOUBLE_EQ(value, *repo.find(id)->mes());
    mes += value;
  }
  mes /= static_cast<double>(report.invoked_mes.size());
  EXPECT_NEAR(report.mean_quality, quality, 1e-12);
  EXPECT_NEAR(report.mean_mes, mes, 1e-12);
  EXPECT_NEAR(report.value, quality + mes, 1e-12);
}

TEST(Evolve, ZeroIterationsReturnsInput) {
  Scripted env;
  auto store = pipeline::ExperienceStore::load(test::fixtures_dir() / "store.json");
  auto repo = middleware::Repository::load(test::fixtures_dir() / "repository.json");
  EvolutionConfig config;
  config.max_iterations = 0;
  auto result = evolve(repo, store, config, env.services(), {}, 7);
  EXPECT_TRUE(result.records.empty());
  EXPECT_EQ(result.repository.to_json(), repo.to_json());
}

TEST(Evolve, ReplaysRecordedRun) {
  Scripted env;
  auto store = pipeline::ExperienceStore::load(test::fixtures_dir() / "store.json");
  auto repo = middleware::Repository::load(test::fixtures_dir() / "repository.json");
  EvolutionConfig config;
  config.batch_size = 2;
  config.max_iterations = 2;
  auto result = evolve(repo, store, config, env.services(), {}, 7);
  ASSERT_EQ(result.records.size(), 2u);
  ASSERT_FALSE(result.trajectory.empty());
  EXPECT_DOUBLE_EQ(result.trajectory.front(), result.initial.value);
  double last = result.initial.value;
  std::size_t accepted = 0;
  for (const auto& r : result.records) {
    EXPECT_DOUBLE_EQ(r.objective_before, last);
    if (r.accepted) {
      EXPECT_GE(r.objective_after, r.objective_before);
      last = r.objective_after;
      ++accepted;
    }
  }
  EXPECT_EQ(result.trajectory.size(), 1 + accepted);
  auto report = to_json(result, config, 7);
  EXPECT_EQ(report.at("records").size(), 2u);
}
