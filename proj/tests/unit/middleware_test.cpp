#include <functional>

#include <gtest/gtest.h>
#include <json.hpp>

#include "figforge/error.hpp"
#include "figforge/middleware/expression.hpp"
#include "figforge/middleware/json_io.hpp"
#include "figforge/middleware/repository.hpp"
#include "figforge/util/text.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::middleware;
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

double eval(const std::string& text, const Env& env = {}) {
  return Expression::parse(text).evaluate_number(env);
}

Middleware feature_pyramid() {
  return middleware_from_json(json::parse(R"json({
    "id": "fp", "name": "Feature_Pyramid", "description": "stacked pyramid levels",
    "theme": "image segmentation", "concept": "feature pyramid",
    "params": [
      {"name": "x", "kind": "number", "default": 0},
      {"name": "y", "kind": "number", "default": 0},
      {"name": "w", "kind": "number", "default": 90, "min": 10, "max": 1000},
      {"name": "h", "kind": "number", "default": 120, "min": 10, "max": 1000},
      {"name": "num_levels", "kind": "integer", "default": 3, "min": 1, "max": 8},
      {"name": "shape_mode", "kind": "string_enum", "default": "rectangle",
       "allowed": ["rectangle", "cuboid"]}
    ],
    "body": [
      {"emit": "element", "name": "level{i}", "repeat": {"var": "i", "count": "num_levels"},
       "kind": "=pick(shape_mode, 'cuboid', 'cuboid', 'rect')",
       "x": "x + i * w / 10", "y": "y + i * (h / num_levels)",
       "width": "w - i * w / 5", "height": "h / num_levels - 4",
       "label": "L{i + 1}"}
    ],
    "usage": {"S": 0, "N": 0},
    "provenance": {"kind": "extracted", "source_paper": "seg-pyramid"}
  })json"));
}

Middleware attention_map() {
  return middleware_from_json(json::parse(R"json({
    "id": "am", "name": "Attention_map", "description": "square attention map",
    "theme": "image segmentation", "concept": "attention map",
    "params": [
      {"name": "x", "kind": "number", "default": 0},
      {"name": "y", "kind": "number", "default": 0},
      {"name": "w", "kind": "number", "default": 40, "min": 4},
      {"name": "h", "kind": "number", "default": 40, "min": 4},
      {"name": "pattern", "kind": "string_enum", "default": "diagonal",
       "allowed": ["diagonal", "full"]}
    ],
    "body": [
      {"emit": "element", "name": "base", "kind": "rect", "x": "x", "y": "y", "width": "w", "height": "h"},
      {"emit": "element", "name": "cell{i}", "repeat": {"var": "i", "count": 4},
       "when": "pattern == 'diagonal'", "kind": "rect", "fill_color": "#F8CECC",
       "x": "x + i * w / 4", "y": "y + i * h / 4", "width": "w / 4", "height": "h / 4"}
    ],
    "usage": {"S": 0, "N": 0},
    "provenance": {"kind": "extracted", "source_paper": "seg-attention"}
  })json"));
}

/// Fixed vectors per normalized text; unknown texts map to a shared axis.
class TableEmbedding final : public retrieval::EmbeddingProvider {
 public:
  std::size_t dimension() const override { return 3; }
  retrieval::Vector embed(std::string_view text) const override {
    const std::string t = retrieval::normalize_text(text);
    if (t.find("attention") != std::string::npos) return {1.0, 0.0, 0.0};
    if (t.find("decoder") != std::string::npos) return {0.0, 1.0, 0.0};
    return {0.0, 0.0, 1.0};
  }
  std::string name() const override { return "table"; }
};

}  // namespace

// --- expressions ------------------------------------------------------------

TEST(Expression, ArithmeticPrecedence) {
  EXPECT_DOUBLE_EQ(eval("1 + 2 * 3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2) * 3"), 9.0);
  EXPECT_DOUBLE_EQ(eval("-2 * -3"), 6.0);
  EXPECT_DOUBLE_EQ(eval("7 % 4"), 3.0);
  EXPECT_DOUBLE_EQ(eval("10 / 4"), 2.5);
}

TEST(Expression, FunctionsAndIdentifiers) {
  Env env = {{"w", 90.0}, {"mode", std::string("cuboid")}, {"flag", true}};
  EXPECT_DOUBLE_EQ(eval("max(w, 100) - min(w, 3)", env), 97.0);
  EXPECT_DOUBLE_EQ(eval("floor(2.7) + ceil(2.1) + abs(-1) + sqrt(16)", env), 10.0);
  EXPECT_DOUBLE_EQ(eval("if(flag, 1, 2)", env), 1.0);
  EXPECT_EQ(Expression::parse("pick(mode, 'rectangle', 'rect', 'cuboid', 'cube')").evaluate(env),
            Value(std::string("cube")));
  EXPECT_EQ(Expression::parse("pick(mode, 'x', 'a', 'fallback')").evaluate(env),
            Value(std::string("fallback")));
  EXPECT_EQ(Expression::parse("w >= 90 && !(mode == 'rect')").evaluate(env), Value(true));
}

TEST(Expression, Errors) {
  EXPECT_EQ(kind_of([] { Expression::parse("1 +"); }), ErrorKind::kValidation);
  EXPECT_EQ(kind_of([] { Expression::parse("(1"); }), ErrorKind::kValidation);
  EXPECT_EQ(kind_of([] { eval("1 / 0"); }), ErrorKind::kEvaluation);
  EXPECT_EQ(kind_of([] { eval("sqrt(-1)"); }), ErrorKind::kEvaluation);
  EXPECT_EQ(kind_of([] { eval("missing + 1"); }), ErrorKind::kEvaluation);
  EXPECT_EQ(kind_of([] { eval("'a' + 1"); }), ErrorKind::kEvaluation);
}

TEST(Expression, IntervalBound) {
  IntervalEnv env = {{"n", Interval{1, 8}}};
  auto b = Expression::parse("n * 2 + 1").bound(env);
  ASSERT_TRUE(b.has_value());
  EXPECT_DOUBLE_EQ(b->lo, 3.0);
  EXPECT_DOUBLE_EQ(b->hi, 17.0);
  EXPECT_FALSE(Expression::parse("'text'").bound(env).has_value());
}

TEST(TextTemplate, InterpolatesAndEscapesBraces) {
  auto t = TextTemplate::parse("L{i + 1} {{raw}}");
  EXPECT_EQ(t.render({{"i", 2.0}}), "L3 {raw}");
  EXPECT_TRUE(t.has_expressions());
  EXPECT_FALSE(TextTemplate::parse("plain").has_expressions());
}

// --- instantiate --------------------------------------------------------------

TEST(Instantiate, AttentionMapDiagonal) {
  auto frag = instantiate(attention_map(), {{"x", 10.0}, {"y", 20.0}, {"w", 40.0}, {"h", 40.0},
                                            {"pattern", std::string("diagonal")}},
                          "am/");
  ASSERT_EQ(frag.elements.size(), 5u);
  EXPECT_EQ(frag.elements[0].id, "am/base");
  EXPECT_DOUBLE_EQ(frag.elements[0].x, 10.0);
  EXPECT_DOUBLE_EQ(frag.elements[0].y, 20.0);
  EXPECT_DOUBLE_EQ(frag.elements[0].width, 40.0);
  EXPECT_DOUBLE_EQ(frag.elements[0].height, 40.0);
  for (int i = 0; i < 4; ++i) {
    const auto& cell = frag.elements[static_cast<std::size_t>(i) + 1];
    EXPECT_EQ(cell.id, "am/cell" + std::to_string(i));
    EXPECT_DOUBLE_EQ(cell.x, 10.0 + 10.0 * i);
    EXPECT_DOUBLE_EQ(cell.y, 20.0 + 10.0 * i);
    EXPECT_DOUBLE_EQ(cell.width, 10.0);
    EXPECT_EQ(cell.style.fill_color, "#F8CECC");
  }
  auto full = instantiate(attention_map(), {{"pattern", std::string("full")}}, "");
  EXPECT_EQ(full.elements.size(), 1u);
}

TEST(Instantiate, FeaturePyramidSingleLevel) {
  auto frag = instantiate(feature_pyramid(), {{"num_levels", 1.0}}, "");
  EXPECT_EQ(frag.elements.size(), 1u);
}

TEST(Instantiate, FeaturePyramidThreeLevelsByHand) {
  auto frag = instantiate(feature_pyramid(),
                          {{"num_levels", 3.0}, {"shape_mode", std::string("rectangle")},
                           {"x", 0.0}, {"y", 0.0}, {"w", 90.0}, {"h", 120.0}},
                          "fp/");
  // Level i: x = 9i, y = 40i, width = 90 - 18i, height = 36.
  ASSERT_EQ(frag.elements.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    const auto& e = frag.elements[static_cast<std::size_t>(i)];
    EXPECT_EQ(e.id, "fp/level" + std::to_string(i));
    EXPECT_EQ(e.kind, scene::ElementKind::kRect);
    EXPECT_DOUBLE_EQ(e.x, 9.0 * i);
    EXPECT_DOUBLE_EQ(e.y, 40.0 * i);
    EXPECT_DOUBLE_EQ(e.width, 90.0 - 18.0 * i);
    EXPECT_DOUBLE_EQ(e.height, 36.0);
    EXPECT_EQ(e.label, std::optional<std::string>("L" + std::to_string(i + 1)));
  }
  auto cuboids = instantiate(feature_pyramid(), {{"shape_mode", std::string("cuboid")}}, "");
  EXPECT_EQ(cuboids.elements.front().kind, scene::ElementKind::kCuboid);
}

TEST(Instantiate, BindingErrors) {
  const auto fp = feature_pyramid();
  EXPECT_EQ(kind_of([&] { instantiate(fp, {{"depth", 2.0}}, ""); }), ErrorKind::kUnknownParameter);
  EXPECT_EQ(kind_of([&] { instantiate(fp, {{"num_levels", 9.0}}, ""); }), ErrorKind::kConstraintViolation);
  EXPECT_EQ(kind_of([&] { instantiate(fp, {{"num_levels", 2.5}}, ""); }), ErrorKind::kConstraintViolation);
  EXPECT_EQ(kind_of([&] { instantiate(fp, {{"shape_mode", std::string("sphere")}}, ""); }),
            ErrorKind::kConstraintViolation);
}

TEST(Validation, UndeclaredParameterIsNamed) {
  auto mw = feature_pyramid();
  mw.body[0].fields["width"] = std::string("w * q");
  auto problems = validation_problems(mw);
  ASSERT_FALSE(problems.empty());
  bool named = false;
  for (const auto& p : problems) named = named || p.find("'q'") != std::string::npos;
  EXPECT_TRUE(named) << problems.front();
  EXPECT_EQ(kind_of([&] { validate(mw); }), ErrorKind::kValidation);
}

TEST(Validation, UnboundedRepetitionIsRejected) {
  auto mw = feature_pyramid();
  mw.params[4].max.reset();
  EXPECT_FALSE(validation_problems(mw).empty());
  mw.params[4].max = kMaxRepeat + 1.0;
  EXPECT_FALSE(validation_problems(mw).empty());
  EXPECT_TRUE(validation_problems(feature_pyramid()).empty());
  EXPECT_TRUE(validation_problems(attention_map()).empty());
}

TEST(JsonIo, MiddlewareRoundTrip) {
  const auto fp = feature_pyramid();
  EXPECT_EQ(middleware_from_json(to_json(fp)), fp);
  auto proposal = middleware_from_proposal(proposal_json(fp));
  EXPECT_EQ(proposal.body, fp.body);
  EXPECT_EQ(proposal.params, fp.params);
}

// --- create_from_pair -------------------------------------------------------

TEST(CreateFromPair, DropsInvalidProposalsWithReport) {
  test::StubConstructor constructor;
  json bad = proposal_json(feature_pyramid());
  bad["body"][0]["width"] = "w * q";
  constructor.proposals = {proposal_json(feature_pyramid()), bad};
  scene::Canvas mi;
  auto result = create_from_pair("p1", "text", mi, "image segmentation",
                                 {agents::Concept{"feature pyramid", "Feature Pyramid", "", 0}},
                                 constructor);
  ASSERT_EQ(result.middlewares.size(), 1u);
  EXPECT_EQ(result.middlewares[0].provenance.kind, ProvenanceKind::kExtracted);
  EXPECT_EQ(result.middlewares[0].provenance.source_paper, "p1");
  auto num_levels = result.middlewares[0].find_param("num_levels");
  ASSERT_NE(num_levels, nullptr);
  EXPECT_EQ(num_levels->kind, ParamKind::kInteger);
  EXPECT_EQ(num_levels->default_value, Value(3.0));
  ASSERT_EQ(result.report.size(), 1u);
  EXPECT_NE(result.report[0].find("q"), std::string::npos);
}

TEST(CreateFromPair, NothingToExtract) {
  test::StubConstructor constructor;
  scene::Canvas mi;
  auto result = create_from_pair("p1", "text", mi, "t", {agents::Concept{"c", "C", "", 0}}, constructor);
  EXPECT_TRUE(result.middlewares.empty());
}

// --- repository ---------------------------------------------------------------

TEST(Repository, AddIndexesThemeAndConcept) {
  retrieval::TrigramEmbedding provider;
  Repository repo;
  repo.add(test::box_middleware("m1", "vision", "encoder"), "vision", "encoder", provider);
  EXPECT_EQ(repo.themes().size(), 1u);
  EXPECT_EQ(repo.concepts("vision").size(), 1u);
  ASSERT_NE(repo.entry("vision", "encoder"), nullptr);
  repo.add(test::box_middleware("m2", "vision", "encoder"), "vision", "encoder", provider);
  EXPECT_EQ(repo.entry("vision", "encoder")->size(), 2u);
  EXPECT_EQ(kind_of([&] {
              repo.add(test::box_middleware("m1", "vision", "encoder"), "vision", "encoder", provider);
            }),
            ErrorKind::kDuplicateId);
  EXPECT_TRUE(repo.invariant_problems().empty());
}

TEST(Repository, RemoveDropsEmptyEntries) {
  retrieval::TrigramEmbedding provider;
  Repository repo;
  repo.add(test::box_middleware("m1", "vision", "encoder"), "vision", "encoder", provider);
  repo.remove("m1");
  EXPECT_TRUE(repo.empty());
  EXPECT_TRUE(repo.entries().empty());
  EXPECT_TRUE(repo.invariant_problems().empty());
}

TEST(Repository, RecordUsageRunningSum) {
  retrieval::TrigramEmbedding provider;
  Repository repo;
  repo.add(test::box_middleware("m1", "vision", "encoder"), "vision", "encoder", provider);
  repo.record_usage("m1", 0.8);
  EXPECT_EQ(repo.find("m1")->usage_s, 0.8);
  EXPECT_EQ(repo.find("m1")->usage_n, 1);
  repo.record_usage("m1", 0.6);
  EXPECT_EQ(repo.find("m1")->usage_s, 0.8 + 0.6);
  EXPECT_EQ(repo.find("m1")->usage_n, 2);
  EXPECT_EQ(kind_of([&] { repo.record_usage("m1", 1.2); }), ErrorKind::kOutOfRange);
  EXPECT_EQ(kind_of([&] { repo.record_usage("nope", 0.5); }), ErrorKind::kUnknownId);
}

TEST(Repository, MesIsArithmeticMean) {
  Middleware mw;
  EXPECT_FALSE(mw.mes().has_value());
  mw.usage_n = 1;
  EXPECT_EQ(mw.mes(), std::optional<double>(0.0));
  mw.usage_s = 0.9 + 0.6 + 0.75;
  mw.usage_n = 3;
  EXPECT_DOUBLE_EQ(*mw.mes(), 0.75);
}

TEST(Repository, SaveLoadRoundTrip) {
  retrieval::TrigramEmbedding provider;
  Repository repo;
  repo.add(feature_pyramid(), "image segmentation", "feature pyramid", provider);
  repo.add(attention_map(), "image segmentation", "attention map", provider);
  repo.record_usage("am", 0.9);
  test::TempDir dir;
  repo.save(dir / "repo.json");
  EXPECT_EQ(Repository::load(dir / "repo.json"), repo);
}

TEST(Repository, LoadRejectsNewerSchemaAndTruncation) {
  retrieval::TrigramEmbedding provider;
  Repository repo;
  repo.add(feature_pyramid(), "image segmentation", "feature pyramid", provider);
  json j = repo.to_json();
  j["schema_version"] = kRepositorySchemaVersion + 1;
  EXPECT_EQ(kind_of([&] { Repository::from_json(j); }), ErrorKind::kVersionMismatch);

  test::TempDir dir;
  const std::string text = repo.to_json().dump();
  util::write_file(dir / "cut.json", text.substr(0, text.size() / 2));
  EXPECT_EQ(kind_of([&] { Repository::load(dir / "cut.json"); }), ErrorKind::kCorruptFile);
}

TEST(Repository, MergeUnifiesSimilarConcepts) {
  TableEmbedding provider;
  Repository repo;
  repo.add(test::box_middleware("a1", "vision", "self-attention module"), "vision",
           "self-attention module", provider);
  repo.add(test::box_middleware("a2", "vision", "multi-head attention"), "vision",
           "multi-head attention", provider);
  repo.add(test::box_middleware("d1", "vision", "mask decoder"), "vision", "mask decoder", provider);
  test::StubConstructor constructor;
  auto report = repo.merge(0.9, constructor);
  ASSERT_EQ(report.clusters.size(), 1u);
  EXPECT_EQ(report.clusters[0].merged.size(), 1u);
  EXPECT_EQ(repo.concepts("vision").size(), 2u);
  // Identical bodies: one of the two attention middlewares is redundant.
  EXPECT_EQ(report.removed.size(), 1u);
  EXPECT_TRUE(repo.invariant_problems().empty());
}

TEST(Repository, MergeWithOneConceptPerThemeIsNoop) {
  TableEmbedding provider;
  Repository repo;
  repo.add(test::box_middleware("a", "vision", "encoder"), "vision", "encoder", provider);
  repo.add(test::box_middleware("b", "text", "encoder"), "text", "encoder", provider);
  const Repository before = repo;
  test::StubConstructor constructor;
  auto report = repo.merge(0.5, constructor);
  EXPECT_TRUE(report.clusters.empty());
  EXPECT_EQ(repo, before);
}

TEST(Repository, MergeIsIdempotent) {
  retrieval::TrigramEmbedding provider(64);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    auto repo = test::random_repository(rng, 20, provider);
    test::StubConstructor constructor;
    repo.merge(0.6, constructor);
    auto again = repo;
    again.merge(0.6, constructor);
    EXPECT_EQ(again, repo);
  }
}

TEST(Repository, MergeIsAllOrNothing) {
  class Failing final : public ConstructorPort {
   public:
    std::vector<json> extract(const ExtractionInput&) override { return {}; }
    std::vector<std::string> find_redundant(const std::string&, const std::string&,
                                            const std::vector<Middleware>&) override {
      throw Error(ErrorKind::kBackendFailure, "down");
    }
    json mutate(const Middleware&) override { return {}; }
    json crossover(const std::vector<Middleware>&) override { return {}; }
  };
  TableEmbedding provider;
  Repository repo;
  repo.add(test::box_middleware("a1", "vision", "attention"), "vision", "attention", provider);
  repo.add(test::box_middleware("a2", "vision", "attention maps"), "vision", "attention maps", provider);
  const Repository before = repo;
  Failing constructor;
  EXPECT_EQ(kind_of([&] { repo.merge(0.9, constructor); }), ErrorKind::kBackendFailure);
  EXPECT_EQ(repo, before);
}

TEST(UsageLedger, AppliesInRecordingOrder) {
  retrieval::TrigramEmbedding provider;
  Repository repo;
  repo.add(test::box_middleware("m", "t", "c"), "t", "c", provider);
  UsageLedger ledger;
  ledger.record("m", 0.25);
  ledger.record("m", 0.5);
  ledger.apply(repo);
  EXPECT_EQ(repo.find("m")->usage_s, 0.25 + 0.5);
  EXPECT_EQ(repo.find("m")->usage_n, 2);
}
