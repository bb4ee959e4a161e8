#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "figforge/agents/backend.hpp"
#include "figforge/agents/concept_graph.hpp"
#include "figforge/error.hpp"
#include "figforge/middleware/repository.hpp"
#include "figforge/retrieval/candidates.hpp"
#include "figforge/scene/canvas.hpp"

namespace figforge::agents {

inline constexpr int kDefaultSchemaRetries = 2;

struct RoleOptions {
  int schema_retries = kDefaultSchemaRetries;
};

/// Backend per agent role; roles may share one backend.
struct Backends {
  ChatBackend* parser = nullptr;
  ChatBackend* drawer = nullptr;
  ChatBackend* evaluator = nullptr;
  ChatBackend* refiner = nullptr;
  ChatBackend* constructor = nullptr;
  ChatBackend* filter = nullptr;

  static Backends uniform(ChatBackend& backend);
};

// --- canvas presentation -------------------------------------------------

/// XML, SVG and key of a canvas as handed to backends.
Attachment attach(const scene::Canvas& canvas);
/// Compact geometric listing of a canvas included in request bodies.
nlohmann::json canvas_summary(const scene::Canvas& canvas);

// --- Parser ---------------------------------------------------------------

nlohmann::json to_json(const ConceptGraph& graph);
/// Throws kSchemaInvalid naming the first problem.
ConceptGraph concept_graph_from_json(const nlohmann::json& json);

/// Throws kPrecondition for blank text, kSchemaInvalid once the retries are
/// spent, kBackendFailure from the backend.
ConceptGraph parse_paper(const std::string& paper_text, ChatBackend& backend,
                         const RoleOptions& options = {});

// --- Drawer ---------------------------------------------------------------

struct Invocation {
  std::string middleware_id;
  middleware::Bindings bindings;
  bool operator==(const Invocation&) const = default;
};

struct Region {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
  bool operator==(const Region&) const = default;
};

struct DrawingChoice {
  std::vector<Invocation> invocations;
  std::vector<scene::SceneElement> raw_elements;
  std::optional<Region> region;
  bool operator==(const DrawingChoice&) const = default;
};

nlohmann::json to_json(const DrawingChoice& choice);
/// Structural parse; throws kSchemaInvalid.
DrawingChoice drawing_choice_from_json(const nlohmann::json& json);

struct HistoryRecord {
  std::string concept_id;
  std::vector<std::string> middleware_ids;
  std::string bindings_summary;
  double score = 0.0;
  std::string feedback;
};
using DrawingHistory = std::vector<HistoryRecord>;

struct DrawContext {
  std::string theme;
  Concept target;
  const scene::Canvas* canvas = nullptr;
  const middleware::Repository* repository = nullptr;
  std::vector<std::string> candidates;  // filtered middleware ids
  const DrawingHistory* history = nullptr;
  int variant = 0;       // distinguishes sibling drawings
  int regen_round = 0;   // 0 for the first attempt
  std::string feedback;  // evaluator notes for regeneration rounds
};

/// Adds the choice's fragment to `base`. Invoked fragments get ids
/// `id_prefix` + "m<i>/" + local id; raw elements `id_prefix` + "raw<i>"; a
/// region becomes a group `id_prefix` + "region" that parents the fragment.
/// Every new element is tagged with `concept_id`. Throws kInvalidInvocation.
scene::Canvas apply_choice(const scene::Canvas& base, const DrawingChoice& choice,
                           const middleware::Repository& repository,
                           const std::vector<std::string>& candidates,
                           const std::string& concept_id, const std::string& id_prefix);

/// Requests a drawing for ctx.target. Choices naming non-candidates,
/// undeclared parameters or failing to instantiate get one corrective retry
/// before kInvalidInvocation.
DrawingChoice draw_concept(const DrawContext& ctx, ChatBackend& backend,
                           const RoleOptions& options = {});

// --- Evaluator ------------------------------------------------------------

struct EvaluationResult {
  double score = 0.0;
  std::string feedback;
  Warnings warnings;  // e.g. clamped scores
};

/// An empty canvas scores 0 without consulting the backend. Scores outside
/// [0,1] are clamped with a warning.
EvaluationResult evaluate_canvas(const scene::Canvas& canvas, const ConceptGraph& graph,
                                 ChatBackend& backend, const RoleOptions& options = {});

/// Throws kNoElementsForConcept when nothing carries the concept's tag.
EvaluationResult evaluate_concept_rendering(const scene::Canvas& canvas, const Concept& target,
                                            ChatBackend& backend,
                                            const RoleOptions& options = {});

// --- Refiner --------------------------------------------------------------

struct RefineResult {
  scene::Canvas canvas;
  Warnings warnings;
};

/// Element that stands for a concept when connecting concepts: the largest
/// tagged element not nested inside another element of the same concept.
const scene::SceneElement* representative(const scene::Canvas& canvas,
                                          const std::string& concept_id);

/// Adds one connector per graph edge lacking a connector between the two
/// concepts' elements.
scene::Canvas add_missing_connectors(const scene::Canvas& canvas, const ConceptGraph& graph,
                                     Warnings& warnings);

/// Applies the backend's concept moves and extra links, then covers every
/// graph edge. Best effort: a backend or schema failure returns the input
/// canvas with a warning.
RefineResult refine(const scene::Canvas& canvas, const ConceptGraph& graph, ChatBackend& backend,
                    const RoleOptions& options = {});

// --- Constructor and filter -----------------------------------------------

class ConstructorAgent final : public middleware::ConstructorPort {
 public:
  explicit ConstructorAgent(ChatBackend& backend, RoleOptions options = {})
      : backend_(backend), options_(options) {}

  std::vector<nlohmann::json> extract(const middleware::ExtractionInput& input) override;
  std::vector<std::string> find_redundant(const std::string& theme, const std::string& concept_id,
                                          const std::vector<middleware::Middleware>& members) override;
  nlohmann::json mutate(const middleware::Middleware& parent) override;
  nlohmann::json crossover(const std::vector<middleware::Middleware>& parents) override;

 private:
  ChatBackend& backend_;
  RoleOptions options_;
};

class FilterAgent final : public retrieval::CandidateJudge {
 public:
  FilterAgent(ChatBackend& backend, const middleware::Repository& repository,
              RoleOptions options = {})
      : backend_(backend), repository_(repository), options_(options) {}

  std::vector<std::string> keep(const retrieval::CandidateSet& candidates,
                                const std::string& concept_text,
                                const std::string& theme) override;

 private:
  ChatBackend& backend_;
  const middleware::Repository& repository_;
  RoleOptions options_;
};

}  // namespace figforge::agents
