#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "figforge/agents/roles.hpp"
#include "figforge/middleware/repository.hpp"
#include "figforge/retrieval/embedding.hpp"
#include "figforge/search/tree.hpp"

namespace figforge::search {

/// One middleware invocation on the winning path, scored by the concept
/// evaluator.
struct Usage {
  std::string middleware_id;
  std::string concept_id;
  NodeId node = 0;
  double score = 0.0;
  bool operator==(const Usage&) const = default;
};

struct IterationSummary {
  int iteration = 0;
  NodeId expanded = 0;
  std::vector<NodeId> expansion_children;
  std::vector<NodeId> simulation_nodes;
  std::map<NodeId, double> final_scores;
  NodeId selected = 0;
  int regen_rounds = 0;
};

struct SearchResult {
  agents::ConceptGraph graph;
  std::string theme;  // repository theme after fallback
  std::vector<agents::Concept> order;
  std::map<std::string, std::vector<std::string>> candidates;  // concept -> ids
  std::vector<IterationSummary> iterations;
  scene::Canvas canvas;  // terminal canvas before refinement
  std::vector<Usage> usages;
  Warnings warnings;
};

nlohmann::json to_json(const Usage& usage);
nlohmann::json to_json(const IterationSummary& summary);

/// Runs Explore-and-Select against a read-only repository. Usage scores are
/// returned, not written; the caller owns the repository.
class Explorer {
 public:
  Explorer(const middleware::Repository& repository, const retrieval::EmbeddingProvider& provider,
           agents::Backends backends, agents::RoleOptions options = {});

  /// Resolves the theme, fixes the concept order and retrieves and filters
  /// candidates per concept. Throws kPrecondition on an empty repository.
  void prepare(const agents::ConceptGraph& graph, std::size_t top_k = retrieval::kDefaultTopK);

  /// Creates up to a1 children of `node` for the next concept, regenerating
  /// the whole set while every own score is below the threshold. Throws
  /// kExpansionFailure when no slot survives.
  std::vector<NodeId> expand(DrawingTree& tree, NodeId node, int iteration);

  /// Spends the a2 budget growing one child at a time under the node with
  /// the best UCT value. Returns the created nodes.
  std::vector<NodeId> simulate(DrawingTree& tree, const std::vector<NodeId>& expansion_children,
                               int iteration);

  /// expand, simulate, backpropagate and select from the current terminal.
  IterationSummary iterate(DrawingTree& tree, int iteration);

  /// Iterates until the terminal renders every concept, then scores the
  /// winning path's concept renderings.
  SearchResult run(DrawingTree& tree);

  const agents::ConceptGraph& graph() const { return graph_; }
  const std::vector<agents::Concept>& order() const { return order_; }
  const Warnings& warnings() const { return warnings_; }

 private:
  struct Draft {
    scene::Canvas canvas;
    agents::DrawingChoice choice;
    double quality = 0.0;
    std::string feedback;
    Warnings warnings;
  };

  /// One drawer call plus one evaluation; throws on failure.
  Draft draw(const DrawingTree& tree, NodeId parent, int variant, int regen_round,
             const std::string& feedback) const;
  bool droppable(const Error& e) const;
  agents::DrawingHistory history(const DrawingTree& tree, NodeId node) const;

  const middleware::Repository& repository_;
  const retrieval::EmbeddingProvider& provider_;
  agents::Backends backends_;
  agents::RoleOptions options_;
  agents::ConceptGraph graph_;
  std::string theme_;
  std::vector<agents::Concept> order_;
  std::map<std::string, std::vector<std::string>> candidates_;
  Warnings warnings_;
};

/// Parses the paper and runs the search. `tree` receives the search state
/// and survives failures for diagnosis.
SearchResult run(const std::string& paper_text, const middleware::Repository& repository,
                 const retrieval::EmbeddingProvider& provider, const agents::Backends& backends,
                 const SearchParams& params, std::uint64_t seed, DrawingTree& tree,
                 const agents::RoleOptions& options = {});

}  // namespace figforge::search
