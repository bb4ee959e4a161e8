#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "figforge/agents/roles.hpp"
#include "figforge/error.hpp"
#include "figforge/middleware/repository.hpp"
#include "figforge/retrieval/embedding.hpp"
#include "figforge/scene/canvas.hpp"

namespace figforge::search {

struct SearchParams {
  int a1 = 3;                     // expansion width
  int a2 = 3;                     // simulation budget
  double beta = 1.0;              // exploration weight
  double regen_threshold = 0.05;  // minimum acceptable own score
  int max_regen_rounds = 1;
  std::size_t top_k = retrieval::kDefaultTopK;
  std::size_t max_parallel = 1;   // concurrent drawer/evaluator calls in expansion

  /// Throws kInvalidArgument.
  void validate() const;
  bool operator==(const SearchParams&) const = default;
};

nlohmann::json to_json(const SearchParams& params);
SearchParams search_params_from_json(const nlohmann::json& json);

using NodeId = std::size_t;

struct DrawingNode {
  NodeId id = 0;  // creation order; the root is 0
  std::optional<NodeId> parent;
  scene::Canvas canvas;
  int concepts_done = 0;
  double absolute_quality = 0.0;
  double own_score = 0.0;
  int rank = 0;
  std::vector<NodeId> child_ids;
  std::optional<agents::DrawingChoice> choice;
  std::string concept_id;  // concept rendered by this node's choice
  std::string feedback;    // evaluator notes on this node's canvas
  int iteration = 0;       // iteration that created the node; root 0
  int regen_round = 0;
};

/// Search state. Nodes are stored by creation order.
class DrawingTree {
 public:
  DrawingTree() = default;
  DrawingTree(scene::Canvas root_canvas, SearchParams params, std::uint64_t seed);

  const DrawingNode& node(NodeId id) const;
  DrawingNode& node(NodeId id);
  std::size_t size() const { return nodes_.size(); }
  const std::vector<DrawingNode>& nodes() const { return nodes_; }
  NodeId root() const { return 0; }
  NodeId terminal() const { return terminal_; }
  void set_terminal(NodeId id);
  const SearchParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  bool empty() const { return nodes_.empty(); }

  /// Appends a child of `parent` and returns its id.
  NodeId add_child(NodeId parent, scene::Canvas canvas, agents::DrawingChoice choice,
                   std::string concept_id, double absolute_quality, std::string feedback,
                   int iteration, int regen_round);

  /// Root-to-`id` path, inclusive.
  std::vector<NodeId> path_to(NodeId id) const;

  /// Messages for broken structural invariants; empty means consistent.
  std::vector<std::string> invariant_problems() const;

 private:
  std::vector<DrawingNode> nodes_;
  NodeId terminal_ = 0;
  SearchParams params_;
  std::uint64_t seed_ = 0;
};

/// Orders `siblings` by own score descending (ties by creation order) and
/// writes 0..n-1 into their ranks.
void assign_ranks(DrawingTree& tree, const std::vector<NodeId>& siblings);

/// 2/(rank+1) + beta * sqrt(2/(child_count+1)).
double uct_value(int rank, std::size_t child_count, double beta);
double uct_value(const DrawingNode& node, double beta);

/// final(n) = own(n) + mean of final(c) over the children c of n created in
/// `iteration`; leaves keep their own score. Covers the subtrees of `roots`.
std::map<NodeId, double> backpropagate(const DrawingTree& tree, const std::vector<NodeId>& roots,
                                       int iteration);

/// Argmax final score among `children` (ties: lower rank, then creation
/// order); sets it as the terminal.
NodeId select_best(DrawingTree& tree, const std::vector<NodeId>& children,
                   const std::map<NodeId, double>& final_scores);

/// Index of the pool member with the highest UCT value (ties: lower rank,
/// then creation order).
NodeId pick_simulation_target(const DrawingTree& tree, const std::vector<NodeId>& pool);

/// Dependencies first: topological order over the graph's edges, ties and
/// cycle breaks by order hint.
std::vector<agents::Concept> concept_order(const agents::ConceptGraph& graph, Warnings* warnings);

nlohmann::json to_json(const DrawingTree& tree,
                       const std::map<NodeId, double>* final_scores = nullptr);

}  // namespace figforge::search
