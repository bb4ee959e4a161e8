#include "figforge/search/explorer.hpp"

#include <algorithm>

#include "figforge/middleware/json_io.hpp"
#include "figforge/util/parallel.hpp"
#include "figforge/util/text.hpp"

namespace figforge::search {

using nlohmann::json;

json to_json(const Usage& usage) {
  return {{"middleware", usage.middleware_id},
          {"concept", usage.concept_id},
          {"node", usage.node},
          {"score", usage.score}};
}

json to_json(const IterationSummary& s) {
  json finals = json::object();
  for (const auto& [id, score] : s.final_scores) finals[std::to_string(id)] = score;
  return {{"iteration", s.iteration},
          {"expanded", s.expanded},
          {"expansion_children", s.expansion_children},
          {"simulation_nodes", s.simulation_nodes},
          {"final_scores", finals},
          {"selected", s.selected},
          {"regen_rounds", s.regen_rounds}};
}

Explorer::Explorer(const middleware::Repository& repository,
                   const retrieval::EmbeddingProvider& provider, agents::Backends backends,
                   agents::RoleOptions options)
    : repository_(repository), provider_(provider), backends_(backends), options_(options) {
  if (backends_.drawer == nullptr || backends_.evaluator == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "search needs drawer and evaluator backends");
  }
}

void Explorer::prepare(const agents::ConceptGraph& graph, std::size_t top_k) {
  if (repository_.empty()) throw Error(ErrorKind::kPrecondition, "the repository is empty");
  if (graph.concepts.empty()) throw Error(ErrorKind::kPrecondition, "the concept graph is empty");
  graph_ = graph;
  warnings_.clear();
  candidates_.clear();
  theme_ = retrieval::resolve_theme(repository_, graph.theme, provider_, &warnings_);
  order_ = concept_order(graph, &warnings_);
  for (const auto& c : order_) {
    std::string text = c.description.empty() ? c.name : c.name + ": " + c.description;
    retrieval::CandidateSet set =
        retrieval::retrieve_candidates(repository_, theme_, text, top_k, provider_);
    if (backends_.filter != nullptr) {
      agents::FilterAgent judge(*backends_.filter, repository_, options_);
      retrieval::FilterOutcome outcome = retrieval::filter_candidates(set, text, theme_, judge);
      for (auto& w : outcome.warnings) warnings_.push_back(c.id + ": " + w);
      set = std::move(outcome.candidates);
    }
    std::vector<std::string> ids;
    for (const auto& m : set.members) ids.push_back(m.middleware_id);
    candidates_[c.id] = std::move(ids);
  }
}

agents::DrawingHistory Explorer::history(const DrawingTree& tree, NodeId node) const {
  agents::DrawingHistory out;
  for (NodeId id : tree.path_to(node)) {
    const DrawingNode& n = tree.node(id);
    if (!n.choice) continue;
    agents::HistoryRecord r;
    r.concept_id = n.concept_id;
    json bindings = json::array();
    for (const auto& inv : n.choice->invocations) {
      r.middleware_ids.push_back(inv.middleware_id);
      bindings.push_back(middleware::to_json(inv.bindings));
    }
    r.bindings_summary = bindings.dump();
    r.score = n.own_score;
    r.feedback = n.feedback;
    out.push_back(std::move(r));
  }
  return out;
}

Explorer::Draft Explorer::draw(const DrawingTree& tree, NodeId parent, int variant,
                               int regen_round, const std::string& feedback) const {
  const DrawingNode& p = tree.node(parent);
  const agents::Concept& target = order_.at(static_cast<std::size_t>(p.concepts_done));
  const agents::DrawingHistory past = history(tree, parent);
  agents::DrawContext ctx;
  ctx.theme = theme_;
  ctx.target = target;
  ctx.canvas = &p.canvas;
  ctx.repository = &repository_;
  ctx.candidates = candidates_.at(target.id);
  ctx.history = &past;
  ctx.variant = variant;
  ctx.regen_round = regen_round;
  ctx.feedback = feedback;
  Draft d;
  d.choice = agents::draw_concept(ctx, *backends_.drawer, options_);
  d.canvas = agents::apply_choice(p.canvas, d.choice, repository_, ctx.candidates, target.id,
                                  util::slugify(target.id) + "/");
  agents::EvaluationResult eval =
      agents::evaluate_canvas(d.canvas, graph_, *backends_.evaluator, options_);
  d.quality = eval.score;
  d.feedback = eval.feedback;
  d.warnings = std::move(eval.warnings);
  return d;
}

bool Explorer::droppable(const Error& e) const {
  return e.kind() == ErrorKind::kBackendFailure || e.kind() == ErrorKind::kSchemaInvalid ||
         e.kind() == ErrorKind::kInvalidInvocation;
}

std::vector<NodeId> Explorer::expand(DrawingTree& tree, NodeId node, int iteration) {
  const DrawingNode& parent = tree.node(node);
  if (static_cast<std::size_t>(parent.concepts_done) >= order_.size()) {
    throw Error(ErrorKind::kPrecondition,
                "node " + std::to_string(node) + " has no concept left to draw");
  }
  const SearchParams& params = tree.params();
  const std::size_t width = static_cast<std::size_t>(params.a1);
  const double parent_quality = parent.absolute_quality;
  std::vector<std::string> feedback(width);
  std::vector<std::optional<Draft>> drafts;
  std::string last_error;
  int round = 0;
  for (;; ++round) {
    auto results = util::parallel_indexed<Draft>(
        width, params.max_parallel,
        [&](std::size_t i) { return draw(tree, node, static_cast<int>(i), round, feedback[i]); });
    drafts.assign(width, std::nullopt);
    bool any = false;
    bool all_below = true;
    for (std::size_t i = 0; i < width; ++i) {
      if (results[i].error) {
        try {
          std::rethrow_exception(results[i].error);
        } catch (const Error& e) {
          if (!droppable(e)) throw;
          last_error = e.what();
          warnings_.push_back("node " + std::to_string(node) + " slot " + std::to_string(i) +
                              " dropped: " + e.what());
        }
        continue;
      }
      drafts[i] = std::move(results[i].value);
      for (auto& w : drafts[i]->warnings) warnings_.push_back(w);
      any = true;
      if (drafts[i]->quality - parent_quality >= params.regen_threshold) all_below = false;
    }
    if (!any || !all_below || round >= params.max_regen_rounds) break;
    for (std::size_t i = 0; i < width; ++i) {
      if (drafts[i]) feedback[i] = drafts[i]->feedback;
    }
  }
  std::vector<NodeId> children;
  for (std::size_t i = 0; i < width; ++i) {
    if (!drafts[i]) continue;
    Draft& d = *drafts[i];
    children.push_back(tree.add_child(node, std::move(d.canvas), std::move(d.choice),
                                      order_[tree.node(node).concepts_done].id, d.quality,
                                      std::move(d.feedback), iteration, round));
  }
  if (children.empty()) {
    throw Error(ErrorKind::kExpansionFailure,
                "every drawing of node " + std::to_string(node) + " failed; last: " + last_error);
  }
  assign_ranks(tree, children);
  return children;
}

std::vector<NodeId> Explorer::simulate(DrawingTree& tree,
                                       const std::vector<NodeId>& expansion_children,
                                       int iteration) {
  if (expansion_children.empty()) {
    throw Error(ErrorKind::kPrecondition, "simulation needs expansion children");
  }
  const std::size_t total = order_.size();
  std::vector<NodeId> created;
  for (int step = 0; step < tree.params().a2; ++step) {
    std::vector<NodeId> pool;
    for (NodeId id : expansion_children) {
      if (static_cast<std::size_t>(tree.node(id).concepts_done) < total) pool.push_back(id);
    }
    for (NodeId id : created) {
      if (static_cast<std::size_t>(tree.node(id).concepts_done) < total) pool.push_back(id);
    }
    if (pool.empty()) break;
    NodeId target = pick_simulation_target(tree, pool);
    const int variant = static_cast<int>(tree.node(target).child_ids.size());
    std::optional<Draft> d;
    try {
      d = draw(tree, target, variant, 0, "");
    } catch (const Error& e) {
      if (!droppable(e)) throw;
      warnings_.push_back("simulation step " + std::to_string(step) + " from node " +
                          std::to_string(target) + " skipped: " + e.what());
      continue;
    }
    for (auto& w : d->warnings) warnings_.push_back(w);
    NodeId id = tree.add_child(target, std::move(d->canvas), std::move(d->choice),
                               order_[tree.node(target).concepts_done].id, d->quality,
                               std::move(d->feedback), iteration, 0);
    created.push_back(id);
    std::vector<NodeId> siblings;
    for (NodeId c : tree.node(target).child_ids) {
      if (tree.node(c).iteration == iteration) siblings.push_back(c);
    }
    assign_ranks(tree, siblings);
  }
  return created;
}

IterationSummary Explorer::iterate(DrawingTree& tree, int iteration) {
  IterationSummary s;
  s.iteration = iteration;
  s.expanded = tree.terminal();
  s.expansion_children = expand(tree, s.expanded, iteration);
  s.regen_rounds = tree.node(s.expansion_children.front()).regen_round;
  s.simulation_nodes = simulate(tree, s.expansion_children, iteration);
  s.final_scores = backpropagate(tree, s.expansion_children, iteration);
  s.selected = select_best(tree, s.expansion_children, s.final_scores);
  return s;
}

SearchResult Explorer::run(DrawingTree& tree) {
  if (tree.empty()) throw Error(ErrorKind::kPrecondition, "the search tree has no root");
  if (order_.empty()) throw Error(ErrorKind::kPrecondition, "prepare() was not called");
  SearchResult result;
  for (int iteration = 1;
       static_cast<std::size_t>(tree.node(tree.terminal()).concepts_done) < order_.size();
       ++iteration) {
    result.iterations.push_back(iterate(tree, iteration));
  }
  for (NodeId id : tree.path_to(tree.terminal())) {
    const DrawingNode& n = tree.node(id);
    if (!n.choice || n.choice->invocations.empty()) continue;
    const agents::Concept* target = graph_.find(n.concept_id);
    if (target == nullptr) continue;
    agents::EvaluationResult eval;
    try {
      eval = agents::evaluate_concept_rendering(n.canvas, *target, *backends_.evaluator, options_);
    } catch (const Error& e) {
      if (!droppable(e)) throw;
      warnings_.push_back("usage of concept '" + n.concept_id + "' not scored: " + e.what());
      continue;
    }
    for (auto& w : eval.warnings) warnings_.push_back(w);
    for (const auto& inv : n.choice->invocations) {
      result.usages.push_back(Usage{inv.middleware_id, n.concept_id, id, eval.score});
    }
  }
  result.graph = graph_;
  result.theme = theme_;
  result.order = order_;
  result.candidates = candidates_;
  result.canvas = tree.node(tree.terminal()).canvas;
  result.warnings = warnings_;
  return result;
}

SearchResult run(const std::string& paper_text, const middleware::Repository& repository,
                 const retrieval::EmbeddingProvider& provider, const agents::Backends& backends,
                 const SearchParams& params, std::uint64_t seed, DrawingTree& tree,
                 const agents::RoleOptions& options) {
  params.validate();
  if (backends.parser == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "search needs a parser backend");
  }
  agents::ConceptGraph graph = agents::parse_paper(paper_text, *backends.parser, options);
  tree = DrawingTree(scene::Canvas(), params, seed);
  Explorer explorer(repository, provider, backends, options);
  explorer.prepare(graph, params.top_k);
  return explorer.run(tree);
}

}  // namespace figforge::search
