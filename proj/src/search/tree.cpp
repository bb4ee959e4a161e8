#include "figforge/search/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

namespace figforge::search {

using nlohmann::json;

void SearchParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidArgument, what); };
  if (a1 < 1) fail("a1 must be >= 1");
  if (a2 < 0) fail("a2 must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) fail("beta must be a finite value >= 0");
  if (!std::isfinite(regen_threshold)) fail("regen_threshold must be finite");
  if (max_regen_rounds < 0) fail("max_regen_rounds must be >= 0");
  if (top_k < 1) fail("top_k must be >= 1");
  if (max_parallel < 1) fail("max_parallel must be >= 1");
}

json to_json(const SearchParams& p) {
  return {{"a1", p.a1},
          {"a2", p.a2},
          {"beta", p.beta},
          {"regen_threshold", p.regen_threshold},
          {"max_regen_rounds", p.max_regen_rounds},
          {"top_k", p.top_k}};
}

SearchParams search_params_from_json(const json& j) {
  SearchParams p;
  try {
    p.a1 = j.value("a1", p.a1);
    p.a2 = j.value("a2", p.a2);
    p.beta = j.value("beta", p.beta);
    p.regen_threshold = j.value("regen_threshold", p.regen_threshold);
    p.max_regen_rounds = j.value("max_regen_rounds", p.max_regen_rounds);
    p.top_k = j.value("top_k", p.top_k);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("search params: ") + e.what());
  }
  p.validate();
  return p;
}

DrawingTree::DrawingTree(scene::Canvas root_canvas, SearchParams params, std::uint64_t seed)
    : params_(params), seed_(seed) {
  params_.validate();
  DrawingNode root;
  root.canvas = std::move(root_canvas);
  nodes_.push_back(std::move(root));
}

const DrawingNode& DrawingTree::node(NodeId id) const {
  if (id >= nodes_.size()) throw Error(ErrorKind::kUnknownId, "no node " + std::to_string(id));
  return nodes_[id];
}

DrawingNode& DrawingTree::node(NodeId id) {
  if (id >= nodes_.size()) throw Error(ErrorKind::kUnknownId, "no node " + std::to_string(id));
  return nodes_[id];
}

void DrawingTree::set_terminal(NodeId id) {
  node(id);
  terminal_ = id;
}

NodeId DrawingTree::add_child(NodeId parent, scene::Canvas canvas, agents::DrawingChoice choice,
                              std::string concept_id, double absolute_quality,
                              std::string feedback, int iteration, int regen_round) {
  const DrawingNode& p = node(parent);
  DrawingNode child;
  child.id = nodes_.size();
  child.parent = parent;
  child.canvas = std::move(canvas);
  child.concepts_done = p.concepts_done + 1;
  child.absolute_quality = absolute_quality;
  child.own_score = absolute_quality - p.absolute_quality;
  child.choice = std::move(choice);
  child.concept_id = std::move(concept_id);
  child.feedback = std::move(feedback);
  child.iteration = iteration;
  child.regen_round = regen_round;
  NodeId id = child.id;
  nodes_.push_back(std::move(child));
  nodes_[parent].child_ids.push_back(id);
  return id;
}

std::vector<NodeId> DrawingTree::path_to(NodeId id) const {
  std::vector<NodeId> path;
  for (std::optional<NodeId> cur = id; cur; cur = node(*cur).parent) path.push_back(*cur);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<std::string> DrawingTree::invariant_problems() const {
  std::vector<std::string> out;
  if (nodes_.empty()) return {"tree has no root"};
  const DrawingNode& root = nodes_[0];
  if (root.parent) out.push_back("root has a parent");
  if (root.own_score != 0.0 || root.concepts_done != 0) out.push_back("root scores are not zero");
  for (const auto& n : nodes_) {
    const std::string name = "node " + std::to_string(n.id);
    for (NodeId c : n.child_ids) {
      if (c >= nodes_.size() || nodes_[c].parent != n.id) {
        out.push_back(name + " lists child " + std::to_string(c) + " that does not point back");
        continue;
      }
      if (nodes_[c].concepts_done != n.concepts_done + 1) {
        out.push_back(name + " child " + std::to_string(c) + " skips a concept");
      }
      if (nodes_[c].own_score != nodes_[c].absolute_quality - n.absolute_quality) {
        out.push_back("node " + std::to_string(c) + " own score is not its quality gain");
      }
    }
    if (n.parent) {
      if (*n.parent >= nodes_.size()) {
        out.push_back(name + " has a dangling parent");
      } else {
        const auto& siblings = nodes_[*n.parent].child_ids;
        if (std::find(siblings.begin(), siblings.end(), n.id) == siblings.end()) {
          out.push_back(name + " is missing from its parent's children");
        }
      }
    }
  }
  // Ranks form a permutation within each (parent, iteration) group.
  std::map<std::pair<NodeId, int>, std::vector<int>> groups;
  for (const auto& n : nodes_) {
    if (n.parent) groups[{*n.parent, n.iteration}].push_back(n.rank);
  }
  for (auto& [key, ranks] : groups) {
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      if (ranks[i] != static_cast<int>(i)) {
        out.push_back("ranks under node " + std::to_string(key.first) + " are not a permutation");
        break;
      }
    }
  }
  if (terminal_ >= nodes_.size()) out.push_back("terminal is not a node");
  return out;
}

void assign_ranks(DrawingTree& tree, const std::vector<NodeId>& siblings) {
  std::vector<NodeId> order = siblings;
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    double sa = tree.node(a).own_score;
    double sb = tree.node(b).own_score;
    if (sa != sb) return sa > sb;
    return a < b;
  });
  for (std::size_t i = 0; i < order.size(); ++i) tree.node(order[i]).rank = static_cast<int>(i);
}

double uct_value(int rank, std::size_t child_count, double beta) {
  return 2.0 / (rank + 1.0) + beta * std::sqrt(2.0 / (static_cast<double>(child_count) + 1.0));
}

double uct_value(const DrawingNode& node, double beta) {
  return uct_value(node.rank, node.child_ids.size(), beta);
}

std::map<NodeId, double> backpropagate(const DrawingTree& tree, const std::vector<NodeId>& roots,
                                       int iteration) {
  std::map<NodeId, double> finals;
  // Children always have larger ids than their parents, so a descending
  // sweep over the collected subtree is bottom-up.
  std::set<NodeId> subtree;
  std::vector<NodeId> stack(roots.begin(), roots.end());
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (!subtree.insert(id).second) continue;
    for (NodeId c : tree.node(id).child_ids) {
      if (tree.node(c).iteration == iteration) stack.push_back(c);
    }
  }
  for (auto it = subtree.rbegin(); it != subtree.rend(); ++it) {
    const DrawingNode& n = tree.node(*it);
    double sum = 0.0;
    std::size_t count = 0;
    for (NodeId c : n.child_ids) {
      if (tree.node(c).iteration != iteration) continue;
      sum += finals.at(c);
      ++count;
    }
    finals[*it] = count == 0 ? n.own_score : n.own_score + sum / static_cast<double>(count);
  }
  return finals;
}

namespace {

/// True when a beats b under "higher value, then lower rank, then earlier".
bool better(double va, const DrawingNode& a, double vb, const DrawingNode& b) {
  if (va != vb) return va > vb;
  if (a.rank != b.rank) return a.rank < b.rank;
  return a.id < b.id;
}

}  // namespace

NodeId select_best(DrawingTree& tree, const std::vector<NodeId>& children,
                   const std::map<NodeId, double>& final_scores) {
  if (children.empty()) throw Error(ErrorKind::kPrecondition, "no children to select from");
  NodeId best = children.front();
  for (NodeId c : children) {
    if (better(final_scores.at(c), tree.node(c), final_scores.at(best), tree.node(best))) best = c;
  }
  tree.set_terminal(best);
  return best;
}

NodeId pick_simulation_target(const DrawingTree& tree, const std::vector<NodeId>& pool) {
  if (pool.empty()) throw Error(ErrorKind::kPrecondition, "empty simulation pool");
  const double beta = tree.params().beta;
  NodeId best = pool.front();
  for (NodeId id : pool) {
    const DrawingNode& n = tree.node(id);
    const DrawingNode& b = tree.node(best);
    if (better(uct_value(n, beta), n, uct_value(b, beta), b)) best = id;
  }
  return best;
}

std::vector<agents::Concept> concept_order(const agents::ConceptGraph& graph, Warnings* warnings) {
  const std::size_t n = graph.concepts.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[graph.concepts[i].id] = i;
  std::vector<std::set<std::size_t>> out(n);
  std::vector<int> indegree(n, 0);
  for (const auto& e : graph.edges) {
    auto s = index.find(e.source);
    auto t = index.find(e.target);
    if (s == index.end() || t == index.end() || s->second == t->second) continue;
    if (out[s->second].insert(t->second).second) ++indegree[t->second];
  }
  auto key = [&](std::size_t i) { return std::make_pair(graph.concepts[i].order_hint, i); };
  auto cmp = [&](std::size_t a, std::size_t b) { return key(a) > key(b); };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<bool> placed(n, false);
  std::vector<agents::Concept> order;
  while (order.size() < n) {
    if (ready.empty()) {
      // Cycle: release the earliest remaining concept.
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!placed[i] && (pick == n || key(i) < key(pick))) pick = i;
      }
      if (warnings != nullptr) {
        warnings->push_back("concept graph has a cycle; '" + graph.concepts[pick].id +
                            "' is drawn before some of its dependencies");
      }
      indegree[pick] = 0;
      ready.push(pick);
    }
    std::size_t i = ready.top();
    ready.pop();
    if (placed[i]) continue;
    placed[i] = true;
    order.push_back(graph.concepts[i]);
    for (std::size_t t : out[i]) {
      if (!placed[t] && --indegree[t] == 0) ready.push(t);
    }
  }
  return order;
}

json to_json(const DrawingTree& tree, const std::map<NodeId, double>* final_scores) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    json j = {{"id", n.id},
              {"concepts_done", n.concepts_done},
              {"absolute_quality", n.absolute_quality},
              {"own_score", n.own_score},
              {"rank", n.rank},
              {"iteration", n.iteration},
              {"children", n.child_ids}};
    j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    if (!n.concept_id.empty()) j["concept"] = n.concept_id;
    if (n.regen_round > 0) j["regen_round"] = n.regen_round;
    if (!n.feedback.empty()) j["feedback"] = n.feedback;
    if (n.choice) j["choice"] = agents::to_json(*n.choice);
    if (final_scores != nullptr) {
      auto it = final_scores->find(n.id);
      if (it != final_scores->end()) j["final_score"] = it->second;
    }
    nodes.push_back(std::move(j));
  }
  return {{"params", to_json(tree.params())},
          {"seed", tree.seed()},
          {"root", tree.root()},
          {"terminal", tree.terminal()},
          {"nodes", nodes}};
}

}  // namespace figforge::search
