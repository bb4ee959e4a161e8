#include "figforge/agents/roles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "figforge/agents/prompts.hpp"
#include "figforge/middleware/json_io.hpp"
#include "figforge/scene/mxgraph.hpp"
#include "figforge/scene/svg.hpp"
#include "figforge/util/text.hpp"

namespace figforge::agents {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorKind::kSchemaInvalid, what); }
[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kInvalidInvocation, what);
}

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

/// Models sometimes wrap JSON in prose or code fences; take the outermost
/// object.
json extract_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
  }
  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    try {
      return json::parse(text.substr(open, close - open + 1));
    } catch (const json::exception&) {
    }
  }
  schema("response is not a JSON object");
}

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) schema(std::string("missing '") + key + "'");
  return obj.at(key);
}

double finite_number(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number()) schema(std::string("'") + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) schema(std::string("'") + key + "' must be finite");
  return d;
}

std::vector<std::string> string_list(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_array()) schema(std::string("'") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) schema(std::string("'") + key + "' must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

/// Sends a role request and parses the reply, re-asking with the parse
/// error on schema problems (up to options.schema_retries times) and on
/// invalid invocations (up to `invocation_retries` times).
template <typename Parse>
auto call_role(ChatBackend& backend, const std::string& role, std::string_view prompt_name,
               json user, const std::vector<Attachment>& attachments,
               const RoleOptions& options, int invocation_retries, Parse parse)
    -> decltype(parse(json{})) {
  int schema_failures = 0;
  int invocation_failures = 0;
  for (;;) {
    ChatRequest request{role, std::string(prompt(prompt_name)), dump(user), attachments};
    std::string text;
    try {
      text = backend.complete(request);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kBackendFailure, e.what());
    }
    std::string problem;
    try {
      try {
        return parse(extract_json(text));
      } catch (const json::exception& e) {
        schema(e.what());
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kSchemaInvalid) {
        if (schema_failures++ >= options.schema_retries) {
          throw Error(ErrorKind::kSchemaInvalid,
                      role + " output invalid after " + std::to_string(options.schema_retries) +
                          " retries: " + e.what());
        }
      } else if (e.kind() == ErrorKind::kInvalidInvocation) {
        if (invocation_failures++ >= invocation_retries) throw;
      } else {
        throw;
      }
      problem = e.what();
    }
    user["correction"] = "Your previous answer was rejected: " + problem;
    user["attempt"] = schema_failures + invocation_failures;
  }
}

json concept_json(const Concept& c) {
  return {{"id", c.id}, {"name", c.name}, {"description", c.description}};
}

bool tagged(const scene::SceneElement& e, const std::string& concept_id) {
  return e.concept_tag && *e.concept_tag == concept_id;
}

bool has_tag(const scene::Canvas& canvas, const std::string& concept_id) {
  return std::any_of(canvas.elements().begin(), canvas.elements().end(),
                     [&](const auto& e) { return tagged(e, concept_id); });
}

scene::SceneElement raw_element_from_json(const json& j) {
  scene::SceneElement e;
  if (j.contains("kind")) {
    auto kind = scene::parse_element_kind(require(j, "kind").get<std::string>());
    if (!kind || *kind == scene::ElementKind::kGroup) schema("unsupported raw element kind");
    e.kind = *kind;
  }
  e.x = finite_number(j, "x");
  e.y = finite_number(j, "y");
  e.width = finite_number(j, "width");
  e.height = finite_number(j, "height");
  if (e.width < 0 || e.height < 0) schema("raw element size must be >= 0");
  if (j.contains("label")) {
    if (!j.at("label").is_string()) schema("raw element label must be a string");
    e.label = j.at("label").get<std::string>();
  }
  for (const char* key : {"fill_color", "stroke_color"}) {
    if (!j.contains(key)) continue;
    std::string v = j.at(key).get<std::string>();
    if (!scene::is_hex_color(v)) schema(std::string(key) + " must be #RRGGBB");
    (std::string(key) == "fill_color" ? e.style.fill_color : e.style.stroke_color) = v;
  }
  return e;
}

json raw_element_json(const scene::SceneElement& e) {
  json j = {{"kind", std::string(scene::to_string(e.kind))},
            {"x", e.x},
            {"y", e.y},
            {"width", e.width},
            {"height", e.height}};
  if (e.label) j["label"] = *e.label;
  scene::StyleSpec defaults;
  if (e.style.fill_color != defaults.fill_color) j["fill_color"] = e.style.fill_color;
  if (e.style.stroke_color != defaults.stroke_color) j["stroke_color"] = e.style.stroke_color;
  return j;
}

}  // namespace

Backends Backends::uniform(ChatBackend& backend) {
  return Backends{&backend, &backend, &backend, &backend, &backend, &backend};
}

Attachment attach(const scene::Canvas& canvas) {
  Attachment a;
  a.xml = scene::to_mxgraph_xml(canvas);
  a.svg = scene::to_svg(canvas);
  a.key = util::sha256_hex(a.xml);
  return a;
}

json canvas_summary(const scene::Canvas& canvas) {
  json elements = json::array();
  for (const scene::SceneElement* e : canvas.ordered_elements()) {
    json j = {{"id", e->id},
              {"kind", std::string(scene::to_string(e->kind))},
              {"x", e->x},
              {"y", e->y},
              {"width", e->width},
              {"height", e->height}};
    if (e->concept_tag) j["concept"] = *e->concept_tag;
    if (e->label) j["label"] = *e->label;
    if (e->parent_group) j["parent"] = *e->parent_group;
    elements.push_back(std::move(j));
  }
  json connectors = json::array();
  auto endpoint = [](const scene::Endpoint& ep) -> json {
    if (const auto* id = std::get_if<std::string>(&ep)) return *id;
    const auto& p = std::get<scene::Point>(ep);
    return {{"x", p.x}, {"y", p.y}};
  };
  for (const auto& c : canvas.connectors()) {
    connectors.push_back({{"id", c.id}, {"source", endpoint(c.source)},
                          {"target", endpoint(c.target)}});
  }
  return {{"page", {{"width", canvas.page_width()}, {"height", canvas.page_height()}}},
          {"elements", elements},
          {"connectors", connectors}};
}

// --- Parser ---------------------------------------------------------------

json to_json(const ConceptGraph& graph) {
  json concepts = json::array();
  for (const auto& c : graph.concepts) concepts.push_back(concept_json(c));
  json edges = json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"label", e.label}});
  }
  return {{"theme", graph.theme}, {"concepts", concepts}, {"edges", edges}};
}

ConceptGraph concept_graph_from_json(const json& j) {
  try {
    ConceptGraph g;
    const json& theme = require(j, "theme");
    if (!theme.is_string() || util::trim(theme.get<std::string>()).empty()) {
      schema("theme must be a non-empty string");
    }
    g.theme = util::trim(theme.get<std::string>());
    const json& concepts = require(j, "concepts");
    if (!concepts.is_array() || concepts.empty()) schema("concepts must be a non-empty array");
    std::set<std::string> ids;
    std::set<std::string> slugs;
    int order = 0;
    for (const auto& c : concepts) {
      Concept concept_entry;
      concept_entry.id = require(c, "id").get<std::string>();
      if (concept_entry.id.empty()) schema("concept id is empty");
      if (!ids.insert(concept_entry.id).second) schema("duplicate concept id '" + concept_entry.id + "'");
      if (!slugs.insert(util::slugify(concept_entry.id)).second) {
        schema("concept ids '" + concept_entry.id + "' collide once normalized");
      }
      concept_entry.name = c.value("name", concept_entry.id);
      if (concept_entry.name.empty()) concept_entry.name = concept_entry.id;
      concept_entry.description = c.value("description", "");
      concept_entry.order_hint = order++;
      g.concepts.push_back(std::move(concept_entry));
    }
    if (j.contains("edges")) {
      const json& edges = j.at("edges");
      if (!edges.is_array()) schema("edges must be an array");
      for (const auto& e : edges) {
        Relation r{require(e, "source").get<std::string>(), require(e, "target").get<std::string>(),
                   e.value("label", "")};
        if (ids.count(r.source) == 0 || ids.count(r.target) == 0) {
          schema("edge " + r.source + " -> " + r.target + " references an unknown concept");
        }
        if (r.source == r.target) schema("edge on '" + r.source + "' is a self-loop");
        g.edges.push_back(std::move(r));
      }
    }
    return g;
  } catch (const json::exception& e) {
    schema(std::string("concept graph: ") + e.what());
  }
}

ConceptGraph parse_paper(const std::string& paper_text, ChatBackend& backend,
                         const RoleOptions& options) {
  if (util::trim(paper_text).empty()) {
    throw Error(ErrorKind::kPrecondition, "paper text is empty");
  }
  json user = {{"task", "parse_paper"}, {"paper_text", paper_text}};
  return call_role(backend, "parser", "parser", user, {}, options, 0,
                   [](const json& j) { return concept_graph_from_json(j); });
}

// --- Drawer ---------------------------------------------------------------

json to_json(const DrawingChoice& choice) {
  json invocations = json::array();
  for (const auto& inv : choice.invocations) {
    invocations.push_back(
        {{"middleware", inv.middleware_id}, {"bindings", middleware::to_json(inv.bindings)}});
  }
  json j = {{"invocations", invocations}};
  if (!choice.raw_elements.empty()) {
    json elements = json::array();
    for (const auto& e : choice.raw_elements) elements.push_back(raw_element_json(e));
    j["elements"] = elements;
  }
  if (choice.region) {
    j["region"] = {{"x", choice.region->x},
                   {"y", choice.region->y},
                   {"width", choice.region->width},
                   {"height", choice.region->height}};
  }
  return j;
}

DrawingChoice drawing_choice_from_json(const json& j) {
  try {
    DrawingChoice choice;
    if (!j.is_object()) schema("drawing choice must be an object");
    if (j.contains("invocations")) {
      const json& invs = j.at("invocations");
      if (!invs.is_array()) schema("invocations must be an array");
      for (const auto& inv : invs) {
        Invocation out;
        out.middleware_id = require(inv, "middleware").get<std::string>();
        if (inv.contains("bindings")) {
          try {
            out.bindings = middleware::bindings_from_json(inv.at("bindings"));
          } catch (const Error& e) {
            schema(e.what());
          }
        }
        choice.invocations.push_back(std::move(out));
      }
    }
    if (j.contains("elements")) {
      const json& els = j.at("elements");
      if (!els.is_array()) schema("elements must be an array");
      for (const auto& e : els) choice.raw_elements.push_back(raw_element_from_json(e));
    }
    if (j.contains("region") && !j.at("region").is_null()) {
      const json& r = j.at("region");
      Region region{finite_number(r, "x"), finite_number(r, "y"), finite_number(r, "width"),
                    finite_number(r, "height")};
      if (region.width < 0 || region.height < 0) schema("region size must be >= 0");
      choice.region = region;
    }
    return choice;
  } catch (const json::exception& e) {
    schema(std::string("drawing choice: ") + e.what());
  }
}

scene::Canvas apply_choice(const scene::Canvas& base, const DrawingChoice& choice,
                           const middleware::Repository& repository,
                           const std::vector<std::string>& candidates,
                           const std::string& concept_id, const std::string& id_prefix) {
  if (choice.invocations.empty() && choice.raw_elements.empty()) {
    invalid("the drawing choice draws nothing");
  }
  std::vector<scene::SceneElement> batch;
  std::vector<scene::Connector> connectors;
  std::optional<std::string> group;
  if (choice.region) {
    scene::SceneElement g;
    g.id = id_prefix + "region";
    g.kind = scene::ElementKind::kGroup;
    g.x = choice.region->x;
    g.y = choice.region->y;
    g.width = choice.region->width;
    g.height = choice.region->height;
    g.concept_tag = concept_id;
    group = g.id;
    batch.push_back(std::move(g));
  }
  for (std::size_t i = 0; i < choice.invocations.size(); ++i) {
    const Invocation& inv = choice.invocations[i];
    if (std::find(candidates.begin(), candidates.end(), inv.middleware_id) == candidates.end()) {
      invalid("middleware '" + inv.middleware_id + "' is not among the candidates");
    }
    const middleware::Middleware* mw = repository.find(inv.middleware_id);
    if (mw == nullptr) invalid("middleware '" + inv.middleware_id + "' does not exist");
    for (const auto& [name, value] : inv.bindings) {
      if (mw->find_param(name) == nullptr) {
        invalid("middleware '" + mw->id + "' declares no parameter '" + name + "'");
      }
    }
    middleware::Fragment fragment;
    try {
      fragment = middleware::instantiate(*mw, inv.bindings,
                                         id_prefix + "m" + std::to_string(i) + "/");
    } catch (const Error& e) {
      invalid(e.what());
    }
    for (auto& e : fragment.elements) {
      e.concept_tag = concept_id;
      if (group && !e.parent_group) e.parent_group = group;
      batch.push_back(std::move(e));
    }
    for (auto& c : fragment.connectors) connectors.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < choice.raw_elements.size(); ++i) {
    scene::SceneElement e = choice.raw_elements[i];
    e.id = id_prefix + "raw" + std::to_string(i);
    e.concept_tag = concept_id;
    if (group) e.parent_group = group;
    batch.push_back(std::move(e));
  }
  scene::Canvas out = base;
  try {
    out.add_elements(std::move(batch));
    for (auto& c : connectors) out.add_connector(std::move(c));
  } catch (const Error& e) {
    invalid(std::string("drawing does not fit the canvas: ") + e.what());
  }
  return out;
}

namespace {

json history_json(const DrawingHistory* history) {
  json out = json::array();
  if (history == nullptr) return out;
  for (const auto& h : *history) {
    out.push_back({{"concept", h.concept_id},
                   {"middlewares", h.middleware_ids},
                   {"bindings", h.bindings_summary},
                   {"score", h.score},
                   {"feedback", h.feedback}});
  }
  return out;
}

}  // namespace

DrawingChoice draw_concept(const DrawContext& ctx, ChatBackend& backend,
                           const RoleOptions& options) {
  if (ctx.candidates.empty()) {
    throw Error(ErrorKind::kPrecondition, "no candidate middlewares for '" + ctx.target.id + "'");
  }
  if (ctx.canvas == nullptr || ctx.repository == nullptr) {
    throw Error(ErrorKind::kPrecondition, "draw context lacks canvas or repository");
  }
  json candidates = json::array();
  for (const auto& id : ctx.candidates) {
    const middleware::Middleware* mw = ctx.repository->find(id);
    if (mw == nullptr) throw Error(ErrorKind::kUnknownId, "candidate '" + id + "' is unknown");
    json params = json::array();
    for (const auto& p : mw->params) params.push_back(middleware::to_json(p));
    candidates.push_back({{"id", mw->id},
                          {"name", mw->name},
                          {"description", mw->description},
                          {"concept", mw->concept_id},
                          {"params", params}});
  }
  json user = {{"task", "draw_concept"},
               {"theme", ctx.theme},
               {"concept", concept_json(ctx.target)},
               {"variant", ctx.variant},
               {"regen_round", ctx.regen_round},
               {"canvas", canvas_summary(*ctx.canvas)},
               {"candidates", candidates},
               {"history", history_json(ctx.history)}};
  if (!ctx.feedback.empty()) user["feedback"] = ctx.feedback;
  return call_role(backend, "drawer", "drawer", user, {attach(*ctx.canvas)}, options, 1,
                   [&](const json& j) {
                     DrawingChoice choice = drawing_choice_from_json(j);
                     apply_choice(*ctx.canvas, choice, *ctx.repository, ctx.candidates,
                                  ctx.target.id, "probe/");
                     return choice;
                   });
}

// --- Evaluator ------------------------------------------------------------

namespace {

EvaluationResult parse_evaluation(const json& j) {
  EvaluationResult r;
  r.score = finite_number(j, "score");
  if (j.contains("feedback")) {
    if (!j.at("feedback").is_string()) schema("feedback must be a string");
    r.feedback = j.at("feedback").get<std::string>();
  }
  if (r.score < 0.0 || r.score > 1.0) {
    r.warnings.push_back("evaluator score " + util::format_number(r.score) +
                         " clamped to [0,1]");
    r.score = std::clamp(r.score, 0.0, 1.0);
  }
  return r;
}

}  // namespace

EvaluationResult evaluate_canvas(const scene::Canvas& canvas, const ConceptGraph& graph,
                                 ChatBackend& backend, const RoleOptions& options) {
  if (canvas.empty()) return EvaluationResult{0.0, "nothing drawn yet", {}};
  json user = to_json(graph);
  user["task"] = "evaluate_canvas";
  user["canvas"] = canvas_summary(canvas);
  return call_role(backend, "evaluator", "evaluator", user, {attach(canvas)}, options, 0,
                   parse_evaluation);
}

EvaluationResult evaluate_concept_rendering(const scene::Canvas& canvas, const Concept& target,
                                            ChatBackend& backend, const RoleOptions& options) {
  if (!has_tag(canvas, target.id)) {
    throw Error(ErrorKind::kNoElementsForConcept,
                "no element on the canvas is tagged with concept '" + target.id + "'");
  }
  json user = {{"task", "evaluate_concept_rendering"},
               {"concept", concept_json(target)},
               {"canvas", canvas_summary(canvas)}};
  return call_role(backend, "evaluator", "concept_evaluator", user, {attach(canvas)}, options, 0,
                   parse_evaluation);
}

// --- Refiner --------------------------------------------------------------

const scene::SceneElement* representative(const scene::Canvas& canvas,
                                          const std::string& concept_id) {
  const scene::SceneElement* best = nullptr;
  for (const auto& e : canvas.elements()) {
    if (!tagged(e, concept_id)) continue;
    if (e.parent_group) {
      const scene::SceneElement* parent = canvas.find_element(*e.parent_group);
      if (parent != nullptr && tagged(*parent, concept_id)) continue;
    }
    if (best == nullptr || e.width * e.height > best->width * best->height) best = &e;
  }
  return best;
}

namespace {

bool linked(const scene::Canvas& canvas, const std::string& from, const std::string& to) {
  auto concept_of = [&](const scene::Endpoint& ep) -> std::optional<std::string> {
    const auto* id = std::get_if<std::string>(&ep);
    if (id == nullptr) return std::nullopt;
    const scene::SceneElement* e = canvas.find_element(*id);
    if (e == nullptr || !e->concept_tag) return std::nullopt;
    return e->concept_tag;
  };
  return std::any_of(canvas.connectors().begin(), canvas.connectors().end(), [&](const auto& c) {
    return concept_of(c.source) == from && concept_of(c.target) == to;
  });
}

void link(scene::Canvas& canvas, const std::string& from, const std::string& to,
          const std::string& label, Warnings& warnings) {
  if (from == to || linked(canvas, from, to)) return;
  const scene::SceneElement* a = representative(canvas, from);
  const scene::SceneElement* b = representative(canvas, to);
  if (a == nullptr || b == nullptr) {
    warnings.push_back("cannot connect '" + from + "' to '" + to + "': concept not drawn");
    return;
  }
  scene::Connector c;
  std::string base = "link/" + util::slugify(from) + "/" + util::slugify(to);
  c.id = base;
  for (int n = 2; canvas.contains(c.id); ++n) c.id = base + "-" + std::to_string(n);
  c.source = a->id;
  c.target = b->id;
  if (!label.empty()) c.label = label;
  canvas.add_connector(std::move(c));
}

}  // namespace

scene::Canvas add_missing_connectors(const scene::Canvas& canvas, const ConceptGraph& graph,
                                     Warnings& warnings) {
  scene::Canvas out = canvas;
  for (const auto& e : graph.edges) link(out, e.source, e.target, e.label, warnings);
  return out;
}

RefineResult refine(const scene::Canvas& canvas, const ConceptGraph& graph, ChatBackend& backend,
                    const RoleOptions& options) {
  struct Move {
    std::string concept_id;
    double dx;
    double dy;
  };
  struct Plan {
    std::vector<Move> moves;
    std::vector<Relation> links;
  };
  json user = to_json(graph);
  user["task"] = "refine";
  user["canvas"] = canvas_summary(canvas);
  Plan plan;
  try {
    plan = call_role(backend, "refiner", "refiner", user, {attach(canvas)}, options, 0,
                     [&](const json& j) {
                       Plan p;
                       if (j.contains("moves")) {
                         if (!j.at("moves").is_array()) schema("moves must be an array");
                         for (const auto& m : j.at("moves")) {
                           std::string id = require(m, "concept").get<std::string>();
                           if (graph.find(id) == nullptr) schema("move of unknown concept " + id);
                           p.moves.push_back({id, finite_number(m, "dx"), finite_number(m, "dy")});
                         }
                       }
                       if (j.contains("connectors")) {
                         if (!j.at("connectors").is_array()) schema("connectors must be an array");
                         for (const auto& c : j.at("connectors")) {
                           Relation r{require(c, "source").get<std::string>(),
                                      require(c, "target").get<std::string>(),
                                      c.value("label", "")};
                           if (graph.find(r.source) == nullptr || graph.find(r.target) == nullptr) {
                             schema("connector references an unknown concept");
                           }
                           p.links.push_back(std::move(r));
                         }
                       }
                       return p;
                     });
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kBackendFailure && e.kind() != ErrorKind::kSchemaInvalid) throw;
    return RefineResult{canvas, {std::string("refinement skipped: ") + e.what()}};
  }
  RefineResult result{canvas, {}};
  for (const auto& m : plan.moves) result.canvas.translate_concept(m.concept_id, m.dx, m.dy);
  for (const auto& l : plan.links) link(result.canvas, l.source, l.target, l.label, result.warnings);
  result.canvas = add_missing_connectors(result.canvas, graph, result.warnings);
  return result;
}

// --- Constructor and filter -----------------------------------------------

std::vector<json> ConstructorAgent::extract(const middleware::ExtractionInput& input) {
  if (input.canvas == nullptr) throw Error(ErrorKind::kPrecondition, "extraction needs a canvas");
  json user = {{"task", "extract_middlewares"},
               {"paper_id", input.paper_id},
               {"theme", input.theme},
               {"concept", concept_json(input.target)},
               {"paper_text", input.paper_text},
               {"canvas", canvas_summary(*input.canvas)}};
  return call_role(backend_, "constructor", "constructor_extract", user, {attach(*input.canvas)},
                   options_, 0, [](const json& j) {
                     const json& list = require(j, "middlewares");
                     if (!list.is_array()) schema("middlewares must be an array");
                     std::vector<json> out;
                     for (const auto& m : list) {
                       if (!m.is_object()) schema("each middleware must be an object");
                       out.push_back(m);
                     }
                     return out;
                   });
}

std::vector<std::string> ConstructorAgent::find_redundant(
    const std::string& theme, const std::string& concept_id,
    const std::vector<middleware::Middleware>& members) {
  json list = json::array();
  for (const auto& m : members) {
    list.push_back({{"id", m.id}, {"definition", middleware::proposal_json(m)}});
  }
  json user = {{"task", "find_redundant"},
               {"theme", theme},
               {"concept", concept_id},
               {"members", list}};
  return call_role(backend_, "constructor", "constructor_merge", user, {}, options_, 0,
                   [](const json& j) { return string_list(j, "redundant"); });
}

namespace {

json member_json(const middleware::Middleware& mw) {
  json j = {{"id", mw.id}, {"concept", mw.concept_id}, {"definition", middleware::proposal_json(mw)}};
  if (auto mes = mw.mes()) j["mes"] = *mes;
  return j;
}

json proposal_of(const json& j) {
  const json& m = require(j, "middleware");
  if (!m.is_object()) schema("middleware must be an object");
  return m;
}

}  // namespace

json ConstructorAgent::mutate(const middleware::Middleware& parent) {
  json user = {{"task", "mutate_middleware"}, {"middleware", member_json(parent)}};
  return call_role(backend_, "constructor", "constructor_mutate", user, {}, options_, 0,
                   proposal_of);
}

json ConstructorAgent::crossover(const std::vector<middleware::Middleware>& parents) {
  json list = json::array();
  for (const auto& p : parents) list.push_back(member_json(p));
  json user = {{"task", "crossover_middlewares"}, {"parents", list}};
  return call_role(backend_, "constructor", "constructor_crossover", user, {}, options_, 0,
                   proposal_of);
}

std::vector<std::string> FilterAgent::keep(const retrieval::CandidateSet& candidates,
                                           const std::string& concept_text,
                                           const std::string& theme) {
  json list = json::array();
  for (const auto& m : candidates.members) {
    const middleware::Middleware* mw = repository_.find(m.middleware_id);
    list.push_back({{"id", m.middleware_id},
                    {"name", mw != nullptr ? mw->name : ""},
                    {"description", mw != nullptr ? mw->description : ""},
                    {"source_concept", m.source_concept},
                    {"similarity", m.similarity}});
  }
  json user = {{"task", "filter_candidates"},
               {"theme", theme},
               {"concept", concept_text},
               {"candidates", list}};
  return call_role(backend_, "filter", "filter", user, {}, options_, 0,
                   [](const json& j) { return string_list(j, "keep"); });
}

}  // namespace figforge::agents
