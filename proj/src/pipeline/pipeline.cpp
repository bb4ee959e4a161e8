#include "figforge/pipeline/pipeline.hpp"

#include <algorithm>
#include <set>

#include "figforge/middleware/json_io.hpp"
#include "figforge/scene/mxgraph.hpp"
#include "figforge/scene/svg.hpp"
#include "figforge/util/parallel.hpp"
#include "figforge/util/text.hpp"

namespace figforge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool recoverable(const Error& e) {
  return e.kind() == ErrorKind::kBackendFailure || e.kind() == ErrorKind::kSchemaInvalid ||
         e.kind() == ErrorKind::kInvalidInvocation || e.kind() == ErrorKind::kExpansionFailure;
}

agents::ChatBackend& need(agents::ChatBackend* backend, const char* role) {
  if (backend == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, std::string("no backend for the ") + role + " role");
  }
  return *backend;
}

const retrieval::EmbeddingProvider& provider_of(const Services& services) {
  if (services.provider == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "no embedding provider configured");
  }
  return *services.provider;
}

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorKind::kCorruptFile, "experience store: " + what);
}

/// Parse and extraction for one pair; no repository writes.
struct Extraction {
  agents::ConceptGraph graph;
  middleware::CreationResult created;
};

Extraction extract_pair(const ExperiencePair& pair, const Services& services) {
  Extraction out;
  out.graph = agents::parse_paper(pair.paper_text, need(services.backends.parser, "parser"),
                                  services.options);
  agents::ConstructorAgent constructor(need(services.backends.constructor, "constructor"),
                                       services.options);
  out.created = middleware::create_from_pair(pair.id, pair.paper_text, pair.mi_canvas,
                                             out.graph.theme, out.graph.concepts, constructor);
  return out;
}

/// Extracts all pairs (concurrently) and adds the results in pair order.
std::size_t add_pairs(middleware::Repository& repository,
                      const std::vector<const ExperiencePair*>& pairs, const Services& services,
                      std::vector<std::string>& report) {
  const auto& provider = provider_of(services);
  auto results = util::parallel_indexed<Extraction>(
      pairs.size(), services.max_parallel,
      [&](std::size_t i) { return extract_pair(*pairs[i], services); });
  std::size_t added = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string& id = pairs[i]->id;
    if (results[i].error) {
      try {
        std::rethrow_exception(results[i].error);
      } catch (const Error& e) {
        if (!recoverable(e)) throw;
        report.push_back("pair '" + id + "' skipped: " + e.what());
      }
      continue;
    }
    Extraction& x = *results[i].value;
    for (auto& line : x.created.report) report.push_back("pair '" + id + "': " + line);
    if (x.created.middlewares.empty()) {
      report.push_back("pair '" + id + "': no middleware extracted");
    }
    for (auto& mw : x.created.middlewares) {
      std::string mw_id = mw.id;
      std::string theme = mw.theme;
      std::string concept_id = mw.concept_id;
      try {
        repository.add(std::move(mw), theme, concept_id, provider);
        ++added;
      } catch (const Error& e) {
        report.push_back("pair '" + id + "': middleware '" + mw_id + "' not added: " + e.what());
      }
    }
  }
  return added;
}

json graph_summary(const agents::ConceptGraph& graph) { return agents::to_json(graph); }

}  // namespace

// --- experience store ------------------------------------------------------

std::vector<const ExperiencePair*> ExperienceStore::accepted() const {
  std::vector<const ExperiencePair*> out;
  for (const auto& [id, p] : pairs) {
    if (p.accepted) out.push_back(&p);
  }
  return out;
}

json ExperienceStore::to_json() const {
  json list = json::array();
  for (const auto& [id, p] : pairs) {
    list.push_back({{"id", p.id},
                    {"paper_text", p.paper_text},
                    {"mi_xml", scene::to_mxgraph_xml(p.mi_canvas)},
                    {"quality", p.quality},
                    {"accepted", p.accepted}});
  }
  return {{"schema_version", kStoreSchemaVersion},
          {"threshold", threshold},
          {"source", source},
          {"ingested_at", ingested_at},
          {"pairs", list},
          {"report", report}};
}

ExperienceStore ExperienceStore::from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) corrupt("missing schema_version");
  if (j.at("schema_version") != kStoreSchemaVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "experience store schema " + j.at("schema_version").dump() + " is not supported");
  }
  ExperienceStore store;
  try {
    store.threshold = j.at("threshold").get<double>();
    store.source = j.value("source", "");
    store.ingested_at = j.value("ingested_at", "");
    store.report = j.value("report", std::vector<std::string>{});
    for (const auto& p : j.at("pairs")) {
      ExperiencePair pair;
      pair.id = p.at("id").get<std::string>();
      pair.paper_text = p.at("paper_text").get<std::string>();
      pair.mi_canvas = scene::from_mxgraph_xml(p.at("mi_xml").get<std::string>()).canvas;
      pair.quality = p.at("quality").get<double>();
      pair.accepted = p.at("accepted").get<bool>();
      if (pair.accepted && pair.quality < store.threshold) {
        corrupt("pair '" + pair.id + "' is accepted below the threshold");
      }
      std::string id = pair.id;
      if (!store.pairs.emplace(id, std::move(pair)).second) corrupt("duplicate pair '" + id + "'");
    }
  } catch (const json::exception& e) {
    corrupt(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kMalformedXml) corrupt(e.what());
    throw;
  }
  return store;
}

void ExperienceStore::save(const fs::path& path) const {
  util::write_file(path, to_json().dump(2) + "\n");
}

ExperienceStore ExperienceStore::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(util::read_file(path));
  } catch (const json::exception& e) {
    corrupt(path.string() + ": " + e.what());
  }
  return from_json(j);
}

// --- ingestion -------------------------------------------------------------

ExperienceStore ingest(const fs::path& directory, const Services& services, double threshold,
                       const std::string& ingested_at) {
  if (!fs::is_directory(directory)) {
    throw Error(ErrorKind::kIo, "corpus directory '" + directory.string() + "' does not exist");
  }
  ExperienceStore store;
  store.threshold = threshold;
  store.source = directory.string();
  store.ingested_at = ingested_at;

  std::set<std::string> texts;
  std::set<std::string> figures;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".txt") texts.insert(entry.path().stem().string());
    if (ext == ".drawio") figures.insert(entry.path().stem().string());
  }
  for (const auto& id : figures) {
    if (texts.count(id) == 0) store.report.push_back("'" + id + ".drawio' has no matching text");
  }
  std::vector<ExperiencePair> candidates;
  for (const auto& id : texts) {
    if (figures.count(id) == 0) {
      store.report.push_back("'" + id + ".txt' has no matching .drawio figure");
      continue;
    }
    ExperiencePair pair;
    pair.id = id;
    try {
      pair.paper_text = util::read_file(directory / (id + ".txt"));
      auto read = scene::from_mxgraph_xml(util::read_file(directory / (id + ".drawio")));
      pair.mi_canvas = std::move(read.canvas);
      for (const auto& w : read.warnings) store.report.push_back("'" + id + "': " + w);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kIo && e.kind() != ErrorKind::kMalformedXml) throw;
      store.report.push_back("'" + id + "' skipped: " + e.what());
      continue;
    }
    candidates.push_back(std::move(pair));
  }

  agents::ChatBackend& evaluator = need(services.backends.evaluator, "evaluator");
  const agents::ConceptGraph context;  // figures are judged on their own
  auto scores = util::parallel_indexed<agents::EvaluationResult>(
      candidates.size(), services.max_parallel, [&](std::size_t i) {
        return agents::evaluate_canvas(candidates[i].mi_canvas, context, evaluator,
                                       services.options);
      });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ExperiencePair& pair = candidates[i];
    if (scores[i].error) {
      try {
        std::rethrow_exception(scores[i].error);
      } catch (const Error& e) {
        if (!recoverable(e)) throw;
        store.report.push_back("'" + pair.id + "' not scored: " + e.what());
      }
      continue;
    }
    pair.quality = scores[i].value->score;
    pair.accepted = pair.quality >= threshold;
    for (const auto& w : scores[i].value->warnings) store.report.push_back("'" + pair.id + "': " + w);
    if (!pair.accepted) {
      store.report.push_back("'" + pair.id + "' below threshold (" +
                             util::format_number(pair.quality) + ")");
    }
    std::string id = pair.id;
    store.pairs.emplace(id, std::move(pair));
  }
  return store;
}

// --- repository creation ----------------------------------------------------

BuildResult build_repository(const ExperienceStore& store, const Services& services,
                             double merge_threshold) {
  auto pairs = store.accepted();
  if (pairs.empty()) throw Error(ErrorKind::kPrecondition, "no accepted experience pairs");
  BuildResult result;
  add_pairs(result.repository, pairs, services, result.report);
  if (result.repository.empty()) {
    result.report.push_back("no middleware could be created");
    return result;
  }
  agents::ConstructorAgent constructor(need(services.backends.constructor, "constructor"),
                                       services.options);
  try {
    result.merge = result.repository.merge(merge_threshold, constructor);
  } catch (const Error& e) {
    if (!recoverable(e)) throw;
    result.report.push_back(std::string("merge skipped: ") + e.what());
  }
  return result;
}

std::vector<std::string> incorporate_new_pairs(middleware::Repository& repository,
                                               const std::vector<const ExperiencePair*>& pairs,
                                               const Services& services,
                                               double merge_threshold) {
  std::vector<std::string> notes;
  std::set<std::string> known;
  for (const auto& [id, mw] : repository.store()) {
    if (mw.provenance.kind == middleware::ProvenanceKind::kExtracted) {
      known.insert(mw.provenance.source_paper);
    }
  }
  std::vector<const ExperiencePair*> fresh;
  for (const ExperiencePair* p : pairs) {
    if (!known.insert(p->id).second) {
      notes.push_back("pair '" + p->id + "' already incorporated");
      continue;
    }
    fresh.push_back(p);
  }
  if (fresh.empty()) return notes;
  if (add_pairs(repository, fresh, services, notes) == 0) return notes;
  agents::ConstructorAgent constructor(need(services.backends.constructor, "constructor"),
                                       services.options);
  try {
    repository.merge(merge_threshold, constructor);
  } catch (const Error& e) {
    if (!recoverable(e)) throw;
    notes.push_back(std::string("merge skipped: ") + e.what());
  }
  return notes;
}

// --- generation ------------------------------------------------------------

GenerateResult generate(const std::string& paper_text, const middleware::Repository& repository,
                        const Services& services, const search::SearchParams& params,
                        std::uint64_t seed, search::DrawingTree* partial_tree) {
  GenerateResult out;
  try {
    out.search = search::run(paper_text, repository, provider_of(services), services.backends,
                             params, seed, out.tree, services.options);
  } catch (...) {
    if (partial_tree != nullptr) *partial_tree = out.tree;
    throw;
  }
  out.warnings = out.search.warnings;
  const agents::ConceptGraph& graph = out.search.graph;

  if (services.backends.refiner != nullptr) {
    agents::RefineResult refined =
        agents::refine(out.search.canvas, graph, *services.backends.refiner, services.options);
    out.canvas = std::move(refined.canvas);
    for (auto& w : refined.warnings) out.warnings.push_back(w);
  } else {
    out.canvas = agents::add_missing_connectors(out.search.canvas, graph, out.warnings);
  }
  out.xml = scene::to_mxgraph_xml(out.canvas);
  out.svg = scene::to_svg(out.canvas);

  try {
    agents::EvaluationResult eval = agents::evaluate_canvas(
        out.canvas, graph, need(services.backends.evaluator, "evaluator"), services.options);
    out.quality = eval.score;
    for (auto& w : eval.warnings) out.warnings.push_back(w);
  } catch (const Error& e) {
    if (!recoverable(e)) throw;
    out.quality = out.tree.node(out.tree.terminal()).absolute_quality;
    out.warnings.push_back(std::string("final evaluation failed, using the search score: ") +
                           e.what());
  }

  json order = json::array();
  for (const auto& c : out.search.order) order.push_back(c.id);
  json iterations = json::array();
  for (const auto& s : out.search.iterations) iterations.push_back(search::to_json(s));
  json usages = json::array();
  for (const auto& u : out.search.usages) usages.push_back(search::to_json(u));
  json models = json::object();
  const std::pair<const char*, agents::ChatBackend*> roles[] = {
      {"parser", services.backends.parser},   {"drawer", services.backends.drawer},
      {"evaluator", services.backends.evaluator}, {"refiner", services.backends.refiner},
      {"filter", services.backends.filter}};
  for (const auto& [role, backend] : roles) {
    if (backend != nullptr) models[role] = backend->model();
  }
  out.manifest = {
      {"schema_version", kManifestSchemaVersion},
      {"seed", seed},
      {"params", search::to_json(params)},
      {"paper_sha256", util::sha256_hex(paper_text)},
      {"models", models},
      {"embedding_provider", provider_of(services).name()},
      {"theme", graph.theme},
      {"repository_theme", out.search.theme},
      {"concept_order", order},
      {"graph", graph_summary(graph)},
      {"candidates", out.search.candidates},
      {"iterations", iterations},
      {"tree",
       {{"nodes", out.tree.size()},
        {"terminal", out.tree.terminal()},
        {"winning_path", out.tree.path_to(out.tree.terminal())}}},
      {"usages", usages},
      {"quality", out.quality},
      {"warnings", out.warnings},
      {"outputs",
       {{"figure.drawio", util::sha256_hex(out.xml)}, {"figure.svg", util::sha256_hex(out.svg)}}}};
  return out;
}

void apply_usages(middleware::Repository& repository, const GenerateResult& result) {
  for (const auto& u : result.search.usages) repository.record_usage(u.middleware_id, u.score);
}

void write_tree_dump(const fs::path& directory, const search::DrawingTree& tree) {
  util::write_file(directory / "tree.json", search::to_json(tree).dump(2) + "\n");
  for (const auto& n : tree.nodes()) {
    util::write_file(directory / "nodes" / ("node-" + std::to_string(n.id) + ".drawio"),
                     scene::to_mxgraph_xml(n.canvas));
  }
}

void write_run_artifacts(const fs::path& directory, const GenerateResult& result) {
  util::write_file(directory / "figure.drawio", result.xml);
  util::write_file(directory / "figure.svg", result.svg);
  util::write_file(directory / "manifest.json", result.manifest.dump(2) + "\n");
  write_tree_dump(directory, result.tree);
}

}  // namespace figforge::pipeline
