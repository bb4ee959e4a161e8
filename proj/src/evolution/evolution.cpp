#include "figforge/evolution/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "figforge/agents/roles.hpp"
#include "figforge/middleware/json_io.hpp"
#include "figforge/util/parallel.hpp"

namespace figforge::evolution {

using nlohmann::json;

namespace {

json optional_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fresh_id(const middleware::Repository& repository, const std::string& base) {
  for (int n = 1;; ++n) {
    std::string id = base + std::to_string(n);
    if (repository.find(id) == nullptr) return id;
  }
}

const middleware::Middleware& existing(const middleware::Repository& repository,
                                       const std::string& id) {
  const middleware::Middleware* mw = repository.find(id);
  if (mw == nullptr) throw Error(ErrorKind::kUnknownId, "no middleware '" + id + "'");
  return *mw;
}

bool skippable(const Error& e) {
  return e.kind() == ErrorKind::kValidation || e.kind() == ErrorKind::kBackendFailure ||
         e.kind() == ErrorKind::kSchemaInvalid || e.kind() == ErrorKind::kDuplicateId;
}

/// Used middlewares ordered by MES (ascending or descending), ties by id.
std::vector<const middleware::Middleware*> ranked(const middleware::Repository& repository,
                                                  bool ascending) {
  std::vector<const middleware::Middleware*> out;
  for (const auto& [id, mw] : repository.store()) {
    if (mw.mes()) out.push_back(&mw);
  }
  std::stable_sort(out.begin(), out.end(), [&](const auto* a, const auto* b) {
    double ma = *a->mes();
    double mb = *b->mes();
    if (ma != mb) return ascending ? ma < mb : ma > mb;
    return a->id < b->id;
  });
  return out;
}

}  // namespace

void EvolutionConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidArgument, what); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_iterations < 0) fail("max_iterations must be >= 0");
  if (patience < 0) fail("patience must be >= 0");
  if (!(epsilon >= 0.0)) fail("epsilon must be >= 0");
  if (!(mes_delete_threshold >= 0.0 && mes_delete_threshold <= 1.0)) {
    fail("mes_delete_threshold must lie in [0,1]");
  }
  if (min_usages_for_selection < 0) fail("min_usages_for_selection must be >= 0");
  if (mutation_count < 0 || crossover_count < 0) fail("operator counts must be >= 0");
}

json to_json(const EvolutionConfig& c) {
  return {{"batch_size", c.batch_size},
          {"max_iterations", c.max_iterations},
          {"patience", c.patience},
          {"epsilon", c.epsilon},
          {"mes_delete_threshold", c.mes_delete_threshold},
          {"min_usages_for_selection", c.min_usages_for_selection},
          {"mutation_count", c.mutation_count},
          {"crossover_count", c.crossover_count}};
}

EvolutionConfig evolution_config_from_json(const json& j) {
  EvolutionConfig c;
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.patience = j.value("patience", c.patience);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.mes_delete_threshold = j.value("mes_delete_threshold", c.mes_delete_threshold);
    c.min_usages_for_selection = j.value("min_usages_for_selection", c.min_usages_for_selection);
    c.mutation_count = j.value("mutation_count", c.mutation_count);
    c.crossover_count = j.value("crossover_count", c.crossover_count);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("evolution config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ObjectiveReport& r) {
  json papers = json::array();
  for (const auto& p : r.papers) {
    json j = {{"id", p.id}, {"quality", p.quality ? json(*p.quality) : json(nullptr)}};
    if (!p.error.empty()) j["error"] = p.error;
    papers.push_back(std::move(j));
  }
  return {{"value", r.value},
          {"mean_quality", r.mean_quality},
          {"mean_mes", r.mean_mes},
          {"empty_invoked_set", r.empty_invoked_set},
          {"papers", papers},
          {"invoked_mes", r.invoked_mes}};
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  idx.resize(std::min(k, n));
  return idx;
}

ObjectiveReport evaluate_objective(middleware::Repository& repository,
                                   const std::vector<const pipeline::ExperiencePair*>& batch,
                                   const pipeline::Services& services,
                                   const search::SearchParams& params, std::uint64_t seed) {
  if (batch.empty()) throw Error(ErrorKind::kPrecondition, "the paper batch is empty");
  const middleware::Repository& view = repository;
  auto runs = util::parallel_indexed<pipeline::GenerateResult>(
      batch.size(), services.max_parallel, [&](std::size_t i) {
        return pipeline::generate(batch[i]->paper_text, view, services, params, seed);
      });
  ObjectiveReport report;
  double quality_sum = 0.0;
  std::size_t succeeded = 0;
  std::set<std::string> invoked;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    PaperOutcome outcome{batch[i]->id, std::nullopt, ""};
    if (runs[i].error) {
      try {
        std::rethrow_exception(runs[i].error);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kFixtureMissing) throw;
        outcome.error = e.what();
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
      report.papers.push_back(std::move(outcome));
      continue;
    }
    const pipeline::GenerateResult& run = *runs[i].value;
    pipeline::apply_usages(repository, run);
    for (const auto& u : run.search.usages) invoked.insert(u.middleware_id);
    outcome.quality = run.quality;
    quality_sum += run.quality;
    ++succeeded;
    report.papers.push_back(std::move(outcome));
  }
  if (succeeded == 0) {
    throw Error(ErrorKind::kObjectiveFailure, "every paper of the batch failed to generate");
  }
  report.mean_quality = quality_sum / static_cast<double>(succeeded);
  double mes_sum = 0.0;
  for (const auto& id : invoked) {
    double mes = repository.find(id)->mes().value_or(0.0);
    report.invoked_mes[id] = mes;
    mes_sum += mes;
  }
  report.empty_invoked_set = invoked.empty();
  report.mean_mes = invoked.empty() ? 0.0 : mes_sum / static_cast<double>(invoked.size());
  report.value = report.mean_quality + report.mean_mes;
  return report;
}

std::vector<std::string> op_selection(middleware::Repository& repository,
                                      const EvolutionConfig& config) {
  std::vector<std::string> doomed;
  for (const auto& [id, mw] : repository.store()) {
    auto mes = mw.mes();
    if (mw.usage_n >= config.min_usages_for_selection && mes &&
        *mes < config.mes_delete_threshold) {
      doomed.push_back(id);
    }
  }
  for (const auto& id : doomed) repository.remove(id);
  return doomed;
}

std::string op_mutation(middleware::Repository& repository, const std::string& middleware_id,
                        middleware::ConstructorPort& constructor,
                        const retrieval::EmbeddingProvider& provider) {
  const middleware::Middleware& parent = existing(repository, middleware_id);
  json proposal = constructor.mutate(parent);
  middleware::Middleware child = middleware::middleware_from_proposal(proposal);
  child.id = fresh_id(repository, parent.id + "~mut");
  child.theme = parent.theme;
  child.concept_id = parent.concept_id;
  child.provenance = {middleware::ProvenanceKind::kMutated, "", {parent.id}};
  std::string id = child.id;
  std::string theme = parent.theme;
  std::string concept_id = parent.concept_id;
  repository.add(std::move(child), theme, concept_id, provider);
  return id;
}

std::string op_crossover(middleware::Repository& repository,
                         const std::vector<std::string>& parent_ids,
                         middleware::ConstructorPort& constructor,
                         const retrieval::EmbeddingProvider& provider) {
  if (parent_ids.size() < 2) throw Error(ErrorKind::kPrecondition, "crossover needs two parents");
  std::vector<middleware::Middleware> parents;
  for (const auto& id : parent_ids) parents.push_back(existing(repository, id));
  const middleware::Middleware* best = &parents.front();
  for (const auto& p : parents) {
    if (p.theme != parents.front().theme) {
      throw Error(ErrorKind::kPrecondition, "crossover parents '" + parents.front().id +
                                                "' and '" + p.id + "' belong to different themes");
    }
    if (p.mes().value_or(0.0) > best->mes().value_or(0.0)) best = &p;
  }
  json proposal = constructor.crossover(parents);
  middleware::Middleware child = middleware::middleware_from_proposal(proposal);
  child.id = fresh_id(repository, parents.front().id + "~x");
  child.theme = best->theme;
  child.concept_id = best->concept_id;
  child.provenance = {middleware::ProvenanceKind::kCrossover, "", parent_ids};
  std::string id = child.id;
  std::string theme = best->theme;
  std::string concept_id = best->concept_id;
  repository.add(std::move(child), theme, concept_id, provider);
  return id;
}

namespace {

std::vector<const pipeline::ExperiencePair*> draw_batch(
    const std::vector<const pipeline::ExperiencePair*>& pool, std::size_t size,
    std::mt19937_64& rng) {
  std::vector<const pipeline::ExperiencePair*> batch;
  for (std::size_t i : sample_indices(pool.size(), size, rng)) batch.push_back(pool[i]);
  return batch;
}

std::vector<std::string> ids_of(const std::vector<const pipeline::ExperiencePair*>& batch) {
  std::vector<std::string> out;
  for (const auto* p : batch) out.push_back(p->id);
  return out;
}

void apply_operators(middleware::Repository& repo, const EvolutionConfig& config,
                     const pipeline::Services& services, IterationRecord& record) {
  for (const auto& id : op_selection(repo, config)) record.operations.push_back({"delete", {id}, "", ""});
  if (services.backends.constructor == nullptr || services.provider == nullptr) return;
  agents::ConstructorAgent constructor(*services.backends.constructor, services.options);

  auto targets = ranked(repo, true);
  std::vector<std::string> target_ids;
  for (std::size_t i = 0; i < targets.size() && target_ids.size() < static_cast<std::size_t>(config.mutation_count); ++i) {
    target_ids.push_back(targets[i]->id);
  }
  for (const auto& id : target_ids) {
    Operation op{"mutate", {id}, "", ""};
    try {
      op.output = op_mutation(repo, id, constructor, *services.provider);
    } catch (const Error& e) {
      if (!skippable(e)) throw;
      op.error = e.what();
    }
    record.operations.push_back(std::move(op));
  }

  auto fittest = ranked(repo, false);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < fittest.size(); ++i) {
    for (std::size_t j = i + 1; j < fittest.size(); ++j) {
      if (pairs.size() >= static_cast<std::size_t>(config.crossover_count)) break;
      if (fittest[i]->theme == fittest[j]->theme) pairs.emplace_back(fittest[i]->id, fittest[j]->id);
    }
  }
  for (const auto& [a, b] : pairs) {
    Operation op{"crossover", {a, b}, "", ""};
    try {
      op.output = op_crossover(repo, {a, b}, constructor, *services.provider);
    } catch (const Error& e) {
      if (!skippable(e)) throw;
      op.error = e.what();
    }
    record.operations.push_back(std::move(op));
  }
}

}  // namespace

EvolutionResult evolve(const middleware::Repository& repository,
                       const pipeline::ExperienceStore& store, const EvolutionConfig& config,
                       const pipeline::Services& services, const search::SearchParams& params,
                       std::uint64_t seed) {
  config.validate();
  auto pool = store.accepted();
  if (pool.empty()) throw Error(ErrorKind::kPrecondition, "no accepted experience pairs");
  EvolutionResult result;
  result.repository = repository;
  if (config.max_iterations == 0) return result;

  std::mt19937_64 rng(seed);
  auto batch = draw_batch(pool, config.batch_size, rng);
  result.initial_batch = ids_of(batch);
  result.initial = evaluate_objective(result.repository, batch, services, params, seed);
  double current = result.initial.value;
  result.trajectory.push_back(current);

  int stall = 0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    IterationRecord record;
    record.iteration = it;
    record.objective_before = current;
    record.snapshot = "iteration-" + std::to_string(it);
    const middleware::Repository snapshot = result.repository;
    batch = draw_batch(pool, config.batch_size, rng);
    record.batch = ids_of(batch);
    try {
      apply_operators(result.repository, config, services, record);
      record.objective = evaluate_objective(result.repository, batch, services, params, seed);
      record.objective_after = record.objective->value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kObjectiveFailure && e.kind() != ErrorKind::kBackendFailure) throw;
      record.error = e.what();
      record.objective_after = -std::numeric_limits<double>::infinity();
    }
    record.accepted = record.objective_after >= record.objective_before;
    if (record.accepted) {
      current = record.objective_after;
      result.trajectory.push_back(current);
    } else {
      result.repository = snapshot;
    }
    const double improvement = record.objective_after - record.objective_before;
    result.records.push_back(std::move(record));
    stall = improvement < config.epsilon ? stall + 1 : 0;
    if (config.patience > 0 && stall >= config.patience) {
      result.stopped_early = it < config.max_iterations;
      break;
    }
  }
  return result;
}

json to_json(const EvolutionResult& result, const EvolutionConfig& config, std::uint64_t seed) {
  json records = json::array();
  json deletions = json::array();
  for (const auto& r : result.records) {
    json ops = json::array();
    for (const auto& op : r.operations) {
      json o = {{"kind", op.kind}, {"inputs", op.inputs}};
      if (!op.output.empty()) o["output"] = op.output;
      if (!op.error.empty()) o["error"] = op.error;
      ops.push_back(std::move(o));
      if (r.accepted && op.kind == "delete") deletions.push_back(op.inputs.front());
    }
    json j = {{"iteration", r.iteration},
              {"objective_before", r.objective_before},
              {"objective_after", optional_number(r.objective_after)},
              {"accepted", r.accepted},
              {"snapshot", r.snapshot},
              {"batch", r.batch},
              {"operations", ops}};
    if (r.objective) j["objective"] = to_json(*r.objective);
    if (!r.error.empty()) j["error"] = r.error;
    records.push_back(std::move(j));
  }
  json lineage = json::array();
  for (const auto& [id, mw] : result.repository.store()) {
    json l = {{"id", id}, {"kind", std::string(middleware::to_string(mw.provenance.kind))}};
    if (mw.provenance.kind == middleware::ProvenanceKind::kExtracted) {
      l["source_paper"] = mw.provenance.source_paper;
    } else {
      l["parents"] = mw.provenance.parents;
    }
    lineage.push_back(std::move(l));
  }
  json initial = json(nullptr);
  if (!result.trajectory.empty()) {
    initial = {{"batch", result.initial_batch}, {"objective", to_json(result.initial)}};
  }
  return {{"schema_version", 1},
          {"seed", seed},
          {"config", to_json(config)},
          {"initial", initial},
          {"records", records},
          {"trajectory", result.trajectory},
          {"stopped_early", result.stopped_early},
          {"deletions", deletions},
          {"lineage", lineage}};
}

}  // namespace figforge::evolution
