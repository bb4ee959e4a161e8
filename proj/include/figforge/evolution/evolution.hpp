#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "figforge/middleware/repository.hpp"
#include "figforge/pipeline/pipeline.hpp"
#include "figforge/search/tree.hpp"

namespace figforge::evolution {

struct EvolutionConfig {
  std::size_t batch_size = 4;
  int max_iterations = 5;
  int patience = 3;
  double epsilon = 0.01;
  double mes_delete_threshold = 0.5;  // tau
  long min_usages_for_selection = 3;  // N_min
  int mutation_count = 2;
  int crossover_count = 1;

  /// Throws kInvalidArgument.
  void validate() const;
};

nlohmann::json to_json(const EvolutionConfig& config);
EvolutionConfig evolution_config_from_json(const nlohmann::json& json);

struct PaperOutcome {
  std::string id;
  std::optional<double> quality;  // empty when the paper was excluded
  std::string error;
};

/// Objective of one batch: mean final quality plus mean efficacy over the
/// middlewares the batch invoked.
struct ObjectiveReport {
  double value = 0.0;
  double mean_quality = 0.0;
  double mean_mes = 0.0;
  bool empty_invoked_set = false;
  std::vector<PaperOutcome> papers;
  std::map<std::string, double> invoked_mes;  // after this batch's usages
};

nlohmann::json to_json(const ObjectiveReport& report);

/// Generates every paper of the batch against `repository`, records the
/// winning-path usages into it, and returns the objective. Failed papers are
/// excluded; throws kObjectiveFailure when all fail.
ObjectiveReport evaluate_objective(middleware::Repository& repository,
                                   const std::vector<const pipeline::ExperiencePair*>& batch,
                                   const pipeline::Services& services,
                                   const search::SearchParams& params, std::uint64_t seed);

/// Deletes middlewares with N >= N_min and MES < tau. Returns their ids.
std::vector<std::string> op_selection(middleware::Repository& repository,
                                      const EvolutionConfig& config);

/// Adds a validated variant of `middleware_id` under the parent's entry and
/// returns its id ("<parent>~mut<n>"). The repository is unchanged when the
/// proposal is invalid (kValidation) or the backend fails.
std::string op_mutation(middleware::Repository& repository, const std::string& middleware_id,
                        middleware::ConstructorPort& constructor,
                        const retrieval::EmbeddingProvider& provider);

/// Adds a validated offspring of two or more same-theme parents under the
/// concept of the highest-MES parent (ties: first listed) and returns its id
/// ("<first parent>~x<n>").
std::string op_crossover(middleware::Repository& repository,
                         const std::vector<std::string>& parent_ids,
                         middleware::ConstructorPort& constructor,
                         const retrieval::EmbeddingProvider& provider);

struct Operation {
  std::string kind;  // "delete", "mutate", "crossover"
  std::vector<std::string> inputs;
  std::string output;  // new id, empty for deletions
  std::string error;   // set when the operation was skipped
};

struct IterationRecord {
  int iteration = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  bool accepted = false;
  std::vector<Operation> operations;
  std::string snapshot;  // label of the pre-iteration snapshot
  std::vector<std::string> batch;
  std::optional<ObjectiveReport> objective;  // empty when evaluation failed
  std::string error;
};

struct EvolutionResult {
  middleware::Repository repository;
  ObjectiveReport initial;
  std::vector<std::string> initial_batch;
  std::vector<IterationRecord> records;
  std::vector<double> trajectory;  // accepted objective values, initial first
  bool stopped_early = false;
};

/// Selection, mutation and crossover with rollback and early stopping.
EvolutionResult evolve(const middleware::Repository& repository,
                       const pipeline::ExperienceStore& store, const EvolutionConfig& config,
                       const pipeline::Services& services, const search::SearchParams& params,
                       std::uint64_t seed);

/// Run report: config, records, trajectory, deletions and lineage.
nlohmann::json to_json(const EvolutionResult& result, const EvolutionConfig& config,
                       std::uint64_t seed);

/// Seeded Fisher-Yates sample of min(k, n) indices out of n.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng);

}  // namespace figforge::evolution
