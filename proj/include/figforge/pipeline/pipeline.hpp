#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "figforge/agents/roles.hpp"
#include "figforge/middleware/repository.hpp"
#include "figforge/retrieval/embedding.hpp"
#include "figforge/search/explorer.hpp"
#include "figforge/search/tree.hpp"

namespace figforge::pipeline {

inline constexpr double kDefaultIngestThreshold = 0.5;
inline constexpr int kStoreSchemaVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;

/// Everything a stage needs to talk to the outside world.
struct Services {
  const retrieval::EmbeddingProvider* provider = nullptr;
  agents::Backends backends;
  agents::RoleOptions options;
  std::size_t max_parallel = 1;  // concurrent backend-driven tasks
};

struct ExperiencePair {
  std::string id;
  std::string paper_text;
  scene::Canvas mi_canvas;
  double quality = 0.0;
  bool accepted = false;
};

struct ExperienceStore {
  std::map<std::string, ExperiencePair> pairs;
  double threshold = kDefaultIngestThreshold;
  std::string source;       // corpus directory as given
  std::string ingested_at;  // caller-supplied date stamp
  std::vector<std::string> report;

  std::vector<const ExperiencePair*> accepted() const;
  nlohmann::json to_json() const;
  /// Throws kVersionMismatch or kCorruptFile.
  static ExperienceStore from_json(const nlohmann::json& json);
  void save(const std::filesystem::path& path) const;
  static ExperienceStore load(const std::filesystem::path& path);
};

/// Reads `<id>.txt` + `<id>.drawio` pairs, scores each figure with the
/// evaluator and marks pairs below `threshold` as not accepted. Unmatched or
/// unreadable files are skipped and reported. Throws kIo for a missing
/// directory.
ExperienceStore ingest(const std::filesystem::path& directory, const Services& services,
                       double threshold = kDefaultIngestThreshold,
                       const std::string& ingested_at = "");

struct BuildResult {
  middleware::Repository repository;
  middleware::MergeReport merge;
  std::vector<std::string> report;
};

/// Repository creation over accepted pairs: parse, extract, add, then merge.
/// Per-pair backend failures are skipped and reported. Throws kPrecondition
/// without accepted pairs.
BuildResult build_repository(const ExperienceStore& store, const Services& services,
                             double merge_threshold = middleware::kDefaultMergeThreshold);

/// Adds the middlewares of pairs whose id is not yet a source paper in the
/// repository, then merges. Returns per-pair notes.
std::vector<std::string> incorporate_new_pairs(
    middleware::Repository& repository, const std::vector<const ExperiencePair*>& pairs,
    const Services& services, double merge_threshold = middleware::kDefaultMergeThreshold);

struct GenerateResult {
  scene::Canvas canvas;  // after refinement
  std::string xml;
  std::string svg;
  double quality = 0.0;  // evaluator score of the final canvas
  search::DrawingTree tree;
  search::SearchResult search;
  Warnings warnings;
  nlohmann::json manifest;
};

/// Parse, Explore-and-Select, refine and serialize. The repository is only
/// read; apply_usages() records the winning-path scores afterwards. On a
/// search failure `partial_tree`, when given, keeps the tree for diagnosis.
GenerateResult generate(const std::string& paper_text, const middleware::Repository& repository,
                        const Services& services, const search::SearchParams& params,
                        std::uint64_t seed, search::DrawingTree* partial_tree = nullptr);

/// Writes every usage of a run into the repository.
void apply_usages(middleware::Repository& repository, const GenerateResult& result);

/// figure.drawio, figure.svg, manifest.json, tree.json and nodes/<id>.drawio.
void write_run_artifacts(const std::filesystem::path& directory, const GenerateResult& result);
void write_tree_dump(const std::filesystem::path& directory, const search::DrawingTree& tree);

}  // namespace figforge::pipeline
