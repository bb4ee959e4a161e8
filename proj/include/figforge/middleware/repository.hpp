#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "figforge/agents/concept_graph.hpp"
#include "figforge/middleware/middleware.hpp"
#include "figforge/retrieval/embedding.hpp"

namespace figforge::middleware {

inline constexpr int kRepositorySchemaVersion = 1;
inline constexpr double kDefaultMergeThreshold = 0.85;

/// Repository key for a concept or theme name: normalized text.
std::string concept_key(std::string_view name);

struct EntryKey {
  std::string theme;
  std::string concept_id;
  auto operator<=>(const EntryKey&) const = default;
};

struct ExtractionInput {
  std::string paper_id;
  std::string paper_text;
  const scene::Canvas* canvas = nullptr;
  std::string theme;
  agents::Concept target;
};

/// What the repository needs from the Constructor role. Implementations
/// return raw proposals; parsing and validation happen in this module.
class ConstructorPort {
 public:
  virtual ~ConstructorPort() = default;
  /// Zero or more proposals ({name, description, params, body}).
  virtual std::vector<nlohmann::json> extract(const ExtractionInput& input) = 0;
  /// Ids among `members` (all indexed under one merged concept) that are
  /// functionally redundant.
  virtual std::vector<std::string> find_redundant(const std::string& theme,
                                                  const std::string& concept_id,
                                                  const std::vector<Middleware>& members) = 0;
  virtual nlohmann::json mutate(const Middleware& parent) = 0;
  virtual nlohmann::json crossover(const std::vector<Middleware>& parents) = 0;
};

struct MergeReport {
  struct Cluster {
    std::string theme;
    std::string canonical;
    std::vector<std::string> merged;  // absorbed concepts, sorted
  };
  std::vector<Cluster> clusters;
  std::vector<std::string> removed;  // redundant middleware ids
};

/// Three-level index theme -> concept -> middleware ids with the middleware
/// store and per-concept embeddings. Not internally synchronized: readers may
/// share a const instance, mutations go through one writer.
class Repository {
 public:
  /// Indexes `mw` under (theme, concept_id) after validating its body. The
  /// concept embedding is computed with `provider` when the concept is new.
  /// Throws kDuplicateId, kValidation or kDimensionMismatch.
  void add(Middleware mw, const std::string& theme, const std::string& concept_id,
           const retrieval::EmbeddingProvider& provider);
  /// Removes a middleware; an entry left empty is removed with it.
  void remove(const std::string& id);

  const Middleware* find(const std::string& id) const;
  const std::map<std::string, Middleware>& store() const { return store_; }
  const std::map<EntryKey, std::vector<std::string>>& entries() const { return entries_; }
  const std::vector<std::string>* entry(const std::string& theme,
                                        const std::string& concept_id) const;
  std::vector<std::string> themes() const;
  std::vector<std::string> concepts(const std::string& theme) const;
  const retrieval::Vector* embedding(const std::string& concept_id) const;
  const std::map<std::string, retrieval::Vector>& embeddings() const { return embeddings_; }
  const std::string& embedding_provider() const { return provider_name_; }
  bool empty() const { return store_.empty(); }

  /// Adds `score` to S and one to N. Throws kUnknownId / kOutOfRange.
  void record_usage(const std::string& id, double score);

  /// Unifies concepts of the same theme whose embeddings have cosine
  /// similarity >= threshold (transitively), then drops the members the
  /// backend names as redundant. All-or-nothing: any backend failure leaves
  /// the repository untouched and rethrows.
  MergeReport merge(double threshold, ConstructorPort& backend);

  /// Messages for every broken invariant; empty means consistent.
  std::vector<std::string> invariant_problems() const;

  nlohmann::json to_json() const;
  /// Throws kVersionMismatch or kCorruptFile.
  static Repository from_json(const nlohmann::json& json);
  void save(const std::filesystem::path& path) const;
  static Repository load(const std::filesystem::path& path);

  bool operator==(const Repository&) const = default;

 private:
  void drop_unused_embeddings();

  std::map<std::string, Middleware> store_;
  std::map<EntryKey, std::vector<std::string>> entries_;
  std::map<std::string, retrieval::Vector> embeddings_;
  std::string provider_name_;
};

/// Collects usage records from concurrent evaluations; the owning writer
/// applies them to a repository in recording order.
class UsageLedger {
 public:
  struct Record {
    std::string middleware_id;
    double score;
  };
  void record(const std::string& id, double score);
  std::vector<Record> records() const;
  void apply(Repository& repository) const;

 private:
  mutable std::mutex mutex_;
  std::vector<Record> records_;
};

struct CreationResult {
  std::vector<Middleware> middlewares;
  std::vector<std::string> report;  // dropped proposals and why
};

/// Asks the constructor for proposals per concept, assigns ids
/// "{paper_id}/{concept}/{name}" and extracted provenance, and drops
/// proposals that fail validation (naming the problems in the report).
/// Backend failures propagate.
CreationResult create_from_pair(const std::string& paper_id, const std::string& paper_text,
                                const scene::Canvas& mi_canvas, const std::string& theme,
                                const std::vector<agents::Concept>& concepts,
                                ConstructorPort& constructor);

}  // namespace figforge::middleware
