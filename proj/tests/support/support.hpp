#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "figforge/middleware/repository.hpp"
#include "figforge/retrieval/embedding.hpp"
#include "figforge/scene/canvas.hpp"
#include "figforge/testing/rule_backend.hpp"

namespace figforge::test {

std::filesystem::path fixtures_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Valid canvas with groups, nesting, tags, awkward labels, dashed styles and
/// connectors with element and point endpoints.
scene::Canvas random_canvas(std::mt19937_64& rng);

/// One rect named "box" placed at parameters x and y.
middleware::Middleware box_middleware(const std::string& id, const std::string& theme,
                                      const std::string& concept_id);

/// Up to `max_concepts` concepts over a few themes, 1-3 middlewares each.
/// Concept names are drawn from a small vocabulary so some collide.
middleware::Repository random_repository(std::mt19937_64& rng, std::size_t max_concepts,
                                         const retrieval::EmbeddingProvider& provider);

/// Constructor double: members with identical bodies beyond the first are
/// redundant; proposals are echoed back unchanged.
class StubConstructor final : public middleware::ConstructorPort {
 public:
  std::vector<nlohmann::json> extract(const middleware::ExtractionInput& input) override;
  std::vector<std::string> find_redundant(const std::string& theme, const std::string& concept_id,
                                          const std::vector<middleware::Middleware>& members) override;
  nlohmann::json mutate(const middleware::Middleware& parent) override;
  nlohmann::json crossover(const std::vector<middleware::Middleware>& parents) override;

  std::vector<nlohmann::json> proposals;
  int calls = 0;
};

/// A search scenario over `concepts` concepts with `choices` drawing choices
/// each. The canvas quality after drawing a prefix of choices is read from a
/// seeded table; the backend decodes the prefix from element positions.
class PathScenario {
 public:
  PathScenario(int concepts, int choices, std::uint64_t seed, double min_quality = 0.0);

  const middleware::Repository& repository() const { return repository_; }
  const retrieval::EmbeddingProvider& provider() const { return provider_; }
  testing::FunctionBackend& backend() { return backend_; }
  std::string paper() const { return "scenario paper"; }

  /// Quality of the canvas holding the given choice prefix.
  double quality(const std::string& prefix) const;
  /// Choice prefix drawn on a canvas, one digit per concept in order.
  std::string decode(const scene::Canvas& canvas) const;
  /// Complete path with the highest quality (ties: lexicographically first).
  std::string brute_force_best() const;
  int drawer_calls() const { return drawer_calls_; }

 private:
  std::string respond(const agents::ChatRequest& request);

  int concepts_;
  int choices_;
  std::map<std::string, double> table_;
  retrieval::TrigramEmbedding provider_;
  middleware::Repository repository_;
  testing::FunctionBackend backend_;
  int drawer_calls_ = 0;
};

}  // namespace figforge::test
