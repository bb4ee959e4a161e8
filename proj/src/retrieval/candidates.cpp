#include "figforge/retrieval/candidates.hpp"

#include <algorithm>
#include <set>

namespace figforge::retrieval {

using middleware::concept_key;

std::string resolve_theme(const middleware::Repository& repository, const std::string& theme,
                          const EmbeddingProvider& provider, Warnings* warnings) {
  const std::string key = concept_key(theme);
  auto themes = repository.themes();
  if (themes.empty()) throw Error(ErrorKind::kUnknownTheme, "repository has no themes");
  if (std::find(themes.begin(), themes.end(), key) != themes.end()) return key;
  Vector query = provider.embed(key);
  std::string best;
  double best_sim = -2.0;
  for (const auto& t : themes) {
    double sim = cosine_similarity(query, provider.embed(t));
    if (sim > best_sim) {
      best_sim = sim;
      best = t;
    }
  }
  if (warnings != nullptr) {
    warnings->push_back("theme '" + key + "' is not in the repository; using nearest theme '" +
                        best + "'");
  }
  return best;
}

CandidateSet retrieve_candidates(const middleware::Repository& repository,
                                 const std::string& theme, const std::string& concept_text,
                                 std::size_t k, const EmbeddingProvider& provider) {
  auto concepts = repository.concepts(theme);
  if (concepts.empty()) throw Error(ErrorKind::kUnknownTheme, "unknown theme '" + theme + "'");
  const std::string key = concept_key(concept_text);
  Vector query = quantize(provider.embed(key));

  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& c : concepts) {
    const Vector* v = repository.embedding(c);
    if (v == nullptr) throw Error(ErrorKind::kPrecondition, "concept '" + c + "' has no embedding");
    ranked.emplace_back(cosine_similarity(query, *v), c);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (ranked.size() > k) ranked.resize(k);

  CandidateSet out{concept_text, theme, {}};
  for (const auto& [sim, c] : ranked) {
    for (const auto& id : *repository.entry(theme, c)) out.members.push_back({id, c, sim});
  }
  std::sort(out.members.begin(), out.members.end(), [](const auto& a, const auto& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.source_concept != b.source_concept) return a.source_concept < b.source_concept;
    return a.middleware_id < b.middleware_id;
  });
  return out;
}

FilterOutcome filter_candidates(const CandidateSet& candidates, const std::string& concept_text,
                                const std::string& theme, CandidateJudge& judge) {
  if (candidates.members.empty()) {
    throw Error(ErrorKind::kPrecondition, "cannot filter an empty candidate set");
  }
  FilterOutcome outcome{candidates, {}};
  std::vector<std::string> kept;
  try {
    kept = judge.keep(candidates, concept_text, theme);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kBackendFailure && e.kind() != ErrorKind::kSchemaInvalid) throw;
    outcome.warnings.push_back(std::string("candidate filter failed, keeping all: ") + e.what());
    return outcome;
  }
  std::set<std::string> keep(kept.begin(), kept.end());
  outcome.candidates.members.clear();
  for (const auto& m : candidates.members) {
    if (keep.count(m.middleware_id) != 0) outcome.candidates.members.push_back(m);
  }
  if (outcome.candidates.members.empty()) {
    outcome.candidates.members.push_back(candidates.members.front());
    outcome.warnings.push_back("candidate filter kept nothing usable; using the best match '" +
                               candidates.members.front().middleware_id + "'");
  }
  return outcome;
}

}  // namespace figforge::retrieval
