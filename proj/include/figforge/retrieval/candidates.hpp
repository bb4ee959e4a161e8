#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "figforge/error.hpp"
#include "figforge/middleware/repository.hpp"
#include "figforge/retrieval/embedding.hpp"

namespace figforge::retrieval {

inline constexpr std::size_t kDefaultTopK = 3;

struct CandidateMember {
  std::string middleware_id;
  std::string source_concept;
  double similarity = 0.0;
  bool operator==(const CandidateMember&) const = default;
};

struct CandidateSet {
  std::string concept_text;
  std::string theme;
  std::vector<CandidateMember> members;  // similarity desc, concept, id
  bool operator==(const CandidateSet&) const = default;
};

/// Maps a theme name to a repository theme: the theme itself when present,
/// otherwise the theme whose name embedding is most similar (ties broken by
/// name), with a warning. Throws kUnknownTheme on an empty repository.
std::string resolve_theme(const middleware::Repository& repository, const std::string& theme,
                          const EmbeddingProvider& provider, Warnings* warnings);

/// Middlewares of the `k` concepts under `theme` most similar to
/// `concept_text`. Throws kUnknownTheme, or kProviderFailure from the
/// provider.
CandidateSet retrieve_candidates(const middleware::Repository& repository,
                                 const std::string& theme, const std::string& concept_text,
                                 std::size_t k, const EmbeddingProvider& provider);

/// The filtering judgement of the Drawer's helper role: ids of the
/// candidates worth keeping.
class CandidateJudge {
 public:
  virtual ~CandidateJudge() = default;
  virtual std::vector<std::string> keep(const CandidateSet& candidates,
                                        const std::string& concept_text,
                                        const std::string& theme) = 0;
};

struct FilterOutcome {
  CandidateSet candidates;
  Warnings warnings;
};

/// Keeps only members the judge names. Unknown ids are ignored; an empty
/// result falls back to the best member; a backend or schema failure falls
/// back to the unfiltered set. Other failures (a missing fixture, say)
/// propagate.
FilterOutcome filter_candidates(const CandidateSet& candidates, const std::string& concept_text,
                                const std::string& theme, CandidateJudge& judge);

}  // namespace figforge::retrieval
