// Regenerates the bundled store, repository and transcripts with the offline
// rule backend. Usage: record_fixtures <fixtures-dir> [<out-dir>]
// Reads corpus/ and papers/ from <fixtures-dir>; writes store.json,
// repository.json and transcripts/ under <out-dir> (default: <fixtures-dir>).

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "figforge/error.hpp"
#include "figforge/evolution/evolution.hpp"
#include "figforge/pipeline/pipeline.hpp"
#include "figforge/testing/rule_backend.hpp"
#include "figforge/util/text.hpp"

namespace fs = std::filesystem;
using namespace figforge;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr const char* kIngestDate = "2026-01-01";

pipeline::Services services_for(agents::ChatBackend& chat,
                                const retrieval::EmbeddingProvider& provider) {
  pipeline::Services s;
  s.provider = &provider;
  s.backends = agents::Backends::uniform(chat);
  return s;
}

std::vector<std::string> lines_of(const fs::path& file) {
  std::vector<std::string> out;
  if (!fs::exists(file)) return out;
  std::istringstream in(util::read_file(file));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Sorts by key and drops lines already present in `base`.
void normalize(const fs::path& file, const std::set<std::string>& base) {
  auto lines = lines_of(file);
  std::sort(lines.begin(), lines.end(), [](const std::string& a, const std::string& b) {
    return nlohmann::json::parse(a).at("key").get<std::string>() <
           nlohmann::json::parse(b).at("key").get<std::string>();
  });
  std::string text;
  for (const auto& l : lines) {
    if (!base.contains(l)) text += l + "\n";
  }
  util::write_file(file, text);
}

void record_fault(const fs::path& transcript, const std::set<std::string>& failing,
                  const std::string& paper, const middleware::Repository& repo,
                  const retrieval::EmbeddingProvider& provider,
                  const std::set<std::string>& base) {
  fs::remove(transcript);
  testing::RuleBackend rule;
  testing::FaultBackend faulty(rule, failing);
  agents::RecordingBackend recorder(faulty, transcript);
  auto result = pipeline::generate(paper, repo, services_for(recorder, provider), {}, kSeed);
  normalize(transcript, base);
  std::cout << transcript.string() << ": " << lines_of(transcript).size() << " records, "
            << result.warnings.size() << " warnings\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: record_fixtures <fixtures-dir> [<out-dir>]\n";
    return 2;
  }
  const fs::path src = argv[1];
  const fs::path dst = argc == 3 ? fs::path(argv[2]) : src;
  try {
    const fs::path transcripts = dst / "transcripts";
    fs::remove_all(transcripts);
    fs::create_directories(transcripts / "base");
    const fs::path base_file = transcripts / "base" / "rule.jsonl";

    retrieval::TrigramEmbedding provider;
    testing::RuleBackend rule;
    agents::RecordingBackend recorder(rule, base_file);
    const auto services = services_for(recorder, provider);

    auto store = pipeline::ingest(src / "corpus", services, pipeline::kDefaultIngestThreshold,
                                  kIngestDate);
    store.source = "corpus";
    store.save(dst / "store.json");

    auto built = pipeline::build_repository(store, services);
    built.repository.save(dst / "repository.json");

    const std::string paper = util::read_file(src / "papers" / "query-segmentation.txt");
    auto generated = pipeline::generate(paper, built.repository, services, {}, kSeed);

    evolution::EvolutionConfig config;
    config.batch_size = 2;
    config.max_iterations = 2;
    auto evolved = evolution::evolve(built.repository, store, config, services, {}, kSeed);

    normalize(base_file, {});
    const auto base_lines = lines_of(base_file);
    const std::set<std::string> base(base_lines.begin(), base_lines.end());
    std::cout << base_file.string() << ": " << base.size() << " records, "
              << store.accepted().size() << "/" << store.pairs.size() << " pairs accepted, "
              << built.repository.store().size() << " middlewares, quality "
              << util::format_number(generated.quality) << ", "
              << evolved.records.size() << " evolution iterations\n";

    record_fault(transcripts / "faults" / "refiner" / "rule.jsonl", {"refiner"}, paper,
                 built.repository, provider, base);
    record_fault(transcripts / "faults" / "filter" / "rule.jsonl", {"filter"}, paper,
                 built.repository, provider, base);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
