#include "figforge/cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "figforge/evolution/evolution.hpp"
#include "figforge/pipeline/pipeline.hpp"
#include "figforge/testing/rule_backend.hpp"
#include "figforge/util/text.hpp"

namespace figforge::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kApiKeyEnv = "FIGFORGE_API_KEY";
constexpr const char* kEndpointEnv = "FIGFORGE_ENDPOINT";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliConfig {
  std::string backend = "scripted";
  std::string endpoint;
  std::string model = "gpt-4o";
  std::vector<std::string> fixtures;
  std::string record;
  std::string embedding = "trigram";
  std::string embedding_model = "text-embedding-3-small";
  std::size_t embedding_dim = 256;
  int timeout_s = 120;
  std::uint64_t seed = 7;
  std::size_t parallel = 1;
  search::SearchParams search;
  evolution::EvolutionConfig evolution;
};

/// Backends and provider built from the config; owns everything it hands out.
struct Runtime {
  std::unique_ptr<agents::ChatBackend> base;
  std::unique_ptr<agents::ChatBackend> recorder;
  std::unique_ptr<retrieval::EmbeddingProvider> provider;
  pipeline::Services services;
};

std::unique_ptr<Runtime> make_runtime(const CliConfig& cfg) {
  auto rt = std::make_unique<Runtime>();
  std::string endpoint = cfg.endpoint;
  if (const char* env = std::getenv(kEndpointEnv); env != nullptr && *env != '\0') endpoint = env;
  const char* key_env = std::getenv(kApiKeyEnv);
  const std::string api_key = key_env == nullptr ? "" : key_env;
  const auto timeout = std::chrono::seconds(cfg.timeout_s);

  if (cfg.backend == "remote") {
    if (endpoint.empty()) throw UsageError("--backend remote needs --endpoint");
    if (api_key.empty()) throw UsageError(std::string("--backend remote needs ") + kApiKeyEnv);
    rt->base = std::make_unique<agents::RemoteBackend>(endpoint, cfg.model, api_key, timeout);
  } else if (cfg.backend == "scripted") {
    if (cfg.fixtures.empty()) throw UsageError("--backend scripted needs --fixtures");
    std::vector<fs::path> dirs(cfg.fixtures.begin(), cfg.fixtures.end());
    rt->base = std::make_unique<agents::ScriptedBackend>(dirs);
  } else {
    rt->base = std::make_unique<testing::RuleBackend>();
  }
  agents::ChatBackend* chat = rt->base.get();
  if (!cfg.record.empty()) {
    rt->recorder = std::make_unique<agents::RecordingBackend>(*chat, cfg.record);
    chat = rt->recorder.get();
  }
  if (cfg.embedding == "remote") {
    if (endpoint.empty() || api_key.empty()) {
      throw UsageError(std::string("--embedding remote needs --endpoint and ") + kApiKeyEnv);
    }
    rt->provider = std::make_unique<retrieval::RemoteEmbedding>(
        endpoint, cfg.embedding_model, api_key, cfg.embedding_dim, timeout);
  } else {
    rt->provider = std::make_unique<retrieval::TrigramEmbedding>(cfg.embedding_dim);
  }
  rt->services.provider = rt->provider.get();
  rt->services.backends = agents::Backends::uniform(*chat);
  rt->services.max_parallel = cfg.parallel;
  return rt;
}

std::string today() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%d");
  return s.str();
}

void add_backend_flags(CLI::App& app, CliConfig& cfg) {
  app.add_option("--backend", cfg.backend, "Chat backend: remote, scripted or rule")
      ->check(CLI::IsMember({"remote", "scripted", "rule"}))
      ->capture_default_str();
  app.add_option("--endpoint", cfg.endpoint,
                 std::string("OpenAI-compatible base URL (env ") + kEndpointEnv + " overrides)");
  app.add_option("--model", cfg.model, "Model name for the remote backend")->capture_default_str();
  app.add_option("--fixtures", cfg.fixtures,
                 "Transcript directories for the scripted backend; later ones override")
      ->check(CLI::ExistingDirectory);
  app.add_option("--record", cfg.record, "Append every backend exchange to this transcript file");
  app.add_option("--embedding", cfg.embedding, "Embedding provider: trigram or remote")
      ->check(CLI::IsMember({"trigram", "remote"}))
      ->capture_default_str();
  app.add_option("--embedding-model", cfg.embedding_model, "Remote embedding model")
      ->capture_default_str();
  app.add_option("--embedding-dim", cfg.embedding_dim, "Embedding dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--timeout", cfg.timeout_s, "Backend timeout in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--parallel", cfg.parallel, "Maximum concurrent backend-driven tasks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_search_flags(CLI::App& app, CliConfig& cfg) {
  app.add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
  app.add_option("--a1", cfg.search.a1, "Expansion width")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--a2", cfg.search.a2, "Simulation budget")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--beta", cfg.search.beta, "Exploration weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--regen-threshold", cfg.search.regen_threshold,
                 "Minimum own score before children are regenerated")
      ->capture_default_str();
  app.add_option("--max-regen", cfg.search.max_regen_rounds, "Regeneration rounds per expansion")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--k", cfg.search.top_k, "Concepts retrieved per rendering")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

// --- commands ---------------------------------------------------------------

int cmd_ingest(const CliConfig& cfg, const std::string& corpus, double threshold,
               const std::string& date, const std::string& out_path, std::ostream& out) {
  auto rt = make_runtime(cfg);
  auto store = pipeline::ingest(corpus, rt->services, threshold, date.empty() ? today() : date);
  store.save(out_path);
  out << store.pairs.size() << " pairs, " << store.accepted().size() << " accepted\n";
  for (const auto& line : store.report) out << "  " << line << "\n";
  return kExitOk;
}

int cmd_build_repo(const CliConfig& cfg, const std::string& store_path, double merge_threshold,
                   const std::string& out_path, std::ostream& out) {
  auto rt = make_runtime(cfg);
  auto store = pipeline::ExperienceStore::load(store_path);
  auto built = pipeline::build_repository(store, rt->services, merge_threshold);
  built.repository.save(out_path);
  out << built.repository.store().size() << " middlewares under "
      << built.repository.entries().size() << " concepts\n";
  for (const auto& c : built.merge.clusters) {
    out << "  merged into '" << c.canonical << "':";
    for (const auto& m : c.merged) out << " '" << m << "'";
    out << "\n";
  }
  for (const auto& id : built.merge.removed) out << "  removed redundant " << id << "\n";
  for (const auto& line : built.report) out << "  " << line << "\n";
  return kExitOk;
}

int cmd_evolve(const CliConfig& cfg, const std::string& repo_path, const std::string& store_path,
               const std::string& out_path, const std::string& report_path, std::ostream& out) {
  auto rt = make_runtime(cfg);
  auto repo = middleware::Repository::load(repo_path);
  auto store = pipeline::ExperienceStore::load(store_path);
  auto result = evolution::evolve(repo, store, cfg.evolution, rt->services, cfg.search, cfg.seed);
  result.repository.save(out_path);
  if (!report_path.empty()) {
    util::write_file(report_path, evolution::to_json(result, cfg.evolution, cfg.seed).dump(2) + "\n");
  }
  int accepted = 0;
  for (const auto& r : result.records) accepted += r.accepted ? 1 : 0;
  out << result.records.size() << " iterations, " << accepted << " accepted";
  if (!result.trajectory.empty()) {
    out << ", objective " << util::format_number(result.trajectory.front()) << " -> "
        << util::format_number(result.trajectory.back());
  }
  if (result.stopped_early) out << " (stopped early)";
  out << "\n";
  return kExitOk;
}

int cmd_generate(const CliConfig& cfg, const std::string& paper_path, const std::string& repo_path,
                 const std::string& out_dir, const std::string& repo_out, std::ostream& out,
                 std::ostream& err) {
  auto rt = make_runtime(cfg);
  auto repo = middleware::Repository::load(repo_path);
  const std::string text = util::read_file(paper_path);
  search::DrawingTree partial;
  pipeline::GenerateResult result;
  try {
    result = pipeline::generate(text, repo, rt->services, cfg.search, cfg.seed, &partial);
  } catch (const Error&) {
    if (!partial.empty()) {
      pipeline::write_tree_dump(out_dir, partial);
      err << "partial search tree written to " << out_dir << "\n";
    }
    throw;
  }
  pipeline::write_run_artifacts(out_dir, result);
  if (!repo_out.empty()) {
    pipeline::apply_usages(repo, result);
    repo.save(repo_out);
  }
  out << "wrote " << (fs::path(out_dir) / "figure.drawio").string() << ", figure.svg and manifest.json"
      << " (quality " << util::format_number(result.quality) << ", " << result.tree.size()
      << " nodes)\n";
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  return kExitOk;
}

int cmd_stats(const std::string& repo_path, bool as_json, std::ostream& out) {
  auto repo = middleware::Repository::load(repo_path);
  json by_theme = json::object();
  for (const auto& [key, ids] : repo.entries()) {
    by_theme[key.theme][key.concept_id] = ids.size();
  }
  json middlewares = json::array();
  std::vector<double> values;
  for (const auto& [id, mw] : repo.store()) {
    auto mes = mw.mes();
    if (mes) values.push_back(*mes);
    middlewares.push_back({{"id", id},
                           {"theme", mw.theme},
                           {"concept", mw.concept_id},
                           {"S", mw.usage_s},
                           {"N", mw.usage_n},
                           {"mes", mes ? json(*mes) : json(nullptr)}});
  }
  json histogram = json::array({0, 0, 0, 0, 0});
  for (double v : values) {
    int bucket = std::min(4, static_cast<int>(v * 5.0));
    histogram[bucket] = histogram[bucket].get<int>() + 1;
  }
  json distribution = {{"used", values.size()}, {"unused", repo.store().size() - values.size()},
                       {"histogram", histogram}};
  if (!values.empty()) {
    double sum = 0.0;
    for (double v : values) sum += v;
    distribution["min"] = *std::min_element(values.begin(), values.end());
    distribution["max"] = *std::max_element(values.begin(), values.end());
    distribution["mean"] = sum / static_cast<double>(values.size());
  }
  if (as_json) {
    out << json{{"themes", by_theme}, {"middlewares", middlewares}, {"mes", distribution}}.dump(2)
        << "\n";
    return kExitOk;
  }
  out << "themes: " << repo.themes().size() << ", concepts: " << repo.entries().size()
      << ", middlewares: " << repo.store().size() << "\n\n";
  for (const auto& [theme, concepts] : by_theme.items()) {
    out << theme << "\n";
    for (const auto& [c, n] : concepts.items()) out << "  " << c << ": " << n.get<int>() << "\n";
  }
  out << "\n" << std::left << std::setw(56) << "middleware" << std::right << std::setw(6) << "N"
      << std::setw(10) << "S" << std::setw(10) << "MES" << "\n";
  for (const auto& m : middlewares) {
    out << std::left << std::setw(56) << m["id"].get<std::string>() << std::right << std::setw(6)
        << m["N"].get<long>() << std::setw(10) << util::format_number(m["S"].get<double>())
        << std::setw(10) << (m["mes"].is_null() ? "-" : util::format_number(m["mes"].get<double>()))
        << "\n";
  }
  out << "\nMES histogram [0,.2) [.2,.4) [.4,.6) [.6,.8) [.8,1]:";
  for (const auto& h : histogram) out << " " << h.get<int>();
  out << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"figforge: method illustrations from paper text via a drawing-middleware repository"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Optional TOML/INI config file; flags override it");
  CliConfig cfg;

  std::string corpus;
  std::string store_path;
  std::string repo_path;
  std::string out_path;
  std::string report_path;
  std::string paper_path;
  std::string repo_out;
  std::string date;
  double threshold = pipeline::kDefaultIngestThreshold;
  double merge_threshold = middleware::kDefaultMergeThreshold;
  bool as_json = false;

  auto* ingest = app.add_subcommand("ingest", "Score a corpus of <id>.txt + <id>.drawio pairs");
  add_backend_flags(*ingest, cfg);
  ingest->add_option("--corpus", corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--out", out_path, "Experience store to write")->required();
  ingest->add_option("--threshold", threshold, "Minimum quality for acceptance")->capture_default_str();
  ingest->add_option("--date", date, "Ingestion date stamp (default: today, UTC)");

  auto* build = app.add_subcommand("build-repo", "Create the middleware repository from a store");
  add_backend_flags(*build, cfg);
  build->add_option("--store", store_path, "Experience store")->required()->check(CLI::ExistingFile);
  build->add_option("--out", out_path, "Repository to write")->required();
  build->add_option("--merge-threshold", merge_threshold, "Cosine similarity for concept merging")
      ->capture_default_str();

  auto* evolve = app.add_subcommand("evolve", "Evolve a repository against the experience store");
  add_backend_flags(*evolve, cfg);
  add_search_flags(*evolve, cfg);
  evolve->add_option("--repo", repo_path, "Input repository")->required()->check(CLI::ExistingFile);
  evolve->add_option("--store", store_path, "Experience store")->required()->check(CLI::ExistingFile);
  evolve->add_option("--out", out_path, "Evolved repository to write")->required();
  evolve->add_option("--report", report_path, "Evolution report to write");
  evolve->add_option("--iterations", cfg.evolution.max_iterations, "Maximum iterations")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  evolve->add_option("--batch", cfg.evolution.batch_size, "Papers per objective evaluation")
      ->check(CLI::PositiveNumber)->capture_default_str();
  evolve->add_option("--patience", cfg.evolution.patience, "Non-improving iterations before stopping")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  evolve->add_option("--epsilon", cfg.evolution.epsilon, "Minimum significant improvement")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  evolve->add_option("--tau", cfg.evolution.mes_delete_threshold, "MES below which used middlewares are deleted")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  evolve->add_option("--min-usages", cfg.evolution.min_usages_for_selection, "Usages before selection applies")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  evolve->add_option("--mutations", cfg.evolution.mutation_count, "Mutations per iteration")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  evolve->add_option("--crossovers", cfg.evolution.crossover_count, "Crossovers per iteration")
      ->check(CLI::NonNegativeNumber)->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Draw the method illustration of a paper");
  add_backend_flags(*generate, cfg);
  add_search_flags(*generate, cfg);
  generate->add_option("--paper", paper_path, "Paper text (introduction and method)")
      ->required()->check(CLI::ExistingFile);
  generate->add_option("--repo", repo_path, "Middleware repository")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", out_path, "Run artifact directory")->required();
  generate->add_option("--repo-out", repo_out, "Write the repository with this run's usages here");

  auto* stats = app.add_subcommand("stats", "Print repository metrics");
  stats->add_option("--repo", repo_path, "Middleware repository")->required()->check(CLI::ExistingFile);
  stats->add_flag("--json", as_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    cfg.search.max_parallel = cfg.parallel;
    if (ingest->parsed()) return cmd_ingest(cfg, corpus, threshold, date, out_path, out);
    if (build->parsed()) return cmd_build_repo(cfg, store_path, merge_threshold, out_path, out);
    if (evolve->parsed()) return cmd_evolve(cfg, repo_path, store_path, out_path, report_path, out);
    if (generate->parsed()) {
      return cmd_generate(cfg, paper_path, repo_path, out_path, repo_out, out, err);
    }
    if (stats->parsed()) return cmd_stats(repo_path, as_json, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace figforge::cli
