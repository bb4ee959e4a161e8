#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "figforge/cli/cli.hpp"
#include "figforge/middleware/repository.hpp"
#include "figforge/util/text.hpp"
#include "support.hpp"

using namespace figforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "figforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fixture(const std::string& name) { return (test::fixtures_dir() / name).string(); }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"stats"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"stats", "--repo", "/no/such/file.json"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"ingest", "--corpus", "/no/such/dir", "--out", "x.json"}).code, cli::kExitUsage);
}

TEST(Cli, HelpSucceeds) {
  auto r = invoke({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("generate"), std::string::npos);
}

TEST(Cli, ScriptedBackendNeedsFixtures) {
  test::TempDir dir;
  auto r = invoke({"generate", "--paper", fixture("papers/query-segmentation.txt"), "--repo",
                   fixture("repository.json"), "--out", (dir / "run").string()});
  EXPECT_EQ(r.code, cli::kExitUsage) << r.err;
}

TEST(Cli, StatsTextAndJson) {
  auto text = invoke({"stats", "--repo", fixture("repository.json")});
  ASSERT_EQ(text.code, cli::kExitOk) << text.err;
  EXPECT_NE(text.out.find("themes: "), std::string::npos);
  EXPECT_NE(text.out.find("MES histogram"), std::string::npos);

  auto machine = invoke({"stats", "--repo", fixture("repository.json"), "--json"});
  ASSERT_EQ(machine.code, cli::kExitOk);
  auto j = json::parse(machine.out);
  auto repo = middleware::Repository::load(test::fixtures_dir() / "repository.json");
  EXPECT_EQ(j.at("middlewares").size(), repo.store().size());
}

TEST(Cli, IngestFromTranscripts) {
  test::TempDir dir;
  auto r = invoke({"ingest", "--corpus", fixture("corpus"), "--out", (dir / "store.json").string(),
                   "--fixtures", fixture("transcripts/base"), "--date", "2026-01-01"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("6 pairs, 5 accepted"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "store.json"));
}

TEST(Cli, GenerateWritesArtifactsAndRepository) {
  test::TempDir dir;
  auto r = invoke({"generate", "--paper", fixture("papers/query-segmentation.txt"), "--repo",
                   fixture("repository.json"), "--out", (dir / "run").string(), "--repo-out",
                   (dir / "repo.json").string(), "--fixtures", fixture("transcripts/base")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (const char* f : {"figure.drawio", "figure.svg", "manifest.json", "tree.json"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  auto before = middleware::Repository::load(test::fixtures_dir() / "repository.json");
  auto after = middleware::Repository::load(dir / "repo.json");
  long n_before = 0;
  long n_after = 0;
  for (const auto& [id, mw] : before.store()) n_before += mw.usage_n;
  for (const auto& [id, mw] : after.store()) n_after += mw.usage_n;
  EXPECT_GT(n_after, n_before);
}

TEST(Cli, MissingTranscriptIsRuntimeErrorWithPartialDump) {
  test::TempDir dir;
  test::TempDir empty;
  auto r = invoke({"generate", "--paper", fixture("papers/query-segmentation.txt"), "--repo",
                   fixture("repository.json"), "--out", (dir / "run").string(), "--fixtures",
                   empty.path().string()});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("error [fixture-missing]"), std::string::npos) << r.err;
}

TEST(Cli, FaultOverlayWarns) {
  test::TempDir dir;
  auto r = invoke({"generate", "--paper", fixture("papers/query-segmentation.txt"), "--repo",
                   fixture("repository.json"), "--out", (dir / "run").string(), "--fixtures",
                   fixture("transcripts/base"), "--fixtures", fixture("transcripts/faults/refiner")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.err.find("warning: refinement skipped"), std::string::npos) << r.err;
}
