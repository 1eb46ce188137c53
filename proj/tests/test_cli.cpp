#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include "cartosearch/beto.hpp"
#include "cartosearch/dataset.hpp"
#include "cartosearch/iiif.hpp"
#include "cli.hpp"
#include "corpus.hpp"
#include "support.hpp"

namespace cartosearch {
namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "cartosearch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> embed_args(const testing::TempDir& dir) {
  return {"embed", "--catalog", (dir / "catalog.csv").string(), "--out", (dir / "records").string(), "--workers", "3",
          "--dim", "16", "--width", "32", "--rate-limit", "0", "--retries", "0"};
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"search", "text"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"embed", "--catalog", "/no/such.csv", "--out", "/tmp/x"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"search", "multi", "--index", "x", "--text", "a", "--image", "b", "--alpha", "2"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"bench"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, MissingIndexIsARuntimeFailure) {
  const auto r = run({"search", "text", "harbor", "--index", "/no/such/index.beto"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("not_found"), std::string::npos) << r.err;
}

TEST(Cli, EmbedIsResumable) {
  testing::CatalogServer server;
  testing::TempDir dir;
  std::vector<CatalogRow> rows;
  for (int i = 0; i < 10; ++i) rows.push_back(server.row("g3701m.ct" + std::to_string(500000 + i)));
  write_catalog(dir / "catalog.csv", rows);

  auto first = run(embed_args(dir));
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_NE(first.out.find("processed=10"), std::string::npos) << first.out;
  EXPECT_NE(first.out.find("failed=0"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "records.report.json"));
  EXPECT_EQ(testing::file_names(dir / "records").size(), 10u);

  auto second = run(embed_args(dir));
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_NE(second.out.find("skipped_existing=10"), std::string::npos) << second.out;
  EXPECT_NE(second.out.find("processed=0"), std::string::npos);
  EXPECT_EQ(server.image_requests(), 10u);

  auto args = embed_args(dir);
  args.insert(args.end(), {"--output", "json"});
  const auto json_run = run(args);
  const auto doc = nlohmann::json::parse(json_run.out);
  EXPECT_EQ(doc["skipped_existing"], 10);
}

TEST(Cli, EmbedWithNothingUsableFails) {
  std::set<std::string> missing = {"a.b1", "a.b2"};
  testing::CatalogServer server(missing);
  testing::TempDir dir;
  write_catalog(dir / "catalog.csv", {server.row("a.b1"), server.row("a.b2")});
  const auto r = run(embed_args(dir));
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.out.find("failed=2"), std::string::npos) << r.out;
}

class CliIndex : public ::testing::Test {
 protected:
  void SetUp() override {
    save_index(make_synthetic_index(300, 16, 5), index());
    testing::write_file(dir / "q.png", testing::png(testing::noise(9, 7, 2)));
  }
  std::string index() const { return (dir / "maps.beto").string(); }
  CliRun search(std::vector<std::string> args) const {
    args.insert(args.begin(), "search");
    args.insert(args.end(), {"--index", index(), "--dim", "16", "--width", "32", "--k", "5"});
    return run(args);
  }
  testing::TempDir dir;
};

TEST_F(CliIndex, TextSearchTable) {
  const auto r = search({"text", "sea chart"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_NE(line.find("rank"), std::string::npos);
  int rows = 0;
  const std::regex row(R"(\s*\d+  -?\d\.\d{4}\s+\d\.\d{4}\s+https://example\.org/iiif/\S+)");
  while (std::getline(lines, line)) rows += std::regex_match(line, row);
  EXPECT_EQ(rows, 5) << r.out;
}

TEST_F(CliIndex, MultimodalLimitsMatchSingleModes) {
  const auto png = (dir / "q.png").string();
  EXPECT_EQ(search({"multi", "--text", "sea chart", "--image", png, "--alpha", "1"}).out, search({"text", "sea chart"}).out);
  EXPECT_EQ(search({"multi", "--text", "sea chart", "--image", png, "--alpha", "-1"}).out, search({"image", png}).out);
  EXPECT_NE(search({"multi", "--text", "sea chart", "--image", png, "--alpha", "0"}).out, search({"text", "sea chart"}).out);
}

TEST_F(CliIndex, JsonOutputMatchesServiceShape) {
  const auto r = search({"text", "sea chart", "--output", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["returned"], 5);
  EXPECT_EQ(doc["results"][0]["rank"], 1);
  EXPECT_TRUE(doc["results"][0].contains("softmax_score"));
}

TEST_F(CliIndex, DimensionMismatchIsConfigError) {
  const auto r = run({"search", "text", "x", "--index", index(), "--dim", "8"});
  EXPECT_NE(r.code, 0);
}

TEST_F(CliIndex, InspectAndBuild) {
  const auto r = run({"build-index", "--inspect", index()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("n=300"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("m=16"), std::string::npos);

  EXPECT_EQ(run({"build-index", "--records", (dir / "none").string(), "--out", (dir / "x.beto").string()}).code,
            cli::kExitFailure);
}

TEST_F(CliIndex, BenchReportsLatency) {
  const auto r = run({"bench", "--synthetic", "500", "--dim", "16", "--queries", "5", "--output", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["n"], 500);
  EXPECT_EQ(doc["queries"], 5);
  EXPECT_GE(doc["p95_ms"].get<double>(), doc["p50_ms"].get<double>());
  EXPECT_EQ(run({"bench", "--index", index(), "--dim", "16", "--queries", "3"}).code, 0);
}

TEST(CliPipeline, EmbedBuildSearchEndToEnd) {
  testing::CatalogServer server;
  testing::TempDir dir;
  std::vector<CatalogRow> rows;
  for (int i = 0; i < 6; ++i) rows.push_back(server.row("g3701m.ct" + std::to_string(700000 + i)));
  write_catalog(dir / "catalog.csv", rows);
  ASSERT_EQ(run(embed_args(dir)).code, 0);
  const auto idx = (dir / "maps.beto").string();
  const auto built = run({"build-index", "--records", (dir / "records").string(), "--out", idx});
  ASSERT_EQ(built.code, 0) << built.err;

  // The served image of a catalog row is its own nearest neighbour.
  const auto query_url = iiif_request_url(server.iiif_url("g3701m.ct700003"), 32);
  const auto r = run({"search", "image", query_url, "--index", idx, "--dim", "16", "--width",
                      "32", "--k", "1", "--output", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["results"][0]["iiif_url"], server.iiif_url("g3701m.ct700003"));
  EXPECT_NEAR(doc["results"][0]["raw_score"].get<double>(), 1.0, 1e-5);
}

TEST(CliCaption, CaptionsAnItem) {
  testing::TempDir dir;
  testing::write_file(dir / "item.json",
                      R"({"title": "PLAN OF THE CITY OF BOSTON :", "location": ["boston", "massachusetts"],
                          "notes": ["Shows wards and railroads", "Hand colored", "LC copy 1"]})");
  const auto r = run({"caption", "--item", (dir / "item.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "Plan Of The City Of Boston, located in Massachusetts. Shows wards and railroads.\n");
}

TEST(CliDataset, WritesManifestAndReport) {
  testing::TempDir dir;
  std::vector<testing::CorpusRow> rows;
  for (std::size_t i = 0; i < 8; ++i) {
    rows.push_back({testing::numbered("g3700.ct", i), "",
                    testing::map_item("Topographic survey of the northern valley showing roads and rivers", {"utah"})});
  }
  rows.push_back({"g4000.sb000001", "Sanborn Maps", std::nullopt});
  testing::write_corpus(dir.path(), rows);
  testing::write_file(dir / "regions.txt", "utah\n");
  const auto out = dir / "pairs.jsonl";
  const auto r = run({"dataset", "--catalog", (dir / "catalog.csv").string(), "--records", (dir / "records").string(),
                      "--out", out.string(), "--single", "5", "--sanborn", "1", "--coverage", "1", "--regions",
                      (dir / "regions.txt").string(), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sampled=7"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("unresponsive=1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("final=6"), std::string::npos);
  EXPECT_EQ(read_manifest(out).size(), 6u);
  const auto report = nlohmann::json::parse(testing::read_file(dir / "pairs.report.json"));
  EXPECT_EQ(report["final"], 6);
}

}  // namespace
}  // namespace cartosearch
