#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fixture_server.hpp"
#include "linkaudit/corpus_store.hpp"
#include "linkaudit/gamma_model.hpp"
#include "mock_corpus.hpp"
#include "oracles.hpp"
#include "aggregate_fixture.hpp"

using namespace linkaudit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("linkaudit_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  std::string write_profiles(const std::string& name, const std::vector<HomepageProfile>& ps) const {
    const auto p = path(name);
    std::ofstream out(p, std::ios::binary);
    for (const auto& x : ps) out << to_json_line(x) << "\n";
    return p;
  }

  static HomepageProfile profile(const std::string& domain, std::int64_t external, std::int64_t internal) {
    HomepageProfile p;
    p.domain = domain;
    p.external_count = p.cross_host_count = external;
    p.internal_count = internal;
    p.total_refs = external + internal;
    p.per_category[0] = p.total_refs;
    p.external_per_category[0] = external;
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  const auto sites = path("sites.csv");
  std::ofstream(sites) << "GlobalRank,Domain\n1,a.com\n";
  EXPECT_EQ(run({"scan", "--input", sites, "--out", path("r.jsonl"), "--top", "0"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"scan", "--input", sites, "--out", path("r.jsonl")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"report", "--input", sites, "--format", "xml"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"report", "--no-such-flag"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"scan", "--input", sites, "--out", path("r.jsonl"), "--top", "1", "--per-host", "0"}).code,
            cli::kExitUsage);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("per-host 2"), std::string::npos);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  EXPECT_EQ(run({"report", "--input", path("missing.jsonl")}).code, cli::kExitRuntime);
  EXPECT_EQ(run({"scan", "--input", path("missing.csv"), "--out", path("r.jsonl"), "--top", "3"}).code,
            cli::kExitRuntime);
  const auto same = write_profiles("same.jsonl", {profile("a", 5, 0), profile("b", 5, 0), profile("c", 5, 0)});
  const auto r = run({"fit", "--input", same, "--out", path("m.json")});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("DegenerateSample"), std::string::npos);
}

TEST_F(CliTest, ReportOnAggregateFixture) {
  const auto input = write_profiles("aggregate.jsonl", fixture::aggregate_profiles());
  const auto md = run({"report", "--input", input});
  ASSERT_EQ(md.code, 0) << md.err;
  EXPECT_NE(md.out.find("| Image | 2 536 692 | 40.1% |"), std::string::npos);

  const auto csv = run({"report", "--input", input, "--format", "csv", "--out", path("r.csv")});
  ASSERT_EQ(csv.code, 0);
  EXPECT_TRUE(csv.out.empty());
  EXPECT_NE(slurp(path("r.csv")).find("external,Image,2536692,40.1"), std::string::npos);

  const auto json = run({"report", "--input", input, "--format", "json"});
  ASSERT_EQ(json.code, 0);
  EXPECT_NE(json.out.find("\"pages_scanned\": 88000"), std::string::npos);
}

TEST_F(CliTest, FitThenDetect) {
  oracle::GammaSampler sampler(2.52, 30.0, 31);
  std::vector<HomepageProfile> ps;
  for (int i = 0; i < 3000; ++i) {
    const auto x = std::max<std::int64_t>(1, std::llround(sampler()));
    ps.push_back(profile("s" + std::to_string(i) + ".com", x, 2 * x + 40));
  }
  const auto input = write_profiles("p.jsonl", ps);

  const auto fit = run({"fit", "--input", input, "--out", path("ext.json")});
  ASSERT_EQ(fit.code, 0) << fit.err;
  EXPECT_NE(fit.out.find("shape k: "), std::string::npos);
  const auto m = model_from_json(slurp(path("ext.json")));
  EXPECT_NEAR(m.shape, 2.52, 0.05 * 2.52);
  EXPECT_EQ(m.series, "external");

  ASSERT_EQ(run({"fit", "--input", input, "--out", path("tot.json"), "--series", "total"}).code, 0);
  const auto t = model_from_json(slurp(path("tot.json")));
  EXPECT_EQ(t.series, "total");
  EXPECT_NE(t.scale, m.scale);
  EXPECT_EQ(run({"fit", "--input", input, "--out", path("x.json"), "--series", "both"}).code, cli::kExitUsage);

  ps.push_back(profile("planted.com", 500, 0));
  const auto with_outlier = write_profiles("q.jsonl", ps);
  const auto det = run({"detect", "--input", with_outlier, "--model", path("ext.json"), "--out", path("verdicts.csv")});
  ASSERT_EQ(det.code, 0) << det.err;
  const auto first_row = det.out.substr(det.out.find('\n') + 1);
  EXPECT_EQ(first_row.rfind("planted.com\t500\t", 0), 0u) << det.out;
  const auto csv = slurp(path("verdicts.csv"));
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), ps.size() + 1);
}

TEST_F(CliTest, HistogramWithOverlay) {
  std::vector<HomepageProfile> ps;
  for (int i = 1; i <= 200; ++i) ps.push_back(profile("h" + std::to_string(i), i, 0));
  const auto input = write_profiles("p.jsonl", ps);
  ASSERT_EQ(run({"fit", "--input", input, "--out", path("m.json")}).code, 0);
  const auto r = run({"report", "--input", input, "--histogram", path("h.csv"), "--model", path("m.json"),
                      "--bin-width", "25"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto h = slurp(path("h.csv"));
  EXPECT_EQ(h.rfind("bin_lower,count,expected_count\n0,24,", 0), 0u) << h;
}

TEST_F(CliTest, SampleReproducible) {
  std::vector<ResultRecord> records;
  for (int i = 0; i < 400; ++i) {
    ResultRecord r;
    r.domain = "s.com";
    r.result.ref.origin_page = parse_absolute_url("https://s.com/");
    r.result.ref.url = parse_absolute_url("https://x.com/" + std::to_string(i));
    r.result.ref.raw_text = r.result.ref.url.str();
    r.result.ref.scope = Scope::External;
    r.result = make_probe_result(r.result.ref, ProbeOutcome::http(r.result.ref.url, i % 2 ? 404 : 200));
    records.push_back(r);
  }
  append_results(path("r.jsonl"), records);
  const auto a = run({"sample", "--input", path("r.jsonl"), "--n", "100", "--seed", "7"});
  const auto b = run({"sample", "--input", path("r.jsonl"), "--n", "100", "--seed", "7"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 100);
  EXPECT_EQ(run({"sample", "--input", path("r.jsonl"), "--n", "300"}).code, cli::kExitRuntime);
}

TEST_F(CliTest, ScanAgainstFixtureServer) {
  fixture::Server server;
  const auto corpus = fixture::MockCorpus::build(server, dir_);
  const auto out = path("scan.jsonl");
  const auto r = run(corpus.scan_args(server, out, 10, false));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("pages scanned this run: 10"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(out + ".manifest.json"));

  const auto set = build_profiles(fs::path(out));
  const auto expected = corpus.expected_profiles();
  ASSERT_EQ(set.profiles.size(), 10u);
  for (const auto& p : set.profiles) {
    ASSERT_TRUE(expected.count(p.domain)) << p.domain;
    EXPECT_EQ(p, expected.at(p.domain)) << p.domain;
  }

  const auto tri = run({"triage", "--input", out, "--out", path("tri.jsonl"), "--resolve-file",
                        corpus.resolve_file.string()});
  ASSERT_EQ(tri.code, 0) << tri.err;
  EXPECT_NE(tri.out.find("LibraryGoneCandidate\t1"), std::string::npos) << tri.out;
}
