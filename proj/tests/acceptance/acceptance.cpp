// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cli.hpp"
#include "fixture_server.hpp"
#include "linkaudit/corpus_store.hpp"
#include "linkaudit/gamma_model.hpp"
#include "linkaudit/prober.hpp"
#include "linkaudit/report.hpp"
#include "mock_corpus.hpp"
#include "oracles.hpp"
#include "aggregate_fixture.hpp"

using namespace linkaudit;
namespace fs = std::filesystem;

namespace {

constexpr double kShape = 2.52;
constexpr double kScale = 30.0;

// Collects failure reasons; a criterion passes when none were recorded.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, ": got %.10g, want %.10g +- %.3g", got, want, tol);
      failures.push_back(what + buf);
    }
  }
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("linkaudit_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o;
  std::ostringstream e;
  const int code = cli::run_cli(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

const GammaModel& fitted_reference_model() {
  static const GammaModel m = [] {
    oracle::GammaSampler sampler(kShape, kScale, 20220401);
    return fit_gamma(sampler.draw(10000));
  }();
  return m;
}

// ---------------------------------------------------------------------------

void broken_rule(Check& c) {
  const auto u = parse_absolute_url("http://probe.test/");
  for (int s = 100; s <= 599; ++s) {
    const bool want = !(s == 200 || s == 301 || s == 302 || s == 304);
    c.expect(classify_broken(ProbeOutcome::http(u, s)) == want, "status " + std::to_string(s));
  }
  for (auto k : kNetworkErrorKinds) {
    c.expect(classify_broken(ProbeOutcome::failure(u, k)), "network kind " + std::string(to_string(k)));
  }
}

void aggregate_tables(Check& c) {
  const auto profiles = fixture::aggregate_profiles();
  const auto s = summarize(profiles);
  auto pct = [](const std::vector<CategoryShare>& rows, ResourceCategory cat) {
    for (const auto& r : rows) {
      if (r.category == cat) return r.percentage;
    }
    return -1.0;
  };
  using RC = ResourceCategory;
  const std::vector<std::pair<RC, double>> table1 = {
      {RC::Image, 40.1}, {RC::Script, 30.4}, {RC::Stylesheet, 11.9}, {RC::Font, 5.9}, {RC::Xhr, 5.6}};
  const std::vector<std::pair<RC, double>> table2 = {
      {RC::Xhr, 30.7}, {RC::Image, 27.8}, {RC::Script, 16.2}, {RC::Stylesheet, 6.5}, {RC::Fetch, 5.2}};
  for (const auto& [cat, want] : table1) {
    c.near(pct(s.category_breakdown, cat), want, 0.05, "external share " + std::string(to_string(cat)));
  }
  for (const auto& [cat, want] : table2) {
    c.near(pct(s.broken_category_breakdown, cat), want, 0.05, "broken share " + std::string(to_string(cat)));
  }
  c.near(s.pct_pages_with_broken, 35.2, 0.05, "page prevalence");
  c.near(s.pct_broken, 16.6, 0.05, "link prevalence");

  const auto md = render(s, ReportFormat::Markdown);
  for (const char* cell : {"| Image | 2 536 692 | 40.1% |", "| Script | 1 923 078 | 30.4% |",
                           "| Stylesheet | 752 783 | 11.9% |", "| Font | 371 963 | 5.9% |", "| Xhr | 354 251 | 5.6% |",
                           "| Xhr | 323 039 | 30.7% |", "| Image | 292 524 | 27.8% |", "| Script | 170 464 | 16.2% |",
                           "| Stylesheet | 68 396 | 6.5% |", "| Fetch | 54 717 | 5.2% |", "| 35.2% |", "| 16.6% |"}) {
    c.expect(md.find(cell) != std::string::npos, std::string("markdown lacks ") + cell);
  }
}

void gamma_recovery(Check& c) {
  const auto& m = fitted_reference_model();
  c.expect(m.shape >= 2.394 && m.shape <= 2.646, "shape " + std::to_string(m.shape));
  c.expect(m.scale >= 28.5 && m.scale <= 31.5, "scale " + std::to_string(m.scale));
  c.expect(m.ks_statistic < 0.02, "ks " + std::to_string(m.ks_statistic));
  std::printf("      k=%.4f theta=%.4f ks=%.5f newton=%zu\n", m.shape, m.scale, m.ks_statistic,
              m.newton_iterations);
}

void numerical_core(Check& c) {
  for (double k : {0.5, 1.0, 2.52, 10.0}) {
    const double mass = oracle::integrate([&](double x) { return gamma_pdf(x, k, kScale); }, 0.0, 60.0 * kScale);
    c.near(mass, 1.0, 1e-6, "normalization k=" + std::to_string(k));
  }

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> shape_dist(0.5, 10.0);
  std::uniform_real_distribution<double> p_dist(0.02, 0.98);
  for (int i = 0; i < 50; ++i) {
    const double k = shape_dist(gen);
    const double x = gamma_quantile(p_dist(gen), k, kScale);
    const double h = 1e-4 * x;
    // Fourth-order central difference.
    const double d = (-gamma_cdf(x + 2 * h, k, kScale) + 8 * gamma_cdf(x + h, k, kScale) -
                      8 * gamma_cdf(x - h, k, kScale) + gamma_cdf(x - 2 * h, k, kScale)) /
                     (12 * h);
    const double f = gamma_pdf(x, k, kScale);
    c.expect(std::fabs(d - f) <= 1e-6 * f, "cdf/pdf at k=" + std::to_string(k) + " x=" + std::to_string(x));
  }

  for (double x : {0.01, 0.1, 0.5, 1.0, 2.52, 7.3, 42.0, 1e3, 1e5}) {
    c.near(digamma(x + 1.0) - digamma(x), 1.0 / x, 1e-10, "digamma recurrence x=" + std::to_string(x));
  }

  oracle::GammaSampler sampler(kShape, kScale, 99);
  const auto xs = sampler.draw(2000);
  const auto base = fit_gamma(xs);
  for (double scale : {1e-3, 0.25, 3.0, 1e4}) {
    std::vector<double> ys(xs);
    for (auto& y : ys) y *= scale;
    const auto m = fit_gamma(ys);
    c.near(m.shape / base.shape, 1.0, 1e-8, "equivariant shape c=" + std::to_string(scale));
    c.near(m.scale / (base.scale * scale), 1.0, 1e-8, "equivariant scale c=" + std::to_string(scale));
  }
}

void mock_corpus_scan(Check& c) {
  const auto dir = scratch("scan");
  fixture::Server server;
  const auto corpus = fixture::MockCorpus::build(server, dir);
  const auto out = dir / "results.jsonl";
  std::string log;
  const int code = run_cli(corpus.scan_args(server, out, 50, false), &log);
  c.expect(code == 0, "scan exit " + std::to_string(code) + ": " + log);
  if (code != 0) return;

  const auto set = build_profiles(out);
  const auto expected = corpus.expected_profiles();
  c.expect(set.profiles.size() == expected.size(),
           "profiles " + std::to_string(set.profiles.size()) + " vs " + std::to_string(expected.size()));
  for (const auto& p : set.profiles) {
    const auto it = expected.find(p.domain);
    if (it == expected.end()) {
      c.expect(false, "unexpected profile " + p.domain);
    } else {
      c.expect(p == it->second, "profile mismatch " + p.domain + " (total " + std::to_string(p.total_refs) +
                                    " vs " + std::to_string(it->second.total_refs) + ", broken " +
                                    std::to_string(p.broken_count) + " vs " +
                                    std::to_string(it->second.broken_count) + ")");
    }
  }

  const auto records = read_results(out);
  std::set<std::pair<std::string, std::string>> broken;
  std::map<std::pair<std::string, std::string>, TriageCause> causes;
  for (const auto& r : records) {
    if (!r.result.broken) continue;
    broken.emplace(r.domain, r.result.ref.url.str());
    if (r.triage_cause) causes[{r.domain, r.result.ref.url.str()}] = *r.triage_cause;
  }
  const auto want_broken = corpus.expected_broken();
  c.expect(broken == want_broken,
           "broken set " + std::to_string(broken.size()) + " vs " + std::to_string(want_broken.size()));
  for (const auto& r : records) {
    if (r.result.broken && !want_broken.count({r.domain, r.result.ref.url.str()})) {
      const auto& o = r.result.outcome;
      c.expect(false, "unexpected broken " + r.domain + " " + r.result.ref.url.str() + " " +
                          std::string(to_string(o.kind)) + (o.status ? " " + std::to_string(*o.status) : ""));
    }
  }
  for (const auto& d : set.unreachable) c.expect(false, "unreachable homepage " + d);
  for (const auto& [key, cause] : corpus.expected_causes()) {
    const auto it = causes.find(key);
    c.expect(it != causes.end() && it->second == cause,
             "cause for " + key.second + ": " +
                 (it == causes.end() ? std::string("none") : std::string(to_string(it->second))) + " vs " +
                 std::string(to_string(cause)));
  }
  std::set<TriageCause> seen;
  for (const auto& [k, v] : causes) seen.insert(v);
  c.expect(seen.count(TriageCause::LibraryGoneCandidate) || seen.count(TriageCause::ClientError), "404 cause");
  for (auto need : {TriageCause::NetworkTransient, TriageCause::ExpiredDomainCandidate, TriageCause::MalformedUrlTypo}) {
    c.expect(seen.count(need) == 1, "missing cause " + std::string(to_string(need)));
  }
  fs::remove_all(dir);
}

HomepageProfile external_only(const std::string& domain, std::int64_t n) {
  HomepageProfile p;
  p.domain = domain;
  p.total_refs = p.external_count = p.cross_host_count = n;
  p.per_category[index_of(ResourceCategory::Script)] = n;
  p.external_per_category[index_of(ResourceCategory::Script)] = n;
  return p;
}

void anomaly_detection(Check& c) {
  const auto& model = fitted_reference_model();
  std::vector<HomepageProfile> profiles;
  // Stratified draw: one count per quantile stratum of the fitted model.
  for (int i = 0; i < 200; ++i) {
    const double p = (i + 0.5) / 200.0;
    profiles.push_back(external_only("site" + std::to_string(i) + ".test",
                                     std::llround(gamma_quantile(p, model.shape, model.scale))));
  }
  profiles.push_back(external_only("planted.test", 500));

  const auto verdicts = detect_anomalies(profiles, model, 0.001);
  std::vector<std::string> flagged;
  for (const auto& v : verdicts) {
    if (v.flagged) flagged.push_back(v.domain);
  }
  c.expect(flagged == std::vector<std::string>{"planted.test"},
           "flagged " + std::to_string(flagged.size()) + " domains" + (flagged.empty() ? "" : ", first " + flagged[0]));

  const double upper = oracle::integrate([&](double x) { return oracle::gamma_pdf(x, model.shape, model.scale); },
                                         500.0, 500.0 + 60.0 * model.scale);
  const auto& planted = verdicts.front();
  c.expect(planted.domain == "planted.test", "planted not ranked first");
  c.near(planted.tail_prob, upper, 1e-6, "planted tail vs quadrature");
  c.expect(planted.side == TailSide::HighTail, "planted side");
  std::printf("      planted tail=%.6e oracle=%.6e\n", planted.tail_prob, upper);
}

void politeness(Check& c) {
  fixture::Server server;
  const std::vector<std::string> hosts = {"a.polite.test", "b.polite.test", "c.polite.test", "d.polite.test"};
  std::vector<ResourceRef> refs;
  const auto origin = parse_absolute_url("http://origin.test/");
  for (int i = 0; i < 100; ++i) {
    const auto& host = hosts[i % hosts.size()];
    const std::string path = "/r" + std::to_string(i);
    server.add(host, path, {200, "image/png", "x", std::chrono::milliseconds(40), {}});
    ResourceRef r;
    r.origin_page = origin;
    r.url = parse_absolute_url("http://" + host + path);
    r.category = ResourceCategory::Image;
    r.scope = Scope::External;
    r.raw_text = r.url.str();
    refs.push_back(r);
  }
  ScanConfig config;
  config.concurrency = 32;
  config.per_host_limit = 2;
  config.timeout = std::chrono::milliseconds(5000);
  config.connect_to = server.connect_to();
  const auto results = probe_all(refs, config);
  std::size_t ok = 0;
  for (const auto& r : results) ok += !r.broken;
  c.expect(ok == 100, "healthy probes " + std::to_string(ok));
  c.expect(server.total_requests() == 100, "requests " + std::to_string(server.total_requests()));
  for (const auto& h : hosts) {
    const auto peak = server.max_in_flight(h);
    c.expect(peak <= config.per_host_limit, h + " peak " + std::to_string(peak));
    std::printf("      %s peak in flight %zu\n", h.c_str(), peak);
  }
}

void persistence_and_resume(Check& c) {
  // Append then rebuild.
  {
    const auto dir = scratch("roundtrip");
    std::mt19937 gen(8);
    std::vector<ResultRecord> records;
    const std::vector<std::string> domains = {"a.test", "b.test", "c.test"};
    const std::vector<std::string> hosts = {"a.test", "cdn.a.test", "x.test", "b.test", "y.test"};
    const std::vector<int> statuses = {200, 301, 404, 500, 304};
    for (int i = 0; i < 500; ++i) {
      ResultRecord r;
      r.domain = domains[gen() % domains.size()];
      r.result.ref.origin_page = parse_absolute_url("https://" + r.domain + "/");
      r.result.ref.url = parse_absolute_url("https://" + hosts[gen() % hosts.size()] + "/" + std::to_string(i));
      r.result.ref.category = kAllCategories[gen() % kCategoryCount];
      r.result.ref.scope = classify_scope(r.result.ref.url, r.result.ref.origin_page);
      r.result.ref.raw_text = r.result.ref.url.str();
      r.result = make_probe_result(r.result.ref, ProbeOutcome::http(r.result.ref.url, statuses[gen() % statuses.size()]));
      records.push_back(r);
    }
    const auto path = dir / "r.jsonl";
    append_results(path, std::span<const ResultRecord>(records).subspan(0, 200));
    append_results(path, std::span<const ResultRecord>(records).subspan(200));
    c.expect(build_profiles(path).profiles == build_profiles(std::span<const ResultRecord>(records)).profiles,
             "file profiles differ from in-memory profiles");
    fs::remove_all(dir);
  }

  // Interrupted scan, then --resume.
  const auto dir = scratch("resume");
  fixture::Server server;
  const auto corpus = fixture::MockCorpus::build(server, dir);
  const auto out = dir / "results.jsonl";
  std::string log;
  if (run_cli(corpus.scan_args(server, out, 20, false), &log) != 0) {
    c.expect(false, "first scan failed: " + log);
    return;
  }

  // Cut the file inside the last page batch, mid-line.
  std::string text;
  {
    std::ifstream in(out, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto last_page = text.rfind("{\"record\":\"page\"");
  const auto page_end = text.find('\n', last_page);
  const auto next_end = text.find('\n', page_end + 1);
  if (last_page == std::string::npos || next_end == std::string::npos) {
    c.expect(false, "could not locate a page batch with references to tear");
    return;
  }
  const std::string torn_domain = std::get<PageRecord>(parse_record_line(text.substr(last_page, page_end - last_page))).domain;
  const std::size_t cut = next_end + 1 + (text.size() - next_end - 1) / 2;
  {
    std::ofstream o(out, std::ios::binary | std::ios::trunc);
    o << text.substr(0, cut);
  }
  const auto before = build_profiles(out);
  c.expect(before.incomplete_batches == 1, "torn batches " + std::to_string(before.incomplete_batches));
  c.expect(before.completed.size() == 19, "completed before resume " + std::to_string(before.completed.size()));

  server.reset_counters();
  if (run_cli(corpus.scan_args(server, out, 50, true), &log) != 0) {
    c.expect(false, "resumed scan failed: " + log);
    return;
  }

  const auto counts = server.request_counts();
  for (const auto& site : corpus.sites) {
    std::size_t homepage = 0;
    std::size_t own = 0;
    for (const auto& [key, n] : counts) {
      if (key.second == "/" && (key.first == site.domain || key.first == "www." + site.domain)) homepage += n;
      if (key.first == site.domain && key.second != "/") own += n;
    }
    const bool was_complete = before.completed.count(site.domain) > 0;
    if (was_complete) {
      c.expect(homepage == 0, "duplicate homepage fetch for " + site.domain);
      c.expect(own == 0, "duplicate reference fetch for " + site.domain);
    } else {
      c.expect(homepage >= 1, "homepage not fetched for " + site.domain);
    }
  }
  c.expect(before.completed.count(torn_domain) == 0, "torn domain counted complete");

  const auto after = build_profiles(out);
  const auto expected = corpus.expected_profiles();
  c.expect(after.incomplete_batches == 0, "incomplete batches after resume");
  c.expect(after.profiles.size() == expected.size(), "profiles after resume " + std::to_string(after.profiles.size()));
  for (const auto& p : after.profiles) {
    const auto it = expected.find(p.domain);
    c.expect(it != expected.end() && p == it->second, "resumed profile mismatch " + p.domain);
  }
  fs::remove_all(dir);
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"broken-rule exhaustiveness", broken_rule},
      {"category tables from aggregate fixture", aggregate_tables},
      {"gamma fit recovery", gamma_recovery},
      {"numerical core", numerical_core},
      {"end-to-end mock-corpus scan", mock_corpus_scan},
      {"anomaly detection", anomaly_detection},
      {"politeness contract", politeness},
      {"persistence round trip and resume", persistence_and_resume},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = check.failures.empty();
    failed += !ok;
    std::printf("%s %zu. %s (%.2f s)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].name, secs);
    for (std::size_t j = 0; j < check.failures.size() && j < 20; ++j) {
      std::printf("      %s\n", check.failures[j].c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  fs::remove_all(fs::temp_directory_path() / ("linkaudit_accept_" + std::to_string(::getpid())));
  return failed == 0 ? 0 : 1;
}
