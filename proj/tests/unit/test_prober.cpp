#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "fixture_server.hpp"
#include "linkaudit/errors.hpp"
#include "linkaudit/prober.hpp"

using namespace linkaudit;
using namespace std::chrono_literals;

namespace {

AbsoluteUrl url(const std::string& s) { return parse_absolute_url(s); }

ResourceRef ref_to(const std::string& u, ResourceCategory c = ResourceCategory::Image) {
  ResourceRef r;
  r.origin_page = url("http://site.com/");
  r.url = url(u);
  r.category = c;
  r.scope = classify_scope(r.url, r.origin_page);
  r.raw_text = u;
  return r;
}

// Scripted transport: replies come from a per-URL queue; the last reply
// repeats. Records every request.
class ScriptedTransport : public HttpTransport {
public:
  void script(const std::string& u, std::vector<HttpReply> replies) { replies_[u] = std::move(replies); }

  HttpReply get(const HttpRequest& request, const ScanConfig&) const override {
    std::lock_guard lock(mu_);
    const auto key = request.url.str();
    auto& n = calls_[key];
    const auto it = replies_.find(key);
    if (it == replies_.end()) return HttpReply{OutcomeKind::HttpResponse, 404, {}, {}, {}};
    const auto& list = it->second;
    return list[std::min(n++, list.size() - 1)];
  }

  std::size_t calls(const std::string& u) const {
    std::lock_guard lock(mu_);
    const auto it = calls_.find(u);
    return it == calls_.end() ? 0 : it->second;
  }

private:
  std::map<std::string, std::vector<HttpReply>> replies_;
  mutable std::map<std::string, std::size_t> calls_;
  mutable std::mutex mu_;
};

HttpReply status(int code, std::optional<std::string> ct = {}) {
  return HttpReply{OutcomeKind::HttpResponse, code, std::move(ct), {}, {}};
}

HttpReply failure(OutcomeKind k) { return HttpReply{k, {}, {}, {}, {}}; }

}  // namespace

TEST(ClassifyBroken, EveryStatus) {
  for (int s = 100; s <= 599; ++s) {
    const bool ok = s == 200 || s == 301 || s == 302 || s == 304;
    EXPECT_EQ(classify_broken(ProbeOutcome::http(url("http://x.com/"), s)), !ok) << s;
  }
}

TEST(ClassifyBroken, NetworkKinds) {
  for (auto k : kNetworkErrorKinds) EXPECT_TRUE(classify_broken(ProbeOutcome::failure(url("http://x.com/"), k)));
}

TEST(ClassifyBroken, OutOfRangeStatusKeptAndBroken) {
  EXPECT_TRUE(classify_broken(ProbeOutcome::http(url("http://x.com/"), 999)));
  EXPECT_TRUE(classify_broken(ProbeOutcome::http(url("http://x.com/"), 0)));
}

TEST(OutcomeKind, StringRoundTrip) {
  for (auto k : {OutcomeKind::HttpResponse, OutcomeKind::DnsFailure, OutcomeKind::ConnectFailure,
                 OutcomeKind::TlsFailure, OutcomeKind::Timeout}) {
    EXPECT_EQ(outcome_kind_from_string(to_string(k)), k);
  }
}

TEST(UtcTime, FormatParseRoundTrip) {
  const UtcTime t{std::chrono::milliseconds(1650000000123)};
  EXPECT_EQ(format_utc(t), "2022-04-15T05:20:00.123Z");
  EXPECT_EQ(parse_utc(format_utc(t)), t);
  EXPECT_FALSE(parse_utc("yesterday"));
}

TEST(MakeProbeResult, CategoryMismatch) {
  auto r = make_probe_result(ref_to("http://x.com/a.png"), ProbeOutcome::http(url("http://x.com/a.png"), 200, "text/html"));
  EXPECT_EQ(r.header_category, ResourceCategory::Document);
  EXPECT_TRUE(r.category_mismatch);
  EXPECT_EQ(r.ref.category, ResourceCategory::Image);  // element category wins

  r = make_probe_result(ref_to("http://x.com/a.png"), ProbeOutcome::http(url("http://x.com/a.png"), 200, "image/png"));
  EXPECT_FALSE(r.category_mismatch);
  r = make_probe_result(ref_to("http://x.com/a.png"),
                        ProbeOutcome::http(url("http://x.com/a.png"), 200, "application/octet-stream"));
  EXPECT_FALSE(r.category_mismatch);
  r = make_probe_result(ref_to("http://x.com/a", ResourceCategory::Xhr),
                        ProbeOutcome::http(url("http://x.com/a"), 200, "text/html"));
  EXPECT_FALSE(r.category_mismatch);
  r = make_probe_result(ref_to("http://x.com/a.png"), ProbeOutcome::failure(url("http://x.com/a.png"), OutcomeKind::Timeout));
  EXPECT_FALSE(r.header_category);
  EXPECT_TRUE(r.broken);
}

TEST(ScanConfig, Validation) {
  ScanConfig c;
  EXPECT_NO_THROW(c.validate());
  c.concurrency = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ScanConfig{};
  c.per_host_limit = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ScanConfig{};
  c.timeout = 0ms;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ScanConfig{};
  c.per_host_limit = 100;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ScanConfig, DefaultsDeclared) {
  const ScanConfig c;
  EXPECT_EQ(c.concurrency, 64u);
  EXPECT_EQ(c.per_host_limit, 2u);
  EXPECT_EQ(c.timeout, 15000ms);
  EXPECT_EQ(c.retries, 1u);
  EXPECT_NE(c.user_agent.find("Opting out"), std::string::npos);
}

TEST(Probe, RetriesNetworkErrorsOnly) {
  ScriptedTransport t;
  t.script("http://flaky.com/a", {failure(OutcomeKind::ConnectFailure), status(200)});
  t.script("http://down.com/a", {failure(OutcomeKind::Timeout)});
  t.script("http://gone.com/a", {status(404)});
  ScanConfig c;
  c.retries = 1;

  EXPECT_EQ(probe(url("http://flaky.com/a"), c, t).status, 200);
  EXPECT_EQ(t.calls("http://flaky.com/a"), 2u);
  EXPECT_EQ(probe(url("http://down.com/a"), c, t).kind, OutcomeKind::Timeout);
  EXPECT_EQ(t.calls("http://down.com/a"), 2u);
  EXPECT_EQ(probe(url("http://gone.com/a"), c, t).status, 404);
  EXPECT_EQ(t.calls("http://gone.com/a"), 1u);
}

TEST(Probe, StubResolverShortCircuits) {
  ScriptedTransport t;
  auto stub = std::make_shared<StubResolver>();
  stub->add_address("known.com");
  t.script("http://known.com/", {status(200)});
  t.script("http://unknown.com/", {status(200)});
  ScanConfig c;
  c.resolver = stub;
  EXPECT_EQ(probe(url("http://known.com/"), c, t).kind, OutcomeKind::HttpResponse);
  EXPECT_EQ(probe(url("http://unknown.com/"), c, t).kind, OutcomeKind::DnsFailure);
  EXPECT_EQ(t.calls("http://unknown.com/"), 0u);
}

TEST(ProbeAll, OrderPreservedAndDuplicatesShared) {
  ScriptedTransport t;
  t.script("http://a.com/1", {status(200)});
  t.script("http://b.com/2", {status(500)});
  std::vector<ResourceRef> refs = {ref_to("http://a.com/1"), ref_to("http://b.com/2"),
                                   ref_to("http://a.com/1", ResourceCategory::Script), ref_to("http://c.com/3")};
  ScanConfig c;
  c.concurrency = 4;
  const auto results = probe_all(refs, c, t);
  ASSERT_EQ(results.size(), 4u);
  for (std::size_t i = 0; i < refs.size(); ++i) EXPECT_EQ(results[i].ref, refs[i]);
  EXPECT_FALSE(results[0].broken);
  EXPECT_TRUE(results[1].broken);
  EXPECT_FALSE(results[2].broken);
  EXPECT_EQ(results[3].outcome.status, 404);
  EXPECT_EQ(t.calls("http://a.com/1"), 1u);
}

TEST(RunHostLimited, RespectsBothLimits) {
  std::vector<std::string> hosts;
  for (int i = 0; i < 60; ++i) hosts.push_back("h" + std::to_string(i % 3));
  std::mutex mu;
  std::map<std::string, int> active;
  std::map<std::string, int> peak;
  int global = 0;
  int global_peak = 0;
  std::atomic<int> done{0};
  run_host_limited(hosts, 5, 2, [&](std::size_t i) {
    {
      std::lock_guard lock(mu);
      peak[hosts[i]] = std::max(peak[hosts[i]], ++active[hosts[i]]);
      global_peak = std::max(global_peak, ++global);
    }
    std::this_thread::sleep_for(2ms);
    {
      std::lock_guard lock(mu);
      --active[hosts[i]];
      --global;
    }
    ++done;
  });
  EXPECT_EQ(done.load(), 60);
  for (const auto& [h, p] : peak) EXPECT_LE(p, 2) << h;
  EXPECT_LE(global_peak, 5);
}

TEST(RunHostLimited, PropagatesFirstError) {
  std::vector<std::string> hosts(10, "h");
  std::atomic<int> ran{0};
  EXPECT_THROW(run_host_limited(hosts, 3, 1,
                                [&](std::size_t i) {
                                  ++ran;
                                  if (i == 4) throw std::runtime_error("boom");
                                }),
               std::runtime_error);
  EXPECT_EQ(ran.load(), 10);
}

TEST(RunHostLimited, EmptyInput) {
  run_host_limited({}, 4, 2, [](std::size_t) { FAIL(); });
}

class LiveProbe : public ::testing::Test {
protected:
  void SetUp() override {
    server.add("ok.test", "/a.png", {200, "image/png", "png", 0ms, {}});
    server.add("ok.test", "/gone.js", {404, "text/html", "", 0ms, {}});
    server.add("ok.test", "/moved", {301, "text/html", "", 0ms, "http://ok.test/a.png"});
    server.add("ok.test", "/slow", {200, "text/plain", "late", 1500ms, {}});
    server.add("ok.test", "/", {302, "text/html", "", 0ms, "http://www.ok.test/home"});
    server.add("www.ok.test", "/home", {200, "text/html", "<img src=/a.png>", 0ms, {}});
    config.connect_to = server.connect_to();
    config.timeout = 500ms;
    config.retries = 0;
  }

  fixture::Server server;
  ScanConfig config;
};

TEST_F(LiveProbe, StatusesAndHeaders) {
  const auto a = probe(url("http://ok.test/a.png"), config);
  EXPECT_EQ(a.kind, OutcomeKind::HttpResponse);
  EXPECT_EQ(a.status, 200);
  EXPECT_EQ(a.content_type, "image/png");
  EXPECT_EQ(probe(url("http://ok.test/gone.js"), config).status, 404);
  EXPECT_EQ(probe(url("http://ok.test/moved"), config).status, 301);  // first hop only
  EXPECT_EQ(server.requests("ok.test", "/a.png"), 1u);
}

TEST_F(LiveProbe, TimeoutAndTls) {
  const auto slow = probe(url("http://ok.test/slow"), config);
  EXPECT_EQ(slow.kind, OutcomeKind::Timeout);
  EXPECT_TRUE(classify_broken(slow));
  EXPECT_EQ(probe(url("https://ok.test/a.png"), config).kind, OutcomeKind::TlsFailure);
}

TEST_F(LiveProbe, ConnectFailure) {
  ScanConfig c = config;
  c.connect_to = "127.0.0.1:1";
  EXPECT_EQ(probe(url("http://ok.test/a.png"), c).kind, OutcomeKind::ConnectFailure);
}

TEST_F(LiveProbe, FetchPageFollowsRedirects) {
  const auto page = fetch_page(url("http://ok.test/"), config);
  EXPECT_TRUE(page.ok());
  EXPECT_EQ(page.final_url.str(), "http://www.ok.test/home");
  EXPECT_EQ(page.body, "<img src=/a.png>");
}

TEST_F(LiveProbe, UserAgentSent) {
  // The fixture records only counts; a custom agent must not break requests.
  ScanConfig c = config;
  c.user_agent = "custom-agent/1.0";
  EXPECT_EQ(probe(url("http://ok.test/a.png"), c).status, 200);
}
