#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "linkaudit/corpus_store.hpp"
#include "linkaudit/gamma_model.hpp"
#include "linkaudit/html_extractor.hpp"
#include "linkaudit/url_model.hpp"

using namespace linkaudit;

namespace {

std::string synthetic_homepage(int refs) {
  std::string html = "<html><head><title>bench</title>";
  for (int i = 0; i < refs; ++i) {
    switch (i % 5) {
      case 0: html += "<img src=\"/img/" + std::to_string(i) + ".png\" alt=x>"; break;
      case 1: html += "<script src=\"https://cdn" + std::to_string(i % 7) + ".example.net/lib.js\"></script>"; break;
      case 2: html += "<link rel=stylesheet href=\"//fonts.example.org/c" + std::to_string(i) + ".css\">"; break;
      case 3: html += "<!-- <img src=/hidden.png> --><p>text &amp; more</p>"; break;
      default: html += "<picture><source srcset=\"/a" + std::to_string(i) + ".webp 1x, /b.webp 2x\"></picture>";
    }
  }
  return html + "</head><body></body></html>";
}

std::vector<double> gamma_draws(std::size_t n) {
  std::mt19937_64 gen(1);
  std::gamma_distribution<double> dist(2.52, 30.0);
  std::vector<double> xs(n);
  for (auto& x : xs) x = dist(gen);
  return xs;
}

}  // namespace

static void BM_ExtractRefs(benchmark::State& state) {
  const auto html = synthetic_homepage(static_cast<int>(state.range(0)));
  const auto origin = parse_absolute_url("https://site.example.com/");
  for (auto _ : state) benchmark::DoNotOptimize(extract_refs(html, origin));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * html.size()));
}
BENCHMARK(BM_ExtractRefs)->Arg(100)->Arg(1000);

static void BM_NormalizeUrl(benchmark::State& state) {
  const auto base = parse_absolute_url("https://site.example.com/a/b/index.html");
  const std::vector<std::string> raws = {"//cdn.ex.com/a.js", "../img/logo.png?v=3", "HTTPS://X.ORG/Path#f",
                                         "/static/app.css"};
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(normalize_url(raws[i++ % raws.size()], base));
}
BENCHMARK(BM_NormalizeUrl);

static void BM_FitGamma(benchmark::State& state) {
  const auto xs = gamma_draws(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_gamma(xs));
}
BENCHMARK(BM_FitGamma)->Arg(1000)->Arg(88000);

static void BM_GammaCdf(benchmark::State& state) {
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gamma_cdf(x, 2.52, 30.0));
    x = x > 600.0 ? 0.5 : x + 1.7;
  }
}
BENCHMARK(BM_GammaCdf);

static void BM_BuildProfiles(benchmark::State& state) {
  std::vector<ResultRecord> records;
  const auto origin = parse_absolute_url("https://site.example.com/");
  for (int i = 0; i < state.range(0); ++i) {
    ResultRecord r;
    r.domain = "d" + std::to_string(i % 100) + ".com";
    r.result.ref.origin_page = origin;
    r.result.ref.url = parse_absolute_url("https://cdn.ex.net/" + std::to_string(i));
    r.result.ref.scope = Scope::External;
    r.result.ref.raw_text = r.result.ref.url.str();
    r.result = make_probe_result(r.result.ref, ProbeOutcome::http(r.result.ref.url, i % 6 ? 200 : 404));
    records.push_back(std::move(r));
  }
  std::string text;
  for (const auto& r : records) text += to_json_line(r) + "\n";
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(build_profiles(in));
  }
}
BENCHMARK(BM_BuildProfiles)->Arg(10000);

BENCHMARK_MAIN();
