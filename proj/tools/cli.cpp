#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "linkaudit/corpus_store.hpp"
#include "linkaudit/dns.hpp"
#include "linkaudit/errors.hpp"
#include "linkaudit/gamma_model.hpp"
#include "linkaudit/pipeline.hpp"
#include "linkaudit/report.hpp"
#include "linkaudit/triage.hpp"

namespace linkaudit::cli {
namespace {

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::string out;
  std::optional<std::size_t> top;
  std::size_t concurrency = 64;
  std::size_t per_host = 2;
  double timeout_s = 15.0;
  std::string user_agent{kDefaultUserAgent};
  std::size_t retries = 1;
  bool resume = false;
  std::uint64_t seed = 1;
  std::optional<double> alpha;
  std::optional<std::string> series;
  std::string format = "markdown";
  double bin_width = 10.0;
  double truncate_below = 0.0;

  std::string model;
  std::size_t n = 100;
  std::string histogram;
  std::string resolve_file;
  std::string connect_to;
  std::string fetch_log;
  std::string suffix_rules;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void require(const std::string& value, const char* flag, const char* command) {
  if (value.empty()) throw UsageError(std::string(command) + " requires " + flag);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out.flush()) throw IoError("cannot write " + path);
}

void emit(const Options& o, std::ostream& out, const std::string& content) {
  if (o.out.empty()) {
    out << content;
  } else {
    write_file(o.out, content);
  }
}

ProfileSeries series_or(const Options& o, ProfileSeries fallback) {
  if (!o.series) return fallback;
  const auto s = profile_series_from_string(*o.series);
  if (!s) throw UsageError("--series must be 'external' or 'total', got '" + *o.series + "'");
  return *s;
}

ScanConfig scan_config(const Options& o) {
  ScanConfig c;
  c.concurrency = o.concurrency;
  c.per_host_limit = o.per_host;
  if (!(o.timeout_s > 0.0) || !std::isfinite(o.timeout_s)) throw ConfigError("--timeout must be positive");
  c.timeout = std::chrono::milliseconds(std::max<long long>(1, std::llround(o.timeout_s * 1000.0)));
  c.user_agent = o.user_agent;
  c.retries = o.retries;
  if (!o.connect_to.empty()) c.connect_to = o.connect_to;
  if (!o.resolve_file.empty()) c.resolver = std::make_shared<StubResolver>(StubResolver::load(o.resolve_file));
  c.validate();
  return c;
}

int cmd_scan(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.input, "--input", "scan");
  require(o.out, "--out", "scan");
  if (!o.top) throw UsageError("scan requires --top");
  if (*o.top == 0) throw ConfigError("--top must be positive");

  ScanOptions so;
  so.site_list = o.input;
  so.top_n = *o.top;
  so.output = o.out;
  so.resume = o.resume;
  so.config = scan_config(o);
  if (!o.fetch_log.empty()) so.fetch_log = o.fetch_log;
  if (!o.suffix_rules.empty()) so.suffix_rules = o.suffix_rules;
  so.log = [&err](std::string_view msg) { err << msg << "\n"; };

  const auto m = run_scan(so);
  out << "pages scanned this run: " << m.pages_scanned_now << "\n"
      << "pages skipped (resume): " << m.pages_skipped_resume << "\n"
      << "references written: " << m.refs_written_now << "\n"
      << "pages in file: " << m.pages_attempted << " (" << m.pages_succeeded << " fetched, " << m.pages_failed
      << " unreachable)\n"
      << "manifest: " << manifest_path_for(o.out).string() << "\n";
  return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream&) {
  require(o.input, "--input", "fit");
  require(o.out, "--out", "fit");
  const auto series = series_or(o, ProfileSeries::External);
  if (o.truncate_below < 0.0) throw ConfigError("--truncate-below must be non-negative");
  if (o.alpha && !(*o.alpha > 0.0 && *o.alpha < 1.0)) throw ConfigError("--alpha must be in (0, 1)");

  const auto set = build_profiles(std::filesystem::path(o.input));
  const auto samples = fit_samples(set.profiles, series, o.truncate_below);
  GammaModel model = fit_gamma(samples);
  model.series = std::string(to_string(series));
  model.truncation_floor = o.truncate_below;
  if (o.alpha) model.alpha_default = *o.alpha;
  write_file(o.out, model_to_json(model));

  out << "series: " << model.series << "\n"
      << "n: " << model.n << "\n"
      << "shape k: " << fmt("%.6f", model.shape) << "\n"
      << "scale theta: " << fmt("%.6f", model.scale) << "\n"
      << "ks: " << fmt("%.6f", model.ks_statistic) << "\n"
      << "log_likelihood: " << fmt("%.6f", model.log_likelihood) << "\n"
      << "mom shape/scale: " << fmt("%.6f", model.mom_shape) << " / " << fmt("%.6f", model.mom_scale) << "\n";
  return kExitOk;
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream&) {
  require(o.input, "--input", "detect");
  require(o.model, "--model", "detect");
  const GammaModel model = model_from_json(read_file(o.model));
  const auto fallback = profile_series_from_string(model.series).value_or(ProfileSeries::External);
  const auto series = series_or(o, fallback);
  const double alpha = o.alpha.value_or(model.alpha_default);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must be in (0, 1)");

  const auto set = build_profiles(std::filesystem::path(o.input));
  const auto verdicts = detect_anomalies(set.profiles, model, alpha, series);

  std::string flagged = "domain\tobserved\ttail_prob\tside\n";
  std::string all = "domain,observed,tail_prob,side,flagged\n";
  for (const auto& v : verdicts) {
    const auto p = fmt("%.9e", v.tail_prob);
    if (v.flagged) {
      flagged += v.domain + "\t" + std::to_string(v.observed) + "\t" + p + "\t" + std::string(to_string(v.side)) + "\n";
    }
    all += v.domain + "," + std::to_string(v.observed) + "," + p + "," + std::string(to_string(v.side)) + "," +
           (v.flagged ? "true" : "false") + "\n";
  }
  out << flagged;
  if (!o.out.empty()) write_file(o.out, all);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  require(o.input, "--input", "report");
  const auto format = report_format_from_string(o.format);
  const auto set = build_profiles(std::filesystem::path(o.input));
  const auto stats = summarize(set.profiles, set.unreachable.size());
  emit(o, out, render(stats, format));

  if (!o.histogram.empty()) {
    std::optional<GammaModel> overlay;
    ProfileSeries fallback = ProfileSeries::External;
    if (!o.model.empty()) {
      overlay = model_from_json(read_file(o.model));
      fallback = profile_series_from_string(overlay->series).value_or(fallback);
    }
    if (!(o.bin_width > 0.0)) throw ConfigError("--bin-width must be positive");
    const auto h = histogram(set.profiles, series_or(o, fallback), o.bin_width, overlay);
    write_file(o.histogram, render_histogram_csv(h));
  }
  return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out, std::ostream&) {
  require(o.input, "--input", "sample");
  if (o.n == 0) throw ConfigError("--n must be positive");
  const auto results = read_results(o.input);
  const auto picked = sample_for_review(results, o.n, o.seed);
  std::string text;
  for (const auto& r : picked) text += to_json_line(r) + "\n";
  emit(o, out, text);
  return kExitOk;
}

int cmd_triage(const Options& o, std::ostream& out, std::ostream&) {
  require(o.input, "--input", "triage");
  require(o.out, "--out", "triage");
  SuffixRules rules = SuffixRules::bundled();
  if (!o.suffix_rules.empty()) rules.merge(SuffixRules::load_file(o.suffix_rules));
  std::shared_ptr<const Resolver> resolver;
  if (!o.resolve_file.empty()) {
    resolver = std::make_shared<StubResolver>(StubResolver::load(o.resolve_file));
  } else {
    resolver = std::make_shared<SystemResolver>();
  }

  ReadStats stats;
  auto results = read_results(o.input, &stats);
  std::map<std::string, std::size_t> causes;
  for (auto& r : results) {
    if (!r.result.broken) continue;
    annotate_broken(r, *resolver, rules);
    ++causes[std::string(to_string(*r.triage_cause))];
  }
  if (std::filesystem::exists(o.out)) std::filesystem::remove(o.out);
  append_results(o.out, results);

  for (const auto& [cause, count] : causes) out << cause << "\t" << count << "\n";
  if (stats.malformed > 0) out << "malformed records skipped: " << stats.malformed << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"linkaudit: broken external link audit of top-site homepages"};
  app.name("linkaudit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  app.add_option("--input", o.input, "Site list (scan) or results/profiles file");
  app.add_option("--out", o.out, "Output file");
  app.add_option("--top", o.top, "Number of top-ranked sites to scan");
  app.add_option("--concurrency", o.concurrency, "Global concurrent requests")->capture_default_str();
  app.add_option("--per-host", o.per_host, "Concurrent requests per host")->capture_default_str();
  app.add_option("--timeout", o.timeout_s, "Per-request timeout in seconds")->capture_default_str();
  app.add_option("--retries", o.retries, "Retries after a network error")->capture_default_str();
  app.add_option("--user-agent", o.user_agent, "User-Agent header")->capture_default_str();
  app.add_flag("--resume", o.resume, "Skip sites already complete in --out");
  app.add_option("--seed", o.seed, "Seed for sampling")->capture_default_str();
  app.add_option("--alpha", o.alpha, "Tail-probability threshold (default: model's, 0.001)");
  app.add_option("--series", o.series, "Profile series: external or total");
  app.add_option("--format", o.format, "Report format: markdown, csv or json")->capture_default_str();
  app.add_option("--bin-width", o.bin_width, "Histogram bin width")->capture_default_str();
  app.add_option("--truncate-below", o.truncate_below, "Drop counts below this before fitting")
      ->capture_default_str();
  app.add_option("--model", o.model, "Model JSON written by fit");
  app.add_option("--n", o.n, "Sample size")->capture_default_str();
  app.add_option("--histogram", o.histogram, "Also write histogram CSV here (report)");
  app.add_option("--resolve-file", o.resolve_file, "Closed-world DNS stub file");
  app.add_option("--connect-to", o.connect_to, "Route every connection to ADDR:PORT");
  app.add_option("--fetch-log", o.fetch_log, "Dynamic fetch log (JSON lines)");
  app.add_option("--suffix-rules", o.suffix_rules, "Extra public-suffix rules file");

  auto* scan = app.add_subcommand("scan", "Fetch homepages, probe their references, triage broken ones");
  auto* fit = app.add_subcommand("fit", "Fit a gamma model to per-homepage reference counts");
  auto* detect = app.add_subcommand("detect", "List homepages whose counts are anomalous under a model");
  auto* report = app.add_subcommand("report", "Summary tables and optional histogram");
  auto* sample = app.add_subcommand("sample", "Seeded sample of broken references for manual review");
  auto* triage = app.add_subcommand("triage", "Re-run cause triage over a results file");
  for (auto* sub : {scan, fit, detect, report, sample, triage}) sub->fallthrough();

  app.footer(
      "Politeness defaults: concurrency 64, per-host 2, timeout 15 s, 1 retry on network errors.\n"
      "Exit codes: 0 success, 1 runtime or I/O error, 2 usage or configuration error.");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (scan->parsed()) return cmd_scan(o, out, err);
    if (fit->parsed()) return cmd_fit(o, out, err);
    if (detect->parsed()) return cmd_detect(o, out, err);
    if (report->parsed()) return cmd_report(o, out, err);
    if (sample->parsed()) return cmd_sample(o, out, err);
    if (triage->parsed()) return cmd_triage(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const UnknownFormat& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace linkaudit::cli
