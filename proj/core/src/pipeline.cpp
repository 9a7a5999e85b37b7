#include "linkaudit/pipeline.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <unordered_map>

#include <json.hpp>

#include "linkaudit/errors.hpp"
#include "linkaudit/triage.hpp"

#ifndef LINKAUDIT_VERSION
#define LINKAUDIT_VERSION "0.0.0"
#endif

namespace linkaudit {
namespace {

struct SiteWork {
  SiteEntry site;
  PageFetch page;
  bool fetched = false;
  std::vector<ResourceRef> refs;
  std::vector<std::string> unparsable;
  std::size_t first_result = 0;
};

void say(const ScanOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

const Resolver& triage_resolver(const ScanConfig& config) {
  static const SystemResolver system;
  return config.resolver ? *config.resolver : system;
}

}  // namespace

std::string_view tool_version() { return LINKAUDIT_VERSION; }

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "linkaudit";
  j["tool_version"] = m.tool_version;
  j["site_list_path"] = m.site_list_path;
  j["top_n"] = m.top_n;
  j["output_path"] = m.output_path;
  j["resume"] = m.resume;
  j["started_at"] = format_utc(m.started_at);
  j["finished_at"] = format_utc(m.finished_at);
  j["config"] = {
      {"concurrency", m.config.concurrency},
      {"per_host_limit", m.config.per_host_limit},
      {"timeout_ms", m.config.timeout.count()},
      {"retries", m.config.retries},
      {"user_agent", m.config.user_agent},
      {"connect_to", m.config.connect_to ? nlohmann::ordered_json(*m.config.connect_to) : nullptr},
      {"stub_resolver", static_cast<bool>(m.config.resolver)},
  };
  j["pages_attempted"] = m.pages_attempted;
  j["pages_succeeded"] = m.pages_succeeded;
  j["pages_failed"] = m.pages_failed;
  j["pages_scanned_now"] = m.pages_scanned_now;
  j["pages_skipped_resume"] = m.pages_skipped_resume;
  j["refs_written_now"] = m.refs_written_now;
  j["site_rows_malformed"] = m.site_rows_malformed;
  j["incomplete_batches"] = m.incomplete_batches;
  return j.dump(2) + "\n";
}

PageFetch fetch_homepage(std::string_view domain, const ScanConfig& config, const HttpTransport& transport) {
  const std::string d(domain);
  PageFetch page = fetch_page(parse_absolute_url("https://" + d + "/"), config, transport);
  if (page.outcome.kind == OutcomeKind::ConnectFailure || page.outcome.kind == OutcomeKind::TlsFailure) {
    page = fetch_page(parse_absolute_url("http://" + d + "/"), config, transport);
  }
  return page;
}

void annotate_broken(ResultRecord& record, const Resolver& resolver, const SuffixRules& rules) {
  const auto& result = record.result;
  if (!result.broken) return;
  record.typo_signals = detect_typos(result.ref.raw_text, rules);
  record.dns_state = resolve_dns_state(result.ref.url.host, resolver, rules);
  record.triage_cause = triage_broken(result, *record.dns_state, record.typo_signals).cause;
}

RunManifest run_scan(const ScanOptions& options, const HttpTransport& transport) {
  options.config.validate();
  if (options.top_n == 0) throw ConfigError("--top must be positive");
  if (options.chunk_size == 0) throw ConfigError("chunk size must be positive");

  RunManifest manifest;
  manifest.config = options.config;
  manifest.site_list_path = options.site_list.string();
  manifest.top_n = options.top_n;
  manifest.output_path = options.output.string();
  manifest.resume = options.resume;
  manifest.tool_version = std::string(tool_version());
  manifest.started_at = utc_now();

  SuffixRules rules = SuffixRules::bundled();
  if (options.suffix_rules) rules.merge(SuffixRules::load_file(*options.suffix_rules));

  const SiteList sites = load_site_list(options.site_list, options.top_n);
  manifest.site_rows_malformed = sites.malformed_rows;

  std::optional<FetchLog> fetch_log;
  if (options.fetch_log) fetch_log = FetchLog::load(*options.fetch_log, rules);

  std::set<std::string> done;
  if (options.resume && std::filesystem::exists(options.output)) {
    done = build_profiles(options.output).completed;
  }

  std::vector<SiteEntry> todo;
  for (const auto& s : sites.entries) {
    if (done.contains(s.domain)) {
      ++manifest.pages_skipped_resume;
    } else {
      todo.push_back(s);
    }
  }
  say(options, std::to_string(todo.size()) + " sites to scan, " + std::to_string(manifest.pages_skipped_resume) +
                   " already complete");

  ResultsWriter writer(options.output);
  const Resolver& resolver = triage_resolver(options.config);

  for (std::size_t begin = 0; begin < todo.size(); begin += options.chunk_size) {
    const std::size_t end = std::min(todo.size(), begin + options.chunk_size);
    std::vector<SiteWork> work(end - begin);
    std::vector<std::string> hosts;
    for (std::size_t i = begin; i < end; ++i) {
      work[i - begin].site = todo[i];
      hosts.push_back(todo[i].domain);
    }

    run_host_limited(hosts, options.config.concurrency, options.config.per_host_limit, [&](std::size_t i) {
      work[i].page = fetch_homepage(work[i].site.domain, options.config, transport);
    });

    std::vector<ResourceRef> refs;
    for (auto& w : work) {
      w.fetched = w.page.ok();
      w.first_result = refs.size();
      if (!w.fetched) continue;
      auto extraction = extract_refs(w.page.body, w.page.final_url, rules);
      w.refs = std::move(extraction.refs);
      for (auto& u : extraction.unparsable) w.unparsable.push_back(std::move(u.raw_text));
      if (fetch_log) {
        const auto site = registrable_domain(w.page.final_url.host, rules).value;
        auto dynamic = ingest_fetch_log(fetch_log->lines_for(site), w.page.final_url, rules);
        for (auto& r : dynamic.refs) w.refs.push_back(std::move(r));
      }
      refs.insert(refs.end(), w.refs.begin(), w.refs.end());
    }

    const auto results = probe_all(refs, options.config, transport);

    std::unordered_map<std::string, DnsState> dns_cache;
    std::vector<ResultRecord> records;
    records.reserve(results.size());
    std::size_t wi = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      while (wi + 1 < work.size() && i >= work[wi + 1].first_result) ++wi;
      ResultRecord rec;
      rec.domain = work[wi].site.domain;
      rec.result = results[i];
      if (rec.result.broken) {
        const auto& host = rec.result.ref.url.host;
        auto it = dns_cache.find(host);
        if (it == dns_cache.end()) it = dns_cache.emplace(host, resolve_dns_state(host, resolver, rules)).first;
        rec.typo_signals = detect_typos(rec.result.ref.raw_text, rules);
        rec.dns_state = it->second;
        rec.triage_cause = triage_broken(rec.result, it->second, rec.typo_signals).cause;
      }
      records.push_back(std::move(rec));
    }

    for (auto& w : work) {
      PageRecord page;
      page.domain = w.site.domain;
      page.rank = w.site.rank;
      page.page_url = w.page.final_url.str();
      page.fetched = w.fetched;
      page.outcome_kind = w.page.outcome.kind;
      page.status = w.page.outcome.status;
      page.latency_ms = w.page.outcome.latency_ms;
      page.fetched_at = w.page.outcome.fetched_at;
      page.ref_count = w.refs.size();
      page.unparsable_refs = std::move(w.unparsable);
      const std::span<const ResultRecord> batch(records.data() + w.first_result, w.refs.size());
      writer.append_page(page, batch);
      manifest.refs_written_now += batch.size();
      ++manifest.pages_scanned_now;
    }
    say(options, "scanned " + std::to_string(end) + "/" + std::to_string(todo.size()) + " sites");
  }

  const ProfileSet written = build_profiles(options.output);
  manifest.pages_attempted = written.completed.size();
  manifest.pages_failed = written.unreachable.size();
  manifest.pages_succeeded = manifest.pages_attempted - manifest.pages_failed;
  manifest.incomplete_batches = written.incomplete_batches;
  manifest.finished_at = std::max(utc_now(), manifest.started_at);

  std::ofstream out(manifest_path_for(options.output), std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + manifest_path_for(options.output).string());
  out << manifest_to_json(manifest);
  if (!out.flush()) throw IoError("cannot write manifest " + manifest_path_for(options.output).string());
  return manifest;
}

}  // namespace linkaudit
