#include "linkaudit/prober.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "linkaudit/errors.hpp"

namespace linkaudit {

std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::HttpResponse: return "HttpResponse";
    case OutcomeKind::DnsFailure: return "DnsFailure";
    case OutcomeKind::ConnectFailure: return "ConnectFailure";
    case OutcomeKind::TlsFailure: return "TlsFailure";
    case OutcomeKind::Timeout: return "Timeout";
  }
  return "ConnectFailure";
}

std::optional<OutcomeKind> outcome_kind_from_string(std::string_view text) {
  for (auto kind : {OutcomeKind::HttpResponse, OutcomeKind::DnsFailure, OutcomeKind::ConnectFailure,
                    OutcomeKind::TlsFailure, OutcomeKind::Timeout}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

UtcTime utc_now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::string format_utc(UtcTime t) {
  const auto secs = std::chrono::floor<std::chrono::seconds>(t);
  const auto ms = (t - secs).count();
  const std::time_t tt = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::optional<UtcTime> parse_utc(std::string_view text) {
  std::tm tm{};
  int ms = 0;
  const std::string s(text);
  const int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                            &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &ms);
  if (n < 6) return std::nullopt;
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::time_t tt = timegm(&tm);
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::from_time_t(tt)) +
         std::chrono::milliseconds(n == 7 ? ms : 0);
}

ProbeOutcome ProbeOutcome::http(AbsoluteUrl url, int status, std::optional<std::string> content_type) {
  ProbeOutcome o;
  o.url = std::move(url);
  o.kind = OutcomeKind::HttpResponse;
  o.status = status;
  o.content_type = std::move(content_type);
  return o;
}

ProbeOutcome ProbeOutcome::failure(AbsoluteUrl url, OutcomeKind kind) {
  ProbeOutcome o;
  o.url = std::move(url);
  o.kind = kind;
  return o;
}

bool classify_broken(const ProbeOutcome& outcome) {
  if (outcome.kind != OutcomeKind::HttpResponse || !outcome.status) return true;
  switch (*outcome.status) {
    case 200:
    case 301:
    case 302:
    case 304:
      return false;
    default:
      return true;
  }
}

ProbeResult make_probe_result(ResourceRef ref, ProbeOutcome outcome) {
  ProbeResult r;
  r.broken = classify_broken(outcome);
  if (outcome.content_type) {
    r.header_category = category_from_content_type(*outcome.content_type);
    const auto element = ref.category;
    const bool comparable = element != ResourceCategory::Other && element != ResourceCategory::Xhr &&
                            element != ResourceCategory::Fetch;
    r.category_mismatch =
        comparable && *r.header_category != ResourceCategory::Other && *r.header_category != element;
  }
  r.ref = std::move(ref);
  r.outcome = std::move(outcome);
  return r;
}

void ScanConfig::validate() const {
  if (concurrency == 0) throw ConfigError("concurrency must be positive");
  if (per_host_limit == 0) throw ConfigError("per-host limit must be positive");
  if (per_host_limit > concurrency) throw ConfigError("per-host limit must not exceed concurrency");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
}

namespace {

HttpReply routed_get(HttpRequest request, const ScanConfig& config, const HttpTransport& transport) {
  if (config.resolver && !is_ip_literal(request.url.host)) {
    const auto resolved = resolve_address(*config.resolver, request.url.host);
    if (resolved.kind != DnsAnswer::Kind::Address) {
      return HttpReply{OutcomeKind::DnsFailure, {}, {}, {}, {}};
    }
    if (!resolved.address.empty()) request.address = resolved.address;
  }
  return transport.get(request, config);
}

struct Attempt {
  HttpReply reply;
  std::int64_t latency_ms = 0;
  UtcTime fetched_at{};
};

Attempt get_with_retries(const HttpRequest& request, const ScanConfig& config, const HttpTransport& transport) {
  Attempt attempt;
  for (std::size_t i = 0; i <= config.retries; ++i) {
    attempt.fetched_at = utc_now();
    const auto start = std::chrono::steady_clock::now();
    attempt.reply = routed_get(request, config, transport);
    attempt.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    if (attempt.reply.kind == OutcomeKind::HttpResponse) break;
  }
  return attempt;
}

ProbeOutcome to_outcome(const AbsoluteUrl& url, const Attempt& attempt) {
  ProbeOutcome o;
  o.url = url;
  o.kind = attempt.reply.kind;
  if (o.kind == OutcomeKind::HttpResponse) {
    o.status = attempt.reply.status.value_or(0);
    o.content_type = attempt.reply.content_type;
  }
  o.latency_ms = attempt.latency_ms;
  o.fetched_at = attempt.fetched_at;
  return o;
}

}  // namespace

const HttpTransport& default_transport() {
  static const CurlTransport transport;
  return transport;
}

ProbeOutcome probe(const AbsoluteUrl& url, const ScanConfig& config, const HttpTransport& transport) {
  HttpRequest request;
  request.url = url;
  return to_outcome(url, get_with_retries(request, config, transport));
}

PageFetch fetch_page(const AbsoluteUrl& url, const ScanConfig& config, const HttpTransport& transport) {
  HttpRequest request;
  request.url = url;
  request.follow_redirects = true;
  request.want_body = true;
  Attempt attempt = get_with_retries(request, config, transport);

  PageFetch page;
  page.outcome = to_outcome(url, attempt);
  page.body = std::move(attempt.reply.body);
  page.final_url = url;
  if (attempt.reply.final_url) {
    try {
      page.final_url = parse_absolute_url(*attempt.reply.final_url);
    } catch (const Error&) {
    }
  }
  return page;
}

std::vector<ProbeResult> probe_all(std::span<const ResourceRef> refs, const ScanConfig& config,
                                   const HttpTransport& transport) {
  std::unordered_map<std::string, std::size_t> unique_index;
  std::vector<const AbsoluteUrl*> unique_urls;
  std::vector<std::string> hosts;
  std::vector<std::size_t> slot(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    auto [it, inserted] = unique_index.emplace(refs[i].url.str(), unique_urls.size());
    if (inserted) {
      unique_urls.push_back(&refs[i].url);
      hosts.push_back(refs[i].url.host);
    }
    slot[i] = it->second;
  }

  std::vector<ProbeOutcome> outcomes(unique_urls.size());
  run_host_limited(hosts, config.concurrency, config.per_host_limit,
                   [&](std::size_t i) { outcomes[i] = probe(*unique_urls[i], config, transport); });

  std::vector<ProbeResult> results;
  results.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    results.push_back(make_probe_result(refs[i], outcomes[slot[i]]));
  }
  return results;
}

void run_host_limited(std::span<const std::string> hosts, std::size_t concurrency, std::size_t per_host,
                      const std::function<void(std::size_t)>& task) {
  if (hosts.empty()) return;
  concurrency = std::max<std::size_t>(1, concurrency);
  per_host = std::max<std::size_t>(1, per_host);

  struct HostQueue {
    std::deque<std::size_t> pending;
    std::size_t in_flight = 0;
  };
  std::vector<HostQueue> queues;
  std::unordered_map<std::string_view, std::size_t> queue_of;
  for (std::size_t i = 0; i < hosts.size(); ++i) {
    auto [it, inserted] = queue_of.emplace(hosts[i], queues.size());
    if (inserted) queues.emplace_back();
    queues[it->second].pending.push_back(i);
  }

  std::mutex mu;
  std::condition_variable cv;
  std::size_t cursor = 0;
  std::exception_ptr first_error;

  auto worker = [&] {
    std::unique_lock lock(mu);
    while (true) {
      std::optional<std::pair<std::size_t, std::size_t>> pick;  // (queue, task)
      for (std::size_t n = 0; n < queues.size(); ++n) {
        const std::size_t q = (cursor + n) % queues.size();
        auto& hq = queues[q];
        if (!hq.pending.empty() && hq.in_flight < per_host) {
          pick.emplace(q, hq.pending.front());
          hq.pending.pop_front();
          ++hq.in_flight;
          cursor = q + 1;
          break;
        }
      }
      if (!pick) {
        bool any_pending = false;
        for (const auto& hq : queues) any_pending = any_pending || !hq.pending.empty();
        if (!any_pending) return;
        cv.wait(lock);
        continue;
      }
      lock.unlock();
      try {
        task(pick->second);
      } catch (...) {
        std::lock_guard guard(mu);
        if (!first_error) first_error = std::current_exception();
      }
      lock.lock();
      --queues[pick->first].in_flight;
      cv.notify_all();
    }
  };

  const std::size_t n_threads = std::min(concurrency, hosts.size());
  {
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace linkaudit
