#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "linkaudit/dns.hpp"
#include "linkaudit/html_extractor.hpp"
#include "linkaudit/url_model.hpp"

namespace linkaudit {

enum class OutcomeKind { HttpResponse, DnsFailure, ConnectFailure, TlsFailure, Timeout };

inline constexpr std::array<OutcomeKind, 4> kNetworkErrorKinds = {
    OutcomeKind::DnsFailure, OutcomeKind::ConnectFailure, OutcomeKind::TlsFailure, OutcomeKind::Timeout};

std::string_view to_string(OutcomeKind kind);
std::optional<OutcomeKind> outcome_kind_from_string(std::string_view text);

using UtcTime = std::chrono::sys_time<std::chrono::milliseconds>;

std::string format_utc(UtcTime t);
std::optional<UtcTime> parse_utc(std::string_view text);
UtcTime utc_now();

struct ProbeOutcome {
  AbsoluteUrl url;
  OutcomeKind kind = OutcomeKind::ConnectFailure;
  std::optional<int> status;  // present iff kind == HttpResponse
  std::optional<std::string> content_type;
  std::int64_t latency_ms = 0;
  UtcTime fetched_at{};

  static ProbeOutcome http(AbsoluteUrl url, int status, std::optional<std::string> content_type = {});
  static ProbeOutcome failure(AbsoluteUrl url, OutcomeKind kind);
};

// Broken unless the first-hop response is 200, 301, 302 or 304. Every
// network-level failure is broken.
bool classify_broken(const ProbeOutcome& outcome);

struct ProbeResult {
  ResourceRef ref;
  ProbeOutcome outcome;
  bool broken = true;
  std::optional<ResourceCategory> header_category;
  bool category_mismatch = false;
};

ProbeResult make_probe_result(ResourceRef ref, ProbeOutcome outcome);

inline constexpr std::string_view kDefaultUserAgent =
    "linkaudit/0.1 (broken-link measurement crawler; homepage and referenced assets only; "
    "opt-out: see the 'Opting out' section of the linkaudit README)";

struct ScanConfig {
  std::size_t concurrency = 64;
  std::size_t per_host_limit = 2;
  std::chrono::milliseconds timeout{15000};
  std::string user_agent{kDefaultUserAgent};
  std::size_t retries = 1;  // network errors only

  // "address:port" every connection is routed to, whatever the URL says.
  // Used to point a scan at a local fixture corpus.
  std::optional<std::string> connect_to;

  // When set, hostnames are resolved through this resolver first; names it
  // reports as nonexistent fail with DnsFailure without touching the network.
  std::shared_ptr<const Resolver> resolver;

  // Throws ConfigError.
  void validate() const;
};

struct HttpRequest {
  AbsoluteUrl url;
  bool follow_redirects = false;
  bool want_body = false;
  std::size_t max_body_bytes = 8 * 1024 * 1024;
  // Address to connect to instead of resolving url.host.
  std::optional<std::string> address;
};

struct HttpReply {
  OutcomeKind kind = OutcomeKind::ConnectFailure;
  std::optional<int> status;
  std::optional<std::string> content_type;
  std::string body;
  std::optional<std::string> final_url;
};

class HttpTransport {
public:
  virtual ~HttpTransport() = default;
  virtual HttpReply get(const HttpRequest& request, const ScanConfig& config) const = 0;
};

// libcurl-backed transport. One easy handle per request, no connection reuse.
class CurlTransport final : public HttpTransport {
public:
  CurlTransport();
  HttpReply get(const HttpRequest& request, const ScanConfig& config) const override;
};

const HttpTransport& default_transport();

// One GET without following redirects; the body is discarded once headers
// arrive. Network errors are retried up to config.retries times.
ProbeOutcome probe(const AbsoluteUrl& url, const ScanConfig& config,
                   const HttpTransport& transport = default_transport());

// Probes every ref with bounded global and per-host concurrency. Identical
// URLs are fetched once and share the outcome. Output order follows `refs`.
std::vector<ProbeResult> probe_all(std::span<const ResourceRef> refs, const ScanConfig& config,
                                   const HttpTransport& transport = default_transport());

struct PageFetch {
  ProbeOutcome outcome;
  std::string body;
  AbsoluteUrl final_url;

  bool ok() const {
    return outcome.kind == OutcomeKind::HttpResponse && outcome.status && *outcome.status >= 200 &&
           *outcome.status < 300;
  }
};

// Homepage fetch: follows redirects and keeps the body.
PageFetch fetch_page(const AbsoluteUrl& url, const ScanConfig& config,
                     const HttpTransport& transport = default_transport());

// Runs task(i) for every i in [0, hosts.size()) on up to `concurrency`
// threads, never more than `per_host` at once for the same hosts[i].
// The first exception thrown by a task is rethrown after all workers stop.
void run_host_limited(std::span<const std::string> hosts, std::size_t concurrency, std::size_t per_host,
                      const std::function<void(std::size_t)>& task);

}  // namespace linkaudit
