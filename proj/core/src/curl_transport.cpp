#include <curl/curl.h>

#include <memory>
#include <mutex>

#include "linkaudit/prober.hpp"
#include "string_util.hpp"

namespace linkaudit {
namespace {

struct Exchange {
  bool want_body = false;
  std::size_t max_body = 0;
  bool aborted_by_us = false;
  std::string body;
  std::optional<std::string> content_type;
};

std::size_t on_body(char* data, std::size_t size, std::size_t nmemb, void* user) {
  auto* ex = static_cast<Exchange*>(user);
  const std::size_t n = size * nmemb;
  if (!ex->want_body) {
    ex->aborted_by_us = true;
    return 0;
  }
  const std::size_t room = ex->max_body > ex->body.size() ? ex->max_body - ex->body.size() : 0;
  ex->body.append(data, std::min(n, room));
  if (n > room) {
    ex->aborted_by_us = true;
    return 0;
  }
  return n;
}

std::size_t on_header(char* data, std::size_t size, std::size_t nmemb, void* user) {
  auto* ex = static_cast<Exchange*>(user);
  const std::size_t n = size * nmemb;
  std::string_view line(data, n);
  if (line.starts_with("HTTP/")) {
    ex->content_type.reset();  // new response in a redirect chain
  } else if (auto colon = line.find(':'); colon != std::string_view::npos &&
                                          detail::iequals(line.substr(0, colon), "content-type")) {
    ex->content_type = std::string(detail::trim(line.substr(colon + 1)));
  }
  return n;
}

OutcomeKind map_curl_error(CURLcode code) {
  switch (code) {
    case CURLE_COULDNT_RESOLVE_HOST:
    case CURLE_COULDNT_RESOLVE_PROXY:
    case CURLE_URL_MALFORMAT:
      return OutcomeKind::DnsFailure;
    case CURLE_OPERATION_TIMEDOUT:
      return OutcomeKind::Timeout;
    case CURLE_SSL_CONNECT_ERROR:
    case CURLE_PEER_FAILED_VERIFICATION:
    case CURLE_SSL_CERTPROBLEM:
    case CURLE_SSL_CIPHER:
    case CURLE_SSL_CACERT_BADFILE:
    case CURLE_SSL_ENGINE_NOTFOUND:
    case CURLE_SSL_ENGINE_SETFAILED:
    case CURLE_SSL_ENGINE_INITFAILED:
    case CURLE_SSL_SHUTDOWN_FAILED:
    case CURLE_SSL_CRL_BADFILE:
    case CURLE_SSL_ISSUER_ERROR:
    case CURLE_SSL_PINNEDPUBKEYNOTMATCH:
    case CURLE_SSL_INVALIDCERTSTATUS:
    case CURLE_USE_SSL_FAILED:
      return OutcomeKind::TlsFailure;
    default:
      return OutcomeKind::ConnectFailure;
  }
}

struct SlistDeleter {
  void operator()(curl_slist* list) const { curl_slist_free_all(list); }
};
struct EasyDeleter {
  void operator()(CURL* handle) const { curl_easy_cleanup(handle); }
};

}  // namespace

CurlTransport::CurlTransport() {
  static std::once_flag once;
  std::call_once(once, [] { curl_global_init(CURL_GLOBAL_ALL); });
}

HttpReply CurlTransport::get(const HttpRequest& request, const ScanConfig& config) const {
  std::unique_ptr<CURL, EasyDeleter> handle(curl_easy_init());
  if (!handle) return HttpReply{OutcomeKind::ConnectFailure, {}, {}, {}, {}};
  CURL* h = handle.get();

  Exchange ex;
  ex.want_body = request.want_body;
  ex.max_body = request.max_body_bytes;

  const std::string url = request.url.str();
  const long timeout_ms = static_cast<long>(config.timeout.count());
  curl_easy_setopt(h, CURLOPT_URL, url.c_str());
  curl_easy_setopt(h, CURLOPT_HTTPGET, 1L);
  curl_easy_setopt(h, CURLOPT_USERAGENT, config.user_agent.c_str());
  curl_easy_setopt(h, CURLOPT_NOSIGNAL, 1L);
  curl_easy_setopt(h, CURLOPT_TIMEOUT_MS, timeout_ms);
  curl_easy_setopt(h, CURLOPT_CONNECTTIMEOUT_MS, timeout_ms);
  curl_easy_setopt(h, CURLOPT_FORBID_REUSE, 1L);
  curl_easy_setopt(h, CURLOPT_FRESH_CONNECT, 1L);
  curl_easy_setopt(h, CURLOPT_PROTOCOLS, static_cast<long>(CURLPROTO_HTTP | CURLPROTO_HTTPS));
  curl_easy_setopt(h, CURLOPT_REDIR_PROTOCOLS, static_cast<long>(CURLPROTO_HTTP | CURLPROTO_HTTPS));
  curl_easy_setopt(h, CURLOPT_FOLLOWLOCATION, request.follow_redirects ? 1L : 0L);
  curl_easy_setopt(h, CURLOPT_MAXREDIRS, 5L);
  curl_easy_setopt(h, CURLOPT_ACCEPT_ENCODING, "");
  curl_easy_setopt(h, CURLOPT_WRITEFUNCTION, on_body);
  curl_easy_setopt(h, CURLOPT_WRITEDATA, &ex);
  curl_easy_setopt(h, CURLOPT_HEADERFUNCTION, on_header);
  curl_easy_setopt(h, CURLOPT_HEADERDATA, &ex);

  std::unique_ptr<curl_slist, SlistDeleter> connect_to;
  if (config.connect_to) {
    connect_to.reset(curl_slist_append(nullptr, ("::" + *config.connect_to).c_str()));
  } else if (request.address) {
    connect_to.reset(curl_slist_append(nullptr, (request.url.host + "::" + *request.address + ":").c_str()));
  }
  if (connect_to) curl_easy_setopt(h, CURLOPT_CONNECT_TO, connect_to.get());

  const CURLcode rc = curl_easy_perform(h);

  HttpReply reply;
  long status = 0;
  curl_easy_getinfo(h, CURLINFO_RESPONSE_CODE, &status);
  const bool got_response = rc == CURLE_OK || (rc == CURLE_WRITE_ERROR && ex.aborted_by_us);
  if (got_response && status > 0) {
    reply.kind = OutcomeKind::HttpResponse;
    reply.status = static_cast<int>(status);
    reply.content_type = ex.content_type;
    reply.body = std::move(ex.body);
    char* effective = nullptr;
    if (curl_easy_getinfo(h, CURLINFO_EFFECTIVE_URL, &effective) == CURLE_OK && effective) {
      reply.final_url = effective;
    }
  } else {
    reply.kind = got_response ? OutcomeKind::ConnectFailure : map_curl_error(rc);
  }
  return reply;
}

}  // namespace linkaudit
