#include "linkaudit/triage.hpp"

#include <array>
#include <regex>

#include "linkaudit/errors.hpp"
#include "string_util.hpp"

namespace linkaudit {
namespace {

constexpr std::array<std::string_view, 11> kResourceExtensions = {
    "js", "css", "png", "jpg", "woff2", "jpeg", "gif", "svg", "woff", "ttf", "mjs"};

struct HostSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Locates the host inside a raw reference that carries an authority
// ("scheme://host..." or "//host...").
std::optional<HostSpan> find_host(std::string_view raw) {
  std::size_t start = 0;
  while (start < raw.size() && detail::is_space(raw[start])) ++start;
  std::size_t after_slashes = std::string_view::npos;
  const std::string_view s = raw.substr(start);
  if (s.starts_with("//") || s.starts_with("\\\\")) {
    after_slashes = start + 2;
  } else {
    std::size_t i = 0;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '+' || s[i] == '-' || s[i] == '.')) ++i;
    if (i > 0 && i + 2 < s.size() && s[i] == ':' && (s[i + 1] == '/' || s[i + 1] == '\\') &&
        (s[i + 2] == '/' || s[i + 2] == '\\')) {
      after_slashes = start + i + 3;
    }
  }
  if (after_slashes == std::string_view::npos) return std::nullopt;

  std::size_t end = raw.find_first_of("/\\?#", after_slashes);
  if (end == std::string_view::npos) end = raw.size();
  std::size_t begin = after_slashes;
  if (auto at = raw.substr(begin, end - begin).rfind('@'); at != std::string_view::npos) begin += at + 1;
  if (begin < raw.size() && raw[begin] == '[') return std::nullopt;  // IPv6 literal
  std::size_t colon = raw.substr(begin, end - begin).find(':');
  if (colon != std::string_view::npos) end = begin + colon;
  while (end > begin && detail::is_space(raw[end - 1])) --end;
  if (end <= begin) return std::nullopt;
  return HostSpan{begin, end};
}

bool is_alnum(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) != 0; });
}

}  // namespace

std::string_view to_string(TriageCause cause) {
  switch (cause) {
    case TriageCause::ExpiredDomainCandidate: return "ExpiredDomainCandidate";
    case TriageCause::DanglingSubdomainCandidate: return "DanglingSubdomainCandidate";
    case TriageCause::LibraryGoneCandidate: return "LibraryGoneCandidate";
    case TriageCause::MalformedUrlTypo: return "MalformedUrlTypo";
    case TriageCause::ServerError: return "ServerError";
    case TriageCause::ClientError: return "ClientError";
    case TriageCause::NetworkTransient: return "NetworkTransient";
    case TriageCause::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

std::optional<TriageCause> triage_cause_from_string(std::string_view text) {
  for (auto c : {TriageCause::ExpiredDomainCandidate, TriageCause::DanglingSubdomainCandidate,
                 TriageCause::LibraryGoneCandidate, TriageCause::MalformedUrlTypo, TriageCause::ServerError,
                 TriageCause::ClientError, TriageCause::NetworkTransient, TriageCause::Unclassified}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string_view to_string(TypoKind kind) {
  switch (kind) {
    case TypoKind::BadDot: return "BadDot";
    case TypoKind::MissingSeparator: return "MissingSeparator";
    case TypoKind::SuspiciousHostToken: return "SuspiciousHostToken";
  }
  return "BadDot";
}

std::optional<TypoKind> typo_kind_from_string(std::string_view text) {
  for (auto k : {TypoKind::BadDot, TypoKind::MissingSeparator, TypoKind::SuspiciousHostToken}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(DnsState state) {
  switch (state) {
    case DnsState::Resolves: return "Resolves";
    case DnsState::NxDomain: return "NxDomain";
    case DnsState::CnameToNxDomain: return "CnameToNxDomain";
    case DnsState::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<DnsState> dns_state_from_string(std::string_view text) {
  for (auto s : {DnsState::Resolves, DnsState::NxDomain, DnsState::CnameToNxDomain, DnsState::Unknown}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::vector<TypoSignal> detect_typos(std::string_view raw, const SuffixRules& rules) {
  std::vector<TypoSignal> signals;
  const auto span = find_host(raw);
  if (!span) return signals;
  const std::string_view host = raw.substr(span->begin, span->end - span->begin);

  // Dots: leading, trailing, and every run of two or more.
  if (host.front() == '.') signals.push_back({TypoKind::BadDot, span->begin, span->begin + 1});
  for (std::size_t i = 0; i + 1 < host.size();) {
    if (host[i] == '.' && host[i + 1] == '.') {
      std::size_t j = i;
      while (j < host.size() && host[j] == '.') ++j;
      signals.push_back({TypoKind::BadDot, span->begin + i, span->begin + j});
      i = j;
    } else {
      ++i;
    }
  }
  if (host.size() > 1 && host.back() == '.' && host[host.size() - 2] != '.') {
    signals.push_back({TypoKind::BadDot, span->end - 1, span->end});
  }

  std::string_view trimmed = host;
  while (trimmed.ends_with('.')) trimmed.remove_suffix(1);
  const std::size_t last_dot = trimmed.rfind('.');
  if (last_dot != std::string_view::npos && last_dot + 1 < trimmed.size()) {
    const std::string last = detail::to_lower(trimmed.substr(last_dot + 1));
    const std::size_t label_begin = span->begin + last_dot + 1;

    // A public suffix with the path glued on: "example.comassets".
    if (!rules.is_public_suffix(last)) {
      for (std::size_t len = last.size() - 1; len >= 2; --len) {
        if (rules.is_public_suffix(last.substr(0, len)) && is_alnum(last.substr(len))) {
          signals.push_back({TypoKind::MissingSeparator, label_begin + len, label_begin + last.size()});
          break;
        }
      }
    }

    // A file extension in the TLD position: "//jquery.min.js".
    if (std::find(kResourceExtensions.begin(), kResourceExtensions.end(), last) != kResourceExtensions.end()) {
      signals.push_back({TypoKind::SuspiciousHostToken, label_begin, label_begin + last.size()});
    }
  }
  return signals;
}

DnsState resolve_dns_state(std::string_view host, const Resolver& resolver, const SuffixRules& rules) {
  if (host.empty()) throw DomainError("resolve_dns_state: empty host");
  if (is_ip_literal(host)) return DnsState::Resolves;

  // Existence of the registrable domain above `name`.
  auto registrable_state = [&](std::string_view name, DnsState missing) {
    const auto reg = registrable_domain(name, rules);
    if (reg.value == name) return missing;
    const auto answer = resolver.lookup(reg.value);
    if (answer.kind == DnsAnswer::Kind::Failure) return DnsState::Unknown;
    return answer.name_exists() ? DnsState::Resolves : missing;
  };

  const DnsAnswer first = resolver.lookup(host);
  switch (first.kind) {
    case DnsAnswer::Kind::Address:
    case DnsAnswer::Kind::NoData:
      return DnsState::Resolves;
    case DnsAnswer::Kind::Failure:
      return DnsState::Unknown;
    case DnsAnswer::Kind::NxDomain:
      return registrable_state(host, DnsState::NxDomain);
    case DnsAnswer::Kind::Cname:
      break;
  }

  std::string target = first.target;
  for (int hop = 0; hop < 8; ++hop) {
    const DnsAnswer next = resolver.lookup(target);
    switch (next.kind) {
      case DnsAnswer::Kind::Cname:
        target = next.target;
        continue;
      case DnsAnswer::Kind::Address:
      case DnsAnswer::Kind::NoData:
        return DnsState::Resolves;
      case DnsAnswer::Kind::Failure:
        return DnsState::Unknown;
      case DnsAnswer::Kind::NxDomain: {
        const auto reg = registrable_domain(target, rules);
        if (reg.value == target) return DnsState::CnameToNxDomain;
        const auto answer = resolver.lookup(reg.value);
        if (answer.kind == DnsAnswer::Kind::Failure) return DnsState::Unknown;
        return answer.name_exists() ? DnsState::Resolves : DnsState::CnameToNxDomain;
      }
    }
  }
  return DnsState::Unknown;
}

bool looks_like_library_path(std::string_view path) {
  static const std::regex kVersionSegment(R"((^|/)v?\d+\.\d+(\.\d+)*([-+][0-9a-z.]+)?(/|$))", std::regex::icase);
  static const std::regex kAtVersion(R"(@v?\d+(\.\d+)*)", std::regex::icase);
  static const std::regex kVersionedFile(R"([-_.]v?\d+\.\d+\.\d+[^/]*$)", std::regex::icase);
  static constexpr std::array<std::string_view, 7> kCdnShapes = {
      "/ajax/libs/", "/npm/", "/gh/", "/libs/", "/node_modules/", "/wp-content/plugins/", "/bower_components/"};

  const std::string p = detail::to_lower(path);
  for (auto shape : kCdnShapes) {
    if (p.find(shape) != std::string::npos) return true;
  }
  return std::regex_search(p, kVersionSegment) || std::regex_search(p, kAtVersion) ||
         std::regex_search(p, kVersionedFile);
}

TriageVerdict triage_broken(const ProbeResult& result, DnsState dns_state, std::vector<TypoSignal> signals) {
  if (!result.broken) throw NotBroken(result.ref.url.str());

  const auto& outcome = result.outcome;
  const bool http = outcome.kind == OutcomeKind::HttpResponse && outcome.status.has_value();
  const int status = http ? *outcome.status : 0;

  TriageCause cause = TriageCause::Unclassified;
  if (!signals.empty()) {
    cause = TriageCause::MalformedUrlTypo;
  } else if (dns_state == DnsState::NxDomain) {
    cause = TriageCause::ExpiredDomainCandidate;
  } else if (dns_state == DnsState::CnameToNxDomain) {
    cause = TriageCause::DanglingSubdomainCandidate;
  } else if (http && (status == 404 || status == 410) && looks_like_library_path(outcome.url.path)) {
    cause = TriageCause::LibraryGoneCandidate;
  } else if (http && status >= 400 && status < 500) {
    cause = TriageCause::ClientError;
  } else if (http && status >= 500 && status < 600) {
    cause = TriageCause::ServerError;
  } else if ((outcome.kind == OutcomeKind::Timeout || outcome.kind == OutcomeKind::ConnectFailure ||
              outcome.kind == OutcomeKind::TlsFailure) &&
             dns_state == DnsState::Resolves) {
    cause = TriageCause::NetworkTransient;
  }

  return TriageVerdict{result.ref, cause, std::move(signals), dns_state};
}

}  // namespace linkaudit
