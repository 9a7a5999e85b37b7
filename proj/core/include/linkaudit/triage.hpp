#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linkaudit/dns.hpp"
#include "linkaudit/prober.hpp"
#include "linkaudit/url_model.hpp"

namespace linkaudit {

enum class TriageCause {
  ExpiredDomainCandidate,
  DanglingSubdomainCandidate,
  LibraryGoneCandidate,
  MalformedUrlTypo,
  ServerError,
  ClientError,
  NetworkTransient,
  Unclassified,
};

std::string_view to_string(TriageCause cause);
std::optional<TriageCause> triage_cause_from_string(std::string_view text);

enum class TypoKind { BadDot, MissingSeparator, SuspiciousHostToken };

std::string_view to_string(TypoKind kind);
std::optional<TypoKind> typo_kind_from_string(std::string_view text);

// [begin, end) character range in the raw reference text.
struct TypoSignal {
  TypoKind kind = TypoKind::BadDot;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const TypoSignal&, const TypoSignal&) = default;
};

enum class DnsState { Resolves, NxDomain, CnameToNxDomain, Unknown };

std::string_view to_string(DnsState state);
std::optional<DnsState> dns_state_from_string(std::string_view text);

struct TriageVerdict {
  ResourceRef ref;
  TriageCause cause = TriageCause::Unclassified;
  std::vector<TypoSignal> signals;
  DnsState dns_state = DnsState::Unknown;
};

// Lexical checks on the host portion of a raw reference: doubled/edge dots,
// a public suffix glued to the following path token, and host labels that
// are really file extensions. Relative references yield no signals.
std::vector<TypoSignal> detect_typos(std::string_view raw, const SuffixRules& rules = SuffixRules::bundled());

DnsState resolve_dns_state(std::string_view host, const Resolver& resolver,
                           const SuffixRules& rules = SuffixRules::bundled());

// True for paths that look like a versioned package or a CDN library layout.
bool looks_like_library_path(std::string_view path);

// Cause by strict precedence: typo > expired domain > dangling CNAME >
// library gone > other 4xx > 5xx > transient network error > unclassified.
// Throws NotBroken for a result that is not broken.
TriageVerdict triage_broken(const ProbeResult& result, DnsState dns_state, std::vector<TypoSignal> signals);

}  // namespace linkaudit
