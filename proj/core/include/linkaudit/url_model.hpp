#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>

namespace linkaudit {

// An absolute http(s) URL in normalized form: lowercase scheme and host,
// default port elided, dot segments removed, fragment dropped.
struct AbsoluteUrl {
  std::string scheme;  // "http" or "https"
  std::string host;    // non-empty, lowercase
  std::optional<int> port;
  std::string path = "/";
  std::optional<std::string> query;

  std::string str() const;

  friend bool operator==(const AbsoluteUrl&, const AbsoluteUrl&) = default;
};

// Parses an absolute http(s) URL and normalizes it.
// Throws UnparsableUrl or UnsupportedScheme.
AbsoluteUrl parse_absolute_url(std::string_view raw);

// Resolves `raw` (absolute, scheme-relative, or relative) against `base`.
// Throws UnparsableUrl or UnsupportedScheme.
AbsoluteUrl normalize_url(std::string_view raw, const AbsoluteUrl& base);

bool is_ip_literal(std::string_view host);

// Public-suffix rules in the publicsuffix.org syntax: plain rules
// ("co.uk"), wildcards ("*.ck") and exceptions ("!www.ck").
class SuffixRules {
public:
  SuffixRules() = default;

  static const SuffixRules& bundled();

  // Rules file: one rule per line, '#' starts a comment.
  static SuffixRules load_file(const std::filesystem::path& path);

  void add_rule(std::string_view rule);
  void merge(const SuffixRules& other);

  // Length in labels of the longest matching public suffix, or 0 if no
  // rule matches.
  std::size_t public_suffix_labels(std::string_view host) const;

  bool is_public_suffix(std::string_view name) const;

  std::size_t size() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // stored without the "*."
  std::unordered_set<std::string> exceptions_;  // stored without the "!"
};

struct RegistrableDomain {
  std::string value;

  friend bool operator==(const RegistrableDomain&, const RegistrableDomain&) = default;
};

// eTLD+1 of `host` under `rules`; IP literals are returned verbatim. When no
// rule matches, the last two labels are used.
RegistrableDomain registrable_domain(std::string_view host,
                                     const SuffixRules& rules = SuffixRules::bundled());

enum class Scope { Internal, External };

std::string_view to_string(Scope scope);
std::optional<Scope> scope_from_string(std::string_view text);

Scope classify_scope(const AbsoluteUrl& resource, const AbsoluteUrl& origin,
                     const SuffixRules& rules = SuffixRules::bundled());

}  // namespace linkaudit
