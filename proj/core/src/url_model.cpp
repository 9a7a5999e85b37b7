#include "linkaudit/url_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <vector>

#include "linkaudit/errors.hpp"
#include "string_util.hpp"

namespace linkaudit {
namespace {

struct SplitRaw {
  std::string text;
  bool had_fragment_only = false;
};

// Browser-style input cleanup: trim, drop embedded tab/CR/LF, backslashes
// become slashes, fragment removed.
std::string clean_input(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : detail::trim(raw)) {
    if (c == '\t' || c == '\n' || c == '\r') continue;
    out.push_back(c == '\\' ? '/' : c);
  }
  if (auto hash = out.find('#'); hash != std::string::npos) out.erase(hash);
  return out;
}

// Returns the scheme (lowercased) if `s` starts with "scheme:".
std::optional<std::string> leading_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return std::nullopt;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == ':') return detail::to_lower(s.substr(0, i));
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') return std::nullopt;
  }
  return std::nullopt;
}

bool is_default_port(std::string_view scheme, int port) {
  return (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
}

std::string percent_encode_unsafe(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c <= 0x20 || c >= 0x7F || c == '"' || c == '<' || c == '>' || c == '`') {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

// RFC 3986 section 5.2.4.
std::string remove_dot_segments(std::string_view input) {
  std::string in(input);
  std::string out;
  while (!in.empty()) {
    if (in.starts_with("../")) {
      in.erase(0, 3);
    } else if (in.starts_with("./")) {
      in.erase(0, 2);
    } else if (in.starts_with("/./")) {
      in.erase(0, 2);
    } else if (in == "/.") {
      in = "/";
    } else if (in.starts_with("/../") || in == "/..") {
      in = in == "/.." ? std::string("/") : in.substr(3);
      if (auto slash = out.rfind('/'); slash != std::string::npos) {
        out.erase(slash);
      } else {
        out.clear();
      }
    } else if (in == "." || in == "..") {
      in.clear();
    } else {
      std::size_t start = in[0] == '/' ? 1 : 0;
      std::size_t next = in.find('/', start);
      if (next == std::string::npos) next = in.size();
      out.append(in, 0, next);
      in.erase(0, next);
    }
  }
  return out;
}

bool valid_host_char(unsigned char c) {
  return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c >= 0x80;
}

void set_path_and_query(AbsoluteUrl& url, std::string_view rest) {
  std::string_view path = rest;
  url.query.reset();
  if (auto q = rest.find('?'); q != std::string_view::npos) {
    path = rest.substr(0, q);
    url.query = percent_encode_unsafe(rest.substr(q + 1));
  }
  std::string cleaned = remove_dot_segments(path);
  if (cleaned.empty() || cleaned[0] != '/') cleaned.insert(cleaned.begin(), '/');
  url.path = percent_encode_unsafe(cleaned);
}

AbsoluteUrl parse_authority_form(std::string scheme, std::string_view after_slashes,
                                 std::string_view original) {
  AbsoluteUrl url;
  url.scheme = std::move(scheme);

  const std::size_t end = after_slashes.find_first_of("/?");
  std::string_view authority = after_slashes.substr(0, end);
  std::string_view rest = end == std::string_view::npos ? std::string_view{} : after_slashes.substr(end);

  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);

  std::string_view host_part = authority;
  std::string_view port_part;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) throw UnparsableUrl(std::string(original));
    host_part = authority.substr(0, close + 1);
    std::string_view tail = authority.substr(close + 1);
    if (!tail.empty()) {
      if (tail.front() != ':') throw UnparsableUrl(std::string(original));
      port_part = tail.substr(1);
    }
  } else if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host_part = authority.substr(0, colon);
    port_part = authority.substr(colon + 1);
  }

  if (host_part.empty()) throw UnparsableUrl(std::string(original));
  url.host = detail::to_lower(host_part);
  if (url.host.front() != '[') {
    for (unsigned char c : url.host) {
      if (!valid_host_char(c)) throw UnparsableUrl(std::string(original));
    }
  }

  if (!port_part.empty()) {
    int port = 0;
    auto [ptr, ec] = std::from_chars(port_part.data(), port_part.data() + port_part.size(), port);
    if (ec != std::errc{} || ptr != port_part.data() + port_part.size() || port < 0 || port > 65535) {
      throw UnparsableUrl(std::string(original));
    }
    if (!is_default_port(url.scheme, port)) url.port = port;
  }

  set_path_and_query(url, rest);
  return url;
}

}  // namespace

std::string AbsoluteUrl::str() const {
  std::string out = scheme + "://" + host;
  if (port) out += ":" + std::to_string(*port);
  out += path;
  if (query) out += "?" + *query;
  return out;
}

AbsoluteUrl parse_absolute_url(std::string_view raw) {
  const std::string s = clean_input(raw);
  auto scheme = leading_scheme(s);
  if (!scheme) throw UnparsableUrl(std::string(raw));
  if (*scheme != "http" && *scheme != "https") throw UnsupportedScheme(*scheme);
  std::string_view rest = std::string_view(s).substr(scheme->size() + 1);
  if (!rest.starts_with("//")) throw UnparsableUrl(std::string(raw));
  return parse_authority_form(*scheme, rest.substr(2), raw);
}

AbsoluteUrl normalize_url(std::string_view raw, const AbsoluteUrl& base) {
  if (detail::trim(raw).empty()) throw UnparsableUrl("empty reference");
  const std::string s = clean_input(raw);
  if (s.empty()) return base;  // fragment-only reference

  if (auto scheme = leading_scheme(s)) {
    if (*scheme != "http" && *scheme != "https") throw UnsupportedScheme(*scheme);
    return parse_absolute_url(s);
  }
  if (s.starts_with("//")) {
    return parse_authority_form(base.scheme, std::string_view(s).substr(2), raw);
  }

  AbsoluteUrl url = base;
  if (s.front() == '/') {
    set_path_and_query(url, s);
  } else if (s.front() == '?') {
    url.query = percent_encode_unsafe(std::string_view(s).substr(1));
  } else {
    std::string merged = base.path.substr(0, base.path.rfind('/') + 1);
    merged += s;
    set_path_and_query(url, merged);
  }
  return url;
}

bool is_ip_literal(std::string_view host) {
  if (host.empty()) return false;
  if (host.front() == '[') return true;
  int parts = 0;
  std::size_t pos = 0;
  while (pos <= host.size()) {
    std::size_t dot = host.find('.', pos);
    if (dot == std::string_view::npos) dot = host.size();
    std::string_view part = host.substr(pos, dot - pos);
    if (part.empty() || part.size() > 3) return false;
    int value = 0;
    for (char c : part) {
      if (c < '0' || c > '9') return false;
      value = value * 10 + (c - '0');
    }
    if (value > 255) return false;
    ++parts;
    pos = dot + 1;
    if (dot == host.size()) break;
  }
  return parts == 4;
}

void SuffixRules::add_rule(std::string_view rule) {
  rule = detail::trim(rule);
  if (rule.empty() || rule.starts_with("//") || rule.starts_with("#")) return;
  std::string r = detail::to_lower(rule);
  if (r.starts_with("!")) {
    exceptions_.insert(r.substr(1));
  } else if (r.starts_with("*.")) {
    wildcards_.insert(r.substr(2));
  } else {
    rules_.insert(std::move(r));
  }
}

void SuffixRules::merge(const SuffixRules& other) {
  rules_.insert(other.rules_.begin(), other.rules_.end());
  wildcards_.insert(other.wildcards_.begin(), other.wildcards_.end());
  exceptions_.insert(other.exceptions_.begin(), other.exceptions_.end());
}

SuffixRules SuffixRules::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open suffix rules file " + path.string());
  SuffixRules rules;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    rules.add_rule(line);
  }
  return rules;
}

std::size_t SuffixRules::public_suffix_labels(std::string_view host) const {
  if (host.ends_with('.')) host.remove_suffix(1);
  const auto labels = detail::split(host, '.');
  const std::size_t n = labels.size();

  // candidate(i) = labels[i..n) joined
  auto candidate = [&](std::size_t i) {
    std::string out;
    for (std::size_t j = i; j < n; ++j) {
      if (j > i) out.push_back('.');
      out.append(labels[j]);
    }
    return out;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (exceptions_.contains(candidate(i))) return n - i - 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string c = candidate(i);
    if (rules_.contains(c)) return n - i;
    if (i + 1 < n && wildcards_.contains(candidate(i + 1))) return n - i;
  }
  return 0;
}

bool SuffixRules::is_public_suffix(std::string_view name) const {
  if (name.empty()) return false;
  return public_suffix_labels(name) == detail::split(name, '.').size();
}

RegistrableDomain registrable_domain(std::string_view host, const SuffixRules& rules) {
  if (host.empty()) throw DomainError("registrable_domain: empty host");
  if (is_ip_literal(host)) return {std::string(host)};

  std::string_view lookup = host;
  const bool trailing_dot = lookup.ends_with('.') && lookup.size() > 1;
  if (trailing_dot) lookup.remove_suffix(1);

  const auto labels = detail::split(lookup, '.');
  const std::size_t n = labels.size();
  std::size_t suffix = rules.public_suffix_labels(lookup);
  const std::size_t keep = suffix == 0 ? std::min<std::size_t>(2, n) : std::min(suffix + 1, n);

  std::size_t offset = lookup.size();
  for (std::size_t i = 0; i < keep; ++i) {
    offset -= labels[n - 1 - i].size();
    if (i + 1 < keep) offset -= 1;
  }
  return {std::string(host.substr(offset))};
}

std::string_view to_string(Scope scope) {
  return scope == Scope::Internal ? "internal" : "external";
}

std::optional<Scope> scope_from_string(std::string_view text) {
  if (text == "internal") return Scope::Internal;
  if (text == "external") return Scope::External;
  return std::nullopt;
}

Scope classify_scope(const AbsoluteUrl& resource, const AbsoluteUrl& origin, const SuffixRules& rules) {
  return registrable_domain(resource.host, rules) == registrable_domain(origin.host, rules)
             ? Scope::Internal
             : Scope::External;
}

}  // namespace linkaudit
