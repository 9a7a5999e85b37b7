#include "linkaudit/html_extractor.hpp"

#include <fstream>
#include <set>
#include <utility>

#include <json.hpp>

#include "linkaudit/errors.hpp"
#include "string_util.hpp"

namespace linkaudit {
namespace {

using detail::iequals;
using detail::to_lower;

struct Attribute {
  std::string name;  // lowercase
  std::string value;
};

struct Tag {
  std::string name;  // lowercase
  std::vector<Attribute> attributes;

  const std::string* attr(std::string_view key) const {
    for (const auto& a : attributes) {
      if (a.name == key) return &a.value;
    }
    return nullptr;
  }
};

std::string decode_entities(std::string_view s) {
  if (s.find('&') == std::string_view::npos) return std::string(s);
  static const std::pair<std::string_view, std::string_view> kNamed[] = {
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const std::size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    std::string_view entity = s.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (entity.size() > 1 && entity[0] == '#') {
      unsigned long code = 0;
      try {
        code = (entity[1] == 'x' || entity[1] == 'X')
                   ? std::stoul(std::string(entity.substr(2)), nullptr, 16)
                   : std::stoul(std::string(entity.substr(1)), nullptr, 10);
        if (code > 0 && code < 0x80) {
          out.push_back(static_cast<char>(code));
          decoded = true;
        }
      } catch (const std::exception&) {
      }
    } else {
      for (const auto& [name, text] : kNamed) {
        if (entity == name) {
          out.append(text);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi;
    } else {
      out.push_back('&');
    }
  }
  return out;
}

bool is_tag_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Minimal forgiving tokenizer: yields start and end tags, skips comments,
// doctype and the bodies of raw-text elements.
class Tokenizer {
public:
  explicit Tokenizer(std::string_view html) : html_(html) {}

  // Returns false at end of input. `closing` is set for end tags.
  bool next(Tag& tag, bool& closing) {
    while (pos_ < html_.size()) {
      const std::size_t lt = html_.find('<', pos_);
      if (lt == std::string_view::npos || lt + 1 >= html_.size()) {
        pos_ = html_.size();
        return false;
      }
      pos_ = lt;
      if (html_.substr(pos_, 4) == "<!--") {
        const std::size_t end = html_.find("-->", pos_ + 4);
        pos_ = end == std::string_view::npos ? html_.size() : end + 3;
        continue;
      }
      const char c1 = html_[pos_ + 1];
      if (c1 == '!' || c1 == '?') {
        skip_past('>');
        continue;
      }
      if (c1 == '/') {
        if (pos_ + 2 < html_.size() && is_tag_name_start(html_[pos_ + 2])) {
          pos_ += 2;
          tag = Tag{read_name(), {}};
          closing = true;
          skip_past('>');
          return true;
        }
        skip_past('>');
        continue;
      }
      if (!is_tag_name_start(c1)) {
        ++pos_;
        continue;
      }
      ++pos_;
      tag = Tag{read_name(), {}};
      closing = false;
      read_attributes(tag);
      if (tag.name == "script" || tag.name == "style" || tag.name == "textarea" ||
          tag.name == "title" || tag.name == "xmp") {
        skip_raw_text(tag.name);
      }
      return true;
    }
    return false;
  }

private:
  void skip_past(char c) {
    const std::size_t end = html_.find(c, pos_);
    pos_ = end == std::string_view::npos ? html_.size() : end + 1;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < html_.size()) {
      const char c = html_[pos_];
      if (detail::is_space(c) || c == '>' || c == '/') break;
      ++pos_;
    }
    return to_lower(html_.substr(start, pos_ - start));
  }

  void read_attributes(Tag& tag) {
    while (pos_ < html_.size()) {
      while (pos_ < html_.size() && (detail::is_space(html_[pos_]) || html_[pos_] == '/')) ++pos_;
      if (pos_ >= html_.size()) return;
      if (html_[pos_] == '>') {
        ++pos_;
        return;
      }
      const std::size_t name_start = pos_;
      while (pos_ < html_.size()) {
        const char c = html_[pos_];
        if (detail::is_space(c) || c == '=' || c == '>' || (c == '/' && pos_ > name_start)) break;
        ++pos_;
      }
      Attribute attr{to_lower(html_.substr(name_start, pos_ - name_start)), {}};
      while (pos_ < html_.size() && detail::is_space(html_[pos_])) ++pos_;
      if (pos_ < html_.size() && html_[pos_] == '=') {
        ++pos_;
        while (pos_ < html_.size() && detail::is_space(html_[pos_])) ++pos_;
        if (pos_ < html_.size() && (html_[pos_] == '"' || html_[pos_] == '\'')) {
          const char quote = html_[pos_++];
          std::size_t end = html_.find(quote, pos_);
          if (end == std::string_view::npos) {
            // Unterminated quote: salvage up to the end of the tag.
            end = html_.find('>', pos_);
            if (end == std::string_view::npos) end = html_.size();
            attr.value = decode_entities(html_.substr(pos_, end - pos_));
            pos_ = end;
          } else {
            attr.value = decode_entities(html_.substr(pos_, end - pos_));
            pos_ = end + 1;
          }
        } else {
          const std::size_t start = pos_;
          while (pos_ < html_.size() && !detail::is_space(html_[pos_]) && html_[pos_] != '>') ++pos_;
          attr.value = decode_entities(html_.substr(start, pos_ - start));
        }
      }
      if (!attr.name.empty()) tag.attributes.push_back(std::move(attr));
    }
  }

  void skip_raw_text(std::string_view name) {
    while (pos_ < html_.size()) {
      const std::size_t lt = html_.find("</", pos_);
      if (lt == std::string_view::npos) {
        pos_ = html_.size();
        return;
      }
      if (lt + 2 + name.size() <= html_.size() && iequals(html_.substr(lt + 2, name.size()), name)) {
        pos_ = lt;
        return;
      }
      pos_ = lt + 2;
    }
  }

  std::string_view html_;
  std::size_t pos_ = 0;
};

// srcset candidate URLs, in order.
std::vector<std::string> parse_srcset(std::string_view srcset) {
  std::vector<std::string> urls;
  std::size_t i = 0;
  while (i < srcset.size()) {
    while (i < srcset.size() && (detail::is_space(srcset[i]) || srcset[i] == ',')) ++i;
    if (i >= srcset.size()) break;
    const std::size_t start = i;
    while (i < srcset.size() && !detail::is_space(srcset[i])) ++i;
    std::string_view url = srcset.substr(start, i - start);
    bool descriptors = true;
    if (url.ends_with(',')) {
      while (url.ends_with(',')) url.remove_suffix(1);
      descriptors = false;
    }
    if (!url.empty()) urls.emplace_back(url);
    if (descriptors) {
      int depth = 0;
      while (i < srcset.size()) {
        const char c = srcset[i];
        if (c == '(') ++depth;
        if (c == ')' && depth > 0) --depth;
        if (c == ',' && depth == 0) break;
        ++i;
      }
    }
  }
  return urls;
}

bool has_rel_token(const Tag& tag, std::string_view token) {
  const std::string* rel = tag.attr("rel");
  if (!rel) return false;
  for (auto part : detail::split(to_lower(*rel), ' ')) {
    if (detail::trim(part) == token) return true;
  }
  return false;
}

bool is_fragment_only(std::string_view raw) { return detail::trim(raw).starts_with('#'); }

class Collector {
public:
  Collector(const AbsoluteUrl& origin, const SuffixRules& rules)
      : origin_(origin), base_(origin), rules_(rules) {}

  void add(std::string_view raw, ResourceCategory category) {
    const auto trimmed = detail::trim(raw);
    if (trimmed.empty() || is_fragment_only(trimmed)) return;
    try {
      AbsoluteUrl url = normalize_url(trimmed, base_);
      if (!seen_.emplace(url.str(), category).second) return;
      ResourceRef ref;
      ref.origin_page = origin_;
      ref.scope = classify_scope(url, origin_, rules_);
      ref.url = std::move(url);
      ref.category = category;
      ref.extraction_origin = ExtractionOrigin::StaticHtml;
      ref.raw_text = std::string(trimmed);
      out_.refs.push_back(std::move(ref));
    } catch (const UnsupportedScheme&) {
      ++out_.unsupported_scheme;
    } catch (const UnparsableUrl&) {
      out_.unparsable.push_back({std::string(trimmed), category});
    }
  }

  void set_base(std::string_view raw) {
    if (base_set_) return;
    try {
      base_ = normalize_url(raw, origin_);
      base_set_ = true;
    } catch (const Error&) {
    }
  }

  Extraction take() { return std::move(out_); }

private:
  AbsoluteUrl origin_;
  AbsoluteUrl base_;
  bool base_set_ = false;
  const SuffixRules& rules_;
  std::set<std::pair<std::string, ResourceCategory>> seen_;
  Extraction out_;
};

}  // namespace

std::string_view to_string(ResourceCategory category) {
  switch (category) {
    case ResourceCategory::Image: return "Image";
    case ResourceCategory::Script: return "Script";
    case ResourceCategory::Stylesheet: return "Stylesheet";
    case ResourceCategory::Font: return "Font";
    case ResourceCategory::Xhr: return "Xhr";
    case ResourceCategory::Fetch: return "Fetch";
    case ResourceCategory::Media: return "Media";
    case ResourceCategory::Document: return "Document";
    case ResourceCategory::Other: return "Other";
  }
  return "Other";
}

std::optional<ResourceCategory> category_from_string(std::string_view text) {
  for (auto c : kAllCategories) {
    if (iequals(to_string(c), text)) return c;
  }
  return std::nullopt;
}

std::string_view to_string(ExtractionOrigin origin) {
  return origin == ExtractionOrigin::StaticHtml ? "static_html" : "dynamic_log";
}

std::optional<ExtractionOrigin> extraction_origin_from_string(std::string_view text) {
  if (text == "static_html") return ExtractionOrigin::StaticHtml;
  if (text == "dynamic_log") return ExtractionOrigin::DynamicLog;
  return std::nullopt;
}

Extraction extract_refs(std::string_view html, const AbsoluteUrl& origin, const SuffixRules& rules) {
  Collector collector(origin, rules);
  Tokenizer tokenizer(html);
  int picture_depth = 0;

  Tag tag;
  bool closing = false;
  while (tokenizer.next(tag, closing)) {
    if (closing) {
      if (tag.name == "picture" && picture_depth > 0) --picture_depth;
      continue;
    }
    const std::string& name = tag.name;
    if (name == "picture") {
      ++picture_depth;
      continue;
    }
    if (name == "base") {
      if (const auto* href = tag.attr("href")) collector.set_base(*href);
      continue;
    }

    auto add_attr = [&](std::string_view attr, ResourceCategory category) {
      if (const auto* v = tag.attr(attr)) collector.add(*v, category);
    };
    auto add_srcset = [&](ResourceCategory category) {
      if (const auto* v = tag.attr("srcset")) {
        for (const auto& url : parse_srcset(*v)) collector.add(url, category);
      }
    };

    if (name == "img") {
      add_attr("src", ResourceCategory::Image);
      add_srcset(ResourceCategory::Image);
    } else if (name == "source") {
      const auto category = picture_depth > 0 ? ResourceCategory::Image : ResourceCategory::Media;
      add_attr("src", category);
      add_srcset(category);
    } else if (name == "script") {
      add_attr("src", ResourceCategory::Script);
    } else if (name == "link") {
      if (has_rel_token(tag, "dns-prefetch") || has_rel_token(tag, "preconnect")) continue;
      ResourceCategory category = ResourceCategory::Other;
      if (has_rel_token(tag, "stylesheet")) {
        category = ResourceCategory::Stylesheet;
      } else if (has_rel_token(tag, "preload")) {
        const auto* as = tag.attr("as");
        if (as && iequals(detail::trim(*as), "font")) category = ResourceCategory::Font;
      }
      add_attr("href", category);
    } else if (name == "audio" || name == "video") {
      add_attr("src", ResourceCategory::Media);
      add_attr("poster", ResourceCategory::Other);
    } else if (name == "iframe" || name == "frame") {
      add_attr("src", ResourceCategory::Document);
    } else if (name == "object") {
      add_attr("data", ResourceCategory::Other);
    } else {
      add_attr("src", ResourceCategory::Other);
      add_attr("href", ResourceCategory::Other);
    }
  }
  return collector.take();
}

FetchLogIngest ingest_fetch_log(const std::vector<std::string>& log_lines, const AbsoluteUrl& origin,
                                const SuffixRules& rules) {
  FetchLogIngest out;
  const auto site = registrable_domain(origin.host, rules);
  std::set<std::pair<std::string, ResourceCategory>> seen;

  for (const auto& line : log_lines) {
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("url") || !j["url"].is_string() || !j.contains("initiator") ||
          !j["initiator"].is_string()) {
        ++out.malformed;
        continue;
      }
      const std::string initiator = to_lower(j["initiator"].get<std::string>());
      ResourceCategory category;
      if (initiator == "xhr") {
        category = ResourceCategory::Xhr;
      } else if (initiator == "fetch") {
        category = ResourceCategory::Fetch;
      } else {
        ++out.malformed;
        continue;
      }
      if (j.contains("page") && j["page"].is_string()) {
        const auto page = parse_absolute_url(j["page"].get<std::string>());
        if (!(registrable_domain(page.host, rules) == site)) continue;
      }
      const std::string raw = j["url"].get<std::string>();
      if (detail::trim(raw).empty()) {
        ++out.malformed;
        continue;
      }
      AbsoluteUrl url = normalize_url(raw, origin);
      if (!seen.emplace(url.str(), category).second) continue;
      ResourceRef ref;
      ref.origin_page = origin;
      ref.scope = classify_scope(url, origin, rules);
      ref.url = std::move(url);
      ref.category = category;
      ref.extraction_origin = ExtractionOrigin::DynamicLog;
      ref.raw_text = std::string(detail::trim(raw));
      out.refs.push_back(std::move(ref));
    } catch (const nlohmann::json::exception&) {
      ++out.malformed;
    } catch (const Error&) {
      ++out.malformed;
    }
  }
  return out;
}

FetchLog FetchLog::from_stream(std::istream& in, const SuffixRules& rules) {
  FetchLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.is_object() && j.contains("page") && j["page"].is_string()) {
        const auto page = parse_absolute_url(j["page"].get<std::string>());
        log.by_site_[registrable_domain(page.host, rules).value].push_back(line);
        continue;
      }
    } catch (const nlohmann::json::exception&) {
    } catch (const Error&) {
    }
    ++log.unattributed_;
  }
  return log;
}

FetchLog FetchLog::load(const std::filesystem::path& path, const SuffixRules& rules) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fetch log " + path.string());
  return from_stream(in, rules);
}

const std::vector<std::string>& FetchLog::lines_for(std::string_view registrable) const {
  static const std::vector<std::string> kEmpty;
  const auto it = by_site_.find(std::string(registrable));
  return it == by_site_.end() ? kEmpty : it->second;
}

ResourceCategory category_from_content_type(std::string_view content_type) {
  std::string_view media = content_type.substr(0, content_type.find(';'));
  const std::string type = to_lower(detail::trim(media));
  if (type.empty()) return ResourceCategory::Other;
  if (type.starts_with("image/")) return ResourceCategory::Image;
  if (type == "text/javascript" || type == "application/javascript" ||
      type == "application/x-javascript" || type == "text/ecmascript" ||
      type == "application/ecmascript") {
    return ResourceCategory::Script;
  }
  if (type == "text/css") return ResourceCategory::Stylesheet;
  if (type.starts_with("font/") || type.starts_with("application/font-") ||
      type.starts_with("application/x-font-") || type == "application/vnd.ms-fontobject") {
    return ResourceCategory::Font;
  }
  if (type.starts_with("audio/") || type.starts_with("video/")) return ResourceCategory::Media;
  if (type == "text/html") return ResourceCategory::Document;
  return ResourceCategory::Other;
}

}  // namespace linkaudit
