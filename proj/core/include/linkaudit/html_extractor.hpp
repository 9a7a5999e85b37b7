#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "linkaudit/url_model.hpp"

namespace linkaudit {

enum class ResourceCategory { Image, Script, Stylesheet, Font, Xhr, Fetch, Media, Document, Other };

inline constexpr std::size_t kCategoryCount = 9;
inline constexpr std::array<ResourceCategory, kCategoryCount> kAllCategories = {
    ResourceCategory::Image, ResourceCategory::Script,   ResourceCategory::Stylesheet,
    ResourceCategory::Font,  ResourceCategory::Xhr,      ResourceCategory::Fetch,
    ResourceCategory::Media, ResourceCategory::Document, ResourceCategory::Other};

using CategoryCounts = std::array<std::int64_t, kCategoryCount>;

constexpr std::size_t index_of(ResourceCategory c) { return static_cast<std::size_t>(c); }

std::string_view to_string(ResourceCategory category);
std::optional<ResourceCategory> category_from_string(std::string_view text);

enum class ExtractionOrigin { StaticHtml, DynamicLog };

std::string_view to_string(ExtractionOrigin origin);
std::optional<ExtractionOrigin> extraction_origin_from_string(std::string_view text);

struct ResourceRef {
  AbsoluteUrl origin_page;
  AbsoluteUrl url;
  ResourceCategory category = ResourceCategory::Other;
  Scope scope = Scope::Internal;
  ExtractionOrigin extraction_origin = ExtractionOrigin::StaticHtml;
  std::string raw_text;

  friend bool operator==(const ResourceRef&, const ResourceRef&) = default;
};

// A reference whose raw text could not be turned into a URL. Kept so the
// typo heuristics can still look at it.
struct UnparsableRef {
  std::string raw_text;
  ResourceCategory category = ResourceCategory::Other;
};

struct Extraction {
  std::vector<ResourceRef> refs;
  std::vector<UnparsableRef> unparsable;
  std::size_t unsupported_scheme = 0;
};

// Static pass over homepage markup. Tolerates malformed HTML; references are
// deduplicated by (origin, url, category) and returned in document order.
// Never produces Xhr or Fetch refs.
Extraction extract_refs(std::string_view html, const AbsoluteUrl& origin,
                        const SuffixRules& rules = SuffixRules::bundled());

struct FetchLogIngest {
  std::vector<ResourceRef> refs;
  std::size_t malformed = 0;
};

// Dynamic fetch-log lines: {"page": ..., "url": ..., "initiator": "xhr"|"fetch"}.
// Lines whose page belongs to another site are ignored; lines without a page
// are attributed to `origin`.
FetchLogIngest ingest_fetch_log(const std::vector<std::string>& log_lines, const AbsoluteUrl& origin,
                                const SuffixRules& rules = SuffixRules::bundled());

// Fetch log indexed by the registrable domain of each line's page.
class FetchLog {
public:
  static FetchLog load(const std::filesystem::path& path,
                       const SuffixRules& rules = SuffixRules::bundled());
  static FetchLog from_stream(std::istream& in, const SuffixRules& rules = SuffixRules::bundled());

  const std::vector<std::string>& lines_for(std::string_view registrable) const;
  std::size_t unattributed() const { return unattributed_; }

private:
  std::unordered_map<std::string, std::vector<std::string>> by_site_;
  std::size_t unattributed_ = 0;
};

ResourceCategory category_from_content_type(std::string_view content_type);

}  // namespace linkaudit
