#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "linkaudit/corpus_store.hpp"
#include "linkaudit/gamma_model.hpp"
#include "linkaudit/html_extractor.hpp"

namespace linkaudit {

struct CategoryShare {
  ResourceCategory category = ResourceCategory::Other;
  std::int64_t count = 0;
  double percentage = 0.0;

  friend bool operator==(const CategoryShare&, const CategoryShare&) = default;
};

// Percentages are kept at full precision; rendering rounds to one decimal.
struct SummaryStats {
  bool empty = true;

  std::int64_t pages_scanned = 0;
  std::int64_t pages_with_broken = 0;
  double pct_pages_with_broken = 0.0;
  std::int64_t unreachable_pages = 0;

  std::int64_t total_refs = 0;
  std::int64_t internal_refs = 0;
  std::int64_t broken_refs = 0;  // any scope

  std::int64_t total_external_refs = 0;
  std::int64_t broken_external_refs = 0;
  double pct_broken = 0.0;  // broken external / external

  // Descending by count, ties in category order; zero counts omitted.
  std::vector<CategoryShare> category_breakdown;         // external refs
  std::vector<CategoryShare> broken_category_breakdown;  // broken external refs

  double mean_deps_per_page = 0.0;
  double pct_internal = 0.0;
  double pct_external = 0.0;

  // Same external share measured by host inequality instead of
  // registrable-domain inequality.
  std::int64_t cross_host_refs = 0;
  double pct_cross_host = 0.0;

  friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

SummaryStats summarize(std::span<const HomepageProfile> profiles, std::size_t unreachable_pages = 0);

enum class ReportFormat { Markdown, Csv, Json };

// Accepts "markdown"/"md", "csv", "json". Throws UnknownFormat.
ReportFormat report_format_from_string(std::string_view text);

std::string render(const SummaryStats& stats, ReportFormat format);

// Inverse of render(stats, ReportFormat::Json). Throws MalformedRecord.
SummaryStats stats_from_json(std::string_view text);

// "2536692" -> "2 536 692".
std::string group_digits(std::int64_t value);

struct HistogramBin {
  double lower = 0.0;
  std::int64_t count = 0;
  std::optional<double> expected;  // n * (cdf(upper) - cdf(lower)) under the overlay
};

struct Histogram {
  double bin_width = 1.0;
  std::vector<HistogramBin> bins;
  std::optional<GammaModel> overlay;
  std::size_t n = 0;
};

// Bins [i*w, (i+1)*w) from 0 up to the largest observation. When `extend_to`
// exceeds that, empty bins are appended until it is covered.
// Throws DomainError for bin_width <= 0.
Histogram histogram(std::span<const HomepageProfile> profiles, ProfileSeries series, double bin_width,
                    std::optional<GammaModel> overlay = std::nullopt, double extend_to = 0.0);

// Columns bin_lower,count,expected_count.
std::string render_histogram_csv(const Histogram& h);

}  // namespace linkaudit
