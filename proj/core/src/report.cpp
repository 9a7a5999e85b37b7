#include "linkaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "linkaudit/errors.hpp"
#include "string_util.hpp"

namespace linkaudit {
namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

double pct(std::int64_t part, std::int64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

std::vector<CategoryShare> breakdown(const CategoryCounts& counts, std::int64_t total) {
  std::vector<CategoryShare> out;
  for (auto c : kAllCategories) {
    const auto n = counts[index_of(c)];
    if (n > 0) out.push_back({c, n, pct(n, total)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CategoryShare& a, const CategoryShare& b) { return a.count > b.count; });
  return out;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string percent(double v) { return fixed(v, 1) + "%"; }

void markdown_table(std::string& out, std::string_view title, const std::vector<CategoryShare>& rows,
                    std::int64_t total) {
  out += "### ";
  out += title;
  out += "\n\n| Type | Number | Percentage |\n|:---|---:|---:|\n";
  for (const auto& r : rows) {
    out += "| " + std::string(to_string(r.category)) + " | " + group_digits(r.count) + " | " +
           percent(r.percentage) + " |\n";
  }
  out += "| Total | " + group_digits(total) + " | " + percent(total == 0 ? 0.0 : 100.0) + " |\n\n";
}

ojson shares_to_json(const std::vector<CategoryShare>& rows) {
  ojson out = ojson::array();
  for (const auto& r : rows) {
    out.push_back(ojson{{"category", to_string(r.category)}, {"count", r.count}, {"percentage", r.percentage}});
  }
  return out;
}

std::vector<CategoryShare> shares_from_json(const json& j) {
  if (!j.is_array()) throw MalformedRecord("breakdown is not an array");
  std::vector<CategoryShare> out;
  for (const auto& e : j) {
    const auto c = category_from_string(e.at("category").get<std::string>());
    if (!c) throw MalformedRecord("unknown category in breakdown");
    out.push_back({*c, e.at("count").get<std::int64_t>(), e.at("percentage").get<double>()});
  }
  return out;
}

double series_value(const HomepageProfile& p, ProfileSeries series) {
  return static_cast<double>(series == ProfileSeries::External ? p.external_count : p.total_refs);
}

}  // namespace

std::string group_digits(std::int64_t value) {
  const bool negative = value < 0;
  std::string digits = std::to_string(negative ? -value : value);
  std::string out;
  const std::size_t lead = digits.size() % 3 == 0 ? 3 : digits.size() % 3;
  out += digits.substr(0, lead);
  for (std::size_t i = lead; i < digits.size(); i += 3) {
    out += ' ';
    out += digits.substr(i, 3);
  }
  return negative ? "-" + out : out;
}

SummaryStats summarize(std::span<const HomepageProfile> profiles, std::size_t unreachable_pages) {
  SummaryStats s;
  s.unreachable_pages = static_cast<std::int64_t>(unreachable_pages);
  if (profiles.empty()) return s;
  s.empty = false;

  CategoryCounts external{};
  CategoryCounts broken_external{};
  for (const auto& p : profiles) {
    ++s.pages_scanned;
    if (p.broken_count >= 1) ++s.pages_with_broken;
    s.total_refs += p.total_refs;
    s.internal_refs += p.internal_count;
    s.broken_refs += p.broken_count;
    s.total_external_refs += p.external_count;
    s.broken_external_refs += p.broken_external_count;
    s.cross_host_refs += p.cross_host_count;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
      external[i] += p.external_per_category[i];
      broken_external[i] += p.broken_external_per_category[i];
    }
  }

  s.pct_pages_with_broken = pct(s.pages_with_broken, s.pages_scanned);
  s.pct_broken = pct(s.broken_external_refs, s.total_external_refs);
  s.category_breakdown = breakdown(external, s.total_external_refs);
  s.broken_category_breakdown = breakdown(broken_external, s.broken_external_refs);
  s.mean_deps_per_page = static_cast<double>(s.total_refs) / static_cast<double>(s.pages_scanned);
  s.pct_internal = pct(s.internal_refs, s.total_refs);
  s.pct_external = pct(s.total_external_refs, s.total_refs);
  s.pct_cross_host = pct(s.cross_host_refs, s.total_refs);
  return s;
}

ReportFormat report_format_from_string(std::string_view text) {
  const auto t = detail::to_lower(detail::trim(text));
  if (t == "markdown" || t == "md") return ReportFormat::Markdown;
  if (t == "csv") return ReportFormat::Csv;
  if (t == "json") return ReportFormat::Json;
  throw UnknownFormat("'" + std::string(text) + "' (expected markdown, csv or json)");
}

std::string render(const SummaryStats& s, ReportFormat format) {
  switch (format) {
    case ReportFormat::Markdown: {
      std::string out;
      markdown_table(out, "External resources by type", s.category_breakdown, s.total_external_refs);
      markdown_table(out, "Broken external resources by type", s.broken_category_breakdown,
                     s.broken_external_refs);
      out += "### Prevalence\n\n| Metric | Value |\n|:---|---:|\n";
      out += "| Pages scanned | " + group_digits(s.pages_scanned) + " |\n";
      out += "| Unreachable homepages (excluded) | " + group_digits(s.unreachable_pages) + " |\n";
      out += "| Pages with a broken link | " + group_digits(s.pages_with_broken) + " |\n";
      out += "| Pages with a broken link (%) | " + percent(s.pct_pages_with_broken) + " |\n";
      out += "| External references | " + group_digits(s.total_external_refs) + " |\n";
      out += "| Broken external references | " + group_digits(s.broken_external_refs) + " |\n";
      out += "| Broken external references (%) | " + percent(s.pct_broken) + " |\n";
      out += "| Broken references, any scope | " + group_digits(s.broken_refs) + " |\n";
      out += "| Mean references per page | " + fixed(s.mean_deps_per_page, 1) + " |\n";
      out += "| Internal share | " + percent(s.pct_internal) + " |\n";
      out += "| External share | " + percent(s.pct_external) + " |\n";
      out += "| External share by host | " + percent(s.pct_cross_host) + " |\n";
      if (s.empty) out += "\n_No pages scanned._\n";
      return out;
    }
    case ReportFormat::Csv: {
      std::string out = "table,type,count,percentage\n";
      for (const auto& r : s.category_breakdown) {
        out += "external," + std::string(to_string(r.category)) + "," + std::to_string(r.count) + "," +
               fixed(r.percentage, 4) + "\n";
      }
      for (const auto& r : s.broken_category_breakdown) {
        out += "broken_external," + std::string(to_string(r.category)) + "," + std::to_string(r.count) + "," +
               fixed(r.percentage, 4) + "\n";
      }
      return out;
    }
    case ReportFormat::Json: {
      ojson j;
      j["empty"] = s.empty;
      j["pages_scanned"] = s.pages_scanned;
      j["pages_with_broken"] = s.pages_with_broken;
      j["pct_pages_with_broken"] = s.pct_pages_with_broken;
      j["unreachable_pages"] = s.unreachable_pages;
      j["total_refs"] = s.total_refs;
      j["internal_refs"] = s.internal_refs;
      j["broken_refs"] = s.broken_refs;
      j["total_external_refs"] = s.total_external_refs;
      j["broken_external_refs"] = s.broken_external_refs;
      j["pct_broken"] = s.pct_broken;
      j["category_breakdown"] = shares_to_json(s.category_breakdown);
      j["broken_category_breakdown"] = shares_to_json(s.broken_category_breakdown);
      j["mean_deps_per_page"] = s.mean_deps_per_page;
      j["pct_internal"] = s.pct_internal;
      j["pct_external"] = s.pct_external;
      j["cross_host_refs"] = s.cross_host_refs;
      j["pct_cross_host"] = s.pct_cross_host;
      return j.dump(2) + "\n";
    }
  }
  throw UnknownFormat("unhandled format");
}

SummaryStats stats_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    SummaryStats s;
    s.empty = j.at("empty").get<bool>();
    s.pages_scanned = j.at("pages_scanned").get<std::int64_t>();
    s.pages_with_broken = j.at("pages_with_broken").get<std::int64_t>();
    s.pct_pages_with_broken = j.at("pct_pages_with_broken").get<double>();
    s.unreachable_pages = j.at("unreachable_pages").get<std::int64_t>();
    s.total_refs = j.at("total_refs").get<std::int64_t>();
    s.internal_refs = j.at("internal_refs").get<std::int64_t>();
    s.broken_refs = j.at("broken_refs").get<std::int64_t>();
    s.total_external_refs = j.at("total_external_refs").get<std::int64_t>();
    s.broken_external_refs = j.at("broken_external_refs").get<std::int64_t>();
    s.pct_broken = j.at("pct_broken").get<double>();
    s.category_breakdown = shares_from_json(j.at("category_breakdown"));
    s.broken_category_breakdown = shares_from_json(j.at("broken_category_breakdown"));
    s.mean_deps_per_page = j.at("mean_deps_per_page").get<double>();
    s.pct_internal = j.at("pct_internal").get<double>();
    s.pct_external = j.at("pct_external").get<double>();
    s.cross_host_refs = j.at("cross_host_refs").get<std::int64_t>();
    s.pct_cross_host = j.at("pct_cross_host").get<double>();
    return s;
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("summary json: ") + e.what());
  }
}

Histogram histogram(std::span<const HomepageProfile> profiles, ProfileSeries series, double bin_width,
                    std::optional<GammaModel> overlay, double extend_to) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw DomainError("bin_width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  h.overlay = overlay;
  h.n = profiles.size();
  if (profiles.empty()) return h;

  double top = 0.0;
  for (const auto& p : profiles) top = std::max(top, series_value(p, series));
  std::size_t count = static_cast<std::size_t>(std::floor(top / bin_width)) + 1;
  if (extend_to > 0.0) count = std::max(count, static_cast<std::size_t>(std::ceil(extend_to / bin_width)));

  h.bins.resize(count);
  for (std::size_t i = 0; i < count; ++i) h.bins[i].lower = static_cast<double>(i) * bin_width;
  for (const auto& p : profiles) {
    const auto i = static_cast<std::size_t>(std::floor(series_value(p, series) / bin_width));
    ++h.bins[std::min(i, count - 1)].count;
  }
  if (overlay) {
    const double n = static_cast<double>(h.n);
    for (auto& b : h.bins) {
      const double lo = gamma_cdf(b.lower, overlay->shape, overlay->scale);
      const double hi = gamma_cdf(b.lower + bin_width, overlay->shape, overlay->scale);
      b.expected = n * (hi - lo);
    }
  }
  return h;
}

std::string render_histogram_csv(const Histogram& h) {
  std::string out = "bin_lower,count,expected_count\n";
  for (const auto& b : h.bins) {
    out += compact(b.lower) + "," + std::to_string(b.count) + ",";
    if (b.expected) out += fixed(*b.expected, 6);
    out += "\n";
  }
  return out;
}

}  // namespace linkaudit
