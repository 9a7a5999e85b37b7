#include "linkaudit/corpus_store.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "linkaudit/errors.hpp"
#include "string_util.hpp"

namespace linkaudit {
namespace {

// Comma-separated fields; double quotes group and "" escapes a quote.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::optional<std::int64_t> parse_rank(std::string_view text) {
  text = detail::trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v <= 0) return std::nullopt;
  return v;
}

bool plausible_domain(std::string_view d) {
  if (d.empty() || d.size() > 253 || d.front() == '.' || d.find("..") != std::string_view::npos) return false;
  return std::all_of(d.begin(), d.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '.' || c == '_';
  });
}

struct Tally {
  HomepageProfile p;

  void add(const ResultRecord& r) {
    const auto& ref = r.result.ref;
    const auto c = index_of(ref.category);
    ++p.total_refs;
    ++p.per_category[c];
    const bool external = ref.scope == Scope::External;
    if (external) {
      ++p.external_count;
      ++p.external_per_category[c];
    } else {
      ++p.internal_count;
    }
    if (ref.url.host != ref.origin_page.host) ++p.cross_host_count;
    if (r.result.broken) {
      ++p.broken_count;
      ++p.broken_per_category[c];
      if (external) {
        ++p.broken_external_count;
        ++p.broken_external_per_category[c];
      }
    }
    p.has_broken = p.broken_count > 0;
  }
};

struct DomainState {
  std::optional<Tally> legacy;
  bool seen_page = false;

  std::optional<Tally> open;
  std::size_t expected = 0;
  std::size_t seen = 0;
  bool open_fetched = false;

  std::optional<Tally> committed;
  bool committed_fetched = false;
};

class ProfileBuilder {
public:
  void add(Record&& record) {
    std::visit([this](auto&& r) { on(std::move(r)); }, std::move(record));
  }

  ProfileSet finish(std::size_t malformed) {
    ProfileSet out;
    out.malformed_records = malformed;
    for (auto& [domain, st] : domains_) {
      if (st.open) ++out.incomplete_batches;
      if (st.committed) {
        out.completed.insert(domain);
        if (st.committed_fetched) {
          st.committed->p.domain = domain;
          out.profiles.push_back(std::move(st.committed->p));
        } else {
          out.unreachable.push_back(domain);
        }
      } else if (st.legacy) {
        st.legacy->p.domain = domain;
        out.profiles.push_back(std::move(st.legacy->p));
      }
    }
    for (auto& [domain, p] : explicit_) {
      if (domains_.count(domain) == 0) out.profiles.push_back(std::move(p));
    }
    std::sort(out.profiles.begin(), out.profiles.end(),
              [](const HomepageProfile& a, const HomepageProfile& b) { return a.domain < b.domain; });
    return out;
  }

private:
  void on(ResultRecord&& r) {
    auto& st = domains_[r.domain];
    if (st.open) {
      st.open->add(r);
      if (++st.seen == st.expected) commit(st);
    } else if (!st.seen_page) {
      if (!st.legacy) st.legacy.emplace();
      st.legacy->add(r);
    }
    // Otherwise a stray reference after a complete batch; ignored.
  }

  void on(PageRecord&& page) {
    auto& st = domains_[page.domain];
    st.seen_page = true;
    st.open.emplace();
    st.expected = page.ref_count;
    st.seen = 0;
    st.open_fetched = page.fetched;
    if (st.expected == 0) commit(st);
  }

  void on(HomepageProfile&& p) {
    std::string key = p.domain;
    explicit_.insert_or_assign(std::move(key), std::move(p));
  }

  static void commit(DomainState& st) {
    st.committed = std::move(st.open);
    st.committed_fetched = st.open_fetched;
    st.open.reset();
  }

  std::map<std::string, DomainState> domains_;
  std::map<std::string, HomepageProfile> explicit_;
};

// Uniform integer in [0, n) without modulo bias, identical on every platform.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t x = gen();
    if (x >= threshold) return x % n;
  }
}

}  // namespace

SiteList parse_site_list(std::istream& in, std::size_t top_n) {
  if (top_n == 0) throw ConfigError("top_n must be positive");

  std::string line;
  std::optional<std::vector<std::string>> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    header = split_csv(line);
    break;
  }
  if (!header) throw EmptyFile("site list has no header");

  std::optional<std::size_t> domain_col;
  std::optional<std::size_t> rank_col;
  for (std::size_t i = 0; i < header->size(); ++i) {
    const auto name = detail::trim((*header)[i]);
    if (!domain_col && detail::iequals(name, "domain")) domain_col = i;
    if (!rank_col && detail::iequals(name, "globalrank")) rank_col = i;
  }
  if (!domain_col) throw MissingColumn("no Domain column in site list header");
  if (!rank_col && *domain_col != 0) rank_col = 0;

  SiteList out;
  std::unordered_map<std::string, std::size_t> by_domain;
  std::unordered_map<std::int64_t, std::string> by_rank;
  std::int64_t row = 0;
  bool any_row = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    any_row = true;
    ++row;
    const auto fields = split_csv(line);
    const std::size_t needed = std::max(*domain_col, rank_col.value_or(0)) + 1;
    if (fields.size() < needed) {
      ++out.malformed_rows;
      continue;
    }
    std::string domain = detail::to_lower(detail::trim(fields[*domain_col]));
    while (domain.ends_with('.')) domain.pop_back();
    const auto rank = rank_col ? parse_rank(fields[*rank_col]) : std::optional<std::int64_t>(row);
    if (!rank || !plausible_domain(domain)) {
      ++out.malformed_rows;
      continue;
    }
    if (const auto it = by_domain.find(domain); it != by_domain.end()) {
      ++out.duplicate_rows;
      auto& existing = out.entries[it->second];
      if (*rank < existing.rank && !by_rank.contains(*rank)) {
        by_rank.erase(existing.rank);
        existing.rank = *rank;
        by_rank.emplace(*rank, domain);
      }
      continue;
    }
    if (by_rank.contains(*rank)) {
      ++out.malformed_rows;
      continue;
    }
    by_rank.emplace(*rank, domain);
    by_domain.emplace(domain, out.entries.size());
    out.entries.push_back(SiteEntry{*rank, std::move(domain)});
  }
  if (!any_row) throw EmptyFile("site list has a header but no rows");

  std::sort(out.entries.begin(), out.entries.end(),
            [](const SiteEntry& a, const SiteEntry& b) { return a.rank < b.rank; });
  if (out.entries.size() > top_n) out.entries.resize(top_n);
  return out;
}

SiteList load_site_list(const std::filesystem::path& path, std::size_t top_n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open site list " + path.string());
  return parse_site_list(in, top_n);
}

bool profile_consistent(const HomepageProfile& p) {
  auto sum = [](const CategoryCounts& c) { return std::accumulate(c.begin(), c.end(), std::int64_t{0}); };
  if (p.total_refs < 0 || p.internal_count < 0 || p.external_count < 0 || p.broken_count < 0) return false;
  if (p.internal_count + p.external_count != p.total_refs) return false;
  if (sum(p.per_category) != p.total_refs) return false;
  if (p.broken_count > p.total_refs || p.has_broken != (p.broken_count >= 1)) return false;
  if (sum(p.broken_per_category) != p.broken_count) return false;
  if (p.broken_external_count > p.external_count || p.broken_external_count > p.broken_count) return false;
  if (sum(p.external_per_category) > p.external_count) return false;
  if (p.cross_host_count < 0 || p.cross_host_count > p.total_refs) return false;
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    if (p.per_category[i] < 0 || p.broken_per_category[i] < 0) return false;
    if (p.broken_per_category[i] > p.per_category[i]) return false;
    if (p.external_per_category[i] > p.per_category[i]) return false;
    if (p.broken_external_per_category[i] > p.external_per_category[i]) return false;
    if (p.broken_external_per_category[i] > p.broken_per_category[i]) return false;
  }
  return true;
}

ReadStats for_each_record(std::istream& in, const std::function<void(Record&&)>& visit) {
  ReadStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++stats.lines;
    Record record;
    try {
      record = parse_record_line(line);
    } catch (const MalformedRecord&) {
      ++stats.malformed;
      continue;
    }
    visit(std::move(record));
  }
  return stats;
}

std::vector<ResultRecord> read_results(const std::filesystem::path& path, ReadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open results file " + path.string());
  std::vector<ResultRecord> out;
  const auto s = for_each_record(in, [&](Record&& r) {
    if (auto* rr = std::get_if<ResultRecord>(&r)) out.push_back(std::move(*rr));
  });
  if (stats) *stats = s;
  return out;
}

ResultsWriter::ResultsWriter(const std::filesystem::path& path) : path_(path) {
  // A line torn by an earlier crash must not swallow the next record.
  bool needs_newline = false;
  {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    if (probe && probe.tellg() > 0) {
      probe.seekg(-1, std::ios::end);
      char last = 0;
      probe.get(last);
      needs_newline = last != '\n';
    }
  }
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open " + path.string() + " for appending");
  if (needs_newline) write_block("\n");
}

void ResultsWriter::write_block(const std::string& block) {
  out_.write(block.data(), static_cast<std::streamsize>(block.size()));
  out_.flush();
  if (!out_) throw IoError("write to " + path_.string() + " failed");
}

std::size_t ResultsWriter::append(std::span<const ResultRecord> records) {
  if (records.empty()) return 0;
  std::string block;
  for (const auto& r : records) {
    block += to_json_line(r);
    block += '\n';
  }
  write_block(block);
  return records.size();
}

void ResultsWriter::append_page(const PageRecord& page, std::span<const ResultRecord> records) {
  if (page.ref_count != records.size()) throw DomainError("page ref_count does not match the batch size");
  std::string block = to_json_line(page);
  block += '\n';
  for (const auto& r : records) {
    block += to_json_line(r);
    block += '\n';
  }
  write_block(block);
}

void ResultsWriter::append_profile(const HomepageProfile& profile) { write_block(to_json_line(profile) + "\n"); }

std::size_t append_results(const std::filesystem::path& path, std::span<const ResultRecord> records) {
  if (records.empty()) return 0;
  ResultsWriter writer(path);
  return writer.append(records);
}

ProfileSet build_profiles(std::istream& records) {
  ProfileBuilder builder;
  const auto stats = for_each_record(records, [&](Record&& r) { builder.add(std::move(r)); });
  return builder.finish(stats.malformed);
}

ProfileSet build_profiles(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open results file " + path.string());
  return build_profiles(in);
}

ProfileSet build_profiles(std::span<const ResultRecord> records) {
  ProfileBuilder builder;
  for (const auto& r : records) builder.add(Record{r});
  return builder.finish(0);
}

std::vector<ResultRecord> sample_for_review(std::span<const ResultRecord> results, std::size_t n,
                                            std::uint64_t seed) {
  std::vector<std::size_t> broken;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].result.broken) broken.push_back(i);
  }
  if (n > broken.size()) {
    throw NotEnoughBroken("requested " + std::to_string(n) + " but only " + std::to_string(broken.size()) +
                          " broken results are available");
  }

  // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded(gen, broken.size() - i));
    std::swap(broken[i], broken[j]);
  }
  broken.resize(n);
  std::sort(broken.begin(), broken.end());

  std::vector<ResultRecord> out;
  out.reserve(n);
  for (auto i : broken) out.push_back(results[i]);
  return out;
}

}  // namespace linkaudit
