#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "linkaudit/html_extractor.hpp"
#include "linkaudit/prober.hpp"
#include "linkaudit/triage.hpp"

namespace linkaudit {

struct SiteEntry {
  std::int64_t rank = 0;
  std::string domain;

  friend bool operator==(const SiteEntry&, const SiteEntry&) = default;
};

struct SiteList {
  std::vector<SiteEntry> entries;
  std::size_t malformed_rows = 0;
  std::size_t duplicate_rows = 0;
};

// Majestic-Million style CSV. The rank comes from a GlobalRank column, else
// the first column, else the row position; Domain is located by name
// (case-insensitive). Duplicate domains keep their best rank.
// Throws MissingColumn, EmptyFile, IoError.
SiteList load_site_list(const std::filesystem::path& path, std::size_t top_n);
SiteList parse_site_list(std::istream& in, std::size_t top_n);

// One probed reference as persisted: the probe result plus its triage, if
// the reference was broken.
struct ResultRecord {
  std::string domain;
  ProbeResult result;
  std::optional<TriageCause> triage_cause;
  std::vector<TypoSignal> typo_signals;
  std::optional<DnsState> dns_state;
};

// Written before the reference records of a homepage; `ref_count` tells the
// reader how many records complete the batch. A batch cut short by a crash
// is ignored and the domain is scanned again on resume.
struct PageRecord {
  std::string domain;
  std::int64_t rank = 0;
  std::string page_url;
  bool fetched = false;
  OutcomeKind outcome_kind = OutcomeKind::ConnectFailure;
  std::optional<int> status;
  std::int64_t latency_ms = 0;
  UtcTime fetched_at{};
  std::size_t ref_count = 0;
  std::vector<std::string> unparsable_refs;
};

struct HomepageProfile {
  std::string domain;
  std::int64_t total_refs = 0;
  std::int64_t internal_count = 0;
  std::int64_t external_count = 0;
  CategoryCounts per_category{};
  std::int64_t broken_count = 0;
  CategoryCounts broken_per_category{};
  bool has_broken = false;

  // External-only breakdowns feeding the per-type tables.
  CategoryCounts external_per_category{};
  std::int64_t broken_external_count = 0;
  CategoryCounts broken_external_per_category{};

  // References whose host differs from the page host (a looser notion of
  // "external" than registrable-domain inequality).
  std::int64_t cross_host_count = 0;

  friend bool operator==(const HomepageProfile&, const HomepageProfile&) = default;
};

// True when every count invariant of the profile holds.
bool profile_consistent(const HomepageProfile& profile);

using Record = std::variant<ResultRecord, PageRecord, HomepageProfile>;

std::string to_json_line(const ResultRecord& record);
std::string to_json_line(const PageRecord& record);
std::string to_json_line(const HomepageProfile& profile);

// Throws MalformedRecord.
Record parse_record_line(std::string_view line);

struct ReadStats {
  std::size_t lines = 0;
  std::size_t malformed = 0;
};

// Streams every well-formed record; malformed lines are skipped and counted.
ReadStats for_each_record(std::istream& in, const std::function<void(Record&&)>& visit);

std::vector<ResultRecord> read_results(const std::filesystem::path& path, ReadStats* stats = nullptr);

// Append-only JSON-lines writer; each call ends with a flush.
class ResultsWriter {
public:
  explicit ResultsWriter(const std::filesystem::path& path);

  std::size_t append(std::span<const ResultRecord> records);
  void append_page(const PageRecord& page, std::span<const ResultRecord> records);
  void append_profile(const HomepageProfile& profile);

private:
  void write_block(const std::string& block);

  std::filesystem::path path_;
  std::ofstream out_;
};

// Throws IoError.
std::size_t append_results(const std::filesystem::path& path, std::span<const ResultRecord> records);

struct ProfileSet {
  std::vector<HomepageProfile> profiles;  // sorted by domain
  std::vector<std::string> unreachable;   // homepage fetch failed
  std::set<std::string> completed;        // domains with a complete page batch
  std::size_t incomplete_batches = 0;
  std::size_t malformed_records = 0;
};

ProfileSet build_profiles(std::istream& records);
ProfileSet build_profiles(const std::filesystem::path& path);
ProfileSet build_profiles(std::span<const ResultRecord> records);

// Uniform sample without replacement of the broken records, reproducible
// from `seed`, returned in input order. Throws NotEnoughBroken.
std::vector<ResultRecord> sample_for_review(std::span<const ResultRecord> results, std::size_t n,
                                            std::uint64_t seed);

}  // namespace linkaudit
