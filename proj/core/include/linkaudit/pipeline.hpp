#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "linkaudit/corpus_store.hpp"
#include "linkaudit/prober.hpp"

namespace linkaudit {

struct ScanOptions {
  std::filesystem::path site_list;
  std::size_t top_n = 0;
  std::filesystem::path output;
  bool resume = false;
  ScanConfig config;
  std::optional<std::filesystem::path> fetch_log;
  std::optional<std::filesystem::path> suffix_rules;  // merged over the bundled rules

  // Homepages fetched and probed together before their batches are written.
  std::size_t chunk_size = 32;

  std::function<void(std::string_view)> log;
};

// Reproducibility envelope written next to the results file.
struct RunManifest {
  ScanConfig config;
  std::string site_list_path;
  std::size_t top_n = 0;
  std::string output_path;
  bool resume = false;
  UtcTime started_at{};
  UtcTime finished_at{};
  std::string tool_version;

  // Reconciled against the results file after the run: attempted counts
  // every domain with a complete page batch in the file.
  std::size_t pages_attempted = 0;
  std::size_t pages_succeeded = 0;
  std::size_t pages_failed = 0;

  // This invocation only.
  std::size_t pages_scanned_now = 0;
  std::size_t pages_skipped_resume = 0;
  std::size_t refs_written_now = 0;
  std::size_t site_rows_malformed = 0;
  std::size_t incomplete_batches = 0;
};

std::string_view tool_version();

std::string manifest_to_json(const RunManifest& manifest);

// "<output>.manifest.json"
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

// Homepage fetch for a bare domain: https first, plain http when the https
// attempt fails to connect or to negotiate TLS.
PageFetch fetch_homepage(std::string_view domain, const ScanConfig& config,
                         const HttpTransport& transport = default_transport());

// extract -> probe -> triage over the top_n sites, appending one page batch
// per site in rank order, then writing the manifest.
// Throws ConfigError for bad options and IoError for unusable files.
RunManifest run_scan(const ScanOptions& options, const HttpTransport& transport = default_transport());

// Triage fields for one broken result: typo signals on the raw text and the
// DNS state of its host.
void annotate_broken(ResultRecord& record, const Resolver& resolver, const SuffixRules& rules);

}  // namespace linkaudit
