#include <json.hpp>

#include "linkaudit/corpus_store.hpp"
#include "linkaudit/errors.hpp"

namespace linkaudit {
namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

template <typename T>
ojson optional_value(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

template <typename E>
ojson optional_enum(const std::optional<E>& v) {
  return v ? ojson(std::string(to_string(*v))) : ojson(nullptr);
}

ojson counts_to_json(const CategoryCounts& counts) {
  ojson out = ojson::object();
  for (auto c : kAllCategories) out[std::string(to_string(c))] = counts[index_of(c)];
  return out;
}

[[noreturn]] void malformed(const std::string& why) { throw MalformedRecord(why); }

const json& field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) malformed(std::string("missing field '") + name + "'");
  return *it;
}

std::string text_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) malformed(std::string("field '") + name + "' is not a string");
  return v.get<std::string>();
}

std::int64_t int_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) malformed(std::string("field '") + name + "' is not an integer");
  return v.get<std::int64_t>();
}

std::int64_t count_field(const json& j, const char* name) {
  const auto v = int_field(j, name);
  if (v < 0) malformed(std::string("field '") + name + "' is negative");
  return v;
}

bool bool_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_boolean()) malformed(std::string("field '") + name + "' is not a boolean");
  return v.get<bool>();
}

std::optional<std::string> optional_text(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(std::string("field '") + name + "' is not a string");
  return it->get<std::string>();
}

template <typename E, typename Parse>
E enum_field(const json& j, const char* name, Parse parse) {
  const auto text = text_field(j, name);
  const auto v = parse(text);
  if (!v) malformed(std::string("field '") + name + "' has unknown value '" + text + "'");
  return *v;
}

template <typename E, typename Parse>
std::optional<E> optional_enum_field(const json& j, const char* name, Parse parse) {
  const auto text = optional_text(j, name);
  if (!text) return std::nullopt;
  const auto v = parse(*text);
  if (!v) malformed(std::string("field '") + name + "' has unknown value '" + *text + "'");
  return v;
}

AbsoluteUrl url_field(const json& j, const char* name) {
  const auto text = text_field(j, name);
  try {
    return parse_absolute_url(text);
  } catch (const Error& e) {
    malformed(std::string("field '") + name + "': " + e.what());
  }
}

UtcTime time_field(const json& j, const char* name) {
  const auto text = text_field(j, name);
  const auto t = parse_utc(text);
  if (!t) malformed(std::string("field '") + name + "' is not a UTC timestamp");
  return *t;
}

CategoryCounts counts_field(const json& j, const char* name, bool required) {
  CategoryCounts out{};
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) {
    if (required) malformed(std::string("missing field '") + name + "'");
    return out;
  }
  if (!it->is_object()) malformed(std::string("field '") + name + "' is not an object");
  for (const auto& [key, value] : it->items()) {
    const auto c = category_from_string(key);
    if (!c) malformed("unknown category '" + key + "'");
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
      malformed("bad count for category '" + key + "'");
    }
    out[index_of(*c)] = value.get<std::int64_t>();
  }
  return out;
}

ResultRecord parse_result(const json& j) {
  ResultRecord r;
  r.domain = text_field(j, "domain");
  if (r.domain.empty()) malformed("empty domain");

  ResourceRef ref;
  ref.origin_page = url_field(j, "page_url");
  ref.url = url_field(j, "url");
  ref.raw_text = text_field(j, "raw_text");
  ref.category = enum_field<ResourceCategory>(j, "category", category_from_string);
  ref.scope = enum_field<Scope>(j, "scope", scope_from_string);
  ref.extraction_origin = enum_field<ExtractionOrigin>(j, "extraction_origin", extraction_origin_from_string);

  ProbeOutcome outcome;
  outcome.url = ref.url;
  outcome.kind = enum_field<OutcomeKind>(j, "outcome_kind", outcome_kind_from_string);
  const auto& status = field(j, "status");
  if (!status.is_null()) {
    if (!status.is_number_integer()) malformed("field 'status' is not an integer");
    outcome.status = status.get<int>();
  }
  if ((outcome.kind == OutcomeKind::HttpResponse) != outcome.status.has_value()) {
    malformed("status must be present exactly for HttpResponse");
  }
  outcome.content_type = optional_text(j, "content_type");
  outcome.latency_ms = int_field(j, "latency_ms");
  outcome.fetched_at = time_field(j, "fetched_at");

  r.result.ref = std::move(ref);
  r.result.outcome = std::move(outcome);
  r.result.broken = bool_field(j, "broken");
  if (r.result.broken != classify_broken(r.result.outcome)) malformed("broken flag contradicts outcome");
  r.result.header_category = optional_enum_field<ResourceCategory>(j, "header_category", category_from_string);
  if (const auto it = j.find("category_mismatch"); it != j.end() && it->is_boolean()) {
    r.result.category_mismatch = it->get<bool>();
  }

  r.triage_cause = optional_enum_field<TriageCause>(j, "triage_cause", triage_cause_from_string);
  if (const auto it = j.find("typo_signals"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) malformed("field 'typo_signals' is not an array");
    for (const auto& s : *it) {
      if (!s.is_object()) malformed("typo signal is not an object");
      TypoSignal sig;
      sig.kind = enum_field<TypoKind>(s, "kind", typo_kind_from_string);
      sig.begin = static_cast<std::size_t>(count_field(s, "begin"));
      sig.end = static_cast<std::size_t>(count_field(s, "end"));
      if (sig.end < sig.begin) malformed("typo signal range is reversed");
      r.typo_signals.push_back(sig);
    }
  }
  r.dns_state = optional_enum_field<DnsState>(j, "dns_state", dns_state_from_string);
  return r;
}

PageRecord parse_page(const json& j) {
  PageRecord p;
  p.domain = text_field(j, "domain");
  if (p.domain.empty()) malformed("empty domain");
  if (const auto it = j.find("rank"); it != j.end() && it->is_number_integer()) p.rank = it->get<std::int64_t>();
  p.page_url = text_field(j, "page_url");
  p.fetched = bool_field(j, "fetched");
  p.outcome_kind = enum_field<OutcomeKind>(j, "outcome_kind", outcome_kind_from_string);
  const auto& status = field(j, "status");
  if (!status.is_null()) {
    if (!status.is_number_integer()) malformed("field 'status' is not an integer");
    p.status = status.get<int>();
  }
  p.latency_ms = int_field(j, "latency_ms");
  p.fetched_at = time_field(j, "fetched_at");
  p.ref_count = static_cast<std::size_t>(count_field(j, "ref_count"));
  if (const auto it = j.find("unparsable_refs"); it != j.end() && it->is_array()) {
    for (const auto& s : *it) {
      if (s.is_string()) p.unparsable_refs.push_back(s.get<std::string>());
    }
  }
  return p;
}

HomepageProfile parse_profile(const json& j) {
  HomepageProfile p;
  p.domain = text_field(j, "domain");
  if (p.domain.empty()) malformed("empty domain");
  p.total_refs = count_field(j, "total_refs");
  p.internal_count = count_field(j, "internal_count");
  p.external_count = count_field(j, "external_count");
  p.per_category = counts_field(j, "per_category", true);
  p.broken_count = count_field(j, "broken_count");
  p.broken_per_category = counts_field(j, "broken_per_category", true);
  p.has_broken = bool_field(j, "has_broken");
  p.external_per_category = counts_field(j, "external_per_category", false);
  if (const auto it = j.find("broken_external_count"); it != j.end()) {
    p.broken_external_count = count_field(j, "broken_external_count");
  }
  p.broken_external_per_category = counts_field(j, "broken_external_per_category", false);
  if (const auto it = j.find("cross_host_count"); it != j.end()) {
    p.cross_host_count = count_field(j, "cross_host_count");
  }
  if (!profile_consistent(p)) malformed("profile counts are inconsistent for '" + p.domain + "'");
  return p;
}

}  // namespace

std::string to_json_line(const ResultRecord& record) {
  const auto& r = record.result;
  ojson j;
  j["record"] = "ref";
  j["domain"] = record.domain;
  j["page_url"] = r.ref.origin_page.str();
  j["url"] = r.ref.url.str();
  j["raw_text"] = r.ref.raw_text;
  j["category"] = to_string(r.ref.category);
  j["scope"] = to_string(r.ref.scope);
  j["extraction_origin"] = to_string(r.ref.extraction_origin);
  j["outcome_kind"] = to_string(r.outcome.kind);
  j["status"] = optional_value(r.outcome.status);
  j["content_type"] = optional_value(r.outcome.content_type);
  j["latency_ms"] = r.outcome.latency_ms;
  j["fetched_at"] = format_utc(r.outcome.fetched_at);
  j["broken"] = r.broken;
  j["triage_cause"] = optional_enum(record.triage_cause);
  ojson signals = ojson::array();
  for (const auto& s : record.typo_signals) {
    signals.push_back(ojson{{"kind", to_string(s.kind)}, {"begin", s.begin}, {"end", s.end}});
  }
  j["typo_signals"] = std::move(signals);
  j["dns_state"] = optional_enum(record.dns_state);
  j["header_category"] = optional_enum(r.header_category);
  j["category_mismatch"] = r.category_mismatch;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string to_json_line(const PageRecord& record) {
  ojson j;
  j["record"] = "page";
  j["domain"] = record.domain;
  j["rank"] = record.rank;
  j["page_url"] = record.page_url;
  j["fetched"] = record.fetched;
  j["outcome_kind"] = to_string(record.outcome_kind);
  j["status"] = optional_value(record.status);
  j["latency_ms"] = record.latency_ms;
  j["fetched_at"] = format_utc(record.fetched_at);
  j["ref_count"] = record.ref_count;
  j["unparsable_refs"] = record.unparsable_refs;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string to_json_line(const HomepageProfile& p) {
  ojson j;
  j["record"] = "profile";
  j["domain"] = p.domain;
  j["total_refs"] = p.total_refs;
  j["internal_count"] = p.internal_count;
  j["external_count"] = p.external_count;
  j["per_category"] = counts_to_json(p.per_category);
  j["broken_count"] = p.broken_count;
  j["broken_per_category"] = counts_to_json(p.broken_per_category);
  j["has_broken"] = p.has_broken;
  j["external_per_category"] = counts_to_json(p.external_per_category);
  j["broken_external_count"] = p.broken_external_count;
  j["broken_external_per_category"] = counts_to_json(p.broken_external_per_category);
  j["cross_host_count"] = p.cross_host_count;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Record parse_record_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  if (!j.is_object()) malformed("record is not a JSON object");

  std::string kind = "ref";
  if (const auto it = j.find("record"); it != j.end()) {
    if (!it->is_string()) malformed("field 'record' is not a string");
    kind = it->get<std::string>();
  }
  try {
    if (kind == "ref") return parse_result(j);
    if (kind == "page") return parse_page(j);
    if (kind == "profile") return parse_profile(j);
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  malformed("unknown record kind '" + kind + "'");
}

}  // namespace linkaudit
