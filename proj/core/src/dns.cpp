#include "linkaudit/dns.hpp"

#include <arpa/nameser.h>
#include <netinet/in.h>
#include <netdb.h>
#include <resolv.h>

#include <array>
#include <fstream>
#include <sstream>

#include "linkaudit/errors.hpp"
#include "string_util.hpp"

namespace linkaudit {
namespace {

std::string canonical(std::string_view name) {
  std::string out = detail::to_lower(detail::trim(name));
  if (out.size() > 1 && out.back() == '.') out.pop_back();
  return out;
}

constexpr int kMaxCnameHops = 8;

}  // namespace

ResolvedAddress resolve_address(const Resolver& resolver, std::string_view host) {
  std::string name(host);
  for (int hop = 0; hop <= kMaxCnameHops; ++hop) {
    const DnsAnswer answer = resolver.lookup(name);
    switch (answer.kind) {
      case DnsAnswer::Kind::Cname:
        name = answer.target;
        continue;
      case DnsAnswer::Kind::Address:
        return {DnsAnswer::Kind::Address, answer.address};
      default:
        return {answer.kind, {}};
    }
  }
  return {DnsAnswer::Kind::Failure, {}};
}

StubResolver StubResolver::parse(std::istream& in) {
  StubResolver stub;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string host, type, arg;
    if (!(fields >> host)) continue;
    if (!(fields >> type)) throw ConfigError("stub resolver line " + std::to_string(lineno) + ": missing type");
    fields >> arg;
    type = detail::to_lower(type);
    if (type == "a" || type == "aaaa") {
      stub.add_address(host, arg);
    } else if (type == "cname") {
      if (arg.empty()) throw ConfigError("stub resolver line " + std::to_string(lineno) + ": CNAME without target");
      stub.add_cname(host, arg);
    } else if (type == "nxdomain") {
      stub.add_nxdomain(host);
    } else {
      throw ConfigError("stub resolver line " + std::to_string(lineno) + ": unknown type " + type);
    }
  }
  return stub;
}

StubResolver StubResolver::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open resolver file " + path.string());
  return parse(in);
}

void StubResolver::add_address(std::string_view host, std::string_view address) {
  records_[canonical(host)] = DnsAnswer{DnsAnswer::Kind::Address, {}, std::string(address)};
}

void StubResolver::add_cname(std::string_view host, std::string_view target) {
  records_[canonical(host)] = DnsAnswer{DnsAnswer::Kind::Cname, canonical(target), {}};
}

void StubResolver::add_nxdomain(std::string_view host) {
  records_[canonical(host)] = DnsAnswer{DnsAnswer::Kind::NxDomain, {}, {}};
}

DnsAnswer StubResolver::lookup(std::string_view name) const {
  const std::string key = canonical(name);
  if (auto it = records_.find(key); it != records_.end()) return it->second;
  const std::string suffix = "." + key;
  for (const auto& [listed, answer] : records_) {
    if (answer.kind != DnsAnswer::Kind::NxDomain && listed.ends_with(suffix)) {
      return DnsAnswer{DnsAnswer::Kind::NoData, {}, {}};
    }
  }
  return DnsAnswer{DnsAnswer::Kind::NxDomain, {}, {}};
}

namespace {

// Returns the first CNAME target in the answer section, if any.
std::optional<std::string> first_cname(const unsigned char* msg, int len) {
  ns_msg handle;
  if (ns_initparse(msg, len, &handle) < 0) return std::nullopt;
  const int count = ns_msg_count(handle, ns_s_an);
  for (int i = 0; i < count; ++i) {
    ns_rr rr;
    if (ns_parserr(&handle, ns_s_an, i, &rr) < 0) continue;
    if (ns_rr_type(rr) != ns_t_cname) continue;
    std::array<char, NS_MAXDNAME> target{};
    if (ns_name_uncompress(ns_msg_base(handle), ns_msg_end(handle), ns_rr_rdata(rr), target.data(),
                           target.size()) < 0) {
      continue;
    }
    return std::string(target.data());
  }
  return std::nullopt;
}

bool has_address(const unsigned char* msg, int len) {
  ns_msg handle;
  if (ns_initparse(msg, len, &handle) < 0) return false;
  const int count = ns_msg_count(handle, ns_s_an);
  for (int i = 0; i < count; ++i) {
    ns_rr rr;
    if (ns_parserr(&handle, ns_s_an, i, &rr) < 0) continue;
    if (ns_rr_type(rr) == ns_t_a || ns_rr_type(rr) == ns_t_aaaa) return true;
  }
  return false;
}

}  // namespace

DnsAnswer SystemResolver::lookup(std::string_view name) const {
  const std::string host = canonical(name);
  struct __res_state state {};
  if (res_ninit(&state) != 0) return {};
  std::array<unsigned char, NS_PACKETSZ * 4> buf{};

  auto query = [&](int type, int& herr) {
    const int len = res_nquery(&state, host.c_str(), ns_c_in, type, buf.data(), static_cast<int>(buf.size()));
    herr = len < 0 ? state.res_h_errno : 0;
    return len;
  };

  DnsAnswer answer;
  int herr = 0;
  int len = query(ns_t_cname, herr);
  if (len >= 0) {
    if (auto target = first_cname(buf.data(), len)) {
      answer = {DnsAnswer::Kind::Cname, canonical(*target), {}};
      res_nclose(&state);
      return answer;
    }
  } else if (herr == HOST_NOT_FOUND) {
    res_nclose(&state);
    return {DnsAnswer::Kind::NxDomain, {}, {}};
  } else if (herr != NO_DATA) {
    res_nclose(&state);
    return {};
  }

  len = query(ns_t_a, herr);
  if (len >= 0 && has_address(buf.data(), len)) {
    answer = {DnsAnswer::Kind::Address, {}, {}};
  } else if (len >= 0 || herr == NO_DATA) {
    answer = {DnsAnswer::Kind::NoData, {}, {}};
  } else if (herr == HOST_NOT_FOUND) {
    answer = {DnsAnswer::Kind::NxDomain, {}, {}};
  }
  res_nclose(&state);
  return answer;
}

}  // namespace linkaudit
