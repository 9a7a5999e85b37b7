#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace linkaudit {

// Answer for a single name, CNAMEs not followed.
struct DnsAnswer {
  enum class Kind {
    Address,   // A/AAAA present
    Cname,     // alias; see target
    NoData,    // name exists, no address records
    NxDomain,  // name does not exist
    Failure,   // resolver error (SERVFAIL, timeout, ...)
  };
  Kind kind = Kind::Failure;
  std::string target;   // Cname only
  std::string address;  // Address only, may be empty when unknown

  bool name_exists() const { return kind == Kind::Address || kind == Kind::Cname || kind == Kind::NoData; }
};

class Resolver {
public:
  virtual ~Resolver() = default;
  virtual DnsAnswer lookup(std::string_view name) const = 0;
};

struct ResolvedAddress {
  DnsAnswer::Kind kind = DnsAnswer::Kind::Failure;  // Address, NoData, NxDomain or Failure
  std::string address;
};

// Follows a CNAME chain (bounded) to its terminal answer.
ResolvedAddress resolve_address(const Resolver& resolver, std::string_view host);

// Closed-world resolver for tests and offline scans. File syntax, one record
// per line, '#' comments:
//   host A [address]
//   host CNAME target
//   host NXDOMAIN
// Names that are not listed but have a listed descendant answer NoData (an
// empty non-terminal); every other unlisted name is NXDOMAIN.
class StubResolver final : public Resolver {
public:
  static StubResolver load(const std::filesystem::path& path);
  static StubResolver parse(std::istream& in);

  void add_address(std::string_view host, std::string_view address = {});
  void add_cname(std::string_view host, std::string_view target);
  void add_nxdomain(std::string_view host);

  DnsAnswer lookup(std::string_view name) const override;

private:
  std::map<std::string, DnsAnswer, std::less<>> records_;
};

// libresolv-backed resolver using the system's configured nameservers.
class SystemResolver final : public Resolver {
public:
  DnsAnswer lookup(std::string_view name) const override;
};

}  // namespace linkaudit
