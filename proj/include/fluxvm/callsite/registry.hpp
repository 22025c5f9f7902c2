#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "fluxvm/callsite/call_site.hpp"

namespace fluxvm {

struct SiteMetrics {
  std::string key;
  std::uint64_t id = 0;
  Semantics semantics = Semantics::Volatile;
  std::uint64_t invocation_count = 0;
  std::uint64_t bootstrap_count = 0;
  std::string type;
  std::string target;
  std::vector<std::string> aspects;
};

struct MetricsSnapshot {
  std::size_t site_count = 0;
  std::vector<SiteMetrics> sites;
};

/// Key -> sites map consulted when linking and by management operations.
/// Never read on the call path; lookup_count() makes that checkable.
class SiteRegistry {
 public:
  /// Throws CallSiteError when the site id is already present.
  void register_site(DynamicCallSite& site);

  /// Exact key text, or a prefix ending in `*`.
  std::vector<DynamicCallSite*> sites_matching(std::string_view pattern) const;
  std::size_t size() const;

  /// Number of read or write accesses since construction.
  std::uint64_t lookup_count() const noexcept { return lookups_.load(std::memory_order_relaxed); }

 private:
  friend MetricsSnapshot metrics(const SiteRegistry& r, std::string_view pattern);

  mutable std::mutex mu_;
  std::map<std::string, std::vector<DynamicCallSite*>, std::less<>> by_key_;
  std::map<std::uint64_t, DynamicCallSite*> by_id_;
  mutable std::atomic<std::uint64_t> lookups_{0};
};

bool key_matches(std::string_view pattern, std::string_view key) noexcept;

/// Snapshot of every site (or the ones matching `pattern`), ordered by id.
MetricsSnapshot metrics(const SiteRegistry& r, std::string_view pattern = "*");

}  // namespace fluxvm
