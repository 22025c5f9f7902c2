#include "fluxvm/callsite/registry.hpp"

namespace fluxvm {

bool key_matches(std::string_view pattern, std::string_view key) noexcept {
  if (!pattern.empty() && pattern.back() == '*') {
    pattern.remove_suffix(1);
    return key.substr(0, pattern.size()) == pattern;
  }
  return pattern == key;
}

void SiteRegistry::register_site(DynamicCallSite& site) {
  lookups_.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard lock(mu_);
  if (!by_id_.emplace(site.id(), &site).second) {
    throw CallSiteError("site " + std::to_string(site.id()) + " is already registered");
  }
  by_key_[site.key_text()].push_back(&site);
}

std::vector<DynamicCallSite*> SiteRegistry::sites_matching(std::string_view pattern) const {
  lookups_.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard lock(mu_);
  std::vector<DynamicCallSite*> out;
  bool prefix = !pattern.empty() && pattern.back() == '*';
  if (!prefix) {
    if (auto it = by_key_.find(pattern); it != by_key_.end()) out = it->second;
  } else {
    for (auto& [id, site] : by_id_)
      if (key_matches(pattern, site->key_text())) out.push_back(site);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id() < b->id(); });
  return out;
}

std::size_t SiteRegistry::size() const {
  lookups_.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard lock(mu_);
  return by_id_.size();
}

MetricsSnapshot metrics(const SiteRegistry& r, std::string_view pattern) {
  MetricsSnapshot snap;
  for (auto* site : r.sites_matching(pattern)) {
    SiteMetrics m;
    m.key = site->key_text();
    m.id = site->id();
    m.semantics = site->semantics();
    m.invocation_count = site->invocation_count();
    m.bootstrap_count = site->bootstrap_count();
    m.type = site->type().str();
    m.target = site->target().describe();
    m.aspects = site->aspects();
    snap.sites.push_back(std::move(m));
  }
  snap.site_count = snap.sites.size();
  return snap;
}

}  // namespace fluxvm
