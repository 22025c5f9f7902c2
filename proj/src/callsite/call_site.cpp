#include "fluxvm/callsite/call_site.hpp"

namespace fluxvm {

std::string_view semantics_name(Semantics s) noexcept {
  return s == Semantics::Volatile ? "volatile" : "mutable";
}

DynamicCallSite::DynamicCallSite(SiteKey key, std::uint64_t site_id, FunctionType type, Semantics semantics,
                                 FunctionHandle initial)
    : key_(std::move(key)),
      key_text_(key_.str()),
      id_(site_id),
      type_(std::move(type)),
      semantics_(semantics),
      initial_(initial),
      target_(initial.node()),
      current_(initial) {
  if (!initial_) throw CallSiteError("call site needs an initial target");
  if (!(initial_.type() == type_))
    throw CallSiteError("initial target " + initial_.type().str() + " does not match site type " + type_.str());
  retained_.push_back(initial_);
}

FunctionHandle DynamicCallSite::target() const {
  std::lock_guard lock(mu_);
  return current_;
}

void DynamicCallSite::set_target(const FunctionHandle& h) {
  if (!h) throw CallSiteError("empty target");
  if (!(h.type() == type_))
    throw CallSiteError("target type " + h.type().str() + " does not match site type " + type_.str());
  std::lock_guard lock(mu_);
  retained_.push_back(h);
  current_ = h;
  target_.store(h.node(), semantics_ == Semantics::Volatile ? std::memory_order_seq_cst
                                                            : std::memory_order_release);
}

std::vector<std::string> DynamicCallSite::aspects() const {
  std::lock_guard lock(mu_);
  return aspects_;
}

void DynamicCallSite::push_aspect(std::string label) {
  std::lock_guard lock(mu_);
  aspects_.push_back(std::move(label));
}

void DynamicCallSite::clear_aspects() {
  std::lock_guard lock(mu_);
  aspects_.clear();
}

std::unique_ptr<DynamicCallSite> make_site(const SiteKey& key, const FunctionType& type, Semantics semantics,
                                           FunctionHandle initial) {
  static std::atomic<std::uint64_t> next_id{1};
  if (!initial) throw CallSiteError("call site needs an initial target");
  if (!(initial.type() == type))
    throw CallSiteError("initial target " + initial.type().str() + " does not match site type " + type.str());
  return std::make_unique<DynamicCallSite>(key, next_id.fetch_add(1, std::memory_order_relaxed), type, semantics,
                                           std::move(initial));
}

}  // namespace fluxvm
