#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fluxvm/handles/handle.hpp"
#include "fluxvm/transformer/site_key.hpp"

namespace fluxvm {

/// Publication contract of set_target. Volatile: an invocation that starts
/// after set_target returns sees the new target on every thread. Mutable:
/// visibility is eventual.
enum class Semantics : std::uint8_t { Volatile, Mutable };

std::string_view semantics_name(Semantics s) noexcept;

class CallSiteError : public Error {
 public:
  using Error::Error;
};

/// Mutable cell binding one INVOKE_DYNAMIC occurrence to its current target.
/// The declared type never changes; targets must match it exactly.
class DynamicCallSite {
 public:
  DynamicCallSite(SiteKey key, std::uint64_t site_id, FunctionType type, Semantics semantics,
                  FunctionHandle initial);

  DynamicCallSite(const DynamicCallSite&) = delete;
  DynamicCallSite& operator=(const DynamicCallSite&) = delete;

  const SiteKey& key() const noexcept { return key_; }
  const std::string& key_text() const noexcept { return key_text_; }
  std::uint64_t id() const noexcept { return id_; }
  const FunctionType& type() const noexcept { return type_; }
  Semantics semantics() const noexcept { return semantics_; }

  /// Call-path read of the current target tree.
  const HandleNode* target_node() const noexcept { return target_.load(std::memory_order_acquire); }

  FunctionHandle target() const;
  const FunctionHandle& initial_target() const noexcept { return initial_; }
  void set_target(const FunctionHandle& h);

  /// Unlocked increment: concurrent invocations of one site may lose counts.
  void count_invocation() noexcept {
    auto n = invocations_.load(std::memory_order_relaxed);
    if (n != UINT64_MAX) invocations_.store(n + 1, std::memory_order_relaxed);
  }
  std::uint64_t invocation_count() const noexcept { return invocations_.load(std::memory_order_relaxed); }

  void mark_bootstrapped() noexcept { bootstraps_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t bootstrap_count() const noexcept { return bootstraps_.load(std::memory_order_relaxed); }

  /// Labels of the aspects layered over the initial target, oldest first.
  std::vector<std::string> aspects() const;
  void push_aspect(std::string label);
  void clear_aspects();

 private:
  SiteKey key_;
  std::string key_text_;
  std::uint64_t id_;
  FunctionType type_;
  Semantics semantics_;
  FunctionHandle initial_;

  std::atomic<const HandleNode*> target_;
  std::atomic<std::uint64_t> invocations_{0};
  std::atomic<std::uint64_t> bootstraps_{0};

  mutable std::mutex mu_;
  FunctionHandle current_;
  // Every tree ever installed stays alive for the lifetime of the site, so
  // a reader holding a raw node pointer never sees it freed.
  std::vector<FunctionHandle> retained_;
  std::vector<std::string> aspects_;
};

/// Creates an unregistered site. Throws CallSiteError when `initial` does not
/// have type `type`.
std::unique_ptr<DynamicCallSite> make_site(const SiteKey& key, const FunctionType& type, Semantics semantics,
                                           FunctionHandle initial);

}  // namespace fluxvm
