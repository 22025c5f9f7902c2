#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluxvm/bytecode/module.hpp"
#include "fluxvm/callsite/registry.hpp"
#include "fluxvm/transformer/transformer.hpp"
#include "fluxvm/vm/errors.hpp"
#include "fluxvm/vm/runtime_types.hpp"

namespace fluxvm {

using OutputSink = std::function<void(std::string_view)>;

/// Per-instruction link state of one INVOKE_DYNAMIC occurrence.
struct SiteSlot {
  SiteKey key;
  FunctionType type;
  std::string location;  // Owner.fn:(..)R@pc
  std::atomic<DynamicCallSite*> site{nullptr};
  std::atomic<std::uint32_t> bootstrap_runs{0};
  std::unique_ptr<DynamicCallSite> owned;
};

struct ImageOptions {
  Semantics site_semantics = Semantics::Volatile;
  /// Receives PRINT output, newline included. Defaults to stdout.
  OutputSink sink;
  /// Consulted by Sys.awaitEvent when nothing was posted. nullopt blocks.
  std::function<std::optional<std::int64_t>()> event_source;
};

/// Instrumentation counters for the link and lookup machinery.
struct ImageStats {
  std::atomic<std::uint64_t> bootstraps{0};
  std::atomic<std::uint64_t> method_lookups{0};
};

/// Blocking queue behind Sys.awaitEvent.
class EventQueue {
 public:
  void post(std::int64_t event);
  std::int64_t take(const std::function<std::optional<std::int64_t>()>& fallback);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::int64_t> events_;
};

struct LoadReport {
  std::optional<TransformStats> transform;
};

/// Everything shared by interpreter threads: loaded code, classes, dynamic
/// call-site slots and the site registry. Loading must finish before code
/// runs; afterwards only call-site state changes.
class RuntimeImage {
 public:
  explicit RuntimeImage(ImageOptions options = {});
  ~RuntimeImage();
  RuntimeImage(const RuntimeImage&) = delete;
  RuntimeImage& operator=(const RuntimeImage&) = delete;

  /// Validates, optionally transforms, then installs `m`.
  LoadReport load(const ModuleFile& m, bool transform);

  /// Modules as installed (after transformation).
  const std::vector<std::unique_ptr<ModuleFile>>& modules() const noexcept { return modules_; }

  const RuntimeClass* find_class(std::string_view name) const;
  const RuntimeFunction* find_module_function(std::string_view name, std::string_view type) const;
  /// `name` is a module function or `Class.method` static method.
  const RuntimeFunction* find_entry(std::string_view name) const;
  std::optional<std::uint32_t> find_selector(std::string_view signature) const;

  /// Dispatch class of a value: objects by class, strings by the builtin Str.
  const RuntimeClass* class_of(const Value& v) const noexcept;

  SiteRegistry& registry() noexcept { return registry_; }
  const SiteRegistry& registry() const noexcept { return registry_; }
  Semantics site_semantics() const noexcept { return options_.site_semantics; }
  ImageStats& stats() const noexcept { return stats_; }
  EventQueue& events() noexcept { return events_; }

  void emit(std::string_view text) const;
  std::int64_t await_event();

  /// Links `slot` on first execution. Exactly one caller bootstraps; the rest
  /// observe its site.
  DynamicCallSite& link(SiteSlot& slot);

  std::vector<const SiteSlot*> slots() const;

 private:
  friend class Loader;

  void install_builtins();

  ImageOptions options_;
  std::vector<std::unique_ptr<ModuleFile>> modules_;
  std::map<std::string, std::unique_ptr<RuntimeClass>, std::less<>> classes_;
  std::vector<std::unique_ptr<RuntimeFunction>> functions_;
  std::map<std::string, RuntimeFunction*, std::less<>> module_functions_;  // name:(..)R
  std::map<std::string, std::uint32_t, std::less<>> selectors_;
  std::vector<std::unique_ptr<SiteSlot>> slots_;
  const RuntimeClass* str_class_ = nullptr;

  SiteRegistry registry_;
  std::mutex link_mu_;
  mutable ImageStats stats_;
  EventQueue events_;
};

}  // namespace fluxvm
