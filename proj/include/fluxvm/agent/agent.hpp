#pragma once

#include <cstddef>
#include <mutex>
#include <string>
#include <string_view>

#include "json.hpp"

#include "fluxvm/callsite/registry.hpp"
#include "fluxvm/vm/runtime_image.hpp"

namespace fluxvm {

/// Management failure carrying a stable wire code such as `unknown-key`.
class AgentError : public Error {
 public:
  AgentError(std::string code, const std::string& message) : Error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Applies management operations to the call sites of one image. Operations
/// are serialized against each other; interpreter threads keep running.
class Agent {
 public:
  explicit Agent(RuntimeImage& image) : image_(image) {}

  /// Retargets every site under `method_type:old_target` to `new_target`.
  /// For non-static kinds the receiver may be omitted from `new_target`.
  std::size_t change_callsite_target(std::string_view method_type, std::string_view old_target,
                                     std::string_view new_target);

  /// Layers advice `owner.method:([A)[A` over every site matching `pattern`.
  std::size_t apply_before_aspect(std::string_view pattern, std::string_view owner, std::string_view method);

  /// Layers advice `owner.method:(A)A` over every value-returning site
  /// matching `pattern`.
  std::size_t apply_after_aspect(std::string_view pattern, std::string_view owner, std::string_view method);

  /// Reinstalls the link-time target of every site under `key`.
  std::size_t reset_callsite(std::string_view key);

  MetricsSnapshot list_callsites(std::string_view pattern = "*") const;

  /// Dispatches one request object and never throws.
  nlohmann::ordered_json handle(const nlohmann::json& request);
  /// Parses one JSON line and returns the serialized response.
  std::string handle_line(std::string_view line);

 private:
  std::vector<DynamicCallSite*> require_sites(std::string_view pattern, const char* code) const;
  FunctionHandle advice(std::string_view owner, std::string_view method, const FunctionType& type) const;

  RuntimeImage& image_;
  mutable std::mutex mu_;
};

nlohmann::ordered_json site_json(const SiteMetrics& m);
nlohmann::ordered_json snapshot_json(const MetricsSnapshot& s);

}  // namespace fluxvm
