#pragma once

#include <cstdint>

#include "fluxvm/bytecode/module.hpp"
#include "fluxvm/transformer/site_key.hpp"

namespace fluxvm {

struct TransformStats {
  std::uint64_t classes_transformed = 0;
  std::uint64_t methods_transformed = 0;
  std::uint64_t sites_rewritten = 0;
  double elapsed_ms = 0.0;
};

struct TransformResult {
  ModuleFile module;
  TransformStats stats;
};

/// Rewrites every INVOKE_STATIC/VIRTUAL/SPECIAL/INTERFACE into an equivalent
/// INVOKE_DYNAMIC named by its SiteKey. Only the rewritten instructions change;
/// new pool entries are appended, so every other byte of code stays put.
/// Already-dynamic sites are left untouched.
TransformResult transform_module(const ModuleFile& m);

}  // namespace fluxvm
