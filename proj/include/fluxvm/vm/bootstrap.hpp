#pragma once

#include <memory>

#include "fluxvm/callsite/call_site.hpp"

namespace fluxvm {

class RuntimeImage;

// Kind-specialized linkers: each resolves the original method of `key` and
// returns an unregistered site with that target. Resolution failure raises
// VmError(LinkError).
std::unique_ptr<DynamicCallSite> bootstrap_static(const RuntimeImage& image, const SiteKey& key,
                                                  const FunctionType& type, Semantics semantics);
std::unique_ptr<DynamicCallSite> bootstrap_virtual(const RuntimeImage& image, const SiteKey& key,
                                                   const FunctionType& type, Semantics semantics);
std::unique_ptr<DynamicCallSite> bootstrap_special(const RuntimeImage& image, const SiteKey& key,
                                                   const FunctionType& type, Semantics semantics);
std::unique_ptr<DynamicCallSite> bootstrap_interface(const RuntimeImage& image, const SiteKey& key,
                                                     const FunctionType& type, Semantics semantics);

/// Dispatches on key.kind.
std::unique_ptr<DynamicCallSite> bootstrap(const RuntimeImage& image, const SiteKey& key, const FunctionType& type,
                                           Semantics semantics);

}  // namespace fluxvm
