#include "fluxvm/vm/bootstrap.hpp"

#include <fmt/format.h>

#include "fluxvm/vm/runtime_image.hpp"

namespace fluxvm {

namespace {

std::unique_ptr<DynamicCallSite> link_kind(InvocationKind kind, const RuntimeImage& image, const SiteKey& key,
                                           const FunctionType& type, Semantics semantics) {
  if (key.kind != kind)
    throw VmError(VmErrc::LinkError, fmt::format("{} bootstrap given {}", kind_name(kind), key.str()));
  if (!(key.type == type))
    throw VmError(VmErrc::LinkError, fmt::format("site type {} differs from key {}", type.str(), key.str()));
  try {
    return make_site(key, type, semantics, lookup_direct(kind, key.owner, key.method, key.type, image));
  } catch (const HandleError& e) {
    throw VmError(VmErrc::LinkError, fmt::format("cannot link {}: {}", key.str(), e.what()));
  }
}

}  // namespace

std::unique_ptr<DynamicCallSite> bootstrap_static(const RuntimeImage& image, const SiteKey& key,
                                                  const FunctionType& type, Semantics semantics) {
  return link_kind(InvocationKind::Static, image, key, type, semantics);
}

std::unique_ptr<DynamicCallSite> bootstrap_virtual(const RuntimeImage& image, const SiteKey& key,
                                                   const FunctionType& type, Semantics semantics) {
  return link_kind(InvocationKind::Virtual, image, key, type, semantics);
}

std::unique_ptr<DynamicCallSite> bootstrap_special(const RuntimeImage& image, const SiteKey& key,
                                                   const FunctionType& type, Semantics semantics) {
  return link_kind(InvocationKind::Special, image, key, type, semantics);
}

std::unique_ptr<DynamicCallSite> bootstrap_interface(const RuntimeImage& image, const SiteKey& key,
                                                     const FunctionType& type, Semantics semantics) {
  return link_kind(InvocationKind::Interface, image, key, type, semantics);
}

std::unique_ptr<DynamicCallSite> bootstrap(const RuntimeImage& image, const SiteKey& key, const FunctionType& type,
                                           Semantics semantics) {
  switch (key.kind) {
    case InvocationKind::Static: return bootstrap_static(image, key, type, semantics);
    case InvocationKind::Virtual: return bootstrap_virtual(image, key, type, semantics);
    case InvocationKind::Special: return bootstrap_special(image, key, type, semantics);
    case InvocationKind::Interface: return bootstrap_interface(image, key, type, semantics);
  }
  throw VmError(VmErrc::LinkError, "unknown invocation kind");
}

}  // namespace fluxvm
