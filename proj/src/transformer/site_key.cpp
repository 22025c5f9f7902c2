#include "fluxvm/transformer/site_key.hpp"

#include <fmt/format.h>

namespace fluxvm {

std::string_view kind_name(InvocationKind k) noexcept {
  switch (k) {
    case InvocationKind::Static: return "static";
    case InvocationKind::Virtual: return "virtual";
    case InvocationKind::Special: return "special";
    case InvocationKind::Interface: return "interface";
  }
  return "?";
}

std::optional<InvocationKind> kind_from_name(std::string_view s) noexcept {
  if (s == "static") return InvocationKind::Static;
  if (s == "virtual") return InvocationKind::Virtual;
  if (s == "special") return InvocationKind::Special;
  if (s == "interface") return InvocationKind::Interface;
  return std::nullopt;
}

std::optional<InvocationKind> kind_of(Opcode op) noexcept {
  switch (op) {
    case Opcode::InvokeStatic: return InvocationKind::Static;
    case Opcode::InvokeVirtual: return InvocationKind::Virtual;
    case Opcode::InvokeSpecial: return InvocationKind::Special;
    case Opcode::InvokeInterface: return InvocationKind::Interface;
    default: return std::nullopt;
  }
}

SiteKey SiteKey::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw DescriptorError(fmt::format("malformed site key '{}'", text));
  auto kind = kind_from_name(text.substr(0, colon));
  if (!kind) throw DescriptorError(fmt::format("unknown invocation kind in site key '{}'", text));
  auto ref = MethodRef::parse(text.substr(colon + 1));
  if (*kind != InvocationKind::Static) {
    if (ref.owner.empty() || ref.type.params.empty() || ref.type.params[0] != TypeDescriptor::instance(ref.owner)) {
      throw DescriptorError(fmt::format("site key '{}' lacks its receiver parameter", text));
    }
  }
  return SiteKey{*kind, std::move(ref.owner), std::move(ref.method), std::move(ref.type)};
}

std::string SiteKey::target_str() const { return MethodRef{owner, method, type}.str(); }

std::string SiteKey::str() const { return std::string(kind_name(kind)) + ":" + target_str(); }

SiteKey site_key_of(const Instruction& instr, const ModuleFile& m) {
  auto kind = kind_of(instr.op);
  if (!kind) throw TransformError(fmt::format("{} is not a classic invoke instruction", mnemonic(instr.op)));
  const auto& entry = m.pool.at(static_cast<std::uint32_t>(instr.a));
  if (entry.tag != PoolTag::MethodRef) throw TransformError("invoke operand is not a method reference");
  auto ref = MethodRef::parse(entry.text);
  SiteKey key{*kind, ref.owner, ref.method, ref.type};
  if (*kind != InvocationKind::Static) {
    if (ref.owner.empty()) throw TransformError(fmt::format("{} has no receiver class", ref.str()));
    key.type = ref.type.with_receiver(TypeDescriptor::instance(ref.owner));
  }
  return key;
}

}  // namespace fluxvm
