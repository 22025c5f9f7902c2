#pragma once

#include <string>
#include <string_view>

#include "fluxvm/bytecode/module.hpp"

namespace fluxvm {

enum class InvocationKind : std::uint8_t { Static, Virtual, Special, Interface };

std::string_view kind_name(InvocationKind k) noexcept;
std::optional<InvocationKind> kind_from_name(std::string_view s) noexcept;
std::optional<InvocationKind> kind_of(Opcode op) noexcept;

/// Uniform symbolic name of a dynamic call site:
///   `kind:Owner.method:(params)ret`
/// For every kind but static, the receiver is parameter 0 of `type`.
struct SiteKey {
  InvocationKind kind = InvocationKind::Static;
  std::string owner;
  std::string method;
  FunctionType type;

  static SiteKey parse(std::string_view text);
  std::string str() const;
  /// `Owner.method:(params)ret`, the key without its kind prefix.
  std::string target_str() const;

  bool operator==(const SiteKey&) const = default;
};

class TransformError : public Error {
 public:
  using Error::Error;
};

/// Builds the site key of one of the four classic invoke instructions.
SiteKey site_key_of(const Instruction& instr, const ModuleFile& m);

}  // namespace fluxvm
