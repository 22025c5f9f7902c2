#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluxvm/bytecode/module.hpp"

namespace fluxvm {

enum class DiagKind {
  Structure,  // malformed module structure or pool
  Reference,  // unknown class/method/field or mismatched signature
  Control,    // jumps and stack discipline
};

struct Diagnostic {
  DiagKind kind = DiagKind::Structure;
  std::string function;  // qualified name, empty for module-level findings
  std::optional<std::uint32_t> pc;
  std::string message;

  std::string str() const;
};

/// Checks every structural, referential and stack-discipline invariant of a
/// module. An empty result means the module is safe to load.
std::vector<Diagnostic> validate(const ModuleFile& m);

/// Deepest operand stack reached on any path through `f`, or nullopt when the
/// code is not analyzable (bad operands, underflow).
std::optional<std::uint16_t> required_max_stack(const ModuleFile& m, const FunctionDef& f);

}  // namespace fluxvm
