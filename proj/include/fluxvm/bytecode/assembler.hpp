#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fluxvm/bytecode/module.hpp"
#include "fluxvm/bytecode/validator.hpp"

namespace fluxvm {

enum class AssembleErrc { Syntax, Semantic, Validation };

class AssembleError : public Error {
 public:
  AssembleError(AssembleErrc code, int line, int column, const std::string& message,
                std::vector<Diagnostic> diagnostics = {});

  AssembleErrc code() const noexcept { return code_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  AssembleErrc code_;
  int line_;
  int column_;
  std::vector<Diagnostic> diagnostics_;
};

/// Assembles `.fxa` text (grammar in docs/format.md) into a validated module.
/// Constant pool entries are interned in a fixed walk order, so assembling the
/// disassembly of an assembled module reproduces it bit for bit.
ModuleFile assemble(std::string_view source);

/// Canonical `.fxa` rendering. Explicit `stack`/`locals` are always emitted.
std::string disassemble(const ModuleFile& m);

}  // namespace fluxvm
