#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fluxvm/bytecode/module.hpp"
#include "fluxvm/bytecode/value.hpp"

namespace fluxvm {

/// Assembly source of one shipped program.
struct CorpusSource {
  std::string_view name;
  std::string_view text;
};

std::span<const CorpusSource> corpus_sources();
std::optional<std::string_view> corpus_source(std::string_view name);

/// Assembles a shipped program. Throws std::out_of_range for unknown names.
ModuleFile corpus_module(std::string_view name);

/// A program that runs to completion without input.
struct CorpusCase {
  std::string_view name;
  std::vector<Value> args;
};

/// Every self-contained program with its entry arguments.
std::vector<CorpusCase> oracle_cases();

/// Name of the advice module loaded next to transformed programs.
inline constexpr std::string_view kAspectsModule = "aspects";

}  // namespace fluxvm
