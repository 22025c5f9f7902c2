#include "fluxvm/corpus.hpp"

#include <stdexcept>
#include <string>

#include "fluxvm/bytecode/assembler.hpp"

namespace fluxvm {

std::optional<std::string_view> corpus_source(std::string_view name) {
  for (const auto& s : corpus_sources())
    if (s.name == name) return s.text;
  return std::nullopt;
}

ModuleFile corpus_module(std::string_view name) {
  auto text = corpus_source(name);
  if (!text) throw std::out_of_range("no corpus program named " + std::string(name));
  return assemble(*text);
}

std::vector<CorpusCase> oracle_cases() {
  return {
      {"arith", {}},
      {"arrays", {}},
      {"classicfibo", {Value::integer(15)}},
      {"counter_loop", {Value::integer(1000)}},
      {"iface", {}},
      {"linkedlist", {}},
      {"listener", {}},
      {"loops", {}},
      {"points", {}},
      {"recursion", {}},
      {"shapes", {}},
      {"strings", {}},
  };
}

}  // namespace fluxvm
