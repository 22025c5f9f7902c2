#include "fluxvm/transformer/transformer.hpp"

#include <chrono>
#include <fmt/format.h>

#include "fluxvm/bytecode/validator.hpp"

namespace fluxvm {
namespace {

bool rewrite_function(ModuleFile& out, FunctionDef& f, std::uint64_t& sites) {
  bool touched = false;
  for (auto& in : f.code) {
    if (!is_classic_invoke(in.op)) continue;
    auto key = site_key_of(in, out);
    Instruction dyn;
    dyn.op = Opcode::InvokeDynamic;
    dyn.a = out.pool.intern(PoolEntry::utf8(key.str()));
    dyn.b = out.pool.intern(PoolEntry::type(key.type.str()));
    dyn.tag = kBuiltinBootstrap;
    in = dyn;
    ++sites;
    touched = true;
  }
  return touched;
}

}  // namespace

TransformResult transform_module(const ModuleFile& m) {
  auto start = std::chrono::steady_clock::now();
  if (auto diags = validate(m); !diags.empty()) {
    throw TransformError(fmt::format("cannot transform an invalid module: {}", diags.front().str()));
  }
  TransformResult r{m, {}};
  for (auto& c : r.module.classes) {
    bool class_touched = false;
    for (auto& f : c.methods) {
      if (rewrite_function(r.module, f, r.stats.sites_rewritten)) {
        ++r.stats.methods_transformed;
        class_touched = true;
      }
    }
    if (class_touched) ++r.stats.classes_transformed;
  }
  for (auto& f : r.module.functions) {
    if (rewrite_function(r.module, f, r.stats.sites_rewritten)) ++r.stats.methods_transformed;
  }
  r.stats.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace fluxvm
