#include "doctest.h"

#include <string>

#include "fluxvm/bytecode/assembler.hpp"
#include "fluxvm/bytecode/codec.hpp"
#include "fluxvm/bytecode/validator.hpp"
#include "fluxvm/corpus.hpp"
#include "fluxvm/transformer/transformer.hpp"

using namespace fluxvm;

namespace {

/// First instruction with opcode `op` whose method ref text contains `needle`.
const Instruction* find_invoke(const ModuleFile& m, Opcode op, const std::string& needle) {
  auto scan = [&](const FunctionDef& f) -> const Instruction* {
    for (const auto& in : f.code) {
      if (in.op == op && m.text(static_cast<std::uint16_t>(in.a)).find(needle) != std::string::npos) return &in;
    }
    return nullptr;
  };
  for (const auto& c : m.classes) {
    for (const auto& f : c.methods) {
      if (auto* p = scan(f)) return p;
    }
  }
  for (const auto& f : m.functions) {
    if (auto* p = scan(f)) return p;
  }
  return nullptr;
}

std::size_t count_ops(const ModuleFile& m, bool (*pred)(Opcode)) {
  std::size_t n = 0;
  auto scan = [&](const FunctionDef& f) {
    for (const auto& in : f.code) n += pred(in.op) ? 1 : 0;
  };
  for (const auto& c : m.classes) {
    for (const auto& f : c.methods) scan(f);
  }
  for (const auto& f : m.functions) scan(f);
  return n;
}

bool is_dynamic(Opcode op) { return op == Opcode::InvokeDynamic; }

}  // namespace

TEST_CASE("site keys of the four invoke kinds") {
  auto fib = corpus_module("classicfibo");
  auto* s = find_invoke(fib, Opcode::InvokeStatic, "classicfibo");
  REQUIRE(s);
  CHECK(site_key_of(*s, fib).str() == "static:Fib.classicfibo:(I)I");

  auto points = corpus_module("points");
  auto* sp = find_invoke(points, Opcode::InvokeSpecial, "<init>");
  REQUIRE(sp);
  CHECK(site_key_of(*sp, points).str() == "special:Point.<init>:(LPoint;II)V");

  auto listener = corpus_module("listener");
  auto* v = find_invoke(listener, Opcode::InvokeVirtual, "counterIncrement");
  REQUIRE(v);
  CHECK(site_key_of(*v, listener).str() == "virtual:Listener.counterIncrement:(LListener;)V");

  auto iface = corpus_module("iface");
  auto* i = find_invoke(iface, Opcode::InvokeInterface, "greet");
  REQUIRE(i);
  CHECK(site_key_of(*i, iface).str() == "interface:Greeter.greet:(LGreeter;S)S");

  CHECK_THROWS_AS(site_key_of(Instruction{Opcode::Const, 1}, fib), TransformError);
}

TEST_CASE("equal invocations share one key") {
  auto fib = corpus_module("classicfibo");
  std::vector<std::string> keys;
  for (const auto& in : fib.classes[0].methods[0].code) {
    if (in.op == Opcode::InvokeStatic) keys.push_back(site_key_of(in, fib).str());
  }
  REQUIRE(keys.size() == 2);
  CHECK(keys[0] == keys[1]);
}

TEST_CASE("fib transform rewrites its static calls") {
  auto m = corpus_module("classicfibo");
  auto r = transform_module(m);
  CHECK(r.stats.sites_rewritten == 3);
  CHECK(r.stats.methods_transformed == 2);
  CHECK(r.stats.classes_transformed == 1);
  CHECK(r.stats.elapsed_ms >= 0.0);
  CHECK(count_ops(r.module, is_classic_invoke) == 0);
  CHECK(count_ops(r.module, is_dynamic) == 3);
  for (const auto& in : r.module.classes[0].methods[0].code) {
    if (in.op != Opcode::InvokeDynamic) continue;
    CHECK(r.module.text(static_cast<std::uint16_t>(in.a)) == "static:Fib.classicfibo:(I)I");
    CHECK(r.module.text(in.b) == "(I)I");
    CHECK(in.tag == kBuiltinBootstrap);
  }
}

TEST_CASE("virtual sites carry the receiver as parameter 0") {
  auto r = transform_module(corpus_module("listener"));
  bool seen = false;
  for (const auto& in : r.module.classes[0].methods[2].code) {
    if (in.op != Opcode::InvokeDynamic) continue;
    auto name = r.module.text(static_cast<std::uint16_t>(in.a));
    if (name == "virtual:Listener.counterIncrement:(LListener;)V") {
      CHECK(r.module.text(in.b) == "(LListener;)V");
      seen = true;
    }
  }
  CHECK(seen);
}

TEST_CASE("a module without invokes is unchanged") {
  auto m = assemble("fn main:()I {\n  CONST 0\n  RET\n}\nentry main\n");
  auto r = transform_module(m);
  CHECK(r.module == m);
  CHECK(r.stats.sites_rewritten == 0);
  CHECK(r.stats.methods_transformed == 0);
}

TEST_CASE("transformation is complete, valid, idempotent and deterministic") {
  for (const auto& src : corpus_sources()) {
    CAPTURE(src.name);
    auto m = assemble(src.text);
    auto once = transform_module(m);
    CHECK(validate(once.module).empty());
    CHECK(count_ops(once.module, is_classic_invoke) == 0);
    CHECK(count_ops(once.module, is_dynamic) == count_ops(m, is_classic_invoke));
    CHECK(once.stats.sites_rewritten == count_ops(m, is_classic_invoke));

    auto again = transform_module(m);
    CHECK(encode(again.module) == encode(once.module));

    auto twice = transform_module(once.module);
    CHECK(twice.module == once.module);
    CHECK(twice.stats.sites_rewritten == 0);
  }
}

TEST_CASE("non-invoke instructions are untouched") {
  for (const auto& src : corpus_sources()) {
    CAPTURE(src.name);
    auto m = assemble(src.text);
    auto t = transform_module(m).module;
    REQUIRE(t.classes.size() == m.classes.size());
    REQUIRE(t.functions.size() == m.functions.size());
    // Pool entries are only appended.
    for (std::size_t i = 1; i <= m.pool.size(); ++i) CHECK(t.pool.at(i) == m.pool.at(i));
    auto same_code = [](const FunctionDef& a, const FunctionDef& b) {
      REQUIRE(a.code.size() == b.code.size());
      for (std::size_t i = 0; i < a.code.size(); ++i) {
        if (is_classic_invoke(a.code[i].op)) {
          CHECK(b.code[i].op == Opcode::InvokeDynamic);
        } else {
          CHECK(a.code[i] == b.code[i]);
        }
      }
    };
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
      for (std::size_t f = 0; f < m.classes[c].methods.size(); ++f) {
        same_code(m.classes[c].methods[f], t.classes[c].methods[f]);
      }
    }
    for (std::size_t f = 0; f < m.functions.size(); ++f) same_code(m.functions[f], t.functions[f]);
  }
}

TEST_CASE("invalid input is rejected") {
  auto m = corpus_module("classicfibo");
  m.classes[0].methods[0].code[0].a = 999;
  CHECK_THROWS(transform_module(m));
}
