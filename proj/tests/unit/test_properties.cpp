#include "doctest.h"

#include <random>

#include "fluxvm/bytecode/codec.hpp"
#include "fluxvm/bytecode/validator.hpp"
#include "helpers.hpp"

using namespace fluxvm;
using namespace fluxvm::test;

namespace {

std::vector<Value> args_of(std::string_view name) {
  for (auto& c : oracle_cases()) {
    if (c.name == name) return c.args;
  }
  return {};
}

/// Loads and runs a module that passed validation. Only library errors are
/// acceptable outcomes; anything else (a crash) fails the test binary.
void exercise(const ModuleFile& m, std::string_view name) {
  for (bool transform : {false, true}) {
    try {
      RuntimeImage img(ImageOptions{Semantics::Volatile, [](std::string_view) {},
                                    []() -> std::optional<std::int64_t> { return -1; }});
      img.load(m, transform);
      ExecOptions eo;
      eo.fuel = 200000;
      eo.frame_limit = 2000;
      eo.check_stack_bounds = true;
      run(img, m.entry_name().value_or("main"), args_of(name), eo);
    } catch (const VmError& e) {
      if (std::string_view(e.what()).find("exceeds max_stack") != std::string_view::npos) {
        FAIL_CHECK("validated module overflowed its operand stack: " << e.what());
      }
    } catch (const Error&) {
    }
  }
}

}  // namespace

TEST_CASE("byte-level corruption never crashes decode, validate, load or run") {
  std::mt19937_64 rng(20240601);
  std::size_t decoded = 0, validated = 0;
  for (const auto& src : corpus_sources()) {
    auto m = assemble(src.text);
    auto bytes = encode(m);
    std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 300; ++trial) {
      auto b = bytes;
      int flips = 1 + trial % 4;
      for (int k = 0; k < flips; ++k) b[pos(rng)] = static_cast<std::uint8_t>(byte(rng));
      ModuleFile d;
      try {
        d = decode(b);
      } catch (const DecodeError&) {
        continue;
      }
      ++decoded;
      if (!validate(d).empty()) continue;
      ++validated;
      exercise(d, src.name);
    }
  }
  MESSAGE("decoded " << decoded << ", validated " << validated);
  CHECK(decoded > 0);
}

TEST_CASE("operand index corruption is caught before execution") {
  std::mt19937_64 rng(7);
  std::size_t caught = 0, harmless = 0;
  for (const auto& src : corpus_sources()) {
    auto base = assemble(src.text);
    std::vector<FunctionDef*> fns;
    for (auto& c : base.classes) {
      for (auto& f : c.methods) fns.push_back(&f);
    }
    for (auto& f : base.functions) fns.push_back(&f);
    std::uniform_int_distribution<int> index(0, static_cast<int>(base.pool.size()) + 4);
    for (std::size_t fi = 0; fi < fns.size(); ++fi) {
      for (std::size_t i = 0; i < fns[fi]->code.size(); ++i) {
        auto k = operand_kind(fns[fi]->code[i].op);
        if (k == OperandKind::None || k == OperandKind::Local || k == OperandKind::Jump) continue;
        for (int trial = 0; trial < 4; ++trial) {
          auto m = base;
          std::vector<FunctionDef*> mf;
          for (auto& c : m.classes) {
            for (auto& f : c.methods) mf.push_back(&f);
          }
          for (auto& f : m.functions) mf.push_back(&f);
          auto& in = mf[fi]->code[i];
          in.a = index(rng);
          if (k == OperandKind::Dynamic && trial % 2) in.b = static_cast<std::uint16_t>(index(rng));
          if (validate(m).empty()) {
            ++harmless;
            exercise(m, src.name);
          } else {
            ++caught;
          }
        }
      }
    }
  }
  MESSAGE("caught " << caught << ", still valid " << harmless);
  CHECK(caught > 0);
}

TEST_CASE("declared max_stack covers the deepest path of every corpus function") {
  for (const auto& src : corpus_sources()) {
    CAPTURE(src.name);
    auto m = assemble(src.text);
    auto check_fn = [&](const FunctionDef& f) {
      if (f.is_abstract()) return;
      auto need = required_max_stack(m, f);
      REQUIRE(need.has_value());
      CHECK(*need <= f.max_stack);
    };
    for (const auto& c : m.classes) {
      for (const auto& f : c.methods) check_fn(f);
    }
    for (const auto& f : m.functions) check_fn(f);
  }
}

TEST_CASE("validated corpus programs stay within max_stack while running") {
  ExecOptions eo;
  eo.check_stack_bounds = true;
  for (const auto& e : corpus_expectations()) {
    for (bool transform : {false, true}) {
      CAPTURE(e.name);
      CapturedImage img;
      img->load(corpus_module(e.name), transform);
      CHECK_NOTHROW(run(*img, "main", args_of(e.name), eo));
    }
  }
}

TEST_CASE("load refuses a module whose max_stack is too small") {
  auto m = assemble("fn main:()I {\n  CONST 1\n  CONST 2\n  ADD\n  RET\n}\n");
  m.functions[0].max_stack = 1;
  CapturedImage img;
  CHECK_THROWS_AS(img->load(m, false), LoadError);
}

TEST_CASE("transform round-trips through the binary format") {
  for (const auto& src : corpus_sources()) {
    CAPTURE(src.name);
    auto t = transform_module(assemble(src.text)).module;
    CHECK(decode(encode(t)) == t);
  }
}

TEST_CASE("re-assembled programs are execution-equivalent") {
  for (const auto& e : corpus_expectations()) {
    CAPTURE(e.name);
    CapturedImage img;
    img->load(assemble(disassemble(corpus_module(e.name))), true);
    auto r = run(*img, "main", args_of(e.name));
    CHECK(img.take() == e.out);
    CHECK(r == Value::integer(e.result));
  }
}
