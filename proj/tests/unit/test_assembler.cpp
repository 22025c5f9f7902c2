#include "doctest.h"

#include <string>

#include "fluxvm/bytecode/assembler.hpp"
#include "fluxvm/bytecode/codec.hpp"
#include "fluxvm/corpus.hpp"
#include "fluxvm/transformer/transformer.hpp"

using namespace fluxvm;

namespace {

AssembleErrc assemble_error(const std::string& src) {
  try {
    assemble(src);
  } catch (const AssembleError& e) {
    return e.code();
  }
  FAIL("assembler accepted bad source");
  return AssembleErrc::Syntax;
}

}  // namespace

TEST_CASE("minimal program") {
  auto m = assemble("fn main:()I {\n  CONST 0\n  RET\n}\nentry main\n");
  CHECK(m.functions.size() == 1);
  CHECK(m.classes.empty());
  CHECK(m.entry_name() == "main");
  auto text = disassemble(m);
  CHECK(text.find("CONST 0") != std::string::npos);
  CHECK(text.find("RET") != std::string::npos);
}

TEST_CASE("constant pool entries are deduplicated") {
  auto m = assemble(R"(fn main:()I {
  CONST 7
  CONST 7
  ADD
  CONST "x"
  CONST "x"
  ADD
  POP
  RET
}
)");
  for (std::size_t i = 0; i < m.pool.entries().size(); ++i) {
    for (std::size_t j = i + 1; j < m.pool.entries().size(); ++j) {
      CHECK_FALSE(m.pool.entries()[i] == m.pool.entries()[j]);
    }
  }
  CHECK(m.pool.find(PoolEntry::int_const(7)).has_value());
}

TEST_CASE("disassembly re-assembles bit for bit") {
  for (const auto& src : corpus_sources()) {
    CAPTURE(src.name);
    auto m = assemble(src.text);
    auto again = assemble(disassemble(m));
    CHECK(encode(again) == encode(m));
    CHECK(disassemble(again) == disassemble(m));
  }
}

TEST_CASE("transformed modules disassemble and re-assemble identically") {
  for (const auto& src : corpus_sources()) {
    CAPTURE(src.name);
    auto t = transform_module(assemble(src.text)).module;
    auto text = disassemble(t);
    CHECK(text.find("INVOKE_STATIC") == std::string::npos);
    CHECK(text.find("INVOKE_VIRTUAL") == std::string::npos);
    CHECK(text.find("INVOKE_SPECIAL") == std::string::npos);
    CHECK(text.find("INVOKE_INTERFACE") == std::string::npos);
    auto again = assemble(text);
    CHECK(disassemble(again) == text);
  }
}

TEST_CASE("fib disassembly shows the dynamic site name") {
  auto t = transform_module(corpus_module("classicfibo")).module;
  CHECK(disassemble(t).find("INVOKE_DYNAMIC \"static:Fib.classicfibo:(I)I\"") != std::string::npos);
}

TEST_CASE("syntax errors carry positions") {
  try {
    assemble("fn main:()I {\n  CONST 0\n  FROB\n}\n");
    FAIL("accepted unknown mnemonic");
  } catch (const AssembleError& e) {
    CHECK(e.code() == AssembleErrc::Syntax);
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
  }
  CHECK(assemble_error("fn main:()I {\n  CONST 0\n  RET\n") == AssembleErrc::Syntax);
  CHECK(assemble_error("fn main:()I {\n  JMP Lnowhere\n}\n") != AssembleErrc::Validation);
  CHECK(assemble_error("fn main:(Q)I {\n  CONST 0\n  RET\n}\n") == AssembleErrc::Syntax);
}

TEST_CASE("semantic errors") {
  CHECK(assemble_error("fn main:()I {\n  INVOKE_STATIC nothing:()I\n  RET\n}\n") != AssembleErrc::Syntax);
  CHECK(assemble_error("class A extends Missing {\n}\n") != AssembleErrc::Syntax);
}

TEST_CASE("a jump into the middle of an instruction fails validation") {
  auto code = assemble_error("fn main:()I {\n  JMP 1\n  CONST 0\n  RET\n}\n");
  CHECK(code == AssembleErrc::Validation);
}

TEST_CASE("stack imbalance fails validation") {
  CHECK(assemble_error("fn main:()I {\n  ADD\n  RET\n}\n") == AssembleErrc::Validation);
  CHECK(assemble_error("fn main:()I {\n  CONST 1\n  CONST 2\n  RET\n}\n") == AssembleErrc::Validation);
}
