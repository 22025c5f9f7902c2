#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fluxvm/bytecode/assembler.hpp"
#include "fluxvm/corpus.hpp"
#include "fluxvm/handles/handle.hpp"
#include "fluxvm/vm/exec_context.hpp"
#include "fluxvm/vm/errors.hpp"
#include "fluxvm/vm/runtime_image.hpp"

namespace fluxvm::test {

/// Small functions used as handle targets, loaded next to the fib program.
inline constexpr const char* kHandleTargets = R"(import Str

class Ops {
  method double:(I)I static {
    LOAD 0
    CONST 2
    MUL
    RET
  }
  method sub:(II)I static {
    LOAD 0
    LOAD 1
    SUB
    RET
  }
  method join:(SS)S static {
    LOAD 0
    CONST "|"
    ADD
    LOAD 1
    ADD
    RET
  }
  method pair:(AA)S static {
    CONST "<"
    LOAD 0
    ADD
    CONST ","
    ADD
    LOAD 1
    ADD
    CONST ">"
    ADD
    RET
  }
  method triple:(AAA)S static {
    CONST ""
    LOAD 0
    ADD
    LOAD 1
    ADD
    LOAD 2
    ADD
    RET
  }
  method count:([A)I static {
    LOAD 0
    ARRLEN
    RET
  }
  method tag:(I[A)S static {
    LOAD 0
    CONST ":"
    ADD
    LOAD 1
    ADD
    RET
  }
  method show:(I)S static {
    CONST "#"
    LOAD 0
    ADD
    RET
  }
  method id:(A)A static {
    LOAD 0
    RET
  }
  method ignore:(I)V static {
    RET
  }
  method answer:(I)I static {
    CONST 42
    RET
  }
  method five:()I static {
    CONST 5
    RET
  }
}

class Base {
  method who:()I {
    CONST 1
    RET
  }
  method shout:(S)S {
    LOAD 1
    CONST "!"
    ADD
    RET
  }
}

class Derived extends Base {
  method who:()I {
    CONST 2
    RET
  }
}

fn makeBase:()LBase; {
  NEW Base
  RET
}

fn makeDerived:()LBase; {
  NEW Derived
  RET
}
)";

/// Image holding the fib corpus program and the handle targets, plus one
/// execution context.
struct HandleFixture {
  RuntimeImage image;
  ExecContext ctx{image};

  HandleFixture() : image(ImageOptions{Semantics::Volatile, [](std::string_view) {}, {}}) {
    image.load(corpus_module("classicfibo"), false);
    image.load(assemble(kHandleTargets), false);
  }

  FunctionHandle fn(std::string_view owner, std::string_view method, std::string_view type,
                    InvocationKind kind = InvocationKind::Static) {
    return lookup_direct(kind, owner, method, FunctionType::parse(type), image);
  }

  Value make(std::string_view factory) { return run(image, factory, {}); }
};

inline std::vector<Value> small_ints() {
  std::vector<Value> v;
  for (std::int64_t i = -3; i <= 3; ++i) v.push_back(Value::integer(i));
  return v;
}

inline std::vector<Value> short_strings() {
  std::vector<Value> v;
  for (const char* s : {"", "a", "b", "ab", "ba", " ", "%20"}) v.push_back(Value::string(s));
  return v;
}

/// Outcome of one invocation: the rendered value or the error code.
inline std::string observe(const FunctionHandle& h, const std::vector<Value>& args, ExecContext& ctx) {
  try {
    Value r = h.invoke(std::span<const Value>(args), ctx);
    return std::string(tag_name(r.tag())) + ":" + render(r);
  } catch (const VmError& e) {
    return std::string("error:") + std::string(vm_errc_name(e.code()));
  }
}

/// Every argument vector of length `arity` over `domain`.
inline std::vector<std::vector<Value>> tuples(const std::vector<Value>& domain, std::size_t arity) {
  std::vector<std::vector<Value>> out{{}};
  for (std::size_t i = 0; i < arity; ++i) {
    std::vector<std::vector<Value>> next;
    for (const auto& prefix : out) {
      for (const auto& v : domain) {
        auto t = prefix;
        t.push_back(v);
        next.push_back(std::move(t));
      }
    }
    out = std::move(next);
  }
  return out;
}

struct LawResult {
  std::size_t checks = 0;
  std::vector<std::string> violations;
};

/// Compares two handles over a set of argument vectors. `adapt` turns an
/// argument vector of `a` into the corresponding vector for `b`.
inline void compare(LawResult& r, const std::string& law, const FunctionHandle& a, const FunctionHandle& b,
                    const std::vector<std::vector<Value>>& inputs, ExecContext& ctx,
                    const std::function<std::vector<Value>(const std::vector<Value>&)>& adapt = {}) {
  for (const auto& args : inputs) {
    ++r.checks;
    auto lhs = observe(a, args, ctx);
    auto rhs = observe(b, adapt ? adapt(args) : args, ctx);
    if (lhs != rhs) {
      std::string shown;
      for (const auto& v : args) shown += render(v) + " ";
      r.violations.push_back(law + " on [" + shown + "]: " + lhs + " vs " + rhs);
    }
  }
}

/// The four identity and inversion laws of the combinator algebra, checked
/// exhaustively over small integers and short strings.
inline LawResult check_handle_laws(HandleFixture& fx) {
  LawResult r;
  auto& ctx = fx.ctx;
  auto ints = small_ints();
  auto strs = short_strings();
  std::vector<Value> mixed = ints;
  mixed.insert(mixed.end(), strs.begin(), strs.end());

  auto sub = fx.fn("Ops", "sub", "(II)I");
  auto join = fx.fn("Ops", "join", "(SS)S");
  auto pair = fx.fn("Ops", "pair", "(AA)S");
  auto triple = fx.fn("Ops", "triple", "(AAA)S");
  auto dbl = fx.fn("Ops", "double", "(I)I");
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto shout = fx.fn("Base", "shout", "(LBase;S)S", InvocationKind::Virtual);
  // Composite handles so the laws also hold over trees, not just leaves.
  auto fib2 = filter_arguments(fib, 0, {dbl});
  auto sub_bound = insert_arguments(sub, 1, {Value::integer(1)});

  struct Case {
    std::string name;
    FunctionHandle h;
    std::vector<std::vector<Value>> inputs;
  };
  std::vector<Case> cases = {
      {"sub", sub, tuples(ints, 2)},
      {"join", join, tuples(strs, 2)},
      {"pair", pair, tuples(mixed, 2)},
      {"triple", triple, tuples(mixed, 3)},
      {"fib", fib, tuples(ints, 1)},
      {"fib.filtered", fib2, tuples(ints, 1)},
      {"sub.bound", sub_bound, tuples(ints, 1)},
  };
  auto base = fx.make("makeBase");
  auto derived = fx.make("makeDerived");
  std::vector<std::vector<Value>> shout_inputs;
  for (const auto& s : strs) {
    shout_inputs.push_back({base, s});
    shout_inputs.push_back({derived, s});
  }
  cases.push_back({"shout", shout, shout_inputs});

  for (const auto& c : cases) {
    const auto arity = c.h.arity();
    for (std::size_t p = 0; p <= arity; ++p) {
      compare(r, "insert_arguments(" + c.name + "," + std::to_string(p) + ",[])", insert_arguments(c.h, p, {}), c.h,
              c.inputs, ctx);
      compare(r, "filter_arguments(" + c.name + "," + std::to_string(p) + ",[])", filter_arguments(c.h, p, {}), c.h,
              c.inputs, ctx);
    }

    FunctionType erased;
    for (std::size_t i = 0; i < arity; ++i) erased.params.push_back(TypeDescriptor::any());
    erased.ret = TypeDescriptor::any();
    compare(r, "as_type(as_type(" + c.name + ",erased),type)", as_type(as_type(c.h, erased), c.h.type()), c.h,
            c.inputs, ctx);

    // The spreader needs `A` trailing parameters, so spread the erased view.
    auto any_view = as_type(c.h, erased);
    for (std::size_t n = 0; n <= arity; ++n) {
      auto round = as_collector(as_spreader(any_view, n), n);
      compare(r, "as_collector(as_spreader(" + c.name + "," + std::to_string(n) + "))", round, any_view, c.inputs, ctx);
    }
  }
  return r;
}

}  // namespace fluxvm::test
