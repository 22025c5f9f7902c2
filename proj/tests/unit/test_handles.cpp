#include "doctest.h"

#include "handle_fixture.hpp"
#include "helpers.hpp"

using namespace fluxvm;
using namespace fluxvm::test;

namespace {

HandleErrc handle_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const HandleError& e) {
    return e.code();
  }
  FAIL("no HandleError raised");
  return HandleErrc::NoSuchMethod;
}

VmErrc vm_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const VmError& e) {
    return e.code();
  }
  FAIL("no VmError raised");
  return VmErrc::BadArgument;
}

}  // namespace

TEST_CASE("lookup_direct") {
  HandleFixture fx;
  auto replace = fx.fn("Str", "replace_all", "(LStr;SS)S", InvocationKind::Virtual);
  CHECK(replace.type().str() == "(LStr;SS)S");
  CHECK(replace.node()->as_direct() != nullptr);

  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  CHECK(fib.invoke({Value::integer(10)}, fx.ctx) == Value::integer(fib_oracle(10)));

  CHECK(handle_error([&] { fx.fn("Fib", "nothing", "(I)I"); }) == HandleErrc::NoSuchMethod);
  CHECK(handle_error([&] { fx.fn("Ghost", "x", "()V"); }) == HandleErrc::NoSuchMethod);
  CHECK(handle_error([&] { fx.fn("Base", "who", "(LBase;)I"); }) == HandleErrc::KindMismatch);
  CHECK(handle_error([&] { fx.fn("Fib", "classicfibo", "(I)I", InvocationKind::Virtual); }) ==
        HandleErrc::KindMismatch);
  CHECK(handle_error([&] { fx.fn("Base", "who", "()I", InvocationKind::Virtual); }) != HandleErrc::NoSuchMethod);
  CHECK(handle_error([&] { fx.fn("Fib", "classicfibo", "(S)I"); }) == HandleErrc::TypeMismatch);
}

TEST_CASE("virtual handles dispatch on the receiver") {
  HandleFixture fx;
  auto who = fx.fn("Base", "who", "(LBase;)I", InvocationKind::Virtual);
  CHECK(who.invoke({fx.make("makeBase")}, fx.ctx) == Value::integer(1));
  CHECK(who.invoke({fx.make("makeDerived")}, fx.ctx) == Value::integer(2));
  auto exact = fx.fn("Base", "who", "(LBase;)I", InvocationKind::Special);
  CHECK(exact.invoke({fx.make("makeDerived")}, fx.ctx) == Value::integer(1));
  CHECK(vm_error([&] { who.invoke({Value::null()}, fx.ctx); }) == VmErrc::NullReceiver);
}

TEST_CASE("insert_arguments reproduces the replace-spaces listing") {
  HandleFixture fx;
  auto replace = fx.fn("Str", "replace_all", "(LStr;SS)S", InvocationKind::Virtual);
  auto bound = insert_arguments(replace, 1, {Value::string("%20"), Value::string(" ")});
  CHECK(bound.type().str() == "(LStr;)S");
  CHECK(render(bound.invoke({Value::string("A%20B%20C")}, fx.ctx)) == "A B C");

  CHECK(handle_error([&] { insert_arguments(replace, 1, {Value::integer(1)}); }) == HandleErrc::Unassignable);
  CHECK(handle_error([&] { insert_arguments(replace, 3, {Value::string("x")}); }) == HandleErrc::IndexOutOfRange);
  CHECK(handle_error([&] { insert_arguments(replace, 5, {}); }) == HandleErrc::IndexOutOfRange);

  auto sub = fx.fn("Ops", "sub", "(II)I");
  auto sub_from_10 = insert_arguments(sub, 0, {Value::integer(10)});
  CHECK(sub_from_10.invoke({Value::integer(3)}, fx.ctx) == Value::integer(7));
  auto minus_3 = insert_arguments(sub, 1, {Value::integer(3)});
  CHECK(minus_3.invoke({Value::integer(10)}, fx.ctx) == Value::integer(7));
}

TEST_CASE("filter_arguments") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto dbl = fx.fn("Ops", "double", "(I)I");
  auto show = fx.fn("Ops", "show", "(I)S");
  auto f = filter_arguments(fib, 0, {dbl});
  CHECK(f.invoke({Value::integer(5)}, fx.ctx) == Value::integer(fib_oracle(10)));

  auto sub = fx.fn("Ops", "sub", "(II)I");
  auto second_doubled = filter_arguments(sub, 1, {dbl});
  CHECK(second_doubled.invoke({Value::integer(10), Value::integer(3)}, fx.ctx) == Value::integer(4));

  CHECK(handle_error([&] { filter_arguments(fib, 0, {show}); }) == HandleErrc::TypeMismatch);
  CHECK(handle_error([&] { filter_arguments(fib, 1, {dbl}); }) == HandleErrc::IndexOutOfRange);
  CHECK(handle_error([&] { filter_arguments(sub, 0, {sub}); }) == HandleErrc::TypeMismatch);
}

TEST_CASE("filter_return_value") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto dbl = fx.fn("Ops", "double", "(I)I");
  auto show = fx.fn("Ops", "show", "(I)S");
  CHECK(filter_return_value(fib, dbl).invoke({Value::integer(10)}, fx.ctx) ==
        Value::integer(2 * fib_oracle(10)));
  auto shown = filter_return_value(fib, show);
  CHECK(shown.type().str() == "(I)S");
  CHECK(render(shown.invoke({Value::integer(10)}, fx.ctx)) == "#55");

  auto id = fx.fn("Ops", "id", "(A)A");
  auto through_id = as_type(filter_return_value(as_type(fib, FunctionType::parse("(I)A")), id), fib.type());
  for (const auto& v : small_ints()) {
    if (v.as_int() < 0) continue;
    CHECK(through_id.invoke({v}, fx.ctx) == fib.invoke({v}, fx.ctx));
  }

  auto ignore = fx.fn("Ops", "ignore", "(I)V");
  CHECK(handle_error([&] { filter_return_value(ignore, dbl); }) == HandleErrc::VoidReturn);
  CHECK(handle_error([&] { filter_return_value(fib, id); }) ==
        HandleErrc::TypeMismatch);
  CHECK(handle_error([&] { filter_return_value(fib, fx.fn("Ops", "sub", "(II)I")); }) == HandleErrc::TypeMismatch);
}

TEST_CASE("as_spreader") {
  HandleFixture fx;
  auto pair = fx.fn("Ops", "pair", "(AA)S");
  auto spread = as_spreader(pair, 2);
  CHECK(spread.type().str() == "([A)S");
  auto x = Value::integer(1);
  auto y = Value::string("y");
  CHECK(spread.invoke({Value::array({x, y})}, fx.ctx) == pair.invoke({x, y}, fx.ctx));
  CHECK(vm_error([&] { spread.invoke({Value::array({x, y, x})}, fx.ctx); }) == VmErrc::SpreadMismatch);
  CHECK(vm_error([&] { spread.invoke({Value::null()}, fx.ctx); }) == VmErrc::SpreadMismatch);

  auto zero = as_spreader(pair, 0);
  CHECK(zero.type().str() == "(AA[A)S");
  CHECK(zero.invoke({x, y, Value::array(std::vector<Value>{})}, fx.ctx) == pair.invoke({x, y}, fx.ctx));
  CHECK(vm_error([&] { zero.invoke({x, y, Value::array({x})}, fx.ctx); }) == VmErrc::SpreadMismatch);

  CHECK(handle_error([&] { as_spreader(pair, 3); }) == HandleErrc::IndexOutOfRange);
  CHECK(handle_error([&] { as_spreader(fx.fn("Ops", "sub", "(II)I"), 1); }) == HandleErrc::TypeMismatch);
}

TEST_CASE("as_collector") {
  HandleFixture fx;
  auto image_advice = lookup_direct(InvocationKind::Static, "Ops", "count", FunctionType::parse("([A)I"), fx.image);
  auto collected = as_collector(image_advice, 2);
  CHECK(collected.type().str() == "(AA)I");
  CHECK(collected.invoke({Value::integer(1), Value::integer(2)}, fx.ctx) == Value::integer(2));
  auto none = as_collector(image_advice, 0);
  CHECK(none.type().str() == "()I");
  CHECK(none.invoke({}, fx.ctx) == Value::integer(0));

  auto tag = fx.fn("Ops", "tag", "(I[A)S");
  auto tagged = as_collector(tag, 3);
  CHECK(tagged.type().str() == "(IAAA)S");
  CHECK(render(tagged.invoke({Value::integer(7), Value::integer(1), Value::string("x"), Value::null()}, fx.ctx)) ==
        "7:[1, x, null]");

  CHECK(handle_error([&] { as_collector(fx.fn("Fib", "classicfibo", "(I)I"), 1); }) == HandleErrc::NotAnArray);
}

TEST_CASE("as_type") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  auto erased = as_type(fib, FunctionType::parse("(A)A"));
  CHECK(erased.type().str() == "(A)A");
  CHECK(erased.invoke({Value::integer(10)}, fx.ctx) == Value::integer(55));
  CHECK(vm_error([&] { erased.invoke({Value::string("x")}, fx.ctx); }) == VmErrc::CastError);

  auto back = as_type(erased, FunctionType::parse("(I)I"));
  CHECK(back.invoke({Value::integer(9)}, fx.ctx) == Value::integer(34));

  auto id = fx.fn("Ops", "id", "(A)A");
  auto as_str = as_type(id, FunctionType::parse("(S)S"));
  CHECK(render(as_str.invoke({Value::string("q")}, fx.ctx)) == "q");
  CHECK(vm_error([&] { as_str.invoke({Value::integer(1)}, fx.ctx); }) == VmErrc::TypeFault);
  auto narrowing = as_type(id, FunctionType::parse("(A)S"));
  CHECK(vm_error([&] { narrowing.invoke({Value::integer(1)}, fx.ctx); }) == VmErrc::CastError);

  auto same = as_type(fib, fib.type());
  CHECK(same.invoke({Value::integer(7)}, fx.ctx) == Value::integer(13));

  CHECK(handle_error([&] { as_type(fib, FunctionType::parse("(S)I")); }) == HandleErrc::Inconvertible);
  CHECK(handle_error([&] { as_type(fib, FunctionType::parse("(II)I")); }) == HandleErrc::TypeMismatch);
  CHECK(handle_error([&] { as_type(fib, FunctionType::parse("(I)V")); }) == HandleErrc::Inconvertible);
}

TEST_CASE("checked invoke validates arity and argument types") {
  HandleFixture fx;
  auto fib = fx.fn("Fib", "classicfibo", "(I)I");
  CHECK(vm_error([&] { fib.invoke({}, fx.ctx); }) == VmErrc::ArityMismatch);
  CHECK(vm_error([&] { fib.invoke({Value::integer(1), Value::integer(2)}, fx.ctx); }) == VmErrc::ArityMismatch);
  CHECK(vm_error([&] { fib.invoke({Value::string("1")}, fx.ctx); }) == VmErrc::TypeFault);
}

TEST_CASE("combinators do not mutate their inputs") {
  HandleFixture fx;
  auto sub = fx.fn("Ops", "sub", "(II)I");
  auto before = sub.describe();
  auto bound = insert_arguments(sub, 0, {Value::integer(4)});
  auto filtered = filter_arguments(sub, 0, {fx.fn("Ops", "double", "(I)I")});
  auto erased = as_type(sub, FunctionType::parse("(AA)A"));
  CHECK(sub.describe() == before);
  CHECK(sub.type().str() == "(II)I");
  CHECK(bound.type().str() == "(I)I");
  for (int i = 0; i < 3; ++i) {
    CHECK(bound.invoke({Value::integer(1)}, fx.ctx) == Value::integer(3));
    CHECK(filtered.invoke({Value::integer(2), Value::integer(1)}, fx.ctx) == Value::integer(3));
  }
  CHECK(erased.describe() != before);
}

TEST_CASE("algebra laws hold exhaustively over small domains") {
  HandleFixture fx;
  auto r = check_handle_laws(fx);
  CHECK(r.checks > 1000);
  for (const auto& v : r.violations) FAIL_CHECK(v);
  CHECK(r.violations.empty());
}
