#include "fluxvm/bytecode/value.hpp"

#include <fmt/format.h>

#include "fluxvm/vm/errors.hpp"

namespace fluxvm {

std::string_view tag_name(ValueTag tag) noexcept {
  switch (tag) {
    case ValueTag::Null: return "null";
    case ValueTag::Int: return "int";
    case ValueTag::Flt: return "float";
    case ValueTag::Bool: return "bool";
    case ValueTag::Str: return "string";
    case ValueTag::Arr: return "array";
    case ValueTag::Obj: return "object";
  }
  return "?";
}

void Value::tag_mismatch(ValueTag want, ValueTag got) {
  throw VmError(VmErrc::TypeFault, fmt::format("expected {} but found {}", tag_name(want), tag_name(got)));
}

Value Value::array(std::vector<Value> items) {
  auto a = std::make_shared<Array>();
  a->items = std::move(items);
  return array(std::move(a));
}

bool operator==(const Value& a, const Value& b) {
  if (a.tag() != b.tag()) return false;
  switch (a.tag()) {
    case ValueTag::Null: return true;
    case ValueTag::Int: return a.as_int() == b.as_int();
    case ValueTag::Flt: return a.as_real() == b.as_real();
    case ValueTag::Bool: return a.as_bool() == b.as_bool();
    case ValueTag::Str: return a.as_string() == b.as_string();
    case ValueTag::Arr: return a.as_array() == b.as_array();
    case ValueTag::Obj: return a.as_object() == b.as_object();
  }
  return false;
}

}  // namespace fluxvm
