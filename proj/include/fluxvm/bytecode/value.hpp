#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fluxvm/bytecode/descriptor.hpp"

namespace fluxvm {

class RuntimeClass;
struct Array;
struct Object;

enum class ValueTag : std::uint8_t { Null, Int, Flt, Bool, Str, Arr, Obj };

std::string_view tag_name(ValueTag tag) noexcept;

/// One interpreter slot. Scalars are held inline; strings are immutable and
/// shared; arrays and objects are shared mutable heap cells.
class Value {
 public:
  Value() = default;

  static Value null() { return Value(); }
  static Value integer(std::int64_t v) { return Value(Rep(std::in_place_index<1>, v)); }
  static Value real(double v) { return Value(Rep(std::in_place_index<2>, v)); }
  static Value boolean(bool v) { return Value(Rep(std::in_place_index<3>, v)); }
  static Value string(std::string v) {
    return Value(Rep(std::in_place_index<4>, std::make_shared<const std::string>(std::move(v))));
  }
  static Value array(std::shared_ptr<Array> a) { return Value(Rep(std::in_place_index<5>, std::move(a))); }
  static Value array(std::vector<Value> items);
  static Value object(std::shared_ptr<Object> o) { return Value(Rep(std::in_place_index<6>, std::move(o))); }

  ValueTag tag() const noexcept { return static_cast<ValueTag>(rep_.index()); }
  bool is_null() const noexcept { return tag() == ValueTag::Null; }

  /// Typed accessors; a tag mismatch raises a TypeFault VmError.
  std::int64_t as_int() const { return get<1>(); }
  double as_real() const { return get<2>(); }
  bool as_bool() const { return get<3>(); }
  const std::string& as_string() const { return *get<4>(); }
  const std::shared_ptr<Array>& as_array() const { return get<5>(); }
  const std::shared_ptr<Object>& as_object() const { return get<6>(); }

  /// Scalars and strings compare by value; arrays and objects by identity.
  friend bool operator==(const Value& a, const Value& b);

 private:
  using Rep = std::variant<std::monostate, std::int64_t, double, bool, std::shared_ptr<const std::string>,
                           std::shared_ptr<Array>, std::shared_ptr<Object>>;
  explicit Value(Rep r) : rep_(std::move(r)) {}

  [[noreturn]] static void tag_mismatch(ValueTag want, ValueTag got);

  template <std::size_t I>
  const std::variant_alternative_t<I, Rep>& get() const {
    if (auto* p = std::get_if<I>(&rep_)) [[likely]]
      return *p;
    tag_mismatch(static_cast<ValueTag>(I), tag());
  }

  Rep rep_;
};

struct Array {
  std::vector<Value> items;
};

struct Object {
  const RuntimeClass* cls = nullptr;
  std::vector<Value> fields;
};

/// Textual rendering used by PRINT and string concatenation. Arrays render as
/// `[a, b]`, objects as `Name{field=value, ...}`.
std::string render(const Value& v);

/// Assignability of a runtime value to a descriptor. `A` accepts everything;
/// Null is accepted by every reference descriptor; arrays are untyped lists and
/// match any array descriptor.
bool assignable(const Value& v, const TypeDescriptor& d);

}  // namespace fluxvm
