#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fluxvm/bytecode/descriptor.hpp"
#include "fluxvm/bytecode/instruction.hpp"
#include "fluxvm/bytecode/value.hpp"

namespace fluxvm {

class ExecContext;
class RuntimeClass;
class RuntimeFunction;
struct SiteSlot;

using NativeFn = std::function<Value(std::span<const Value> args, ExecContext& ctx)>;

/// An instruction with its operands resolved at load time.
struct PreparedInstr {
  Opcode op = Opcode::Pop;
  /// Local slot, jump target (instruction index), field slot, or argument count.
  std::int32_t arg = 0;
  std::uint32_t selector = 0;
  Value constant;
  const RuntimeFunction* callee = nullptr;
  const RuntimeClass* cls = nullptr;
  SiteSlot* site = nullptr;
  /// Byte offset of the source instruction.
  std::uint32_t pc = 0;
};

class RuntimeFunction {
 public:
  std::string owner;  // empty for module functions
  std::string name;
  FunctionType type;  // declared type, receiver excluded
  bool is_static = true;
  bool is_abstract = false;
  bool is_special_only = false;
  std::uint32_t param_slots = 0;  // receiver included
  std::uint16_t max_stack = 0;
  std::uint16_t max_locals = 0;
  std::vector<PreparedInstr> code;
  NativeFn native;
  const RuntimeClass* owner_class = nullptr;

  bool is_native() const noexcept { return static_cast<bool>(native); }
  bool returns_value() const noexcept { return type.returns_value(); }
  /// Type as seen by a caller: the receiver prepended for instance methods.
  FunctionType full_type() const;
  std::string qualified() const;
};

class RuntimeClass {
 public:
  std::string name;
  const RuntimeClass* super = nullptr;
  bool is_interface = false;
  bool is_builtin = false;
  std::vector<const RuntimeClass*> interfaces;
  std::vector<std::string> field_names;  // slot order, inherited first
  std::vector<TypeDescriptor> field_types;
  std::unordered_map<std::string, std::uint32_t> field_slots;
  /// Own methods keyed by `name:(..)R`.
  std::unordered_map<std::string, RuntimeFunction*> methods;
  /// Selector-indexed dispatch table, inherited entries included.
  std::vector<const RuntimeFunction*> vtable;
  /// Names of this class and every superclass and interface.
  std::set<std::string, std::less<>> ancestry;

  bool is_a(std::string_view other) const { return ancestry.find(other) != ancestry.end(); }

  const RuntimeFunction* dispatch(std::uint32_t selector) const noexcept {
    return selector < vtable.size() ? vtable[selector] : nullptr;
  }

  /// Own method, else searched through superclasses then interfaces.
  const RuntimeFunction* find_method(std::string_view name, std::string_view type) const;
};

}  // namespace fluxvm
