#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluxvm/bytecode/descriptor.hpp"
#include "fluxvm/bytecode/instruction.hpp"

namespace fluxvm {

inline constexpr std::uint16_t kFormatVersion = 1;

enum class PoolTag : std::uint8_t {
  Utf8 = 1,
  Int = 2,
  Float = 3,
  Bool = 4,
  Null = 5,
  Type = 6,       // function type text
  ClassRef = 7,   // class name
  FieldRef = 8,   // Owner.field:Desc
  MethodRef = 9,  // Owner.method:(..)R, or name:(..)R for module functions
};

std::string_view pool_tag_name(PoolTag tag) noexcept;
bool is_text_tag(PoolTag tag) noexcept;

struct PoolEntry {
  PoolTag tag = PoolTag::Null;
  std::string text;
  std::int64_t integer = 0;
  double real = 0.0;

  static PoolEntry utf8(std::string s) { return {PoolTag::Utf8, std::move(s)}; }
  static PoolEntry int_const(std::int64_t v) { return {PoolTag::Int, {}, v}; }
  static PoolEntry float_const(double v) { return {PoolTag::Float, {}, 0, v}; }
  static PoolEntry bool_const(bool v) { return {PoolTag::Bool, {}, v ? 1 : 0}; }
  static PoolEntry null_const() { return {PoolTag::Null, {}}; }
  static PoolEntry type(std::string s) { return {PoolTag::Type, std::move(s)}; }
  static PoolEntry class_ref(std::string s) { return {PoolTag::ClassRef, std::move(s)}; }
  static PoolEntry field_ref(std::string s) { return {PoolTag::FieldRef, std::move(s)}; }
  static PoolEntry method_ref(std::string s) { return {PoolTag::MethodRef, std::move(s)}; }

  /// Floats compare by bit pattern so that dedup and round-trips are exact.
  bool operator==(const PoolEntry& o) const;
};

/// 1-based indexed constant table; index 0 means "none".
class ConstantPool {
 public:
  /// Returns the index of an identical entry, appending it if absent.
  std::uint16_t intern(const PoolEntry& e);
  /// Appends without deduplication (used by the decoder).
  std::uint16_t append(PoolEntry e);

  std::optional<std::uint16_t> find(const PoolEntry& e) const;

  bool contains(std::uint32_t index) const noexcept { return index >= 1 && index <= entries_.size(); }
  const PoolEntry& at(std::uint32_t index) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<PoolEntry>& entries() const noexcept { return entries_; }

  bool operator==(const ConstantPool& o) const { return entries_ == o.entries_; }

 private:
  std::vector<PoolEntry> entries_;
};

enum FunctionFlag : std::uint8_t {
  kFlagStatic = 1,
  kFlagVirtual = 2,
  kFlagSpecialOnly = 4,
  kFlagAbstract = 8,
};

struct FieldDef {
  std::uint16_t name = 0;  // Utf8
  std::uint16_t desc = 0;  // Utf8 holding a type descriptor
  bool operator==(const FieldDef&) const = default;
};

struct FunctionDef {
  std::uint16_t name = 0;  // Utf8
  std::uint16_t type = 0;  // Type
  std::uint8_t flags = kFlagStatic;
  std::uint16_t max_stack = 0;
  std::uint16_t max_locals = 0;
  std::vector<Instruction> code;

  bool is_static() const noexcept { return flags & kFlagStatic; }
  bool is_abstract() const noexcept { return flags & kFlagAbstract; }
  bool is_special_only() const noexcept { return flags & kFlagSpecialOnly; }

  bool operator==(const FunctionDef&) const = default;
};

struct ClassDef {
  std::uint16_t name = 0;   // Utf8
  std::uint16_t super = 0;  // Utf8, 0 = none
  bool is_interface = false;
  std::vector<std::uint16_t> interfaces;  // Utf8
  std::vector<FieldDef> fields;
  std::vector<FunctionDef> methods;

  bool operator==(const ClassDef&) const = default;
};

struct ModuleFile {
  std::uint16_t version = kFormatVersion;
  ConstantPool pool;
  std::vector<std::uint16_t> imports;  // Utf8 class names provided by other modules
  std::vector<ClassDef> classes;
  std::vector<FunctionDef> functions;  // module-level functions, always static
  std::uint16_t entry = 0;             // Utf8, 0 = none

  /// Text of a Utf8/Type/ref entry; throws on bad index.
  const std::string& text(std::uint16_t index) const;

  const ClassDef* find_class(std::string_view name) const;
  std::string class_name(const ClassDef& c) const { return text(c.name); }
  std::string function_name(const FunctionDef& f) const { return text(f.name); }
  FunctionType function_type(const FunctionDef& f) const { return FunctionType::parse(text(f.type)); }
  std::optional<std::string> entry_name() const;

  bool operator==(const ModuleFile&) const = default;
};

/// A parsed `Owner.method:(..)R` (owner empty for module functions).
struct MethodRef {
  std::string owner;
  std::string method;
  FunctionType type;

  static MethodRef parse(std::string_view text);
  std::string str() const;
  bool operator==(const MethodRef&) const = default;
};

/// A parsed `Owner.field:Desc`.
struct FieldRef {
  std::string owner;
  std::string field;
  TypeDescriptor type;

  static FieldRef parse(std::string_view text);
  std::string str() const;
};

}  // namespace fluxvm
