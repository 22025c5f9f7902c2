#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fluxvm/error.hpp"

namespace fluxvm {

class DescriptorError : public Error {
 public:
  using Error::Error;
};

enum class BaseType : std::uint8_t { Int, Flt, Bool, Str, Any, Void, Class };

/// A value type in textual descriptor form:
///   I D Z S A V   [<desc>   L<ClassName>;
/// Arrays are represented as a base type plus a dimension count.
class TypeDescriptor {
 public:
  TypeDescriptor() = default;

  static TypeDescriptor parse(std::string_view text);
  /// Parses one descriptor from the front of `text` and advances it.
  static TypeDescriptor parse_prefix(std::string_view& text);

  static TypeDescriptor integer() { return TypeDescriptor(BaseType::Int); }
  static TypeDescriptor real() { return TypeDescriptor(BaseType::Flt); }
  static TypeDescriptor boolean() { return TypeDescriptor(BaseType::Bool); }
  static TypeDescriptor string() { return TypeDescriptor(BaseType::Str); }
  static TypeDescriptor any() { return TypeDescriptor(BaseType::Any); }
  static TypeDescriptor void_type() { return TypeDescriptor(BaseType::Void); }
  static TypeDescriptor any_array() { return any().array_of(); }
  static TypeDescriptor instance(std::string class_name);

  BaseType base() const noexcept { return base_; }
  unsigned dims() const noexcept { return dims_; }
  const std::string& class_name() const noexcept { return class_name_; }

  bool is_array() const noexcept { return dims_ > 0; }
  bool is_void() const noexcept { return base_ == BaseType::Void && dims_ == 0; }
  bool is_any() const noexcept { return base_ == BaseType::Any && dims_ == 0; }
  bool is_instance() const noexcept { return base_ == BaseType::Class && dims_ == 0; }
  /// True for descriptors whose values are references (Null is assignable).
  bool is_reference() const noexcept;

  TypeDescriptor array_of() const;
  TypeDescriptor element() const;

  std::string str() const;

  bool operator==(const TypeDescriptor&) const = default;

 private:
  explicit TypeDescriptor(BaseType base, unsigned dims = 0, std::string cls = {})
      : base_(base), dims_(dims), class_name_(std::move(cls)) {}

  BaseType base_ = BaseType::Any;
  unsigned dims_ = 0;
  std::string class_name_;
};

/// `(<params>)<ret>`
struct FunctionType {
  std::vector<TypeDescriptor> params;
  TypeDescriptor ret = TypeDescriptor::void_type();

  static FunctionType parse(std::string_view text);
  /// Parses a function type from the front of `text` and advances it.
  static FunctionType parse_prefix(std::string_view& text);

  std::size_t arity() const noexcept { return params.size(); }
  bool returns_value() const noexcept { return !ret.is_void(); }

  /// The same type with `receiver` inserted as parameter 0.
  FunctionType with_receiver(const TypeDescriptor& receiver) const;

  std::string str() const;

  bool operator==(const FunctionType&) const = default;
};

}  // namespace fluxvm
