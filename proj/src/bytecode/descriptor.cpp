#include "fluxvm/bytecode/descriptor.hpp"

#include <fmt/format.h>

namespace fluxvm {
namespace {

bool is_name_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '$' || c == '/';
}

}  // namespace

TypeDescriptor TypeDescriptor::instance(std::string class_name) {
  if (class_name.empty()) throw DescriptorError("empty class name in instance descriptor");
  for (char c : class_name) {
    if (!is_name_char(c)) throw DescriptorError(fmt::format("invalid class name '{}'", class_name));
  }
  return TypeDescriptor(BaseType::Class, 0, std::move(class_name));
}

bool TypeDescriptor::is_reference() const noexcept {
  if (dims_ > 0) return true;
  return base_ == BaseType::Str || base_ == BaseType::Any || base_ == BaseType::Class;
}

TypeDescriptor TypeDescriptor::array_of() const {
  if (is_void()) throw DescriptorError("array of void");
  return TypeDescriptor(base_, dims_ + 1, class_name_);
}

TypeDescriptor TypeDescriptor::element() const {
  if (dims_ == 0) throw DescriptorError(fmt::format("'{}' is not an array descriptor", str()));
  return TypeDescriptor(base_, dims_ - 1, class_name_);
}

std::string TypeDescriptor::str() const {
  std::string out(dims_, '[');
  switch (base_) {
    case BaseType::Int: out += 'I'; break;
    case BaseType::Flt: out += 'D'; break;
    case BaseType::Bool: out += 'Z'; break;
    case BaseType::Str: out += 'S'; break;
    case BaseType::Any: out += 'A'; break;
    case BaseType::Void: out += 'V'; break;
    case BaseType::Class:
      out += 'L';
      out += class_name_;
      out += ';';
      break;
  }
  return out;
}

TypeDescriptor TypeDescriptor::parse_prefix(std::string_view& text) {
  unsigned dims = 0;
  std::size_t i = 0;
  while (i < text.size() && text[i] == '[') {
    ++dims;
    ++i;
  }
  if (i >= text.size()) throw DescriptorError("truncated type descriptor");
  BaseType base;
  std::string cls;
  switch (text[i]) {
    case 'I': base = BaseType::Int; break;
    case 'D': base = BaseType::Flt; break;
    case 'Z': base = BaseType::Bool; break;
    case 'S': base = BaseType::Str; break;
    case 'A': base = BaseType::Any; break;
    case 'V': base = BaseType::Void; break;
    case 'L': {
      auto end = text.find(';', i + 1);
      if (end == std::string_view::npos) throw DescriptorError("unterminated class descriptor");
      cls = std::string(text.substr(i + 1, end - i - 1));
      // validates the name
      (void)instance(cls);
      base = BaseType::Class;
      i = end;
      break;
    }
    default:
      throw DescriptorError(fmt::format("unknown descriptor character '{}'", text[i]));
  }
  if (base == BaseType::Void && dims > 0) throw DescriptorError("array of void");
  text.remove_prefix(i + 1);
  return TypeDescriptor(base, dims, std::move(cls));
}

TypeDescriptor TypeDescriptor::parse(std::string_view text) {
  std::string_view rest = text;
  auto d = parse_prefix(rest);
  if (!rest.empty()) throw DescriptorError(fmt::format("trailing characters in descriptor '{}'", text));
  return d;
}

FunctionType FunctionType::parse_prefix(std::string_view& text) {
  if (text.empty() || text.front() != '(') throw DescriptorError("function type must start with '('");
  text.remove_prefix(1);
  FunctionType ft;
  while (!text.empty() && text.front() != ')') {
    auto p = TypeDescriptor::parse_prefix(text);
    if (p.is_void()) throw DescriptorError("'V' in parameter position");
    ft.params.push_back(std::move(p));
  }
  if (text.empty()) throw DescriptorError("unterminated parameter list");
  text.remove_prefix(1);
  ft.ret = TypeDescriptor::parse_prefix(text);
  return ft;
}

FunctionType FunctionType::parse(std::string_view text) {
  std::string_view rest = text;
  auto ft = parse_prefix(rest);
  if (!rest.empty()) throw DescriptorError(fmt::format("trailing characters in function type '{}'", text));
  return ft;
}

FunctionType FunctionType::with_receiver(const TypeDescriptor& receiver) const {
  FunctionType out;
  out.params.reserve(params.size() + 1);
  out.params.push_back(receiver);
  out.params.insert(out.params.end(), params.begin(), params.end());
  out.ret = ret;
  return out;
}

std::string FunctionType::str() const {
  std::string out = "(";
  for (const auto& p : params) out += p.str();
  out += ')';
  out += ret.str();
  return out;
}

}  // namespace fluxvm
