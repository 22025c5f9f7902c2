#include "fluxvm/bytecode/module.hpp"

#include <bit>
#include <fmt/format.h>

namespace fluxvm {

std::string_view pool_tag_name(PoolTag tag) noexcept {
  switch (tag) {
    case PoolTag::Utf8: return "utf8";
    case PoolTag::Int: return "int";
    case PoolTag::Float: return "float";
    case PoolTag::Bool: return "bool";
    case PoolTag::Null: return "null";
    case PoolTag::Type: return "type";
    case PoolTag::ClassRef: return "classref";
    case PoolTag::FieldRef: return "fieldref";
    case PoolTag::MethodRef: return "methodref";
  }
  return "?";
}

bool is_text_tag(PoolTag tag) noexcept {
  switch (tag) {
    case PoolTag::Utf8:
    case PoolTag::Type:
    case PoolTag::ClassRef:
    case PoolTag::FieldRef:
    case PoolTag::MethodRef: return true;
    default: return false;
  }
}

bool PoolEntry::operator==(const PoolEntry& o) const {
  if (tag != o.tag) return false;
  switch (tag) {
    case PoolTag::Int:
    case PoolTag::Bool: return integer == o.integer;
    case PoolTag::Float: return std::bit_cast<std::uint64_t>(real) == std::bit_cast<std::uint64_t>(o.real);
    case PoolTag::Null: return true;
    default: return text == o.text;
  }
}

std::optional<std::uint16_t> ConstantPool::find(const PoolEntry& e) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] == e) return static_cast<std::uint16_t>(i + 1);
  }
  return std::nullopt;
}

std::uint16_t ConstantPool::intern(const PoolEntry& e) {
  if (auto idx = find(e)) return *idx;
  return append(e);
}

std::uint16_t ConstantPool::append(PoolEntry e) {
  if (entries_.size() >= 0xFFFF) throw Error("constant pool overflow (more than 65535 entries)");
  entries_.push_back(std::move(e));
  return static_cast<std::uint16_t>(entries_.size());
}

const PoolEntry& ConstantPool::at(std::uint32_t index) const {
  if (!contains(index)) throw Error(fmt::format("constant pool index {} out of range", index));
  return entries_[index - 1];
}

const std::string& ModuleFile::text(std::uint16_t index) const {
  const auto& e = pool.at(index);
  if (!is_text_tag(e.tag)) {
    throw Error(fmt::format("constant pool entry {} is {}, expected text", index, pool_tag_name(e.tag)));
  }
  return e.text;
}

const ClassDef* ModuleFile::find_class(std::string_view name) const {
  for (const auto& c : classes) {
    if (pool.contains(c.name) && pool.at(c.name).text == name) return &c;
  }
  return nullptr;
}

std::optional<std::string> ModuleFile::entry_name() const {
  if (entry == 0) return std::nullopt;
  return text(entry);
}

MethodRef MethodRef::parse(std::string_view text) {
  auto colon = text.find(":(");
  if (colon == std::string_view::npos || colon == 0) {
    throw DescriptorError(fmt::format("malformed method reference '{}'", text));
  }
  auto qualified = text.substr(0, colon);
  MethodRef r;
  auto dot = qualified.rfind('.');
  if (dot == std::string_view::npos) {
    r.method = std::string(qualified);
  } else {
    r.owner = std::string(qualified.substr(0, dot));
    r.method = std::string(qualified.substr(dot + 1));
    if (r.owner.empty() || r.method.empty()) {
      throw DescriptorError(fmt::format("malformed method reference '{}'", text));
    }
  }
  r.type = FunctionType::parse(text.substr(colon + 1));
  return r;
}

std::string MethodRef::str() const {
  if (owner.empty()) return method + ":" + type.str();
  return owner + "." + method + ":" + type.str();
}

FieldRef FieldRef::parse(std::string_view text) {
  auto colon = text.find(':');
  auto dot = text.substr(0, colon).rfind('.');
  if (colon == std::string_view::npos || dot == std::string_view::npos || dot == 0 || dot + 1 == colon) {
    throw DescriptorError(fmt::format("malformed field reference '{}'", text));
  }
  FieldRef r;
  r.owner = std::string(text.substr(0, dot));
  r.field = std::string(text.substr(dot + 1, colon - dot - 1));
  r.type = TypeDescriptor::parse(text.substr(colon + 1));
  if (r.type.is_void()) throw DescriptorError(fmt::format("void field in '{}'", text));
  return r;
}

std::string FieldRef::str() const { return owner + "." + field + ":" + type.str(); }

}  // namespace fluxvm
