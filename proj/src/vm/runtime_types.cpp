#include "fluxvm/vm/runtime_types.hpp"

#include <charconv>
#include <cmath>
#include <deque>

namespace fluxvm {

FunctionType RuntimeFunction::full_type() const {
  if (is_static) return type;
  return type.with_receiver(TypeDescriptor::instance(owner));
}

std::string RuntimeFunction::qualified() const {
  return (owner.empty() ? name : owner + "." + name) + ":" + type.str();
}

const RuntimeFunction* RuntimeClass::find_method(std::string_view name, std::string_view type) const {
  std::string key;
  key.reserve(name.size() + type.size() + 1);
  key.append(name).append(":").append(type);
  std::deque<const RuntimeClass*> work{this};
  std::set<const RuntimeClass*> seen;
  // Superclass chain first, then interfaces breadth-first.
  while (!work.empty()) {
    const RuntimeClass* c = work.front();
    work.pop_front();
    if (!seen.insert(c).second) continue;
    if (auto it = c->methods.find(key); it != c->methods.end()) return it->second;
    if (c->super) work.push_front(c->super);
    for (auto* i : c->interfaces) work.push_back(i);
  }
  return nullptr;
}

namespace {

std::string render_real(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void render_into(std::string& out, const Value& v, int depth) {
  switch (v.tag()) {
    case ValueTag::Null: out += "null"; return;
    case ValueTag::Int: out += std::to_string(v.as_int()); return;
    case ValueTag::Flt: out += render_real(v.as_real()); return;
    case ValueTag::Bool: out += v.as_bool() ? "true" : "false"; return;
    case ValueTag::Str: out += v.as_string(); return;
    case ValueTag::Arr: {
      if (depth > 8) {
        out += "[...]";
        return;
      }
      out += '[';
      const auto& items = v.as_array()->items;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        render_into(out, items[i], depth + 1);
      }
      out += ']';
      return;
    }
    case ValueTag::Obj: {
      const auto& o = *v.as_object();
      out += o.cls ? o.cls->name : "?";
      if (depth > 8) {
        out += "{...}";
        return;
      }
      out += '{';
      for (std::size_t i = 0; i < o.fields.size(); ++i) {
        if (i) out += ", ";
        if (o.cls && i < o.cls->field_names.size()) out += o.cls->field_names[i] + "=";
        render_into(out, o.fields[i], depth + 1);
      }
      out += '}';
      return;
    }
  }
}

}  // namespace

std::string render(const Value& v) {
  std::string out;
  render_into(out, v, 0);
  return out;
}

bool assignable(const Value& v, const TypeDescriptor& d) {
  if (d.is_any()) return true;
  if (d.is_void()) return false;
  switch (v.tag()) {
    case ValueTag::Null: return d.is_reference();
    case ValueTag::Int: return d.base() == BaseType::Int && d.dims() == 0;
    case ValueTag::Flt: return d.base() == BaseType::Flt && d.dims() == 0;
    case ValueTag::Bool: return d.base() == BaseType::Bool && d.dims() == 0;
    case ValueTag::Str:
      return d.dims() == 0 && (d.base() == BaseType::Str || (d.base() == BaseType::Class && d.class_name() == "Str"));
    case ValueTag::Arr: return d.is_array();
    case ValueTag::Obj: {
      if (!d.is_instance()) return false;
      const auto* cls = v.as_object()->cls;
      return cls && cls->is_a(d.class_name());
    }
  }
  return false;
}

}  // namespace fluxvm
