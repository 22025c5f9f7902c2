#include "fluxvm/bytecode/validator.hpp"

#include <algorithm>
#include <deque>
#include <fmt/format.h>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace fluxvm {

std::string Diagnostic::str() const {
  std::string out;
  if (!function.empty()) out += function + ": ";
  out += message;
  return out;
}

namespace {

const std::set<std::string, std::less<>> kInvokeKinds = {"static", "virtual", "special", "interface"};

std::optional<std::string> text_of(const ModuleFile& m, std::uint32_t idx, PoolTag want) {
  if (!m.pool.contains(idx)) return std::nullopt;
  const auto& e = m.pool.at(idx);
  if (e.tag != want) return std::nullopt;
  return e.text;
}

struct StackEffect {
  int pops = 0;
  int pushes = 0;
};

class Validator {
 public:
  explicit Validator(const ModuleFile& m) : m_(m) {}

  std::vector<Diagnostic> run() {
    check_pool();
    collect_names();
    check_classes();
    for (const auto& c : m_.classes) {
      auto cname = name_or(c.name, "?");
      for (const auto& f : c.methods) check_function(&c, cname, f);
    }
    std::set<std::string> seen;
    for (const auto& f : m_.functions) {
      check_function(nullptr, "", f);
      auto key = name_or(f.name, "?") + ":" + name_or(f.type, "?", PoolTag::Type);
      if (!seen.insert(key).second) module_diag(fmt::format("duplicate module function {}", key));
    }
    check_entry();
    return std::move(diags_);
  }

  /// Stack analysis only; used to infer max_stack.
  std::optional<std::uint16_t> max_depth(const FunctionDef& f) {
    auto type = function_type(f);
    if (!type) return std::nullopt;
    auto res = analyze_stack(f, *type, "", 0xFFFF, /*report=*/false);
    return res;
  }

 private:
  void module_diag(std::string msg, DiagKind kind = DiagKind::Structure) {
    diags_.push_back({kind, "", std::nullopt, std::move(msg)});
  }
  void fn_diag(const std::string& fn, std::optional<std::uint32_t> pc, std::string msg,
               DiagKind kind = DiagKind::Structure) {
    diags_.push_back({kind, fn, pc, std::move(msg)});
  }
  void ref_diag(const std::string& fn, std::optional<std::uint32_t> pc, std::string msg) {
    fn_diag(fn, pc, std::move(msg), DiagKind::Reference);
  }
  void control_diag(const std::string& fn, std::optional<std::uint32_t> pc, std::string msg) {
    fn_diag(fn, pc, std::move(msg), DiagKind::Control);
  }

  std::string name_or(std::uint32_t idx, std::string fallback, PoolTag tag = PoolTag::Utf8) const {
    auto t = text_of(m_, idx, tag);
    return t ? *t : fallback;
  }

  void check_pool() {
    const auto& entries = m_.pool.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      auto idx = i + 1;
      try {
        switch (e.tag) {
          case PoolTag::Type: (void)FunctionType::parse(e.text); break;
          case PoolTag::ClassRef: (void)TypeDescriptor::instance(e.text); break;
          case PoolTag::FieldRef: (void)FieldRef::parse(e.text); break;
          case PoolTag::MethodRef: (void)MethodRef::parse(e.text); break;
          default: break;
        }
      } catch (const DescriptorError& err) {
        module_diag(fmt::format("constant pool entry {}: {}", idx, err.what()));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (entries[j] == e) {
          module_diag(fmt::format("constant pool entries {} and {} are duplicates", j + 1, idx));
          break;
        }
      }
    }
  }

  void collect_names() {
    for (auto i : m_.imports) {
      auto t = text_of(m_, i, PoolTag::Utf8);
      if (!t) {
        module_diag(fmt::format("import index {} is not a utf8 entry", i));
        continue;
      }
      imported_.insert(*t);
    }
    for (const auto& c : m_.classes) {
      auto t = text_of(m_, c.name, PoolTag::Utf8);
      if (!t) {
        module_diag(fmt::format("class name index {} is not a utf8 entry", c.name));
        continue;
      }
      if (imported_.count(*t)) module_diag(fmt::format("class {} is both defined and imported", *t));
      if (!local_.emplace(*t, &c).second) module_diag(fmt::format("duplicate class {}", *t));
    }
  }

  bool known_class(const std::string& name) const { return local_.count(name) || imported_.count(name); }

  void check_descriptor(const TypeDescriptor& d, const std::string& where) {
    if (d.base() == BaseType::Class && !known_class(d.class_name())) {
      module_diag(fmt::format("{} names unknown class {}", where, d.class_name()), DiagKind::Reference);
    }
  }

  void check_classes() {
    for (const auto& c : m_.classes) {
      auto cname = name_or(c.name, "?");
      if (c.super) {
        auto s = text_of(m_, c.super, PoolTag::Utf8);
        if (!s) {
          module_diag(fmt::format("class {}: superclass index is not a utf8 entry", cname));
        } else if (!known_class(*s)) {
          module_diag(fmt::format("class {}: unknown superclass {}", cname, *s), DiagKind::Reference);
        } else if (auto it = local_.find(*s); it != local_.end() && it->second->is_interface) {
          module_diag(fmt::format("class {}: cannot extend interface {}", cname, *s));
        }
        if (c.is_interface) module_diag(fmt::format("interface {} cannot extend a class", cname));
      }
      for (auto i : c.interfaces) {
        auto s = text_of(m_, i, PoolTag::Utf8);
        if (!s) {
          module_diag(fmt::format("class {}: interface index is not a utf8 entry", cname));
        } else if (!known_class(*s)) {
          module_diag(fmt::format("class {}: unknown interface {}", cname, *s), DiagKind::Reference);
        } else if (auto it = local_.find(*s); it != local_.end() && !it->second->is_interface) {
          module_diag(fmt::format("class {}: {} is not an interface", cname, *s));
        }
      }
      std::set<std::string> fields;
      for (const auto& f : c.fields) {
        auto fname = text_of(m_, f.name, PoolTag::Utf8);
        auto fdesc = text_of(m_, f.desc, PoolTag::Utf8);
        if (!fname || !fdesc) {
          module_diag(fmt::format("class {}: malformed field entry", cname));
          continue;
        }
        if (!fields.insert(*fname).second) module_diag(fmt::format("class {}: duplicate field {}", cname, *fname));
        try {
          auto d = TypeDescriptor::parse(*fdesc);
          if (d.is_void()) module_diag(fmt::format("class {}: field {} has void type", cname, *fname));
          check_descriptor(d, fmt::format("field {}.{}", cname, *fname));
        } catch (const DescriptorError& e) {
          module_diag(fmt::format("class {}: field {}: {}", cname, *fname, e.what()));
        }
      }
      if (c.is_interface && !c.fields.empty()) module_diag(fmt::format("interface {} declares fields", cname));
      std::set<std::string> methods;
      for (const auto& f : c.methods) {
        auto key = name_or(f.name, "?") + ":" + name_or(f.type, "?", PoolTag::Type);
        if (!methods.insert(key).second) module_diag(fmt::format("class {}: duplicate method {}", cname, key));
      }
    }
    // Acyclic inheritance over local classes.
    for (const auto& [name, cls] : local_) {
      std::set<std::string> seen{name};
      const ClassDef* cur = cls;
      while (cur && cur->super) {
        auto s = text_of(m_, cur->super, PoolTag::Utf8);
        if (!s) break;
        if (!seen.insert(*s).second) {
          module_diag(fmt::format("class {}: inheritance cycle through {}", name, *s));
          break;
        }
        auto it = local_.find(*s);
        cur = it == local_.end() ? nullptr : it->second;
      }
    }
    // Overrides must keep the exact signature.
    for (const auto& c : m_.classes) {
      auto cname = name_or(c.name, "?");
      for (const auto& f : c.methods) {
        if (f.is_static() || f.is_special_only()) continue;
        auto mname = name_or(f.name, "?");
        auto mtype = name_or(f.type, "?", PoolTag::Type);
        for_each_ancestor(c, [&](const std::string& owner, const ClassDef& anc) {
          for (const auto& g : anc.methods) {
            if (g.is_static() || g.is_special_only()) continue;
            if (name_or(g.name, "") != mname) continue;
            auto gtype = name_or(g.type, "?", PoolTag::Type);
            if (gtype != mtype) {
              module_diag(fmt::format("override {}.{}:{} changes the signature of {}.{}:{}", cname, mname, mtype,
                                      owner, mname, gtype),
                          DiagKind::Reference);
            }
          }
        });
      }
    }
  }

  template <typename F>
  void for_each_ancestor(const ClassDef& c, F&& fn) const {
    std::set<std::string> seen;
    std::deque<const ClassDef*> work{&c};
    while (!work.empty()) {
      const ClassDef* cur = work.front();
      work.pop_front();
      std::vector<std::uint16_t> parents = cur->interfaces;
      if (cur->super) parents.push_back(cur->super);
      for (auto p : parents) {
        auto s = text_of(m_, p, PoolTag::Utf8);
        if (!s || !seen.insert(*s).second) continue;
        auto it = local_.find(*s);
        if (it == local_.end()) continue;
        fn(*s, *it->second);
        work.push_back(it->second);
      }
    }
  }

  std::optional<FunctionType> function_type(const FunctionDef& f) const {
    auto t = text_of(m_, f.type, PoolTag::Type);
    if (!t) return std::nullopt;
    try {
      return FunctionType::parse(*t);
    } catch (const DescriptorError&) {
      return std::nullopt;
    }
  }

  /// Finds a method by name in a local class or its local ancestors.
  const FunctionDef* find_method(const ClassDef& c, const std::string& name, bool* saw_external) const {
    auto match = [&](const ClassDef& k) -> const FunctionDef* {
      for (const auto& g : k.methods) {
        if (name_or(g.name, "") == name) return &g;
      }
      return nullptr;
    };
    if (auto* f = match(c)) return f;
    const FunctionDef* found = nullptr;
    for_each_ancestor(c, [&](const std::string&, const ClassDef& anc) {
      if (!found) found = match(anc);
    });
    if (!found && saw_external) {
      std::vector<std::uint16_t> parents = c.interfaces;
      if (c.super) parents.push_back(c.super);
      *saw_external = false;
      // Any imported ancestor may provide the method.
      std::deque<const ClassDef*> work{&c};
      std::set<std::string> seen;
      while (!work.empty()) {
        auto* cur = work.front();
        work.pop_front();
        std::vector<std::uint16_t> ps = cur->interfaces;
        if (cur->super) ps.push_back(cur->super);
        for (auto p : ps) {
          auto s = text_of(m_, p, PoolTag::Utf8);
          if (!s || !seen.insert(*s).second) continue;
          if (imported_.count(*s)) *saw_external = true;
          if (auto it = local_.find(*s); it != local_.end()) work.push_back(it->second);
        }
      }
    }
    return found;
  }

  const FunctionDef* find_module_function(const std::string& name, const std::string& type) const {
    for (const auto& f : m_.functions) {
      if (name_or(f.name, "") == name && name_or(f.type, "", PoolTag::Type) == type) return &f;
    }
    return nullptr;
  }

  void check_method_ref(const std::string& fn, std::uint32_t pc, Opcode op, const MethodRef& ref) {
    auto where = fmt::format("{} {}", mnemonic(op), ref.str());
    for (const auto& p : ref.type.params) check_descriptor(p, where);
    check_descriptor(ref.type.ret, where);
    if (ref.owner.empty()) {
      if (op != Opcode::InvokeStatic) {
        ref_diag(fn, pc, fmt::format("{} at pc={}: module functions are only invocable statically", where, pc));
        return;
      }
      if (!find_module_function(ref.method, ref.type.str())) {
        ref_diag(fn, pc, fmt::format("{} at pc={}: unknown function {}", where, pc, ref.str()));
      }
      return;
    }
    if (imported_.count(ref.owner)) return;
    auto it = local_.find(ref.owner);
    if (it == local_.end()) {
      ref_diag(fn, pc, fmt::format("{} at pc={}: unknown class {}", where, pc, ref.owner));
      return;
    }
    const ClassDef& owner = *it->second;
    bool external = false;
    auto* target = find_method(owner, ref.method, &external);
    if (!target) {
      if (!external) ref_diag(fn, pc, fmt::format("{} at pc={}: no method {} in {}", where, pc, ref.method, ref.owner));
      return;
    }
    auto ttype = name_or(target->type, "?", PoolTag::Type);
    if (ttype != ref.type.str()) {
      ref_diag(fn, pc,
              fmt::format("{} at pc={}: type mismatch, {}.{} is declared {}", where, pc, ref.owner, ref.method, ttype));
      return;
    }
    bool want_static = op == Opcode::InvokeStatic;
    if (target->is_static() != want_static) {
      ref_diag(fn, pc, fmt::format("{} at pc={}: invocation kind does not match method", where, pc));
    } else if (op == Opcode::InvokeInterface && !owner.is_interface) {
      ref_diag(fn, pc, fmt::format("{} at pc={}: {} is not an interface", where, pc, ref.owner));
    } else if (op == Opcode::InvokeVirtual && (owner.is_interface || target->is_special_only())) {
      ref_diag(fn, pc, fmt::format("{} at pc={}: method is not virtually dispatchable", where, pc));
    }
  }

  void check_field_ref(const std::string& fn, std::uint32_t pc, Opcode op, const FieldRef& ref) {
    auto where = fmt::format("{} {}", mnemonic(op), ref.str());
    check_descriptor(ref.type, where);
    if (imported_.count(ref.owner)) return;
    auto it = local_.find(ref.owner);
    if (it == local_.end()) {
      ref_diag(fn, pc, fmt::format("{} at pc={}: unknown class {}", where, pc, ref.owner));
      return;
    }
    std::vector<const ClassDef*> chain{it->second};
    bool found = false;
    bool external = false;
    while (!chain.empty() && !found) {
      const ClassDef* cur = chain.back();
      chain.pop_back();
      for (const auto& f : cur->fields) {
        if (name_or(f.name, "") == ref.field) {
          found = true;
          if (name_or(f.desc, "") != ref.type.str()) {
            ref_diag(fn, pc, fmt::format("{} at pc={}: field declared as {}", where, pc, name_or(f.desc, "?")));
          }
        }
      }
      if (cur->super) {
        auto s = name_or(cur->super, "");
        if (auto jt = local_.find(s); jt != local_.end()) {
          chain.push_back(jt->second);
        } else if (imported_.count(s)) {
          external = true;
        }
      }
    }
    if (!found && !external) ref_diag(fn, pc, fmt::format("{} at pc={}: no field {} in {}", where, pc, ref.field, ref.owner));
  }

  std::optional<StackEffect> effect(const Instruction& in, bool returns_value) const {
    switch (in.op) {
      case Opcode::Const:
      case Opcode::Load: return StackEffect{0, 1};
      case Opcode::Store:
      case Opcode::Pop:
      case Opcode::Print:
      case Opcode::JmpIfFalse: return StackEffect{1, 0};
      case Opcode::Dup: return StackEffect{1, 2};
      case Opcode::Add:
      case Opcode::Sub:
      case Opcode::Mul:
      case Opcode::Div:
      case Opcode::Mod:
      case Opcode::Lt:
      case Opcode::Le:
      case Opcode::Eq:
      case Opcode::Ne:
      case Opcode::ALoad: return StackEffect{2, 1};
      case Opcode::Neg:
      case Opcode::GetField:
      case Opcode::NewArr:
      case Opcode::ArrLen: return StackEffect{1, 1};
      case Opcode::Jmp: return StackEffect{0, 0};
      case Opcode::Ret: return StackEffect{returns_value ? 1 : 0, 0};
      case Opcode::New: return StackEffect{0, 1};
      case Opcode::PutField: return StackEffect{2, 0};
      case Opcode::AStore: return StackEffect{3, 0};
      case Opcode::InvokeStatic:
      case Opcode::InvokeVirtual:
      case Opcode::InvokeSpecial:
      case Opcode::InvokeInterface: {
        auto t = text_of(m_, static_cast<std::uint32_t>(in.a), PoolTag::MethodRef);
        if (!t) return std::nullopt;
        try {
          auto ref = MethodRef::parse(*t);
          int pops = static_cast<int>(ref.type.arity()) + (in.op == Opcode::InvokeStatic ? 0 : 1);
          return StackEffect{pops, ref.type.returns_value() ? 1 : 0};
        } catch (const DescriptorError&) {
          return std::nullopt;
        }
      }
      case Opcode::InvokeDynamic: {
        auto t = text_of(m_, in.b, PoolTag::Type);
        if (!t) return std::nullopt;
        try {
          auto type = FunctionType::parse(*t);
          return StackEffect{static_cast<int>(type.arity()), type.returns_value() ? 1 : 0};
        } catch (const DescriptorError&) {
          return std::nullopt;
        }
      }
    }
    return std::nullopt;
  }

  /// Abstract interpretation of stack depth. Returns the maximum depth when
  /// the analysis completes without errors.
  std::optional<std::uint16_t> analyze_stack(const FunctionDef& f, const FunctionType& type, const std::string& fn,
                                             std::uint32_t max_stack, bool report) {
    auto offsets = code_offsets(f.code);
    std::unordered_map<std::uint32_t, std::size_t> index_of;
    for (std::size_t i = 0; i < f.code.size(); ++i) index_of[offsets[i]] = i;
    std::vector<int> depth(f.code.size(), -1);
    std::deque<std::size_t> work;
    bool ok = true;
    int deepest = 0;
    auto flow = [&](std::size_t from, std::size_t to, int d) {
      if (to >= f.code.size()) {
        if (report) control_diag(fn, offsets[from], fmt::format("control falls off end of code after pc={}", offsets[from]));
        ok = false;
        return;
      }
      if (depth[to] == -1) {
        depth[to] = d;
        work.push_back(to);
      } else if (depth[to] != d) {
        if (report) {
          control_diag(fn, offsets[to],
                  fmt::format("inconsistent stack depth at pc={} ({} vs {})", offsets[to], depth[to], d));
        }
        ok = false;
      }
    };
    if (f.code.empty()) return 0;
    depth[0] = 0;
    work.push_back(0);
    while (!work.empty()) {
      auto i = work.front();
      work.pop_front();
      const auto& in = f.code[i];
      auto pc = offsets[i];
      auto eff = effect(in, type.returns_value());
      if (!eff) return std::nullopt;
      int d = depth[i];
      if (d < eff->pops) {
        if (report) control_diag(fn, pc, fmt::format("stack underflow at pc={} ({})", pc, mnemonic(in.op)));
        ok = false;
        continue;
      }
      if (in.op == Opcode::Ret && d != eff->pops) {
        if (report) {
          control_diag(fn, pc, fmt::format("stack imbalance at pc={}: RET with {} values on the stack, expected {}",
                                           pc, d, eff->pops));
        }
        ok = false;
        continue;
      }
      d = d - eff->pops + eff->pushes;
      deepest = std::max(deepest, d);
      if (static_cast<std::uint32_t>(d) > max_stack) {
        if (report) {
          control_diag(fn, pc, fmt::format("stack depth {} exceeds max_stack {} at pc={}", d, max_stack, pc));
        }
        ok = false;
        continue;
      }
      if (in.op == Opcode::Ret) continue;
      if (in.op == Opcode::Jmp || in.op == Opcode::JmpIfFalse) {
        auto target = static_cast<std::int64_t>(pc) + in.a;
        auto it = target >= 0 ? index_of.find(static_cast<std::uint32_t>(target)) : index_of.end();
        if (it == index_of.end()) {
          ok = false;  // reported by the operand check
          continue;
        }
        flow(i, it->second, d);
        if (in.op == Opcode::Jmp) continue;
      }
      flow(i, i + 1, d);
    }
    if (!ok) return std::nullopt;
    return static_cast<std::uint16_t>(deepest);
  }

  void check_function(const ClassDef* owner, const std::string& owner_name, const FunctionDef& f) {
    auto fname = name_or(f.name, "?");
    std::string fn = owner ? owner_name + "." + fname : fname;
    if (!text_of(m_, f.name, PoolTag::Utf8)) fn_diag(fn, std::nullopt, "function name is not a utf8 entry");
    auto type = function_type(f);
    if (!type) {
      fn_diag(fn, std::nullopt, "function type is not a valid type entry");
      return;
    }
    fn = fn + ":" + type->str();
    for (const auto& p : type->params) check_descriptor(p, fn);
    check_descriptor(type->ret, fn);
    if (!owner && !f.is_static()) fn_diag(fn, std::nullopt, "module functions must be static");
    if (f.is_static() && (f.flags & (kFlagVirtual | kFlagAbstract))) {
      fn_diag(fn, std::nullopt, "static functions cannot be virtual or abstract");
    }
    if (owner && owner->is_interface && !f.is_abstract()) {
      fn_diag(fn, std::nullopt, "interface methods must be abstract");
    }
    if (f.is_abstract()) {
      if (!f.code.empty()) fn_diag(fn, std::nullopt, "abstract method has code");
      return;
    }
    if (f.code.empty()) {
      fn_diag(fn, std::nullopt, "function has no code");
      return;
    }
    std::uint32_t params = static_cast<std::uint32_t>(type->arity()) + (f.is_static() ? 0 : 1);
    if (f.max_locals < params) {
      fn_diag(fn, std::nullopt, fmt::format("max_locals {} is smaller than the {} parameter slots", f.max_locals, params));
    }

    auto offsets = code_offsets(f.code);
    std::unordered_set<std::uint32_t> boundaries(offsets.begin(), offsets.end() - 1);
    bool operands_ok = true;
    for (std::size_t i = 0; i < f.code.size(); ++i) {
      const auto& in = f.code[i];
      auto pc = offsets[i];
      auto bad = [&](std::string msg, DiagKind kind = DiagKind::Structure) {
        fn_diag(fn, pc, fmt::format("{} at pc={}: {}", mnemonic(in.op), pc, msg), kind);
        operands_ok = false;
      };
      switch (operand_kind(in.op)) {
        case OperandKind::None: break;
        case OperandKind::Constant: {
          if (!m_.pool.contains(in.a)) {
            bad("constant index out of range");
            break;
          }
          auto tag = m_.pool.at(in.a).tag;
          if (tag != PoolTag::Utf8 && tag != PoolTag::Int && tag != PoolTag::Float && tag != PoolTag::Bool &&
              tag != PoolTag::Null) {
            bad(fmt::format("pool entry {} is a {}, not a loadable constant", in.a, pool_tag_name(tag)));
          }
          break;
        }
        case OperandKind::Local:
          if (in.a < 0 || static_cast<std::uint32_t>(in.a) >= f.max_locals) {
            bad(fmt::format("local {} outside max_locals {}", in.a, f.max_locals));
          }
          break;
        case OperandKind::Jump: {
          auto target = static_cast<std::int64_t>(pc) + in.a;
          if (target < 0 || !boundaries.count(static_cast<std::uint32_t>(target))) {
            bad(fmt::format("jump target {} is not an instruction boundary", target), DiagKind::Control);
          }
          break;
        }
        case OperandKind::ClassRef: {
          auto t = text_of(m_, in.a, PoolTag::ClassRef);
          if (!t) {
            bad("operand is not a classref entry");
          } else if (!known_class(*t)) {
            bad(fmt::format("unknown class {}", *t), DiagKind::Reference);
          } else if (auto it = local_.find(*t); it != local_.end() && it->second->is_interface) {
            bad(fmt::format("cannot instantiate interface {}", *t));
          }
          break;
        }
        case OperandKind::FieldRef: {
          auto t = text_of(m_, in.a, PoolTag::FieldRef);
          if (!t) {
            bad("operand is not a fieldref entry");
            break;
          }
          try {
            check_field_ref(fn, pc, in.op, FieldRef::parse(*t));
          } catch (const DescriptorError& e) {
            bad(e.what());
          }
          break;
        }
        case OperandKind::MethodRef: {
          auto t = text_of(m_, in.a, PoolTag::MethodRef);
          if (!t) {
            bad("operand is not a methodref entry");
            break;
          }
          try {
            check_method_ref(fn, pc, in.op, MethodRef::parse(*t));
          } catch (const DescriptorError& e) {
            bad(e.what());
          }
          break;
        }
        case OperandKind::Dynamic: {
          auto name = text_of(m_, in.a, PoolTag::Utf8);
          auto tt = text_of(m_, in.b, PoolTag::Type);
          if (!name || !tt) {
            bad("call-site name must be utf8 and type must be a type entry");
            break;
          }
          if (in.tag != kBuiltinBootstrap) {
            bad(fmt::format("unsupported bootstrap tag {}", in.tag));
            break;
          }
          auto colon = name->find(':');
          if (colon == std::string::npos || !kInvokeKinds.count(name->substr(0, colon))) {
            bad(fmt::format("malformed call-site name '{}'", *name));
            break;
          }
          try {
            auto kind = name->substr(0, colon);
            auto ref = MethodRef::parse(std::string_view(*name).substr(colon + 1));
            auto site_type = FunctionType::parse(*tt);
            auto expect = ref.type;
            if (kind != "static") {
              if (ref.type.params.empty() || ref.type.params[0] != TypeDescriptor::instance(ref.owner)) {
                bad(fmt::format("call-site name '{}' lacks its receiver parameter", *name));
                break;
              }
            }
            if (expect != site_type) {
              bad(fmt::format("call-site type {} does not match name '{}'", *tt, *name));
            }
            for (const auto& p : site_type.params) check_descriptor(p, fn);
            check_descriptor(site_type.ret, fn);
          } catch (const DescriptorError& e) {
            bad(e.what());
          }
          break;
        }
      }
    }
    if (!operands_ok) return;
    analyze_stack(f, *type, fn, f.max_stack, /*report=*/true);
  }

  void check_entry() {
    if (m_.entry == 0) return;
    auto t = text_of(m_, m_.entry, PoolTag::Utf8);
    if (!t) {
      module_diag("entry index is not a utf8 entry");
      return;
    }
    for (const auto& f : m_.functions) {
      if (name_or(f.name, "") == *t) return;
    }
    auto dot = t->rfind('.');
    if (dot != std::string::npos) {
      if (auto it = local_.find(t->substr(0, dot)); it != local_.end()) {
        for (const auto& f : it->second->methods) {
          if (f.is_static() && name_or(f.name, "") == t->substr(dot + 1)) return;
        }
      }
    }
    module_diag(fmt::format("entry point {} is not defined", *t));
  }

  const ModuleFile& m_;
  std::vector<Diagnostic> diags_;
  std::unordered_set<std::string> imported_;
  std::unordered_map<std::string, const ClassDef*> local_;
};

}  // namespace

std::vector<Diagnostic> validate(const ModuleFile& m) {
  if (m.version != kFormatVersion) {
    return {{DiagKind::Structure, "", std::nullopt, fmt::format("unsupported version {}", m.version)}};
  }
  return Validator(m).run();
}

std::optional<std::uint16_t> required_max_stack(const ModuleFile& m, const FunctionDef& f) {
  return Validator(m).max_depth(f);
}

}  // namespace fluxvm
