#include "fluxvm/vm/runtime_image.hpp"

#include <chrono>
#include <cstdio>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "fluxvm/bytecode/validator.hpp"
#include "fluxvm/vm/bootstrap.hpp"
#include "fluxvm/vm/exec_context.hpp"

namespace fluxvm {

void EventQueue::post(std::int64_t event) {
  {
    std::lock_guard lock(mu_);
    events_.push_back(event);
  }
  cv_.notify_one();
}

std::int64_t EventQueue::take(const std::function<std::optional<std::int64_t>()>& fallback) {
  {
    std::lock_guard lock(mu_);
    if (!events_.empty()) {
      auto e = events_.front();
      events_.pop_front();
      return e;
    }
  }
  if (fallback) {
    if (auto e = fallback()) return *e;
  }
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !events_.empty(); });
  auto e = events_.front();
  events_.pop_front();
  return e;
}

namespace {

std::string signature(const std::string& name, const FunctionType& type) { return name + ":" + type.str(); }

std::string sig_of(const RuntimeFunction& fn) { return signature(fn.name, fn.type); }

bool dispatchable(const RuntimeFunction& fn) { return !fn.is_static && !fn.is_special_only; }

Value constant_of(const PoolEntry& e) {
  switch (e.tag) {
    case PoolTag::Int: return Value::integer(e.integer);
    case PoolTag::Float: return Value::real(e.real);
    case PoolTag::Bool: return Value::boolean(e.integer != 0);
    case PoolTag::Null: return Value::null();
    case PoolTag::Utf8: return Value::string(e.text);
    default: throw LoadError(fmt::format("pool entry of kind {} is not a constant", pool_tag_name(e.tag)));
  }
}

}  // namespace

/// Stages one module against an image and commits it only when every class,
/// function and reference resolved.
class Loader {
 public:
  Loader(RuntimeImage& image, const ModuleFile& m) : img_(image), m_(m) {}

  void run() {
    stage_names();
    build_classes();
    build_vtables();
    prepare_code();
    commit();
  }

 private:
  const RuntimeClass* find_class(std::string_view name) const {
    if (auto it = classes_.find(name); it != classes_.end()) return it->second.get();
    return img_.find_class(name);
  }

  const RuntimeFunction* find_module_function(const std::string& key) const {
    if (auto it = module_functions_.find(key); it != module_functions_.end()) return it->second;
    if (auto it = img_.module_functions_.find(key); it != img_.module_functions_.end()) return it->second;
    return nullptr;
  }

  std::unique_ptr<RuntimeFunction> make_function(const FunctionDef& def, const std::string& owner) {
    auto fn = std::make_unique<RuntimeFunction>();
    fn->owner = owner;
    fn->name = m_.function_name(def);
    fn->type = m_.function_type(def);
    fn->is_static = owner.empty() || def.is_static();
    fn->is_abstract = def.is_abstract();
    fn->is_special_only = def.is_special_only();
    fn->param_slots = static_cast<std::uint32_t>(fn->type.arity() + (fn->is_static ? 0 : 1));
    fn->max_stack = def.max_stack;
    fn->max_locals = def.max_locals;
    return fn;
  }

  void stage_names() {
    for (auto i : m_.imports) {
      const auto& name = m_.text(i);
      if (!img_.find_class(name)) throw LoadError(fmt::format("unresolved import {}", name));
    }
    for (const auto& c : m_.classes) {
      auto name = m_.class_name(c);
      if (img_.find_class(name)) throw LoadError(fmt::format("class {} is already loaded", name));
      auto cls = std::make_unique<RuntimeClass>();
      cls->name = name;
      cls->is_interface = c.is_interface;
      defs_[name] = &c;
      classes_[name] = std::move(cls);
    }
    for (const auto& f : m_.functions) {
      auto fn = make_function(f, "");
      auto key = sig_of(*fn);
      if (img_.module_functions_.count(key)) throw LoadError(fmt::format("function {} is already loaded", key));
      module_functions_[key] = fn.get();
      pending_.push_back({fn.get(), &f});
      functions_.push_back(std::move(fn));
    }
  }

  void build_class(const std::string& name, std::set<std::string>& done) {
    if (done.count(name)) return;
    done.insert(name);
    const ClassDef& def = *defs_.at(name);
    RuntimeClass& cls = *classes_.at(name);
    auto resolve = [&](std::uint16_t idx) -> const RuntimeClass* {
      auto n = m_.text(idx);
      if (classes_.count(n)) build_class(n, done);
      auto* c = find_class(n);
      if (!c) throw LoadError(fmt::format("class {} refers to unknown class {}", name, n));
      return c;
    };
    if (def.super) cls.super = resolve(def.super);
    for (auto i : def.interfaces) cls.interfaces.push_back(resolve(i));

    cls.ancestry.insert(cls.name);
    if (cls.super) {
      cls.ancestry.insert(cls.super->ancestry.begin(), cls.super->ancestry.end());
      cls.field_names = cls.super->field_names;
      cls.field_types = cls.super->field_types;
      cls.field_slots = cls.super->field_slots;
    }
    for (auto* i : cls.interfaces) cls.ancestry.insert(i->ancestry.begin(), i->ancestry.end());
    for (const auto& f : def.fields) {
      auto fname = m_.text(f.name);
      cls.field_slots[fname] = static_cast<std::uint32_t>(cls.field_names.size());
      cls.field_names.push_back(fname);
      cls.field_types.push_back(TypeDescriptor::parse(m_.text(f.desc)));
    }
    for (const auto& md : def.methods) {
      auto fn = make_function(md, name);
      fn->owner_class = &cls;
      cls.methods[sig_of(*fn)] = fn.get();
      if (dispatchable(*fn)) img_.selectors_.try_emplace(sig_of(*fn), static_cast<std::uint32_t>(img_.selectors_.size()));
      if (!fn->is_abstract) pending_.push_back({fn.get(), &md});
      functions_.push_back(std::move(fn));
    }
  }

  void build_classes() {
    std::set<std::string> done;
    for (const auto& c : m_.classes) build_class(m_.class_name(c), done);
  }

  void fill_vtable(RuntimeClass& cls, std::set<const RuntimeClass*>& done) {
    if (!classes_.count(cls.name) || done.count(&cls)) return;
    done.insert(&cls);
    if (cls.super) fill_vtable(const_cast<RuntimeClass&>(*cls.super), done);
    for (auto* i : cls.interfaces) fill_vtable(const_cast<RuntimeClass&>(*i), done);

    cls.vtable.assign(img_.selectors_.size(), nullptr);
    if (cls.super) std::copy(cls.super->vtable.begin(), cls.super->vtable.end(), cls.vtable.begin());
    for (auto* i : cls.interfaces)
      for (std::size_t s = 0; s < i->vtable.size(); ++s)
        if (!cls.vtable[s]) cls.vtable[s] = i->vtable[s];
    for (auto& [sig, fn] : cls.methods) {
      if (!dispatchable(*fn) || fn->is_abstract) continue;
      cls.vtable[img_.selectors_.at(sig)] = fn;
    }
  }

  void build_vtables() {
    std::set<const RuntimeClass*> done;
    for (auto& [name, cls] : classes_) fill_vtable(*cls, done);
  }

  const RuntimeFunction* resolve_callee(Opcode op, const MethodRef& ref) const {
    auto sig = signature(ref.method, ref.type);
    if (ref.owner.empty()) return find_module_function(sig);
    const RuntimeClass* cls = find_class(ref.owner);
    if (!cls) return nullptr;
    auto* fn = cls->find_method(ref.method, ref.type.str());
    if (!fn) return nullptr;
    if (op == Opcode::InvokeStatic && !fn->is_static) return nullptr;
    if (op != Opcode::InvokeStatic && fn->is_static) return nullptr;
    return fn;
  }

  void prepare(RuntimeFunction& fn, const FunctionDef& def) {
    auto where = [&](std::uint32_t pc) { return fmt::format("{}@{}", fn.qualified(), pc); };
    auto offsets = code_offsets(def.code);
    std::unordered_map<std::uint32_t, std::int32_t> index_of;
    for (std::size_t i = 0; i < def.code.size(); ++i) index_of[offsets[i]] = static_cast<std::int32_t>(i);

    fn.code.reserve(def.code.size());
    for (std::size_t i = 0; i < def.code.size(); ++i) {
      const auto& in = def.code[i];
      PreparedInstr p;
      p.op = in.op;
      p.pc = offsets[i];
      switch (in.op) {
        case Opcode::Const: p.constant = constant_of(m_.pool.at(static_cast<std::uint32_t>(in.a))); break;
        case Opcode::Load:
        case Opcode::Store: p.arg = in.a; break;
        case Opcode::Jmp:
        case Opcode::JmpIfFalse: p.arg = index_of.at(static_cast<std::uint32_t>(static_cast<std::int64_t>(p.pc) + in.a)); break;
        case Opcode::New: {
          auto name = m_.text(static_cast<std::uint16_t>(in.a));
          p.cls = find_class(name);
          if (!p.cls) throw LoadError(fmt::format("{}: unknown class {}", where(p.pc), name));
          if (p.cls->is_builtin || p.cls->is_interface)
            throw LoadError(fmt::format("{}: class {} cannot be instantiated", where(p.pc), name));
          break;
        }
        case Opcode::GetField:
        case Opcode::PutField: {
          auto ref = FieldRef::parse(m_.text(static_cast<std::uint16_t>(in.a)));
          const RuntimeClass* cls = find_class(ref.owner);
          auto it = cls ? cls->field_slots.find(ref.field) : decltype(cls->field_slots.end()){};
          if (!cls || it == cls->field_slots.end())
            throw LoadError(fmt::format("{}: unknown field {}", where(p.pc), ref.str()));
          p.arg = static_cast<std::int32_t>(it->second);
          p.cls = cls;
          break;
        }
        case Opcode::InvokeStatic:
        case Opcode::InvokeSpecial:
        case Opcode::InvokeVirtual:
        case Opcode::InvokeInterface: {
          auto ref = MethodRef::parse(m_.text(static_cast<std::uint16_t>(in.a)));
          p.arg = static_cast<std::int32_t>(ref.type.arity() + (in.op == Opcode::InvokeStatic ? 0 : 1));
          p.callee = resolve_callee(in.op, ref);
          if (!p.callee) throw LoadError(fmt::format("{}: cannot resolve {}", where(p.pc), ref.str()));
          if (in.op == Opcode::InvokeVirtual || in.op == Opcode::InvokeInterface) {
            auto sel = img_.selectors_.find(signature(ref.method, ref.type));
            if (sel == img_.selectors_.end() || !dispatchable(*p.callee))
              throw LoadError(fmt::format("{}: {} is not dispatchable", where(p.pc), ref.str()));
            p.selector = sel->second;
          } else if (p.callee->is_abstract) {
            throw LoadError(fmt::format("{}: {} is abstract", where(p.pc), ref.str()));
          }
          break;
        }
        case Opcode::InvokeDynamic: {
          auto slot = std::make_unique<SiteSlot>();
          slot->key = SiteKey::parse(m_.text(static_cast<std::uint16_t>(in.a)));
          slot->type = FunctionType::parse(m_.text(in.b));
          slot->location = where(p.pc);
          p.arg = static_cast<std::int32_t>(slot->type.arity());
          p.site = slot.get();
          slots_.push_back(std::move(slot));
          break;
        }
        default: break;
      }
      fn.code.push_back(std::move(p));
    }
  }

  void prepare_code() {
    for (auto& [fn, def] : pending_) prepare(*fn, *def);
  }

  void commit() {
    for (auto& [name, cls] : classes_) img_.classes_[name] = std::move(cls);
    for (auto& [key, fn] : module_functions_) img_.module_functions_[key] = fn;
    for (auto& fn : functions_) img_.functions_.push_back(std::move(fn));
    for (auto& s : slots_) img_.slots_.push_back(std::move(s));
  }

  RuntimeImage& img_;
  const ModuleFile& m_;
  std::map<std::string, std::unique_ptr<RuntimeClass>, std::less<>> classes_;
  std::map<std::string, const ClassDef*> defs_;
  std::map<std::string, RuntimeFunction*, std::less<>> module_functions_;
  std::vector<std::unique_ptr<RuntimeFunction>> functions_;
  std::vector<std::pair<RuntimeFunction*, const FunctionDef*>> pending_;
  std::vector<std::unique_ptr<SiteSlot>> slots_;
};

RuntimeImage::RuntimeImage(ImageOptions options) : options_(std::move(options)) { install_builtins(); }

RuntimeImage::~RuntimeImage() = default;

void RuntimeImage::install_builtins() {
  auto add_class = [&](const std::string& name) {
    auto cls = std::make_unique<RuntimeClass>();
    cls->name = name;
    cls->is_builtin = true;
    cls->ancestry.insert(name);
    auto* raw = cls.get();
    classes_[name] = std::move(cls);
    return raw;
  };
  auto add_method = [&](RuntimeClass* cls, const std::string& name, const std::string& type, bool is_static,
                        NativeFn native) {
    auto fn = std::make_unique<RuntimeFunction>();
    fn->owner = cls->name;
    fn->name = name;
    fn->type = FunctionType::parse(type);
    fn->is_static = is_static;
    fn->param_slots = static_cast<std::uint32_t>(fn->type.arity() + (is_static ? 0 : 1));
    fn->native = std::move(native);
    fn->owner_class = cls;
    auto sig = name + ":" + type;
    cls->methods[sig] = fn.get();
    if (!is_static) {
      auto sel = selectors_.try_emplace(sig, static_cast<std::uint32_t>(selectors_.size())).first->second;
      if (cls->vtable.size() <= sel) cls->vtable.resize(sel + 1, nullptr);
      cls->vtable[sel] = fn.get();
    }
    functions_.push_back(std::move(fn));
  };

  auto* str = add_class("Str");
  add_method(str, "replace_all", "(SS)S", false, [](std::span<const Value> a, ExecContext&) {
    const auto& s = a[0].as_string();
    const auto& from = a[1].as_string();
    const auto& to = a[2].as_string();
    if (from.empty()) return a[0];
    std::string out;
    std::size_t pos = 0;
    for (auto hit = s.find(from); hit != std::string::npos; hit = s.find(from, pos)) {
      out.append(s, pos, hit - pos).append(to);
      pos = hit + from.size();
    }
    out.append(s, pos);
    return Value::string(std::move(out));
  });
  add_method(str, "length", "()I", false, [](std::span<const Value> a, ExecContext&) {
    return Value::integer(static_cast<std::int64_t>(a[0].as_string().size()));
  });
  str_class_ = str;

  auto* sys = add_class("Sys");
  add_method(sys, "awaitEvent", "()I", true,
             [](std::span<const Value>, ExecContext& ctx) { return Value::integer(ctx.image().await_event()); });
  add_method(sys, "sleep", "(I)V", true, [](std::span<const Value> a, ExecContext&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(std::max<std::int64_t>(0, a[0].as_int())));
    return Value::null();
  });
}

LoadReport RuntimeImage::load(const ModuleFile& m, bool transform) {
  auto diags = validate(m);
  if (!diags.empty()) {
    std::string msg = "module failed validation:";
    for (const auto& d : diags) msg += "\n  " + d.str();
    throw LoadError(msg);
  }
  LoadReport report;
  auto installed = std::make_unique<ModuleFile>(m);
  if (transform) {
    auto r = transform_module(m);
    *installed = std::move(r.module);
    report.transform = r.stats;
  }
  try {
    Loader(*this, *installed).run();
  } catch (const Error& e) {
    if (dynamic_cast<const LoadError*>(&e)) throw;
    throw LoadError(e.what());
  }
  modules_.push_back(std::move(installed));
  return report;
}

const RuntimeClass* RuntimeImage::find_class(std::string_view name) const {
  auto it = classes_.find(name);
  return it == classes_.end() ? nullptr : it->second.get();
}

const RuntimeFunction* RuntimeImage::find_module_function(std::string_view name, std::string_view type) const {
  std::string key;
  key.append(name).append(":").append(type);
  auto it = module_functions_.find(key);
  return it == module_functions_.end() ? nullptr : it->second;
}

const RuntimeFunction* RuntimeImage::find_entry(std::string_view name) const {
  auto dot = name.rfind('.');
  if (dot != std::string_view::npos) {
    const RuntimeClass* cls = find_class(name.substr(0, dot));
    if (!cls) return nullptr;
    auto method = name.substr(dot + 1);
    for (const auto& [sig, fn] : cls->methods)
      if (fn->is_static && fn->name == method) return fn;
    return nullptr;
  }
  std::string prefix(name);
  prefix += ":";
  auto it = module_functions_.lower_bound(prefix);
  if (it != module_functions_.end() && it->first.compare(0, prefix.size(), prefix) == 0) return it->second;
  return nullptr;
}

std::optional<std::uint32_t> RuntimeImage::find_selector(std::string_view signature) const {
  auto it = selectors_.find(signature);
  if (it == selectors_.end()) return std::nullopt;
  return it->second;
}

const RuntimeClass* RuntimeImage::class_of(const Value& v) const noexcept {
  switch (v.tag()) {
    case ValueTag::Obj: return v.as_object()->cls;
    case ValueTag::Str: return str_class_;
    default: return nullptr;
  }
}

void RuntimeImage::emit(std::string_view text) const {
  if (options_.sink) {
    options_.sink(text);
    return;
  }
  std::fwrite(text.data(), 1, text.size(), stdout);
  std::fflush(stdout);
}

std::int64_t RuntimeImage::await_event() { return events_.take(options_.event_source); }

DynamicCallSite& RuntimeImage::link(SiteSlot& slot) {
  if (auto* s = slot.site.load(std::memory_order_acquire)) return *s;
  std::lock_guard lock(link_mu_);
  if (auto* s = slot.site.load(std::memory_order_relaxed)) return *s;
  slot.bootstrap_runs.fetch_add(1, std::memory_order_relaxed);
  stats_.bootstraps.fetch_add(1, std::memory_order_relaxed);
  auto site = bootstrap(*this, slot.key, slot.type, options_.site_semantics);
  site->mark_bootstrapped();
  registry_.register_site(*site);
  slot.owned = std::move(site);
  slot.site.store(slot.owned.get(), std::memory_order_release);
  return *slot.owned;
}

std::vector<const SiteSlot*> RuntimeImage::slots() const {
  std::vector<const SiteSlot*> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.get());
  return out;
}

}  // namespace fluxvm
