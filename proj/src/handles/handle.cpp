#include "fluxvm/handles/handle.hpp"

#include <fmt/format.h>

#include "fluxvm/vm/exec_context.hpp"

namespace fluxvm {

std::string_view handle_errc_name(HandleErrc e) noexcept {
  switch (e) {
    case HandleErrc::NoSuchMethod: return "no-such-method";
    case HandleErrc::TypeMismatch: return "type-mismatch";
    case HandleErrc::KindMismatch: return "kind-mismatch";
    case HandleErrc::IndexOutOfRange: return "index-out-of-range";
    case HandleErrc::Unassignable: return "unassignable";
    case HandleErrc::VoidReturn: return "void-return";
    case HandleErrc::NotAnArray: return "not-an-array";
    case HandleErrc::Inconvertible: return "inconvertible";
  }
  return "?";
}

HandleError::HandleError(HandleErrc code, const std::string& what)
    : Error(std::string(handle_errc_name(code)) + ": " + what), code_(code) {}

namespace {

std::string literal(const Value& v) {
  if (v.tag() == ValueTag::Str) return fmt::format("\"{}\"", v.as_string());
  return render(v);
}

std::string list_str(const std::vector<std::string>& parts) {
  return fmt::format("[{}]", fmt::join(parts, ", "));
}

void narrow(const Value& v, const TypeDescriptor& d, std::string_view what) {
  if (!assignable(v, d))
    throw VmError(VmErrc::CastError, fmt::format("cannot cast {} to {} ({})", tag_name(v.tag()), d.str(), what));
}

class InsertNode final : public HandleNode {
 public:
  InsertNode(FunctionType t, FunctionHandle target, std::size_t pos, std::vector<Value> vals)
      : HandleNode(std::move(t)), target_(std::move(target)), pos_(pos), vals_(std::move(vals)) {}

  Value invoke(std::span<const Value> args, ExecContext& ctx) const override {
    std::vector<Value> full;
    full.reserve(args.size() + vals_.size());
    full.insert(full.end(), args.begin(), args.begin() + static_cast<std::ptrdiff_t>(pos_));
    full.insert(full.end(), vals_.begin(), vals_.end());
    full.insert(full.end(), args.begin() + static_cast<std::ptrdiff_t>(pos_), args.end());
    return target_.node()->invoke(full, ctx);
  }

  std::string describe() const override {
    std::vector<std::string> parts;
    for (const auto& v : vals_) parts.push_back(literal(v));
    return fmt::format("insertArguments({}, {}, {})", target_.describe(), pos_, list_str(parts));
  }

 private:
  FunctionHandle target_;
  std::size_t pos_;
  std::vector<Value> vals_;
};

class FilterArgsNode final : public HandleNode {
 public:
  FilterArgsNode(FunctionType t, FunctionHandle target, std::size_t pos, std::vector<FunctionHandle> filters)
      : HandleNode(std::move(t)), target_(std::move(target)), pos_(pos), filters_(std::move(filters)) {}

  Value invoke(std::span<const Value> args, ExecContext& ctx) const override {
    std::vector<Value> full(args.begin(), args.end());
    for (std::size_t i = 0; i < filters_.size(); ++i) {
      auto& slot = full[pos_ + i];
      slot = filters_[i].node()->invoke(std::span<const Value>(&slot, 1), ctx);
    }
    return target_.node()->invoke(full, ctx);
  }

  std::string describe() const override {
    std::vector<std::string> parts;
    for (const auto& f : filters_) parts.push_back(f.describe());
    return fmt::format("filterArguments({}, {}, {})", target_.describe(), pos_, list_str(parts));
  }

 private:
  FunctionHandle target_;
  std::size_t pos_;
  std::vector<FunctionHandle> filters_;
};

class FilterReturnNode final : public HandleNode {
 public:
  FilterReturnNode(FunctionType t, FunctionHandle target, FunctionHandle filter)
      : HandleNode(std::move(t)), target_(std::move(target)), filter_(std::move(filter)) {}

  Value invoke(std::span<const Value> args, ExecContext& ctx) const override {
    Value r = target_.node()->invoke(args, ctx);
    return filter_.node()->invoke(std::span<const Value>(&r, 1), ctx);
  }

  std::string describe() const override {
    return fmt::format("filterReturnValue({}, {})", target_.describe(), filter_.describe());
  }

 private:
  FunctionHandle target_;
  FunctionHandle filter_;
};

class SpreaderNode final : public HandleNode {
 public:
  SpreaderNode(FunctionType t, FunctionHandle target, std::size_t count)
      : HandleNode(std::move(t)), target_(std::move(target)), count_(count) {}

  Value invoke(std::span<const Value> args, ExecContext& ctx) const override {
    const Value& last = args.back();
    if (last.tag() != ValueTag::Arr)
      throw VmError(VmErrc::SpreadMismatch, fmt::format("expected an array of {} elements, got {}", count_,
                                                        tag_name(last.tag())));
    const auto& items = last.as_array()->items;
    if (items.size() != count_)
      throw VmError(VmErrc::SpreadMismatch,
                    fmt::format("expected an array of {} elements, got {}", count_, items.size()));
    std::vector<Value> full(args.begin(), args.end() - 1);
    const auto& params = target_.type().params;
    std::size_t first = params.size() - count_;
    for (std::size_t i = 0; i < count_; ++i) {
      narrow(items[i], params[first + i], "spread element");
      full.push_back(items[i]);
    }
    return target_.node()->invoke(full, ctx);
  }

  std::string describe() const override { return fmt::format("asSpreader({}, {})", target_.describe(), count_); }

 private:
  FunctionHandle target_;
  std::size_t count_;
};

class CollectorNode final : public HandleNode {
 public:
  CollectorNode(FunctionType t, FunctionHandle target, std::size_t count)
      : HandleNode(std::move(t)), target_(std::move(target)), count_(count) {}

  Value invoke(std::span<const Value> args, ExecContext& ctx) const override {
    std::size_t keep = args.size() - count_;
    std::vector<Value> full(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(keep));
    full.push_back(Value::array(std::vector<Value>(args.begin() + static_cast<std::ptrdiff_t>(keep), args.end())));
    return target_.node()->invoke(full, ctx);
  }

  std::string describe() const override { return fmt::format("asCollector({}, {})", target_.describe(), count_); }

 private:
  FunctionHandle target_;
  std::size_t count_;
};

class AsTypeNode final : public HandleNode {
 public:
  AsTypeNode(FunctionType t, FunctionHandle target) : HandleNode(std::move(t)), target_(std::move(target)) {
    const auto& inner = target_.type();
    for (std::size_t i = 0; i < inner.params.size(); ++i)
      if (inner.params[i] != type().params[i]) narrow_params_.push_back(i);
    narrow_ret_ = inner.ret != type().ret && !type().ret.is_any();
  }

  Value invoke(std::span<const Value> args, ExecContext& ctx) const override {
    const auto& inner = target_.type();
    for (auto i : narrow_params_) narrow(args[i], inner.params[i], "argument");
    Value r = target_.node()->invoke(args, ctx);
    if (narrow_ret_) narrow(r, type().ret, "return value");
    return r;
  }

  std::string describe() const override { return fmt::format("asType({}, {})", target_.describe(), type().str()); }

 private:
  FunctionHandle target_;
  std::vector<std::size_t> narrow_params_;
  bool narrow_ret_ = false;
};

bool convertible(const TypeDescriptor& from, const TypeDescriptor& to) {
  if (from == to) return true;
  if (from.is_void() || to.is_void()) return false;
  return from.is_any() || to.is_any();
}

FunctionHandle wrap(std::shared_ptr<const HandleNode> n) { return FunctionHandle(std::move(n)); }

void require(const FunctionHandle& h) {
  if (!h) throw HandleError(HandleErrc::TypeMismatch, "empty handle");
}

}  // namespace

DirectHandle::DirectHandle(InvocationKind kind, std::string owner, std::string method, FunctionType type,
                           const RuntimeFunction* exact, std::uint32_t selector)
    : HandleNode(std::move(type)),
      kind_(kind),
      owner_(std::move(owner)),
      method_(std::move(method)),
      exact_(exact),
      selector_(selector) {
  direct_ = this;
}

const RuntimeFunction& DirectHandle::dispatch(const Value& recv, const ExecContext& ctx) const {
  if (recv.is_null()) throw VmError(VmErrc::NullReceiver, fmt::format("null receiver for {}.{}", owner_, method_));
  const RuntimeClass* cls = ctx.image().class_of(recv);
  if (!cls) throw VmError(VmErrc::TypeFault, fmt::format("{} receiver for {}.{}", tag_name(recv.tag()), owner_, method_));
  const RuntimeFunction* fn = cls->dispatch(selector_);
  if (!fn)
    throw VmError(VmErrc::TypeFault, fmt::format("{} does not implement {}.{}", cls->name, owner_, method_));
  return *fn;
}

Value DirectHandle::invoke(std::span<const Value> args, ExecContext& ctx) const {
  return ctx.call(resolve(args.data(), ctx), args);
}

std::string DirectHandle::describe() const { return SiteKey{kind_, owner_, method_, type()}.str(); }

Value FunctionHandle::invoke(std::span<const Value> args, ExecContext& ctx) const {
  if (!node_) throw VmError(VmErrc::TypeFault, "invoke of an empty handle");
  const auto& t = node_->type();
  if (args.size() != t.params.size())
    throw VmError(VmErrc::ArityMismatch, fmt::format("{} expects {} arguments, got {}", t.str(), t.params.size(),
                                                     args.size()));
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!assignable(args[i], t.params[i]))
      throw VmError(VmErrc::TypeFault, fmt::format("argument {} of {} is not assignable to {}", i,
                                                   tag_name(args[i].tag()), t.params[i].str()));
  }
  return node_->invoke(args, ctx);
}

FunctionHandle lookup_direct(InvocationKind kind, std::string_view owner, std::string_view method,
                             const FunctionType& type, const RuntimeImage& image) {
  image.stats().method_lookups.fetch_add(1, std::memory_order_relaxed);
  std::string label = SiteKey{kind, std::string(owner), std::string(method), type}.target_str();
  auto no_such = [&] { return HandleError(HandleErrc::NoSuchMethod, label); };

  if (owner.empty()) {
    if (kind != InvocationKind::Static)
      throw HandleError(HandleErrc::KindMismatch, fmt::format("{} is a module function", label));
    const RuntimeFunction* fn = image.find_module_function(method, type.str());
    if (!fn) throw no_such();
    return wrap(std::make_shared<DirectHandle>(kind, "", std::string(method), type, fn, 0));
  }

  const RuntimeClass* cls = image.find_class(owner);
  if (!cls) throw no_such();

  auto kind_error = [&](std::string_view why) {
    return HandleError(HandleErrc::KindMismatch, fmt::format("{} lookup of {}: {}", kind_name(kind), label, why));
  };
  const RuntimeFunction* named = nullptr;
  std::vector<const RuntimeClass*> work{cls};
  for (std::size_t i = 0; i < work.size() && !named; ++i) {
    for (const auto& [sig, m] : work[i]->methods) {
      if (m->name == method) {
        named = m;
        break;
      }
    }
    if (work[i]->super) work.push_back(work[i]->super);
    for (auto* it : work[i]->interfaces) work.push_back(it);
  }
  if (!named) throw no_such();

  const auto receiver = TypeDescriptor::instance(std::string(owner));
  const bool has_receiver = !type.params.empty() && type.params[0] == receiver;
  FunctionType stripped = type;
  if (has_receiver) stripped.params.erase(stripped.params.begin());

  FunctionType declared = type;
  if (kind != InvocationKind::Static) {
    if (!has_receiver) {
      if (const auto* s = cls->find_method(method, type.str()); s && s->is_static) throw kind_error("static method");
      throw HandleError(HandleErrc::TypeMismatch, fmt::format("{} lacks receiver parameter L{};", label, owner));
    }
    declared = stripped;
  }
  const RuntimeFunction* fn = cls->find_method(method, declared.str());
  if (!fn) {
    if (kind == InvocationKind::Static && has_receiver) {
      if (const auto* m = cls->find_method(method, stripped.str()); m && !m->is_static)
        throw kind_error("instance method");
    }
    throw HandleError(HandleErrc::TypeMismatch,
                      fmt::format("{} has type {}, not {}", named->qualified(), named->type.str(), declared.str()));
  }

  switch (kind) {
    case InvocationKind::Static:
      if (!fn->is_static) throw kind_error("instance method");
      return wrap(std::make_shared<DirectHandle>(kind, std::string(owner), std::string(method), type, fn, 0));
    case InvocationKind::Special:
      if (fn->is_static) throw kind_error("static method");
      if (fn->is_abstract) throw kind_error("abstract method");
      return wrap(std::make_shared<DirectHandle>(kind, std::string(owner), std::string(method), type, fn, 0));
    case InvocationKind::Virtual:
    case InvocationKind::Interface: {
      if (fn->is_static) throw kind_error("static method");
      if (fn->is_special_only) throw kind_error("method is invocable only as special");
      bool want_iface = kind == InvocationKind::Interface;
      if (cls->is_interface != want_iface)
        throw kind_error(want_iface ? "owner is not an interface" : "owner is an interface");
      auto sel = image.find_selector(declared.str().insert(0, std::string(method) + ":"));
      if (!sel) throw no_such();
      return wrap(std::make_shared<DirectHandle>(kind, std::string(owner), std::string(method), type, nullptr, *sel));
    }
  }
  throw no_such();
}

FunctionHandle insert_arguments(const FunctionHandle& h, std::size_t pos, std::vector<Value> vals) {
  require(h);
  const auto& t = h.type();
  if (pos > t.params.size() || vals.size() > t.params.size() - pos)
    throw HandleError(HandleErrc::IndexOutOfRange,
                      fmt::format("cannot bind {} values at {} of {}", vals.size(), pos, t.str()));
  if (vals.empty()) return h;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!assignable(vals[i], t.params[pos + i]))
      throw HandleError(HandleErrc::Unassignable, fmt::format("{} value is not assignable to parameter {} ({})",
                                                              tag_name(vals[i].tag()), pos + i, t.params[pos + i].str()));
  }
  FunctionType rt = t;
  rt.params.erase(rt.params.begin() + static_cast<std::ptrdiff_t>(pos),
                  rt.params.begin() + static_cast<std::ptrdiff_t>(pos + vals.size()));
  return wrap(std::make_shared<InsertNode>(std::move(rt), h, pos, std::move(vals)));
}

FunctionHandle filter_arguments(const FunctionHandle& h, std::size_t pos, std::vector<FunctionHandle> filters) {
  require(h);
  if (filters.empty()) return h;
  const auto& t = h.type();
  if (pos > t.params.size() || filters.size() > t.params.size() - pos)
    throw HandleError(HandleErrc::IndexOutOfRange,
                      fmt::format("cannot filter {} arguments at {} of {}", filters.size(), pos, t.str()));
  FunctionType rt = t;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    require(filters[i]);
    const auto& ft = filters[i].type();
    if (ft.arity() != 1)
      throw HandleError(HandleErrc::TypeMismatch, fmt::format("filter {} is not unary", ft.str()));
    if (ft.ret != t.params[pos + i])
      throw HandleError(HandleErrc::TypeMismatch, fmt::format("filter {} does not produce parameter {} ({})",
                                                              ft.str(), pos + i, t.params[pos + i].str()));
    rt.params[pos + i] = ft.params[0];
  }
  return wrap(std::make_shared<FilterArgsNode>(std::move(rt), h, pos, std::move(filters)));
}

FunctionHandle filter_return_value(const FunctionHandle& h, const FunctionHandle& f) {
  require(h);
  require(f);
  const auto& t = h.type();
  if (t.ret.is_void()) throw HandleError(HandleErrc::VoidReturn, fmt::format("{} returns no value", t.str()));
  const auto& ft = f.type();
  if (ft.arity() != 1 || ft.params[0] != t.ret)
    throw HandleError(HandleErrc::TypeMismatch,
                      fmt::format("filter {} does not accept the result {} of {}", ft.str(), t.ret.str(), t.str()));
  FunctionType rt = t;
  rt.ret = ft.ret;
  return wrap(std::make_shared<FilterReturnNode>(std::move(rt), h, f));
}

FunctionHandle as_spreader(const FunctionHandle& h, std::size_t count) {
  require(h);
  const auto& t = h.type();
  if (count > t.params.size())
    throw HandleError(HandleErrc::IndexOutOfRange, fmt::format("cannot spread {} of {}", count, t.str()));
  for (std::size_t i = t.params.size() - count; i < t.params.size(); ++i) {
    if (t.params[i] != TypeDescriptor::any())
      throw HandleError(HandleErrc::TypeMismatch,
                        fmt::format("spread parameter {} of {} is {}, not A", i, t.str(), t.params[i].str()));
  }
  FunctionType rt = t;
  rt.params.resize(t.params.size() - count);
  rt.params.push_back(TypeDescriptor::any_array());
  return wrap(std::make_shared<SpreaderNode>(std::move(rt), h, count));
}

FunctionHandle as_collector(const FunctionHandle& h, std::size_t count) {
  require(h);
  const auto& t = h.type();
  if (t.params.empty() || t.params.back() != TypeDescriptor::any_array())
    throw HandleError(HandleErrc::NotAnArray, fmt::format("last parameter of {} is not [A", t.str()));
  FunctionType rt = t;
  rt.params.pop_back();
  rt.params.insert(rt.params.end(), count, TypeDescriptor::any());
  return wrap(std::make_shared<CollectorNode>(std::move(rt), h, count));
}

FunctionHandle as_type(const FunctionHandle& h, const FunctionType& t) {
  require(h);
  const auto& ht = h.type();
  if (ht == t) return h;
  if (ht.arity() != t.arity())
    throw HandleError(HandleErrc::TypeMismatch, fmt::format("{} and {} differ in arity", ht.str(), t.str()));
  for (std::size_t i = 0; i < t.params.size(); ++i) {
    if (!convertible(t.params[i], ht.params[i]))
      throw HandleError(HandleErrc::Inconvertible, fmt::format("parameter {}: {} cannot become {}", i,
                                                               t.params[i].str(), ht.params[i].str()));
  }
  if (!convertible(ht.ret, t.ret))
    throw HandleError(HandleErrc::Inconvertible,
                      fmt::format("return {} cannot become {}", ht.ret.str(), t.ret.str()));
  return wrap(std::make_shared<AsTypeNode>(t, h));
}

}  // namespace fluxvm
