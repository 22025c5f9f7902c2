#include "fluxvm/vm/exec_context.hpp"

#include <cmath>
#include <latch>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "fluxvm/handles/handle.hpp"

namespace fluxvm {

namespace {

bool is_number(const Value& v) noexcept { return v.tag() == ValueTag::Int || v.tag() == ValueTag::Flt; }

double to_double(const Value& v) noexcept {
  return v.tag() == ValueTag::Int ? static_cast<double>(v.as_int()) : v.as_real();
}

std::int64_t wrap(std::uint64_t v) noexcept { return static_cast<std::int64_t>(v); }

Value default_of(const TypeDescriptor& d) {
  if (d.dims() > 0) return Value::null();
  switch (d.base()) {
    case BaseType::Int: return Value::integer(0);
    case BaseType::Flt: return Value::real(0.0);
    case BaseType::Bool: return Value::boolean(false);
    default: return Value::null();
  }
}

}  // namespace

ExecContext::ExecContext(RuntimeImage& image, ExecOptions options)
    : image_(image), options_(options), fuel_left_(options.fuel) {
  stack_.resize(256);
}

Value ExecContext::call(const RuntimeFunction& fn, std::span<const Value> args) {
  if (fn.is_native()) return fn.native(args, *this);
  if (fn.is_abstract) throw VmError(VmErrc::LinkError, fmt::format("{} is abstract", fn.qualified()));
  if (reentry_ >= options_.reentry_limit)
    throw VmError(VmErrc::StackOverflow, fmt::format("more than {} nested host calls", options_.reentry_limit));
  ++reentry_;
  struct Leave {
    std::size_t& depth;
    ~Leave() { --depth; }
  } leave{reentry_};
  return execute(fn, args);
}

void ExecContext::push_frame(const RuntimeFunction& fn, std::size_t locals_at, std::size_t nargs) {
  if (frames_.size() >= options_.frame_limit)
    throw VmError(VmErrc::StackOverflow, fmt::format("more than {} frames calling {}", options_.frame_limit,
                                                     fn.qualified()));
  std::size_t top = locals_at + fn.max_locals;
  std::size_t need = top + fn.max_stack + 1;
  if (need > options_.stack_limit)
    throw VmError(VmErrc::StackOverflow, fmt::format("operand stack limit of {} slots exceeded calling {}",
                                                     options_.stack_limit, fn.qualified()));
  if (stack_.size() < need) stack_.resize(std::min(std::max(need, stack_.size() * 2), options_.stack_limit));
  for (std::size_t i = locals_at + nargs; i < top; ++i) stack_[i] = Value();
  frames_.push_back(Frame{&fn, locals_at, top, 0});
}

void ExecContext::burn_fuel() {
  if (fuel_left_ == 0) throw VmError(VmErrc::FuelExhausted, "instruction budget exhausted");
  --fuel_left_;
}

Value ExecContext::execute(const RuntimeFunction& entry, std::span<const Value> args) {
  const std::size_t depth = frames_.size();
  const std::size_t at = frames_.empty() ? 0 : frames_.back().sp;
  if (at + args.size() > options_.stack_limit)
    throw VmError(VmErrc::StackOverflow, fmt::format("operand stack limit of {} slots exceeded", options_.stack_limit));
  if (stack_.size() < at + args.size()) stack_.resize(at + args.size());
  std::copy(args.begin(), args.end(), stack_.begin() + static_cast<std::ptrdiff_t>(at));
  push_frame(entry, at, args.size());

  const RuntimeFunction* fn = nullptr;
  const PreparedInstr* code = nullptr;
  Value* S = nullptr;
  std::size_t lp = 0, sp = 0, pc = 0;
  const bool metered = options_.fuel != 0;
  const bool guarded = metered || options_.check_stack_bounds;

  auto load = [&] {
    const Frame& f = frames_.back();
    fn = f.fn;
    code = fn->code.data();
    lp = f.locals;
    sp = f.sp;
    pc = f.pc;
    S = stack_.data();
  };
  auto save = [&] {
    Frame& f = frames_.back();
    f.sp = sp;
    f.pc = pc;
  };
  auto fault = [&](VmErrc c, std::string_view msg) -> VmError {
    return VmError(c, fmt::format("{} at {}@{}", msg, fn->qualified(), code[pc - 1].pc));
  };
  // Runs `callee` on the `nargs` values at the top of the operand stack.
  auto enter = [&](const RuntimeFunction& callee, std::size_t nargs) {
    if (callee.is_native()) {
      save();
      Value r = callee.native(std::span<const Value>(S + sp - nargs, nargs), *this);
      S = stack_.data();
      sp -= nargs;
      if (callee.returns_value()) S[sp++] = std::move(r);
      return;
    }
    if (callee.is_abstract) throw fault(VmErrc::LinkError, fmt::format("{} is abstract", callee.qualified()));
    sp -= nargs;
    save();
    push_frame(callee, sp, nargs);
    load();
  };

  load();
  try {
    for (;;) {
      if (guarded) {
        if (metered) burn_fuel();
        if (options_.check_stack_bounds && sp > lp + fn->max_locals + fn->max_stack) {
          throw VmError(VmErrc::StackOverflow,
                        fmt::format("operand stack exceeds max_stack {} in {}", fn->max_stack, fn->qualified()));
        }
      }
      const PreparedInstr& in = code[pc++];
      switch (in.op) {
        case Opcode::Const: S[sp++] = in.constant; break;
        case Opcode::Load: S[sp++] = S[lp + static_cast<std::size_t>(in.arg)]; break;
        case Opcode::Store: S[lp + static_cast<std::size_t>(in.arg)] = std::move(S[--sp]); break;
        case Opcode::Pop: --sp; break;
        case Opcode::Dup:
          S[sp] = S[sp - 1];
          ++sp;
          break;

        case Opcode::Add: {
          Value& a = S[sp - 2];
          const Value& b = S[sp - 1];
          if (a.tag() == ValueTag::Int && b.tag() == ValueTag::Int) {
            a = Value::integer(wrap(static_cast<std::uint64_t>(a.as_int()) + static_cast<std::uint64_t>(b.as_int())));
          } else if (a.tag() == ValueTag::Str || b.tag() == ValueTag::Str) {
            a = Value::string(render(a) + render(b));
          } else if (is_number(a) && is_number(b)) {
            a = Value::real(to_double(a) + to_double(b));
          } else {
            throw fault(VmErrc::TypeFault, fmt::format("ADD of {} and {}", tag_name(a.tag()), tag_name(b.tag())));
          }
          --sp;
          break;
        }
        case Opcode::Sub:
        case Opcode::Mul:
        case Opcode::Div:
        case Opcode::Mod: {
          Value& a = S[sp - 2];
          const Value& b = S[sp - 1];
          if (a.tag() == ValueTag::Int && b.tag() == ValueTag::Int) {
            auto x = a.as_int();
            auto y = b.as_int();
            auto ux = static_cast<std::uint64_t>(x);
            auto uy = static_cast<std::uint64_t>(y);
            std::int64_t r = 0;
            switch (in.op) {
              case Opcode::Sub: r = wrap(ux - uy); break;
              case Opcode::Mul: r = wrap(ux * uy); break;
              default:
                if (y == 0) throw fault(VmErrc::ArithmeticFault, "division by zero");
                if (y == -1) {
                  r = in.op == Opcode::Div ? wrap(0 - ux) : 0;
                } else {
                  r = in.op == Opcode::Div ? x / y : x % y;
                }
            }
            a = Value::integer(r);
          } else if (is_number(a) && is_number(b)) {
            double x = to_double(a);
            double y = to_double(b);
            double r = in.op == Opcode::Sub ? x - y : in.op == Opcode::Mul ? x * y : in.op == Opcode::Div ? x / y
                                                                                                          : std::fmod(x, y);
            a = Value::real(r);
          } else {
            throw fault(VmErrc::TypeFault, fmt::format("{} of {} and {}", mnemonic(in.op), tag_name(a.tag()),
                                                       tag_name(b.tag())));
          }
          --sp;
          break;
        }
        case Opcode::Neg: {
          Value& a = S[sp - 1];
          if (a.tag() == ValueTag::Int) {
            a = Value::integer(wrap(0 - static_cast<std::uint64_t>(a.as_int())));
          } else if (a.tag() == ValueTag::Flt) {
            a = Value::real(-a.as_real());
          } else {
            throw fault(VmErrc::TypeFault, fmt::format("NEG of {}", tag_name(a.tag())));
          }
          break;
        }
        case Opcode::Lt:
        case Opcode::Le: {
          Value& a = S[sp - 2];
          const Value& b = S[sp - 1];
          bool r = false;
          if (a.tag() == ValueTag::Int && b.tag() == ValueTag::Int) {
            r = in.op == Opcode::Lt ? a.as_int() < b.as_int() : a.as_int() <= b.as_int();
          } else if (is_number(a) && is_number(b)) {
            r = in.op == Opcode::Lt ? to_double(a) < to_double(b) : to_double(a) <= to_double(b);
          } else if (a.tag() == ValueTag::Str && b.tag() == ValueTag::Str) {
            r = in.op == Opcode::Lt ? a.as_string() < b.as_string() : a.as_string() <= b.as_string();
          } else {
            throw fault(VmErrc::TypeFault, fmt::format("{} of {} and {}", mnemonic(in.op), tag_name(a.tag()),
                                                       tag_name(b.tag())));
          }
          a = Value::boolean(r);
          --sp;
          break;
        }
        case Opcode::Eq:
        case Opcode::Ne: {
          Value& a = S[sp - 2];
          const Value& b = S[sp - 1];
          bool eq;
          if (a.tag() == ValueTag::Int && b.tag() == ValueTag::Int) {
            eq = a.as_int() == b.as_int();
          } else if (is_number(a) && is_number(b)) {
            eq = to_double(a) == to_double(b);
          } else {
            eq = a == b;
          }
          a = Value::boolean(in.op == Opcode::Eq ? eq : !eq);
          --sp;
          break;
        }

        case Opcode::Jmp: pc = static_cast<std::size_t>(in.arg); break;
        case Opcode::JmpIfFalse: {
          const Value& c = S[--sp];
          if (c.tag() != ValueTag::Bool)
            throw fault(VmErrc::TypeFault, fmt::format("JMP_IF_FALSE on {}", tag_name(c.tag())));
          if (!c.as_bool()) pc = static_cast<std::size_t>(in.arg);
          break;
        }
        case Opcode::Ret: {
          bool has_value = fn->returns_value();
          Value r = has_value ? std::move(S[--sp]) : Value();
          frames_.pop_back();
          if (frames_.size() == depth) return r;
          load();
          if (has_value) S[sp++] = std::move(r);
          break;
        }

        case Opcode::New: {
          auto obj = std::make_shared<Object>();
          obj->cls = in.cls;
          obj->fields.reserve(in.cls->field_types.size());
          for (const auto& t : in.cls->field_types) obj->fields.push_back(default_of(t));
          S[sp++] = Value::object(std::move(obj));
          break;
        }
        case Opcode::GetField:
        case Opcode::PutField: {
          bool put = in.op == Opcode::PutField;
          const Value& target = S[sp - (put ? 2 : 1)];
          if (target.is_null()) throw fault(VmErrc::NullReceiver, "field access on null");
          if (target.tag() != ValueTag::Obj)
            throw fault(VmErrc::TypeFault, fmt::format("field access on {}", tag_name(target.tag())));
          auto& fields = target.as_object()->fields;
          auto slot = static_cast<std::size_t>(in.arg);
          const RuntimeClass* owner = target.as_object()->cls;
          while (owner && owner != in.cls) owner = owner->super;
          if (slot >= fields.size() || !owner)
            throw fault(VmErrc::TypeFault, fmt::format("{} has no field of {}", target.as_object()->cls->name,
                                                       in.cls->name));
          if (put) {
            fields[slot] = std::move(S[sp - 1]);
            sp -= 2;
          } else {
            S[sp - 1] = Value(fields[slot]);
          }
          break;
        }
        case Opcode::NewArr: {
          Value& n = S[sp - 1];
          if (n.tag() != ValueTag::Int) throw fault(VmErrc::TypeFault, fmt::format("NEWARR of {}", tag_name(n.tag())));
          if (n.as_int() < 0)
            throw fault(VmErrc::IndexOutOfBounds, fmt::format("negative array length {}", n.as_int()));
          if (static_cast<std::uint64_t>(n.as_int()) > options_.array_limit)
            throw fault(VmErrc::IndexOutOfBounds,
                        fmt::format("array length {} exceeds limit {}", n.as_int(), options_.array_limit));
          n = Value::array(std::vector<Value>(static_cast<std::size_t>(n.as_int())));
          break;
        }
        case Opcode::ALoad:
        case Opcode::AStore: {
          bool store = in.op == Opcode::AStore;
          std::size_t base = sp - (store ? 3 : 2);
          const Value& arr = S[base];
          const Value& idx = S[base + 1];
          if (arr.is_null()) throw fault(VmErrc::NullReceiver, "array access on null");
          if (arr.tag() != ValueTag::Arr || idx.tag() != ValueTag::Int)
            throw fault(VmErrc::TypeFault, fmt::format("{} on {}[{}]", mnemonic(in.op), tag_name(arr.tag()),
                                                       tag_name(idx.tag())));
          auto& items = arr.as_array()->items;
          auto i = idx.as_int();
          if (i < 0 || static_cast<std::uint64_t>(i) >= items.size())
            throw fault(VmErrc::IndexOutOfBounds, fmt::format("index {} outside length {}", i, items.size()));
          if (store) {
            items[static_cast<std::size_t>(i)] = std::move(S[sp - 1]);
          } else {
            S[base] = Value(items[static_cast<std::size_t>(i)]);
          }
          sp = base + (store ? 0 : 1);
          break;
        }
        case Opcode::ArrLen: {
          Value& arr = S[sp - 1];
          if (arr.is_null()) throw fault(VmErrc::NullReceiver, "ARRLEN on null");
          if (arr.tag() != ValueTag::Arr) throw fault(VmErrc::TypeFault, fmt::format("ARRLEN of {}", tag_name(arr.tag())));
          arr = Value::integer(static_cast<std::int64_t>(arr.as_array()->items.size()));
          break;
        }
        case Opcode::Print: {
          std::string text = render(S[--sp]);
          text += '\n';
          image_.emit(text);
          break;
        }

        case Opcode::InvokeStatic:
        case Opcode::InvokeSpecial: {
          const Value* args = S + sp - static_cast<std::size_t>(in.arg);
          if (in.op == Opcode::InvokeSpecial && args[0].is_null())
            throw fault(VmErrc::NullReceiver, fmt::format("null receiver for {}", in.callee->qualified()));
          enter(*in.callee, static_cast<std::size_t>(in.arg));
          break;
        }
        case Opcode::InvokeVirtual:
        case Opcode::InvokeInterface: {
          const Value& recv = S[sp - static_cast<std::size_t>(in.arg)];
          if (recv.is_null()) throw fault(VmErrc::NullReceiver, fmt::format("null receiver for {}", in.callee->qualified()));
          const RuntimeClass* cls = image_.class_of(recv);
          const RuntimeFunction* callee = cls ? cls->dispatch(in.selector) : nullptr;
          if (!callee)
            throw fault(VmErrc::TypeFault, fmt::format("{} receiver does not implement {}", cls ? cls->name : std::string(tag_name(recv.tag())),
                                                       in.callee->qualified()));
          enter(*callee, static_cast<std::size_t>(in.arg));
          break;
        }
        case Opcode::InvokeDynamic: {
          SiteSlot* slot = in.site;
          DynamicCallSite* site = slot->site.load(std::memory_order_acquire);
          if (!site) {
            save();
            site = &image_.link(*slot);
          }
          site->count_invocation();
          const HandleNode* node = site->target_node();
          auto nargs = static_cast<std::size_t>(in.arg);
          if (const DirectHandle* d = node->as_direct()) {
            enter(d->resolve(S + sp - nargs, *this), nargs);
          } else {
            std::vector<Value> args(std::make_move_iterator(S + sp - nargs), std::make_move_iterator(S + sp));
            sp -= nargs;
            save();
            Value r = node->invoke(args, *this);
            S = stack_.data();
            if (node->type().returns_value()) S[sp++] = std::move(r);
          }
          break;
        }
      }
    }
  } catch (...) {
    frames_.resize(depth);
    throw;
  }
}

Value run(RuntimeImage& image, std::string_view entry, const std::vector<Value>& args, ExecOptions options) {
  const RuntimeFunction* fn = image.find_entry(entry);
  if (!fn) throw VmError(VmErrc::BadArgument, fmt::format("no entry point named {}", entry));
  if (args.size() != fn->type.arity())
    throw VmError(VmErrc::BadArgument,
                  fmt::format("{} takes {} arguments, got {}", fn->qualified(), fn->type.arity(), args.size()));
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!assignable(args[i], fn->type.params[i]))
      throw VmError(VmErrc::BadArgument, fmt::format("argument {} of {}: {} is not assignable to {}", i,
                                                     fn->qualified(), tag_name(args[i].tag()),
                                                     fn->type.params[i].str()));
  }
  ExecContext ctx(image, options);
  return ctx.call(*fn, args);
}

std::vector<ThreadOutcome> run_concurrent(RuntimeImage& image, std::string_view entry, std::size_t threads,
                                          std::size_t iterations, const std::vector<Value>& args,
                                          ExecOptions options) {
  const RuntimeFunction* fn = image.find_entry(entry);
  if (!fn) throw VmError(VmErrc::BadArgument, fmt::format("no entry point named {}", entry));
  std::vector<ThreadOutcome> out(threads);
  std::latch start(static_cast<std::ptrdiff_t>(threads));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      start.arrive_and_wait();
      try {
        ExecContext ctx(image, options);
        for (std::size_t i = 0; i < iterations; ++i) out[t].results.push_back(ctx.call(*fn, args));
      } catch (const std::exception& e) {
        out[t].error = e.what();
      }
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace fluxvm
