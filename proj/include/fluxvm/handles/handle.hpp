#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fluxvm/bytecode/descriptor.hpp"
#include "fluxvm/bytecode/value.hpp"
#include "fluxvm/transformer/site_key.hpp"

namespace fluxvm {

class ExecContext;
class RuntimeImage;
class RuntimeFunction;
class DirectHandle;

enum class HandleErrc {
  NoSuchMethod,
  TypeMismatch,
  KindMismatch,
  IndexOutOfRange,
  Unassignable,
  VoidReturn,
  NotAnArray,
  Inconvertible,
};

std::string_view handle_errc_name(HandleErrc e) noexcept;

/// Construction-time failure of a lookup or combinator. Type checking happens
/// only here; a handle that was built never fails with a shape error.
class HandleError : public Error {
 public:
  HandleError(HandleErrc code, const std::string& what);
  HandleErrc code() const noexcept { return code_; }

 private:
  HandleErrc code_;
};

/// One immutable node of a handle tree.
class HandleNode {
 public:
  virtual ~HandleNode() = default;
  HandleNode(const HandleNode&) = delete;
  HandleNode& operator=(const HandleNode&) = delete;

  const FunctionType& type() const noexcept { return type_; }

  /// Evaluates the tree. Arguments are trusted to match type().
  virtual Value invoke(std::span<const Value> args, ExecContext& ctx) const = 0;
  virtual std::string describe() const = 0;
  /// Non-null when this node is a direct method reference.
  const DirectHandle* as_direct() const noexcept { return direct_; }

 protected:
  explicit HandleNode(FunctionType type) : type_(std::move(type)) {}

 private:
  friend class DirectHandle;

  FunctionType type_;
  const DirectHandle* direct_ = nullptr;
};

/// Reference to a concrete method. Static and special handles call one exact
/// function; virtual and interface handles dispatch on argument 0.
class DirectHandle final : public HandleNode {
 public:
  DirectHandle(InvocationKind kind, std::string owner, std::string method, FunctionType type,
               const RuntimeFunction* exact, std::uint32_t selector);

  InvocationKind kind() const noexcept { return kind_; }
  const std::string& owner() const noexcept { return owner_; }
  const std::string& method() const noexcept { return method_; }

  /// The function this invocation runs. `args` must hold at least the
  /// receiver for dispatching kinds.
  const RuntimeFunction& resolve(const Value* args, const ExecContext& ctx) const {
    return exact_ ? *exact_ : dispatch(args[0], ctx);
  }

  Value invoke(std::span<const Value> args, ExecContext& ctx) const override;
  std::string describe() const override;

 private:
  const RuntimeFunction& dispatch(const Value& receiver, const ExecContext& ctx) const;

  InvocationKind kind_;
  std::string owner_;
  std::string method_;
  const RuntimeFunction* exact_;
  std::uint32_t selector_;
};

/// Shared, immutable invocable. Copying shares the tree.
class FunctionHandle {
 public:
  FunctionHandle() = default;
  explicit FunctionHandle(std::shared_ptr<const HandleNode> node) : node_(std::move(node)) {}

  const FunctionType& type() const { return node_->type(); }
  std::size_t arity() const { return node_->type().arity(); }

  /// Checked entry point: arity and argument assignability are verified
  /// before the tree runs.
  Value invoke(std::span<const Value> args, ExecContext& ctx) const;
  Value invoke(std::initializer_list<Value> args, ExecContext& ctx) const {
    return invoke(std::span<const Value>(args.begin(), args.size()), ctx);
  }

  std::string describe() const { return node_ ? node_->describe() : "<empty>"; }

  const HandleNode* node() const noexcept { return node_.get(); }
  const std::shared_ptr<const HandleNode>& shared() const noexcept { return node_; }
  explicit operator bool() const noexcept { return static_cast<bool>(node_); }
  bool same_as(const FunctionHandle& o) const noexcept { return node_ == o.node_; }

 private:
  std::shared_ptr<const HandleNode> node_;
};

FunctionHandle lookup_direct(InvocationKind kind, std::string_view owner, std::string_view method,
                             const FunctionType& type, const RuntimeImage& image);

/// Pre-binds `vals` starting at parameter `pos`.
FunctionHandle insert_arguments(const FunctionHandle& h, std::size_t pos, std::vector<Value> vals);

/// Applies `filters[i]` to argument `pos + i` before calling `h`.
FunctionHandle filter_arguments(const FunctionHandle& h, std::size_t pos, std::vector<FunctionHandle> filters);

/// result(args) = f(h(args))
FunctionHandle filter_return_value(const FunctionHandle& h, const FunctionHandle& f);

/// Replaces the trailing `count` parameters by one `[A` parameter whose
/// elements are distributed into them.
FunctionHandle as_spreader(const FunctionHandle& h, std::size_t count);

/// Replaces a trailing `[A` parameter by `count` parameters of type `A`
/// gathered into a fresh array.
FunctionHandle as_collector(const FunctionHandle& h, std::size_t count);

/// Views `h` at type `t`. Each position must be identical, erase to `A`, or
/// narrow from `A` (checked per call).
FunctionHandle as_type(const FunctionHandle& h, const FunctionType& t);

}  // namespace fluxvm
