#pragma once

#include <string>
#include <string_view>

#include "fluxvm/error.hpp"

namespace fluxvm {

enum class VmErrc {
  StackOverflow,
  ArithmeticFault,
  NullReceiver,
  LinkError,
  CastError,
  TypeFault,
  ArityMismatch,
  SpreadMismatch,
  IndexOutOfBounds,
  BadArgument,
  FuelExhausted,
};

std::string_view vm_errc_name(VmErrc e) noexcept;

/// Raised while executing code: by the interpreter, by handle invocation, or
/// by first-execution linking of a dynamic call site.
class VmError : public Error {
 public:
  VmError(VmErrc code, const std::string& what);
  VmErrc code() const noexcept { return code_; }

 private:
  VmErrc code_;
};

/// Raised by RuntimeImage::load.
class LoadError : public Error {
 public:
  using Error::Error;
};

}  // namespace fluxvm
