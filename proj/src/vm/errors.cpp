#include "fluxvm/vm/errors.hpp"

namespace fluxvm {

std::string_view vm_errc_name(VmErrc e) noexcept {
  switch (e) {
    case VmErrc::StackOverflow: return "stack-overflow";
    case VmErrc::ArithmeticFault: return "arithmetic-fault";
    case VmErrc::NullReceiver: return "null-receiver";
    case VmErrc::LinkError: return "link-error";
    case VmErrc::CastError: return "cast-error";
    case VmErrc::TypeFault: return "type-fault";
    case VmErrc::ArityMismatch: return "arity-mismatch";
    case VmErrc::SpreadMismatch: return "spread-mismatch";
    case VmErrc::IndexOutOfBounds: return "index-out-of-bounds";
    case VmErrc::BadArgument: return "bad-argument";
    case VmErrc::FuelExhausted: return "fuel-exhausted";
  }
  return "?";
}

VmError::VmError(VmErrc code, const std::string& what)
    : Error(std::string(vm_errc_name(code)) + ": " + what), code_(code) {}

}  // namespace fluxvm
