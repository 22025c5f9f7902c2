#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fluxvm/bytecode/module.hpp"

namespace fluxvm {

enum class DecodeErrc {
  BadMagic,
  UnsupportedVersion,
  TruncatedPool,
  Truncated,
  OutOfRangeIndex,
  BadTag,
  BadOpcode,
  TrailingBytes,
};

std::string_view decode_errc_name(DecodeErrc e) noexcept;

class DecodeError : public Error {
 public:
  DecodeError(DecodeErrc code, const std::string& what) : Error(what), code_(code) {}
  DecodeErrc code() const noexcept { return code_; }

 private:
  DecodeErrc code_;
};

inline constexpr std::uint8_t kMagic[4] = {0x46, 0x4C, 0x55, 0x58};  // "FLUX"

/// Serializes to the little-endian `.fxb` layout described in docs/format.md.
std::vector<std::uint8_t> encode(const ModuleFile& m);

/// Structural decode. Index ranges are checked here; kinds and stack
/// discipline are left to validate().
ModuleFile decode(std::span<const std::uint8_t> bytes);

}  // namespace fluxvm
