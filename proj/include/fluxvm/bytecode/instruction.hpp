#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fluxvm {

enum class Opcode : std::uint8_t {
  Const = 0x01,
  Load,
  Store,
  Pop,
  Dup,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Neg,
  Lt,
  Le,
  Eq,
  Ne,
  Jmp,
  JmpIfFalse,
  Ret,
  New,
  GetField,
  PutField,
  NewArr,
  ALoad,
  AStore,
  ArrLen,
  Print,
  InvokeStatic,
  InvokeVirtual,
  InvokeSpecial,
  InvokeInterface,
  InvokeDynamic,
};

inline constexpr std::uint8_t kFirstOpcode = 0x01;
inline constexpr std::uint8_t kLastOpcode = static_cast<std::uint8_t>(Opcode::InvokeDynamic);

enum class OperandKind : std::uint8_t {
  None,
  Constant,   // u16 pool index (Utf8/Int/Float/Bool/Null)
  Local,      // u16 slot
  Jump,       // i32 offset relative to the jump instruction
  ClassRef,   // u16 pool index
  FieldRef,   // u16 pool index
  MethodRef,  // u16 pool index + 3 reserved bytes
  Dynamic,    // u16 name index, u16 type index, u8 bootstrap tag
};

/// Bootstrap tag of the host-provided linker; the only one the VM accepts.
inline constexpr std::uint8_t kBuiltinBootstrap = 0;

struct Instruction {
  Opcode op = Opcode::Pop;
  /// Pool index, local slot, or jump offset depending on the opcode.
  std::int32_t a = 0;
  /// Type index of INVOKE_DYNAMIC.
  std::uint16_t b = 0;
  /// Bootstrap tag of INVOKE_DYNAMIC.
  std::uint8_t tag = 0;

  bool operator==(const Instruction&) const = default;
};

std::string_view mnemonic(Opcode op) noexcept;
std::optional<Opcode> opcode_from_mnemonic(std::string_view name) noexcept;
OperandKind operand_kind(Opcode op) noexcept;
bool is_classic_invoke(Opcode op) noexcept;
bool is_invoke(Opcode op) noexcept;

/// Encoded width in bytes. All invoke opcodes share one width so rewriting
/// a classic invoke into INVOKE_DYNAMIC never moves code offsets.
std::uint32_t encoded_size(Opcode op) noexcept;

/// Byte offset of every instruction, plus the total code length as the last
/// element.
std::vector<std::uint32_t> code_offsets(std::span<const Instruction> code);

}  // namespace fluxvm
