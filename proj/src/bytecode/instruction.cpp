#include "fluxvm/bytecode/instruction.hpp"

#include <array>

namespace fluxvm {
namespace {

struct OpInfo {
  Opcode op;
  std::string_view name;
  OperandKind operand;
};

constexpr std::array kOps{
    OpInfo{Opcode::Const, "CONST", OperandKind::Constant},
    OpInfo{Opcode::Load, "LOAD", OperandKind::Local},
    OpInfo{Opcode::Store, "STORE", OperandKind::Local},
    OpInfo{Opcode::Pop, "POP", OperandKind::None},
    OpInfo{Opcode::Dup, "DUP", OperandKind::None},
    OpInfo{Opcode::Add, "ADD", OperandKind::None},
    OpInfo{Opcode::Sub, "SUB", OperandKind::None},
    OpInfo{Opcode::Mul, "MUL", OperandKind::None},
    OpInfo{Opcode::Div, "DIV", OperandKind::None},
    OpInfo{Opcode::Mod, "MOD", OperandKind::None},
    OpInfo{Opcode::Neg, "NEG", OperandKind::None},
    OpInfo{Opcode::Lt, "LT", OperandKind::None},
    OpInfo{Opcode::Le, "LE", OperandKind::None},
    OpInfo{Opcode::Eq, "EQ", OperandKind::None},
    OpInfo{Opcode::Ne, "NE", OperandKind::None},
    OpInfo{Opcode::Jmp, "JMP", OperandKind::Jump},
    OpInfo{Opcode::JmpIfFalse, "JMP_IF_FALSE", OperandKind::Jump},
    OpInfo{Opcode::Ret, "RET", OperandKind::None},
    OpInfo{Opcode::New, "NEW", OperandKind::ClassRef},
    OpInfo{Opcode::GetField, "GETFIELD", OperandKind::FieldRef},
    OpInfo{Opcode::PutField, "PUTFIELD", OperandKind::FieldRef},
    OpInfo{Opcode::NewArr, "NEWARR", OperandKind::None},
    OpInfo{Opcode::ALoad, "ALOAD", OperandKind::None},
    OpInfo{Opcode::AStore, "ASTORE", OperandKind::None},
    OpInfo{Opcode::ArrLen, "ARRLEN", OperandKind::None},
    OpInfo{Opcode::Print, "PRINT", OperandKind::None},
    OpInfo{Opcode::InvokeStatic, "INVOKE_STATIC", OperandKind::MethodRef},
    OpInfo{Opcode::InvokeVirtual, "INVOKE_VIRTUAL", OperandKind::MethodRef},
    OpInfo{Opcode::InvokeSpecial, "INVOKE_SPECIAL", OperandKind::MethodRef},
    OpInfo{Opcode::InvokeInterface, "INVOKE_INTERFACE", OperandKind::MethodRef},
    OpInfo{Opcode::InvokeDynamic, "INVOKE_DYNAMIC", OperandKind::Dynamic},
};

static_assert(kOps.size() == kLastOpcode - kFirstOpcode + 1);

const OpInfo& info(Opcode op) noexcept { return kOps[static_cast<std::size_t>(op) - kFirstOpcode]; }

}  // namespace

std::string_view mnemonic(Opcode op) noexcept { return info(op).name; }

std::optional<Opcode> opcode_from_mnemonic(std::string_view name) noexcept {
  for (const auto& i : kOps) {
    if (i.name == name) return i.op;
  }
  return std::nullopt;
}

OperandKind operand_kind(Opcode op) noexcept { return info(op).operand; }

bool is_classic_invoke(Opcode op) noexcept {
  return op == Opcode::InvokeStatic || op == Opcode::InvokeVirtual || op == Opcode::InvokeSpecial ||
         op == Opcode::InvokeInterface;
}

bool is_invoke(Opcode op) noexcept { return is_classic_invoke(op) || op == Opcode::InvokeDynamic; }

std::uint32_t encoded_size(Opcode op) noexcept {
  switch (operand_kind(op)) {
    case OperandKind::None: return 1;
    case OperandKind::Constant:
    case OperandKind::Local:
    case OperandKind::ClassRef:
    case OperandKind::FieldRef: return 3;
    case OperandKind::Jump: return 5;
    case OperandKind::MethodRef:
    case OperandKind::Dynamic: return 6;
  }
  return 1;
}

std::vector<std::uint32_t> code_offsets(std::span<const Instruction> code) {
  std::vector<std::uint32_t> out;
  out.reserve(code.size() + 1);
  std::uint32_t at = 0;
  for (const auto& in : code) {
    out.push_back(at);
    at += encoded_size(in.op);
  }
  out.push_back(at);
  return out;
}

}  // namespace fluxvm
