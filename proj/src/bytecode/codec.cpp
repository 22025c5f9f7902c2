#include "fluxvm/bytecode/codec.hpp"

#include <bit>
#include <cstring>
#include <fmt/format.h>

namespace fluxvm {

std::string_view decode_errc_name(DecodeErrc e) noexcept {
  switch (e) {
    case DecodeErrc::BadMagic: return "bad-magic";
    case DecodeErrc::UnsupportedVersion: return "unsupported-version";
    case DecodeErrc::TruncatedPool: return "truncated-pool";
    case DecodeErrc::Truncated: return "truncated";
    case DecodeErrc::OutOfRangeIndex: return "out-of-range-index";
    case DecodeErrc::BadTag: return "bad-tag";
    case DecodeErrc::BadOpcode: return "bad-opcode";
    case DecodeErrc::TrailingBytes: return "trailing-bytes";
  }
  return "?";
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

void write_function(Writer& w, const FunctionDef& f) {
  w.u16(f.name);
  w.u16(f.type);
  w.u8(f.flags);
  w.u16(f.max_stack);
  w.u16(f.max_locals);
  auto offsets = code_offsets(f.code);
  w.u32(offsets.back());
  for (const auto& in : f.code) {
    w.u8(static_cast<std::uint8_t>(in.op));
    switch (operand_kind(in.op)) {
      case OperandKind::None: break;
      case OperandKind::Constant:
      case OperandKind::Local:
      case OperandKind::ClassRef:
      case OperandKind::FieldRef: w.u16(static_cast<std::uint16_t>(in.a)); break;
      case OperandKind::Jump: w.u32(static_cast<std::uint32_t>(in.a)); break;
      case OperandKind::MethodRef:
        w.u16(static_cast<std::uint16_t>(in.a));
        w.u16(0);
        w.u8(0);
        break;
      case OperandKind::Dynamic:
        w.u16(static_cast<std::uint16_t>(in.a));
        w.u16(in.b);
        w.u8(in.tag);
        break;
    }
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  void set_section(DecodeErrc e) { truncation_ = e; }

  void need(std::size_t n) {
    if (b_.size() - pos_ < n) {
      throw DecodeError(truncation_, fmt::format("unexpected end of input at byte {} (need {} more)", pos_, n));
    }
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str() {
    auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const noexcept { return pos_ == b_.size(); }
  std::size_t remaining() const noexcept { return b_.size() - pos_; }
  std::size_t pos() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
  DecodeErrc truncation_ = DecodeErrc::Truncated;
};

struct IndexChecker {
  std::size_t pool_size;
  std::uint16_t operator()(std::uint16_t idx, bool allow_zero, std::string_view what) const {
    if ((idx == 0 && !allow_zero) || idx > pool_size) {
      throw DecodeError(DecodeErrc::OutOfRangeIndex,
                        fmt::format("{} references pool index {} (pool has {} entries)", what, idx, pool_size));
    }
    return idx;
  }
};

std::vector<Instruction> read_code(std::span<const std::uint8_t> code, const IndexChecker& check) {
  Reader r(code);
  std::vector<Instruction> out;
  while (!r.at_end()) {
    auto at = r.pos();
    auto raw = r.u8();
    if (raw < kFirstOpcode || raw > kLastOpcode) {
      throw DecodeError(DecodeErrc::BadOpcode, fmt::format("unknown opcode 0x{:02x} at code offset {}", raw, at));
    }
    Instruction in;
    in.op = static_cast<Opcode>(raw);
    switch (operand_kind(in.op)) {
      case OperandKind::None: break;
      case OperandKind::Local: in.a = r.u16(); break;
      case OperandKind::Constant:
      case OperandKind::ClassRef:
      case OperandKind::FieldRef: in.a = check(r.u16(), false, mnemonic(in.op)); break;
      case OperandKind::Jump: in.a = static_cast<std::int32_t>(r.u32()); break;
      case OperandKind::MethodRef: {
        in.a = check(r.u16(), false, mnemonic(in.op));
        auto pad1 = r.u16();
        auto pad2 = r.u8();
        if (pad1 != 0 || pad2 != 0) {
          throw DecodeError(DecodeErrc::BadOpcode, fmt::format("non-zero reserved bytes at code offset {}", at));
        }
        break;
      }
      case OperandKind::Dynamic:
        in.a = check(r.u16(), false, "INVOKE_DYNAMIC name");
        in.b = check(r.u16(), false, "INVOKE_DYNAMIC type");
        in.tag = r.u8();
        break;
    }
    out.push_back(in);
  }
  return out;
}

FunctionDef read_function(Reader& r, const IndexChecker& check) {
  FunctionDef f;
  f.name = check(r.u16(), false, "function name");
  f.type = check(r.u16(), false, "function type");
  f.flags = r.u8();
  f.max_stack = r.u16();
  f.max_locals = r.u16();
  auto len = r.u32();
  f.code = read_code(r.take(len), check);
  return f;
}

}  // namespace

std::vector<std::uint8_t> encode(const ModuleFile& m) {
  Writer w;
  for (auto b : kMagic) w.u8(b);
  w.u16(m.version);
  w.u32(static_cast<std::uint32_t>(m.pool.size()));
  for (const auto& e : m.pool.entries()) {
    w.u8(static_cast<std::uint8_t>(e.tag));
    switch (e.tag) {
      case PoolTag::Int: w.u64(static_cast<std::uint64_t>(e.integer)); break;
      case PoolTag::Float: w.u64(std::bit_cast<std::uint64_t>(e.real)); break;
      case PoolTag::Bool: w.u8(e.integer ? 1 : 0); break;
      case PoolTag::Null: break;
      default: w.bytes(e.text); break;
    }
  }
  w.u16(static_cast<std::uint16_t>(m.imports.size()));
  for (auto i : m.imports) w.u16(i);
  w.u16(static_cast<std::uint16_t>(m.classes.size()));
  for (const auto& c : m.classes) {
    w.u16(c.name);
    w.u16(c.super);
    w.u8(c.is_interface ? 1 : 0);
    w.u16(static_cast<std::uint16_t>(c.interfaces.size()));
    for (auto i : c.interfaces) w.u16(i);
    w.u16(static_cast<std::uint16_t>(c.fields.size()));
    for (const auto& f : c.fields) {
      w.u16(f.name);
      w.u16(f.desc);
    }
    w.u16(static_cast<std::uint16_t>(c.methods.size()));
    for (const auto& f : c.methods) write_function(w, f);
  }
  w.u16(static_cast<std::uint16_t>(m.functions.size()));
  for (const auto& f : m.functions) write_function(w, f);
  w.u16(m.entry);
  return w.take();
}

ModuleFile decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DecodeError(DecodeErrc::BadMagic, "input does not start with the FLUX magic");
  }
  Reader r(bytes.subspan(4));
  ModuleFile m;
  m.version = r.u16();
  if (m.version != kFormatVersion) {
    throw DecodeError(DecodeErrc::UnsupportedVersion, fmt::format("unsupported format version {}", m.version));
  }
  r.set_section(DecodeErrc::TruncatedPool);
  auto count = r.u32();
  if (count > 0xFFFF) throw DecodeError(DecodeErrc::TruncatedPool, fmt::format("pool count {} too large", count));
  if (count > r.remaining())
    throw DecodeError(DecodeErrc::TruncatedPool,
                      fmt::format("pool count {} exceeds the {} bytes that follow", count, r.remaining()));
  for (std::uint32_t i = 0; i < count; ++i) {
    auto raw = r.u8();
    if (raw < 1 || raw > static_cast<std::uint8_t>(PoolTag::MethodRef)) {
      throw DecodeError(DecodeErrc::BadTag, fmt::format("unknown pool tag {} at entry {}", raw, i + 1));
    }
    PoolEntry e;
    e.tag = static_cast<PoolTag>(raw);
    switch (e.tag) {
      case PoolTag::Int: e.integer = static_cast<std::int64_t>(r.u64()); break;
      case PoolTag::Float: e.real = std::bit_cast<double>(r.u64()); break;
      case PoolTag::Bool: e.integer = r.u8() ? 1 : 0; break;
      case PoolTag::Null: break;
      default: e.text = r.str(); break;
    }
    m.pool.append(std::move(e));
  }
  r.set_section(DecodeErrc::Truncated);
  IndexChecker check{m.pool.size()};
  auto n_imports = r.u16();
  for (int i = 0; i < n_imports; ++i) m.imports.push_back(check(r.u16(), false, "import"));
  auto n_classes = r.u16();
  for (int i = 0; i < n_classes; ++i) {
    ClassDef c;
    c.name = check(r.u16(), false, "class name");
    c.super = check(r.u16(), true, "superclass");
    c.is_interface = r.u8() != 0;
    auto n_if = r.u16();
    for (int k = 0; k < n_if; ++k) c.interfaces.push_back(check(r.u16(), false, "interface"));
    auto n_fields = r.u16();
    for (int k = 0; k < n_fields; ++k) {
      FieldDef f;
      f.name = check(r.u16(), false, "field name");
      f.desc = check(r.u16(), false, "field descriptor");
      c.fields.push_back(f);
    }
    auto n_methods = r.u16();
    for (int k = 0; k < n_methods; ++k) c.methods.push_back(read_function(r, check));
    m.classes.push_back(std::move(c));
  }
  auto n_functions = r.u16();
  for (int i = 0; i < n_functions; ++i) m.functions.push_back(read_function(r, check));
  m.entry = check(r.u16(), true, "entry");
  if (!r.at_end()) throw DecodeError(DecodeErrc::TrailingBytes, "trailing bytes after module");
  return m;
}

}  // namespace fluxvm
