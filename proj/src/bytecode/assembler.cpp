#include "fluxvm/bytecode/assembler.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <optional>
#include <unordered_map>

namespace fluxvm {

AssembleError::AssembleError(AssembleErrc code, int line, int column, const std::string& message,
                             std::vector<Diagnostic> diagnostics)
    : Error(line > 0 ? fmt::format("{}:{}: {}", line, column, message) : message),
      code_(code),
      line_(line),
      column_(column),
      diagnostics_(std::move(diagnostics)) {}

namespace {

struct Token {
  std::string text;
  int column = 0;
  bool quoted = false;
};

struct Line {
  int number = 0;
  std::vector<Token> tokens;
};

[[noreturn]] void syntax(int line, int col, const std::string& msg) {
  throw AssembleError(AssembleErrc::Syntax, line, col, msg);
}

std::vector<Line> tokenize(std::string_view src) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= src.size()) {
    auto nl = src.find('\n', pos);
    auto raw = src.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? src.size() + 1 : nl + 1;
    ++number;
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      char c = raw[i];
      if (c == ';') break;
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
        continue;
      }
      int col = static_cast<int>(i) + 1;
      if (c == '{' || c == '}' || c == ',') {
        line.tokens.push_back({std::string(1, c), col});
        ++i;
        continue;
      }
      if (c == '"') {
        std::string text;
        ++i;
        bool closed = false;
        while (i < raw.size()) {
          char d = raw[i++];
          if (d == '"') {
            closed = true;
            break;
          }
          if (d != '\\') {
            text += d;
            continue;
          }
          if (i >= raw.size()) break;
          char e = raw[i++];
          switch (e) {
            case 'n': text += '\n'; break;
            case 't': text += '\t'; break;
            case 'r': text += '\r'; break;
            case '\\': text += '\\'; break;
            case '"': text += '"'; break;
            case 'x': {
              if (i + 2 > raw.size()) syntax(number, col, "truncated \\x escape");
              unsigned v = 0;
              auto [p, ec] = std::from_chars(raw.data() + i, raw.data() + i + 2, v, 16);
              if (ec != std::errc() || p != raw.data() + i + 2) syntax(number, col, "bad \\x escape");
              text += static_cast<char>(v);
              i += 2;
              break;
            }
            default: syntax(number, col, fmt::format("unknown escape \\{}", e));
          }
        }
        if (!closed) syntax(number, col, "unterminated string literal");
        line.tokens.push_back({std::move(text), col, true});
        continue;
      }
      std::size_t start = i;
      while (i < raw.size() && raw[i] != ' ' && raw[i] != '\t' && raw[i] != '\r' && raw[i] != '{' &&
             raw[i] != '}' && raw[i] != ',' && raw[i] != '"') {
        ++i;
      }
      line.tokens.push_back({std::string(raw.substr(start, i - start)), col});
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '$' ||
              c == '<' || c == '>' || c == '/';
    if (!ok) return false;
  }
  return !(s[0] >= '0' && s[0] <= '9');
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t mag = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), mag);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  if (neg) {
    if (mag > static_cast<std::uint64_t>(INT64_MAX) + 1) return std::nullopt;
    return static_cast<std::int64_t>(0 - mag);
  }
  if (mag > static_cast<std::uint64_t>(INT64_MAX)) return std::nullopt;
  return static_cast<std::int64_t>(mag);
}

std::optional<double> parse_float(std::string_view s) {
  if (s == "inf" || s == "+inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  if (s == "nan") return std::nan("");
  if (s.find_first_of(".eE") == std::string_view::npos) return std::nullopt;
  if (!s.empty() && s[0] == '+') s.remove_prefix(1);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// ---- AST -----------------------------------------------------------------

struct AsmOperand {
  std::string text;  // label, reference, or string constant
  bool quoted = false;
  int column = 0;
};

struct AsmInstr {
  Opcode op;
  std::vector<AsmOperand> operands;
  int line = 0;
};

struct AsmFunction {
  std::string name;
  std::string type;
  bool is_static = false;
  bool is_abstract = false;
  bool is_special = false;
  std::optional<std::uint16_t> stack;
  std::optional<std::uint16_t> locals;
  std::vector<AsmInstr> code;
  std::map<std::string, std::size_t> labels;  // label -> index of the following instruction
  int line = 0;
};

struct AsmClass {
  std::string name;
  std::string super;
  bool is_interface = false;
  std::vector<std::string> interfaces;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<AsmFunction> methods;
  int line = 0;
};

struct AsmModule {
  std::vector<std::string> imports;
  std::string entry;
  std::vector<AsmClass> classes;
  std::vector<AsmFunction> functions;
};

class Parser {
 public:
  explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  AsmModule parse() {
    AsmModule mod;
    while (at_ < lines_.size()) {
      const Line& l = lines_[at_];
      const auto& head = l.tokens[0].text;
      if (head == "import") {
        expect_count(l, 2);
        need_identifier(l, l.tokens[1]);
        mod.imports.push_back(l.tokens[1].text);
        ++at_;
      } else if (head == "entry") {
        expect_count(l, 2);
        if (!mod.entry.empty()) syntax(l.number, 1, "duplicate entry declaration");
        mod.entry = l.tokens[1].text;
        ++at_;
      } else if (head == "class" || head == "interface") {
        mod.classes.push_back(parse_class());
      } else if (head == "fn") {
        auto f = parse_function_header(lines_[at_], /*module_level=*/true);
        mod.functions.push_back(std::move(f));
      } else {
        syntax(l.number, l.tokens[0].column, fmt::format("unexpected '{}' at top level", head));
      }
    }
    return mod;
  }

 private:
  static void expect_count(const Line& l, std::size_t n) {
    if (l.tokens.size() != n) {
      auto col = l.tokens.size() > n ? l.tokens[n].column : l.tokens.back().column;
      syntax(l.number, col, fmt::format("'{}' expects {} operand(s)", l.tokens[0].text, n - 1));
    }
  }

  static void need_identifier(const Line& l, const Token& t) {
    if (t.quoted || !is_identifier(t.text)) syntax(l.number, t.column, fmt::format("expected a name, got '{}'", t.text));
  }

  AsmClass parse_class() {
    const Line& l = lines_[at_];
    AsmClass c;
    c.line = l.number;
    c.is_interface = l.tokens[0].text == "interface";
    std::size_t i = 1;
    if (i >= l.tokens.size()) syntax(l.number, l.tokens[0].column, "missing class name");
    need_identifier(l, l.tokens[i]);
    c.name = l.tokens[i++].text;
    if (i < l.tokens.size() && l.tokens[i].text == "extends") {
      ++i;
      if (i >= l.tokens.size()) syntax(l.number, l.tokens[i - 1].column, "missing superclass name");
      need_identifier(l, l.tokens[i]);
      c.super = l.tokens[i++].text;
    }
    if (i < l.tokens.size() && l.tokens[i].text == "implements") {
      ++i;
      for (;;) {
        if (i >= l.tokens.size()) syntax(l.number, l.tokens[i - 1].column, "missing interface name");
        need_identifier(l, l.tokens[i]);
        c.interfaces.push_back(l.tokens[i++].text);
        if (i < l.tokens.size() && l.tokens[i].text == ",") {
          ++i;
          continue;
        }
        break;
      }
    }
    if (i >= l.tokens.size() || l.tokens[i].text != "{" || i + 1 != l.tokens.size()) {
      auto col = i < l.tokens.size() ? l.tokens[i].column : l.tokens.back().column;
      syntax(l.number, col, "expected '{' at end of class header");
    }
    ++at_;
    for (;;) {
      if (at_ >= lines_.size()) syntax(l.number, 1, fmt::format("class {} is not closed", c.name));
      const Line& b = lines_[at_];
      const auto& head = b.tokens[0].text;
      if (head == "}") {
        expect_count(b, 1);
        ++at_;
        break;
      }
      if (head == "field") {
        expect_count(b, 2);
        auto colon = b.tokens[1].text.find(':');
        if (colon == std::string::npos) syntax(b.number, b.tokens[1].column, "field must be written name:Desc");
        auto name = b.tokens[1].text.substr(0, colon);
        if (!is_identifier(name)) syntax(b.number, b.tokens[1].column, fmt::format("bad field name '{}'", name));
        auto desc = b.tokens[1].text.substr(colon + 1);
        try {
          if (TypeDescriptor::parse(desc).is_void()) syntax(b.number, b.tokens[1].column, "field of type V");
        } catch (const DescriptorError& e) {
          syntax(b.number, b.tokens[1].column, e.what());
        }
        c.fields.emplace_back(name, desc);
        ++at_;
      } else if (head == "method") {
        c.methods.push_back(parse_function_header(b, /*module_level=*/false));
      } else {
        syntax(b.number, b.tokens[0].column, fmt::format("unexpected '{}' in class body", head));
      }
    }
    return c;
  }

  AsmFunction parse_function_header(const Line& l, bool module_level) {
    AsmFunction f;
    f.line = l.number;
    if (l.tokens.size() < 2) syntax(l.number, l.tokens[0].column, "missing function signature");
    const auto& sig = l.tokens[1];
    auto colon = sig.text.find(":(");
    if (colon == std::string::npos) syntax(l.number, sig.column, "function signature must be written name:(params)ret");
    f.name = sig.text.substr(0, colon);
    if (!is_identifier(f.name)) syntax(l.number, sig.column, fmt::format("bad function name '{}'", f.name));
    f.type = sig.text.substr(colon + 1);
    try {
      f.type = FunctionType::parse(f.type).str();
    } catch (const DescriptorError& e) {
      syntax(l.number, sig.column + static_cast<int>(colon) + 1, e.what());
    }
    f.is_static = module_level;
    bool has_body = false;
    for (std::size_t i = 2; i < l.tokens.size(); ++i) {
      const auto& t = l.tokens[i];
      if (t.text == "{") {
        if (i + 1 != l.tokens.size()) syntax(l.number, l.tokens[i + 1].column, "unexpected tokens after '{'");
        has_body = true;
      } else if (t.text == "static" && !module_level) {
        f.is_static = true;
      } else if (t.text == "abstract" && !module_level) {
        f.is_abstract = true;
      } else if (t.text == "special" && !module_level) {
        f.is_special = true;
      } else if (t.text == "stack" || t.text == "locals") {
        if (i + 1 >= l.tokens.size()) syntax(l.number, t.column, fmt::format("'{}' needs a count", t.text));
        auto v = parse_int(l.tokens[i + 1].text);
        if (!v || *v < 0 || *v > 0xFFFF) syntax(l.number, l.tokens[i + 1].column, "count must be in 0..65535");
        (t.text == "stack" ? f.stack : f.locals) = static_cast<std::uint16_t>(*v);
        ++i;
      } else {
        syntax(l.number, t.column, fmt::format("unknown function modifier '{}'", t.text));
      }
    }
    ++at_;
    if (f.is_abstract) {
      if (has_body) syntax(l.number, l.tokens.back().column, "abstract methods have no body");
      return f;
    }
    if (!has_body) syntax(l.number, l.tokens.back().column, "expected '{' at end of function header");
    for (;;) {
      if (at_ >= lines_.size()) syntax(l.number, 1, fmt::format("function {} is not closed", f.name));
      const Line& b = lines_[at_++];
      const auto& head = b.tokens[0];
      if (head.text == "}") {
        expect_count(b, 1);
        break;
      }
      if (b.tokens.size() == 1 && head.text.size() > 1 && head.text.back() == ':' && !head.quoted) {
        auto label = head.text.substr(0, head.text.size() - 1);
        if (!is_identifier(label)) syntax(b.number, head.column, fmt::format("bad label '{}'", label));
        if (!f.labels.emplace(label, f.code.size()).second) {
          syntax(b.number, head.column, fmt::format("duplicate label '{}'", label));
        }
        continue;
      }
      auto op = opcode_from_mnemonic(head.text);
      if (!op || head.quoted) syntax(b.number, head.column, fmt::format("unknown instruction '{}'", head.text));
      AsmInstr in{*op, {}, b.number};
      for (std::size_t i = 1; i < b.tokens.size(); ++i) {
        in.operands.push_back({b.tokens[i].text, b.tokens[i].quoted, b.tokens[i].column});
      }
      std::size_t want = 0;
      switch (operand_kind(*op)) {
        case OperandKind::None: want = 0; break;
        case OperandKind::Dynamic: want = in.operands.size() == 3 ? 3 : 2; break;
        default: want = 1; break;
      }
      if (in.operands.size() != want) {
        syntax(b.number, head.column, fmt::format("{} expects {} operand(s)", head.text, want));
      }
      f.code.push_back(std::move(in));
    }
    return f;
  }

  std::vector<Line> lines_;
  std::size_t at_ = 0;
};

// ---- module construction --------------------------------------------------

class Builder {
 public:
  ModuleFile build(const AsmModule& src) {
    for (const auto& i : src.imports) m_.imports.push_back(utf8(i));
    for (const auto& c : src.classes) {
      ClassDef def;
      def.name = utf8(c.name);
      def.super = c.super.empty() ? 0 : utf8(c.super);
      def.is_interface = c.is_interface;
      for (const auto& i : c.interfaces) def.interfaces.push_back(utf8(i));
      for (const auto& [name, desc] : c.fields) def.fields.push_back({utf8(name), utf8(desc)});
      for (const auto& f : c.methods) def.methods.push_back(function(f, c.name));
      m_.classes.push_back(std::move(def));
    }
    for (const auto& f : src.functions) m_.functions.push_back(function(f, ""));
    if (!src.entry.empty()) m_.entry = utf8(src.entry);

    // Infer omitted limits now that every reference is in place.
    std::size_t k = 0;
    for (std::size_t ci = 0; ci < src.classes.size(); ++ci) {
      for (std::size_t mi = 0; mi < src.classes[ci].methods.size(); ++mi) {
        infer_stack(src.classes[ci].methods[mi], m_.classes[ci].methods[mi]);
        ++k;
      }
    }
    for (std::size_t fi = 0; fi < src.functions.size(); ++fi) infer_stack(src.functions[fi], m_.functions[fi]);
    return std::move(m_);
  }

  /// (qualified function name, pc) -> source line, for diagnostics.
  const std::map<std::pair<std::string, std::uint32_t>, int>& pc_lines() const { return pc_lines_; }
  const std::map<std::string, int>& fn_lines() const { return fn_lines_; }

 private:
  std::uint16_t utf8(const std::string& s) { return m_.pool.intern(PoolEntry::utf8(s)); }

  void infer_stack(const AsmFunction& src, FunctionDef& def) {
    if (src.stack || def.is_abstract()) return;
    def.max_stack = 0xFFFF;
    auto need = required_max_stack(m_, def);
    def.max_stack = need.value_or(0);
  }

  FunctionDef function(const AsmFunction& f, const std::string& owner) {
    FunctionDef def;
    def.name = utf8(f.name);
    def.type = m_.pool.intern(PoolEntry::type(f.type));
    bool special = f.is_special || f.name == "<init>";
    def.flags = f.is_static ? kFlagStatic : (special ? kFlagSpecialOnly : kFlagVirtual);
    if (f.is_abstract) def.flags |= kFlagAbstract;
    auto type = FunctionType::parse(f.type);
    std::uint32_t locals = static_cast<std::uint32_t>(type.arity()) + (f.is_static ? 0 : 1);

    std::string qualified = (owner.empty() ? f.name : owner + "." + f.name) + ":" + f.type;
    fn_lines_[qualified] = f.line;

    std::vector<std::pair<std::size_t, const AsmOperand*>> jumps;
    for (const auto& in : f.code) {
      Instruction out;
      out.op = in.op;
      switch (operand_kind(in.op)) {
        case OperandKind::None: break;
        case OperandKind::Constant: out.a = constant(in); break;
        case OperandKind::Local: {
          auto v = parse_int(in.operands[0].text);
          if (in.operands[0].quoted || !v || *v < 0 || *v > 0xFFFF) {
            syntax(in.line, in.operands[0].column, "local slot must be in 0..65535");
          }
          out.a = static_cast<std::int32_t>(*v);
          locals = std::max<std::uint32_t>(locals, static_cast<std::uint32_t>(*v) + 1);
          break;
        }
        case OperandKind::Jump: jumps.emplace_back(def.code.size(), &in.operands[0]); break;
        case OperandKind::ClassRef:
          need_name(in, in.operands[0]);
          out.a = m_.pool.intern(PoolEntry::class_ref(in.operands[0].text));
          break;
        case OperandKind::FieldRef: {
          need_name(in, in.operands[0]);
          try {
            out.a = m_.pool.intern(PoolEntry::field_ref(FieldRef::parse(in.operands[0].text).str()));
          } catch (const DescriptorError& e) {
            syntax(in.line, in.operands[0].column, e.what());
          }
          break;
        }
        case OperandKind::MethodRef: {
          need_name(in, in.operands[0]);
          try {
            out.a = m_.pool.intern(PoolEntry::method_ref(MethodRef::parse(in.operands[0].text).str()));
          } catch (const DescriptorError& e) {
            syntax(in.line, in.operands[0].column, e.what());
          }
          break;
        }
        case OperandKind::Dynamic: {
          if (!in.operands[0].quoted) syntax(in.line, in.operands[0].column, "call-site name must be a string literal");
          out.a = utf8(in.operands[0].text);
          try {
            out.b = m_.pool.intern(PoolEntry::type(FunctionType::parse(in.operands[1].text).str()));
          } catch (const DescriptorError& e) {
            syntax(in.line, in.operands[1].column, e.what());
          }
          if (in.operands.size() == 3) {
            auto v = parse_int(in.operands[2].text);
            if (!v || *v < 0 || *v > 255) syntax(in.line, in.operands[2].column, "bootstrap tag must be in 0..255");
            out.tag = static_cast<std::uint8_t>(*v);
          }
          break;
        }
      }
      def.code.push_back(out);
    }
    auto offsets = code_offsets(def.code);
    for (std::size_t i = 0; i < f.code.size(); ++i) pc_lines_[{qualified, offsets[i]}] = f.code[i].line;
    for (auto [idx, operand] : jumps) {
      if (auto raw = parse_int(operand->text); raw && !operand->quoted) {
        if (*raw < INT32_MIN || *raw > INT32_MAX) syntax(f.code[idx].line, operand->column, "jump offset out of range");
        def.code[idx].a = static_cast<std::int32_t>(*raw);
        continue;
      }
      auto it = f.labels.find(operand->text);
      if (it == f.labels.end()) syntax(f.code[idx].line, operand->column, fmt::format("undefined label '{}'", operand->text));
      def.code[idx].a = static_cast<std::int32_t>(static_cast<std::int64_t>(offsets[it->second]) - offsets[idx]);
    }
    if (locals > 0xFFFF) syntax(f.line, 1, "too many locals");
    def.max_locals = f.locals.value_or(static_cast<std::uint16_t>(locals));
    def.max_stack = f.stack.value_or(0);
    return def;
  }

  static void need_name(const AsmInstr& in, const AsmOperand& o) {
    if (o.quoted) syntax(in.line, o.column, fmt::format("{} expects a symbolic reference", mnemonic(in.op)));
  }

  std::int32_t constant(const AsmInstr& in) {
    const auto& o = in.operands[0];
    if (o.quoted) return m_.pool.intern(PoolEntry::utf8(o.text));
    if (o.text == "true" || o.text == "false") return m_.pool.intern(PoolEntry::bool_const(o.text == "true"));
    if (o.text == "null") return m_.pool.intern(PoolEntry::null_const());
    if (auto v = parse_int(o.text)) return m_.pool.intern(PoolEntry::int_const(*v));
    if (auto v = parse_float(o.text)) return m_.pool.intern(PoolEntry::float_const(*v));
    syntax(in.line, o.column, fmt::format("bad constant '{}'", o.text));
  }

  ModuleFile m_;
  std::map<std::pair<std::string, std::uint32_t>, int> pc_lines_;
  std::map<std::string, int> fn_lines_;
};

// ---- disassembly ------------------------------------------------------------

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c == 0x7F) {
          out += fmt::format("\\x{:02x}", c);
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
  return out;
}

std::string float_text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  auto s = fmt::format("{}", v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void disassemble_function(std::string& out, const ModuleFile& m, const FunctionDef& f, bool in_class) {
  const char* indent = in_class ? "  " : "";
  out += indent;
  out += in_class ? "method " : "fn ";
  out += m.text(f.name) + ":" + m.text(f.type);
  if (in_class && f.is_static()) out += " static";
  if (f.is_abstract()) out += " abstract";
  if (in_class && f.is_special_only()) out += " special";
  if (f.is_abstract()) {
    out += "\n";
    return;
  }
  out += fmt::format(" stack {} locals {} {{\n", f.max_stack, f.max_locals);
  auto offsets = code_offsets(f.code);
  std::map<std::uint32_t, bool> targets;
  for (std::size_t i = 0; i < f.code.size(); ++i) {
    if (operand_kind(f.code[i].op) == OperandKind::Jump) {
      auto t = static_cast<std::int64_t>(offsets[i]) + f.code[i].a;
      if (t >= 0) targets[static_cast<std::uint32_t>(t)] = true;
    }
  }
  std::map<std::uint32_t, bool> boundaries;
  for (std::size_t i = 0; i < f.code.size(); ++i) boundaries[offsets[i]] = true;
  for (std::size_t i = 0; i < f.code.size(); ++i) {
    const auto& in = f.code[i];
    if (targets.count(offsets[i])) out += fmt::format("{}  L{}:\n", indent, offsets[i]);
    out += fmt::format("{}    {}", indent, mnemonic(in.op));
    switch (operand_kind(in.op)) {
      case OperandKind::None: break;
      case OperandKind::Constant: {
        const auto& e = m.pool.at(in.a);
        switch (e.tag) {
          case PoolTag::Int: out += fmt::format(" {}", e.integer); break;
          case PoolTag::Float: out += " " + float_text(e.real); break;
          case PoolTag::Bool: out += e.integer ? " true" : " false"; break;
          case PoolTag::Null: out += " null"; break;
          default: out += " " + quote(e.text); break;
        }
        break;
      }
      case OperandKind::Local: out += fmt::format(" {}", in.a); break;
      case OperandKind::Jump: {
        auto t = static_cast<std::int64_t>(offsets[i]) + in.a;
        if (t >= 0 && boundaries.count(static_cast<std::uint32_t>(t))) {
          out += fmt::format(" L{}", t);
        } else {
          out += fmt::format(" {:+}", in.a);
        }
        break;
      }
      case OperandKind::ClassRef:
      case OperandKind::FieldRef:
      case OperandKind::MethodRef: out += " " + m.text(static_cast<std::uint16_t>(in.a)); break;
      case OperandKind::Dynamic:
        out += " " + quote(m.text(static_cast<std::uint16_t>(in.a))) + " " + m.text(in.b);
        if (in.tag != kBuiltinBootstrap) out += fmt::format(" {}", in.tag);
        break;
    }
    out += "\n";
  }
  out += indent;
  out += "}\n";
}

}  // namespace

ModuleFile assemble(std::string_view source) {
  auto ast = Parser(tokenize(source)).parse();
  Builder builder;
  ModuleFile m = builder.build(ast);
  auto diags = validate(m);
  if (diags.empty()) return m;
  bool semantic = false;
  for (const auto& d : diags) semantic = semantic || d.kind == DiagKind::Reference;
  const Diagnostic& first = [&]() -> const Diagnostic& {
    for (const auto& d : diags) {
      if (!semantic || d.kind == DiagKind::Reference) return d;
    }
    return diags.front();
  }();
  int line = 0;
  if (first.pc) {
    if (auto it = builder.pc_lines().find({first.function, *first.pc}); it != builder.pc_lines().end()) line = it->second;
  } else if (auto it = builder.fn_lines().find(first.function); it != builder.fn_lines().end()) {
    line = it->second;
  }
  std::string msg = first.str();
  if (diags.size() > 1) msg += fmt::format(" (+{} more)", diags.size() - 1);
  throw AssembleError(semantic ? AssembleErrc::Semantic : AssembleErrc::Validation, line, line ? 1 : 0, msg,
                      std::move(diags));
}

std::string disassemble(const ModuleFile& m) {
  std::string out;
  for (auto i : m.imports) out += "import " + m.text(i) + "\n";
  if (m.entry) out += "entry " + m.text(m.entry) + "\n";
  for (const auto& c : m.classes) {
    if (!out.empty()) out += "\n";
    out += (c.is_interface ? "interface " : "class ") + m.text(c.name);
    if (c.super) out += " extends " + m.text(c.super);
    if (!c.interfaces.empty()) {
      out += " implements ";
      for (std::size_t i = 0; i < c.interfaces.size(); ++i) {
        if (i) out += ", ";
        out += m.text(c.interfaces[i]);
      }
    }
    out += " {\n";
    for (const auto& f : c.fields) out += "  field " + m.text(f.name) + ":" + m.text(f.desc) + "\n";
    for (const auto& f : c.methods) disassemble_function(out, m, f, true);
    out += "}\n";
  }
  for (const auto& f : m.functions) {
    if (!out.empty()) out += "\n";
    disassemble_function(out, m, f, false);
  }
  return out;
}

}  // namespace fluxvm
