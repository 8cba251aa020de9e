#include "warp/assembler.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "warp/error.hpp"
#include "warp/lowering.hpp"

namespace warp {
namespace {

struct Token {
  std::string text;
  int column = 1;
};

struct Expr {
  std::string label;  // empty for plain numbers
  std::int64_t offset = 0;
  int column = 1;
};

enum class Section { Text, Data };

struct PendingInstr {
  int line = 0;
  int column = 1;
  Opcode op{};
  std::uint8_t rd = 0, ra = 0, rb = 0;
  Expr imm;
  bool has_imm = false;
  bool split_li = false;  // li expanded to lui + addi
};

struct PendingWord {
  int line;
  Expr value;
  std::uint32_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Program run(const CpuFeatures& features);

 private:
  void parse_line(std::string_view line, int lineno);
  std::vector<Token> split_operands(std::string_view s, int base_col);
  std::uint8_t reg(const Token& t) const;
  Expr expr(const Token& t) const;
  std::int64_t resolve(const Expr& e) const;
  void define_label(const std::string& name, int col);
  void instruction(const std::string& mnem, int mcol, const std::vector<Token>& ops);
  void directive(const std::string& name, int col, const std::vector<Token>& ops);
  void expect(const std::vector<Token>& ops, std::size_t n, int col) const;
  std::pair<Expr, std::uint8_t> mem_operand(const Token& t) const;

  std::string_view src_;
  int line_ = 0;
  Section section_ = Section::Text;
  std::vector<PendingInstr> text_;
  std::uint32_t text_words_ = 0;
  std::vector<std::uint8_t> data_;
  std::vector<PendingWord> words_;
  std::map<std::string, std::pair<Section, std::uint32_t>> labels_;  // offset in section
  std::optional<Expr> entry_;
  int entry_line_ = 0;
};

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$'; }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::int64_t> parse_number(std::string_view s) {
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || p != s.data() + s.size() || v > 0xffffffffull) return std::nullopt;
  return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
}

const std::unordered_map<std::string, Opcode>& mnemonics() {
  static const auto table = [] {
    std::unordered_map<std::string, Opcode> m;
    for (int v = kFirstOpcode; v <= kLastOpcode; ++v) {
      const auto op = static_cast<Opcode>(v);
      m.emplace(std::string(mnemonic(op)), op);
    }
    return m;
  }();
  return table;
}

Program Parser::run(const CpuFeatures& features) {
  std::size_t pos = 0;
  while (pos <= src_.size()) {
    std::size_t nl = src_.find('\n', pos);
    if (nl == std::string_view::npos) nl = src_.size();
    ++line_;
    parse_line(src_.substr(pos, nl - pos), line_);
    pos = nl + 1;
  }

  Program p;
  if (text_.empty()) throw AsmError(line_, 1, "no entry point: program has no instructions");
  if (text_words_ * 4 > kMaxTextBytes) throw AsmError(line_, 1, "text segment too large");
  if (data_.size() > kMaxDataBytes) throw AsmError(line_, 1, "data segment too large");

  for (const auto& [name, where] : labels_)
    p.labels[name] = (where.first == Section::Text ? kTextBase : kDataBase) + where.second;

  for (const auto& w : words_) {
    line_ = w.line;
    const auto v = static_cast<std::uint32_t>(resolve(w.value));
    for (int i = 0; i < 4; ++i) data_[w.offset + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  p.data = data_;

  for (const auto& pi : text_) {
    line_ = pi.line;
    Instruction in{pi.op, pi.rd, pi.ra, pi.rb, 0};
    std::int64_t v = pi.has_imm ? resolve(pi.imm) : 0;
    const Format fmt = info(pi.op).format;
    auto overflow = [&](const char* what) {
      return AsmError(pi.line, pi.imm.column, std::string(what) + " " + std::to_string(v) + " out of range");
    };
    if (pi.split_li) {
      const auto u = static_cast<std::uint32_t>(v);
      p.text.push_back({Opcode::Lui, pi.rd, 0, 0, static_cast<std::int32_t>(u >> kLuiShift)});
      p.text.push_back({Opcode::Addi, pi.rd, pi.rd, 0, static_cast<std::int32_t>(u & ((1u << kLuiShift) - 1))});
      continue;
    }
    switch (fmt) {
      case Format::I:
      case Format::Store:
      case Format::Li:
        if (v < kImmMin || v > kImmMax) throw overflow("immediate");
        break;
      case Format::Shift:
        if (v < 0 || v > 31) throw overflow("shift amount");
        break;
      case Format::Lui:
        if (v < 0 || v > kLuiMax) throw overflow("upper immediate");
        break;
      case Format::Branch:
      case Format::Jump:
      case Format::Jal:
        if (v < 0 || v % 4 || v >= static_cast<std::int64_t>(kTextBase + text_words_ * 4))
          throw AsmError(pi.line, pi.imm.column, "branch target " + std::to_string(v) + " outside text");
        break;
      default: break;
    }
    in.imm = static_cast<std::int32_t>(v);
    if (fmt == Format::Jal) in.rd = kLinkReg;
    p.text.push_back(in);
  }

  if (entry_) {
    line_ = entry_line_;
    p.entry = static_cast<std::uint32_t>(resolve(*entry_));
  } else if (auto it = p.labels.find("_start"); it != p.labels.end()) {
    p.entry = it->second;
  } else {
    p.entry = kTextBase;
  }

  if (!features.barrel_shifter || !features.multiplier || !features.divider) {
    LoweringResult lowered;
    try {
      lowered = lower_with_map(p.text, features, kTextBase);
    } catch (const std::invalid_argument& e) {
      throw AsmError(0, 1, e.what());
    }
    auto remap = [&](std::uint32_t a) {
      if (a >= kTextBase && a < p.text_end()) return lowered.new_address[(a - kTextBase) / 4];
      return a;
    };
    for (auto& [name, addr] : p.labels) addr = remap(addr);
    p.entry = remap(p.entry);
    p.text = std::move(lowered.text);
    if (p.text_end() > kDataBase) throw AsmError(0, 1, "lowered text segment too large");
  }

  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw AsmError(0, 1, e.what());
  }
  return p;
}

void Parser::parse_line(std::string_view raw, int lineno) {
  std::string_view line = raw;
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  };
  while (true) {
    skip_ws();
    if (i >= line.size()) return;
    const std::size_t start = i;
    while (i < line.size() && ident_char(line[i])) ++i;
    const int col = static_cast<int>(start) + 1;
    if (i == start) throw AsmError(lineno, col, std::string("unexpected character '") + line[i] + "'");
    std::string word(line.substr(start, i - start));
    skip_ws();
    if (i < line.size() && line[i] == ':') {
      ++i;
      define_label(word, col);
      continue;
    }
    auto ops = split_operands(line.substr(i), static_cast<int>(i) + 1);
    if (word[0] == '.') directive(lower(word), col, ops);
    else instruction(lower(word), col, ops);
    return;
  }
}

std::vector<Token> Parser::split_operands(std::string_view s, int base_col) {
  std::vector<Token> out;
  std::size_t start = 0;
  if (trim(s).empty()) return out;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      std::string_view piece = s.substr(start, i - start);
      std::size_t lead = 0;
      while (lead < piece.size() && std::isspace(static_cast<unsigned char>(piece[lead]))) ++lead;
      Token t{trim(piece), base_col + static_cast<int>(start + lead)};
      if (t.text.empty()) throw AsmError(line_, base_col + static_cast<int>(start), "empty operand");
      out.push_back(std::move(t));
      start = i + 1;
    }
  }
  return out;
}

std::uint8_t Parser::reg(const Token& t) const {
  const std::string s = lower(t.text);
  if (s.size() < 2 || s[0] != 'r') throw AsmError(line_, t.column, "expected register, got '" + t.text + "'");
  auto n = parse_number(std::string_view(s).substr(1));
  if (!n || s[1] == '-' || s[1] == '+') throw AsmError(line_, t.column, "expected register, got '" + t.text + "'");
  if (*n < 0 || *n >= kNumRegs) throw AsmError(line_, t.column, "register " + t.text + " out of range");
  return static_cast<std::uint8_t>(*n);
}

Expr Parser::expr(const Token& t) const {
  Expr e;
  e.column = t.column;
  const std::string& s = t.text;
  if (auto n = parse_number(s)) {
    e.offset = *n;
    return e;
  }
  std::size_t split = s.find_first_of("+-", 1);
  std::string name = trim(s.substr(0, split));
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_' || name[0] == '.'))
    throw AsmError(line_, t.column, "malformed expression '" + s + "'");
  for (char c : name)
    if (!ident_char(c)) throw AsmError(line_, t.column, "malformed expression '" + s + "'");
  e.label = name;
  if (split != std::string::npos) {
    std::string rest = trim(s.substr(split + 1));
    auto n = parse_number(rest);
    if (!n) throw AsmError(line_, t.column, "malformed offset in '" + s + "'");
    e.offset = s[split] == '-' ? -*n : *n;
  }
  return e;
}

std::int64_t Parser::resolve(const Expr& e) const {
  if (e.label.empty()) return e.offset;
  auto it = labels_.find(e.label);
  if (it == labels_.end()) throw AsmError(line_, e.column, "undefined label '" + e.label + "'");
  const std::uint32_t base = it->second.first == Section::Text ? kTextBase : kDataBase;
  return static_cast<std::int64_t>(base + it->second.second) + e.offset;
}

void Parser::define_label(const std::string& name, int col) {
  if (labels_.count(name)) throw AsmError(line_, col, "duplicate label '" + name + "'");
  if (section_ == Section::Text) labels_[name] = {Section::Text, text_words_ * 4};
  else labels_[name] = {Section::Data, static_cast<std::uint32_t>(data_.size())};
}

void Parser::expect(const std::vector<Token>& ops, std::size_t n, int col) const {
  if (ops.size() != n)
    throw AsmError(line_, col, "expected " + std::to_string(n) + " operands, got " + std::to_string(ops.size()));
}

std::pair<Expr, std::uint8_t> Parser::mem_operand(const Token& t) const {
  const auto open = t.text.find('(');
  const auto close = t.text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open || close != t.text.size() - 1)
    throw AsmError(line_, t.column, "expected offset(register), got '" + t.text + "'");
  Token off{trim(t.text.substr(0, open)), t.column};
  if (off.text.empty()) off.text = "0";
  Token base{trim(t.text.substr(open + 1, close - open - 1)), t.column + static_cast<int>(open) + 1};
  return {expr(off), reg(base)};
}

void Parser::instruction(const std::string& mnem, int col, const std::vector<Token>& ops) {
  if (section_ != Section::Text) throw AsmError(line_, col, "instruction outside .text");
  PendingInstr pi;
  pi.line = line_;
  pi.column = col;
  if (mnem == "nop") {
    expect(ops, 0, col);
    pi.op = Opcode::Add;
    text_.push_back(pi);
    ++text_words_;
    return;
  }
  if (mnem == "mov") {
    expect(ops, 2, col);
    pi.op = Opcode::Add;
    pi.rd = reg(ops[0]);
    pi.ra = reg(ops[1]);
    text_.push_back(pi);
    ++text_words_;
    return;
  }
  auto it = mnemonics().find(mnem);
  if (it == mnemonics().end()) throw AsmError(line_, col, "unknown mnemonic '" + mnem + "'");
  pi.op = it->second;
  switch (info(pi.op).format) {
    case Format::R:
      expect(ops, 3, col);
      pi.rd = reg(ops[0]); pi.ra = reg(ops[1]); pi.rb = reg(ops[2]);
      break;
    case Format::I:
      if (pi.op == Opcode::Lw) {
        expect(ops, 2, col);
        pi.rd = reg(ops[0]);
        std::tie(pi.imm, pi.ra) = mem_operand(ops[1]);
      } else {
        expect(ops, 3, col);
        pi.rd = reg(ops[0]); pi.ra = reg(ops[1]); pi.imm = expr(ops[2]);
      }
      pi.has_imm = true;
      break;
    case Format::Shift:
      expect(ops, 3, col);
      pi.rd = reg(ops[0]); pi.ra = reg(ops[1]); pi.imm = expr(ops[2]); pi.has_imm = true;
      break;
    case Format::Store:
      expect(ops, 2, col);
      pi.rb = reg(ops[0]);
      std::tie(pi.imm, pi.ra) = mem_operand(ops[1]);
      pi.has_imm = true;
      break;
    case Format::Li:
      expect(ops, 2, col);
      pi.rd = reg(ops[0]); pi.imm = expr(ops[1]); pi.has_imm = true;
      // every label address fits the immediate field; only literals may need two words
      if (pi.imm.label.empty()) {
        if (pi.imm.offset < -(1ll << 31) || pi.imm.offset > 0xffffffffll)
          throw AsmError(line_, pi.imm.column, "immediate " + std::to_string(pi.imm.offset) + " out of range");
        pi.split_li = pi.imm.offset < kImmMin || pi.imm.offset > kImmMax;
      }
      break;
    case Format::Lui:
      expect(ops, 2, col);
      pi.rd = reg(ops[0]); pi.imm = expr(ops[1]); pi.has_imm = true;
      break;
    case Format::Branch:
      expect(ops, 3, col);
      pi.ra = reg(ops[0]); pi.rb = reg(ops[1]); pi.imm = expr(ops[2]); pi.has_imm = true;
      break;
    case Format::Jump:
    case Format::Jal:
      expect(ops, 1, col);
      pi.imm = expr(ops[0]); pi.has_imm = true;
      break;
    case Format::Jr:
      expect(ops, 1, col);
      pi.ra = reg(ops[0]);
      break;
    case Format::None:
      expect(ops, 0, col);
      break;
  }
  text_.push_back(pi);
  text_words_ += pi.split_li ? 2 : 1;
}

void Parser::directive(const std::string& name, int col, const std::vector<Token>& ops) {
  auto align_data = [&] {
    while (data_.size() % 4) data_.push_back(0);
  };
  if (name == ".text") {
    expect(ops, 0, col);
    section_ = Section::Text;
  } else if (name == ".data") {
    expect(ops, 0, col);
    section_ = Section::Data;
  } else if (name == ".word") {
    if (section_ != Section::Data) throw AsmError(line_, col, ".word outside .data");
    if (ops.empty()) throw AsmError(line_, col, ".word needs at least one value");
    align_data();
    for (const auto& t : ops) {
      Expr e = expr(t);
      if (e.label.empty() && (e.offset < -(1ll << 31) || e.offset > 0xffffffffll))
        throw AsmError(line_, t.column, "word value out of range");
      words_.push_back({line_, e, static_cast<std::uint32_t>(data_.size())});
      data_.insert(data_.end(), 4, 0);
    }
  } else if (name == ".space") {
    if (section_ != Section::Data) throw AsmError(line_, col, ".space outside .data");
    expect(ops, 1, col);
    auto n = parse_number(ops[0].text);
    if (!n || *n < 0 || *n > kMaxDataBytes) throw AsmError(line_, ops[0].column, "bad .space size");
    data_.insert(data_.end(), static_cast<std::size_t>(*n), 0);
    align_data();
  } else if (name == ".entry") {
    expect(ops, 1, col);
    entry_ = expr(ops[0]);
    entry_line_ = line_;
  } else {
    throw AsmError(line_, col, "unknown directive '" + name + "'");
  }
}

}  // namespace

Program assemble(std::string_view source, const CpuFeatures& features) {
  Parser parser(source);
  return parser.run(features);
}

std::string disassemble(const Program& p) {
  std::set<std::uint32_t> targets;
  for (const auto& in : p.text) {
    const Format f = info(in.op).format;
    if (f == Format::Branch || f == Format::Jump || f == Format::Jal) targets.insert(static_cast<std::uint32_t>(in.imm));
  }
  auto label_of = [](std::uint32_t a) {
    std::ostringstream os;
    os << "L" << std::hex << a;
    return os.str();
  };
  std::ostringstream os;
  os << "# disassembly: " << p.text.size() << " instructions, " << p.data.size() << " data bytes\n";
  os << ".entry " << p.entry << "\n.text\n";
  for (std::size_t i = 0; i < p.text.size(); ++i) {
    const std::uint32_t addr = p.text_base + static_cast<std::uint32_t>(i * 4);
    if (targets.count(addr)) os << label_of(addr) << ":\n";
    const auto& in = p.text[i];
    const Format f = info(in.op).format;
    os << "    ";
    if (f == Format::Branch) {
      os << mnemonic(in.op) << " r" << int(in.ra) << ", r" << int(in.rb) << ", " << label_of(static_cast<std::uint32_t>(in.imm));
    } else if (f == Format::Jump || f == Format::Jal) {
      os << mnemonic(in.op) << ' ' << label_of(static_cast<std::uint32_t>(in.imm));
    } else {
      os << to_string(in);
    }
    os << '\n';
  }
  if (!p.data.empty()) {
    os << ".data\n";
    for (std::size_t i = 0; i < p.data.size(); i += 4) {
      std::uint32_t w = 0;
      for (std::size_t b = 0; b < 4 && i + b < p.data.size(); ++b) w |= static_cast<std::uint32_t>(p.data[i + b]) << (8 * b);
      os << "    .word 0x" << std::hex << w << std::dec << '\n';
    }
  }
  return os.str();
}

}  // namespace warp
