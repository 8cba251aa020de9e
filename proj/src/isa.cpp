#include "warp/isa.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

#include "warp/error.hpp"

namespace warp {
namespace {

constexpr std::array<OpcodeInfo, kLastOpcode + 1> kTable = {{
    {Opcode{0}, "<illegal>", Format::None, LatencyClass::Alu1},
    {Opcode::Add, "add", Format::R, LatencyClass::Alu1},
    {Opcode::Addi, "addi", Format::I, LatencyClass::Alu1},
    {Opcode::Sub, "sub", Format::R, LatencyClass::Alu1},
    {Opcode::And, "and", Format::R, LatencyClass::Alu1},
    {Opcode::Or, "or", Format::R, LatencyClass::Alu1},
    {Opcode::Xor, "xor", Format::R, LatencyClass::Alu1},
    {Opcode::Sll, "sll", Format::Shift, LatencyClass::Alu1},
    {Opcode::Srl, "srl", Format::Shift, LatencyClass::Alu1},
    {Opcode::Sra, "sra", Format::Shift, LatencyClass::Alu1},
    {Opcode::Mul, "mul", Format::R, LatencyClass::Mul3},
    {Opcode::Div, "div", Format::R, LatencyClass::DivN},
    {Opcode::Lw, "lw", Format::I, LatencyClass::Load},
    {Opcode::Sw, "sw", Format::Store, LatencyClass::Store},
    {Opcode::Li, "li", Format::Li, LatencyClass::Alu1},
    {Opcode::Lui, "lui", Format::Lui, LatencyClass::Alu1},
    {Opcode::Beq, "beq", Format::Branch, LatencyClass::Branch},
    {Opcode::Bne, "bne", Format::Branch, LatencyClass::Branch},
    {Opcode::Blt, "blt", Format::Branch, LatencyClass::Branch},
    {Opcode::Jmp, "jmp", Format::Jump, LatencyClass::Jump},
    {Opcode::Jal, "jal", Format::Jal, LatencyClass::Jump},
    {Opcode::Jr, "jr", Format::Jr, LatencyClass::Jump},
    {Opcode::Halt, "halt", Format::None, LatencyClass::Alu1},
}};

constexpr std::uint32_t kImmMask = (1u << 18) - 1;

bool valid_opcode(int v) { return v >= kFirstOpcode && v <= kLastOpcode; }

std::uint32_t imm_signed(std::int32_t v) { return static_cast<std::uint32_t>(v) & kImmMask; }

std::int32_t sext18(std::uint32_t field) {
  return static_cast<std::int32_t>(field << 14) >> 14;
}

void write_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t read_u32(std::span<const std::uint8_t> in, std::size_t at) {
  if (at + 4 > in.size()) throw DecodeError("binary image truncated");
  return static_cast<std::uint32_t>(in[at]) | (static_cast<std::uint32_t>(in[at + 1]) << 8) |
         (static_cast<std::uint32_t>(in[at + 2]) << 16) | (static_cast<std::uint32_t>(in[at + 3]) << 24);
}

}  // namespace

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::ContainsCall: return "ContainsCall";
    case RejectReason::IrregularAccess: return "IrregularAccess";
    case RejectReason::UnboundedTrip: return "UnboundedTrip";
    case RejectReason::UnsupportedOp: return "UnsupportedOp";
    case RejectReason::NestedBackwardBranch: return "NestedBackwardBranch";
    case RejectReason::RegionTooLarge: return "RegionTooLarge";
  }
  return "?";
}

std::optional<RejectReason> parse_reject_reason(const std::string& s) {
  for (auto r : {RejectReason::ContainsCall, RejectReason::IrregularAccess, RejectReason::UnboundedTrip,
                 RejectReason::UnsupportedOp, RejectReason::NestedBackwardBranch, RejectReason::RegionTooLarge}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

const OpcodeInfo& info(Opcode op) {
  const int v = static_cast<int>(op);
  if (!valid_opcode(v)) throw std::invalid_argument("illegal opcode " + std::to_string(v));
  return kTable[v];
}

std::string_view mnemonic(Opcode op) { return info(op).mnemonic; }
LatencyClass latency_class(Opcode op) { return info(op).latency; }
bool is_branch(Opcode op) { return info(op).format == Format::Branch; }
bool is_control(Opcode op) {
  const Format f = info(op).format;
  return f == Format::Branch || f == Format::Jump || f == Format::Jal || f == Format::Jr ||
         op == Opcode::Halt;
}

Instruction make_nop() { return Instruction{Opcode::Add, 0, 0, 0, 0}; }
bool is_nop(const Instruction& i) { return i == make_nop(); }

bool is_canonical(const Instruction& in) {
  if (!valid_opcode(static_cast<int>(in.op))) return false;
  if (in.rd >= kNumRegs || in.ra >= kNumRegs || in.rb >= kNumRegs) return false;
  switch (info(in.op).format) {
    case Format::R: return in.imm == 0;
    case Format::I: return in.rb == 0 && in.imm >= kImmMin && in.imm <= kImmMax;
    case Format::Shift: return in.rb == 0 && in.imm >= 0 && in.imm <= 31;
    case Format::Store: return in.rd == 0 && in.imm >= kImmMin && in.imm <= kImmMax;
    case Format::Li: return in.ra == 0 && in.rb == 0 && in.imm >= kImmMin && in.imm <= kImmMax;
    case Format::Lui: return in.ra == 0 && in.rb == 0 && in.imm >= 0 && in.imm <= kLuiMax;
    case Format::Branch:
      return in.rd == 0 && in.imm >= 0 && (in.imm & 3) == 0 && (in.imm >> 2) <= kLuiMax;
    case Format::Jump:
      return in.rd == 0 && in.ra == 0 && in.rb == 0 && in.imm >= 0 && (in.imm & 3) == 0 &&
             (in.imm >> 2) <= kLuiMax;
    case Format::Jal:
      return in.rd == kLinkReg && in.ra == 0 && in.rb == 0 && in.imm >= 0 && (in.imm & 3) == 0 &&
             (in.imm >> 2) <= kLuiMax;
    case Format::Jr: return in.rd == 0 && in.rb == 0 && in.imm == 0;
    case Format::None: return in.rd == 0 && in.ra == 0 && in.rb == 0 && in.imm == 0;
  }
  return false;
}

std::uint32_t encode(const Instruction& in) {
  if (!is_canonical(in)) throw std::invalid_argument("non-canonical instruction: " + to_string(in));
  const std::uint32_t op = static_cast<std::uint32_t>(in.op) << 26;
  auto f1 = [](unsigned r) { return static_cast<std::uint32_t>(r) << 22; };
  auto f2 = [](unsigned r) { return static_cast<std::uint32_t>(r) << 18; };
  switch (info(in.op).format) {
    case Format::R: return op | f1(in.rd) | f2(in.ra) | (static_cast<std::uint32_t>(in.rb) << 14);
    case Format::I:
    case Format::Shift: return op | f1(in.rd) | f2(in.ra) | imm_signed(in.imm);
    case Format::Store: return op | f1(in.rb) | f2(in.ra) | imm_signed(in.imm);
    case Format::Li:
    case Format::Lui: return op | f1(in.rd) | imm_signed(in.imm);
    case Format::Branch:
      return op | f1(in.ra) | f2(in.rb) | (static_cast<std::uint32_t>(in.imm) >> 2);
    case Format::Jump:
    case Format::Jal: return op | (static_cast<std::uint32_t>(in.imm) >> 2);
    case Format::Jr: return op | f2(in.ra);
    case Format::None: return op;
  }
  return op;
}

Instruction decode(std::uint32_t word) {
  const int opv = static_cast<int>(word >> 26);
  if (!valid_opcode(opv)) throw DecodeError("illegal opcode field " + std::to_string(opv));
  Instruction in;
  in.op = static_cast<Opcode>(opv);
  const auto f1 = static_cast<std::uint8_t>((word >> 22) & 0xf);
  const auto f2 = static_cast<std::uint8_t>((word >> 18) & 0xf);
  const std::uint32_t imm = word & kImmMask;
  switch (info(in.op).format) {
    case Format::R:
      in.rd = f1; in.ra = f2; in.rb = static_cast<std::uint8_t>((word >> 14) & 0xf);
      if (word & 0x3fff) throw DecodeError("reserved bits set in R-format word");
      break;
    case Format::I: in.rd = f1; in.ra = f2; in.imm = sext18(imm); break;
    case Format::Shift: in.rd = f1; in.ra = f2; in.imm = static_cast<std::int32_t>(imm); break;
    case Format::Store: in.rb = f1; in.ra = f2; in.imm = sext18(imm); break;
    case Format::Li: in.rd = f1; in.imm = sext18(imm); if (f2) throw DecodeError("reserved field set"); break;
    case Format::Lui: in.rd = f1; in.imm = static_cast<std::int32_t>(imm); if (f2) throw DecodeError("reserved field set"); break;
    case Format::Branch: in.ra = f1; in.rb = f2; in.imm = static_cast<std::int32_t>(imm << 2); break;
    case Format::Jump:
    case Format::Jal:
      if (f1 || f2) throw DecodeError("reserved field set");
      in.imm = static_cast<std::int32_t>(imm << 2);
      if (in.op == Opcode::Jal) in.rd = kLinkReg;
      break;
    case Format::Jr: in.ra = f2; if (f1 || imm) throw DecodeError("reserved field set"); break;
    case Format::None: if (word & 0x03ffffff) throw DecodeError("reserved bits set"); break;
  }
  if (!is_canonical(in)) throw DecodeError("word decodes to a non-canonical instruction");
  return in;
}

std::string to_string(const Instruction& in) {
  std::ostringstream os;
  if (!valid_opcode(static_cast<int>(in.op))) return "<illegal>";
  if (is_nop(in)) return "nop";
  const auto& meta = info(in.op);
  os << meta.mnemonic;
  auto r = [](unsigned v) { return "r" + std::to_string(v); };
  switch (meta.format) {
    case Format::R: os << ' ' << r(in.rd) << ", " << r(in.ra) << ", " << r(in.rb); break;
    case Format::I:
      if (in.op == Opcode::Lw) os << ' ' << r(in.rd) << ", " << in.imm << '(' << r(in.ra) << ')';
      else os << ' ' << r(in.rd) << ", " << r(in.ra) << ", " << in.imm;
      break;
    case Format::Shift: os << ' ' << r(in.rd) << ", " << r(in.ra) << ", " << in.imm; break;
    case Format::Store: os << ' ' << r(in.rb) << ", " << in.imm << '(' << r(in.ra) << ')'; break;
    case Format::Li:
    case Format::Lui: os << ' ' << r(in.rd) << ", " << in.imm; break;
    case Format::Branch: os << ' ' << r(in.ra) << ", " << r(in.rb) << ", " << in.imm; break;
    case Format::Jump:
    case Format::Jal: os << ' ' << in.imm; break;
    case Format::Jr: os << ' ' << r(in.ra); break;
    case Format::None: break;
  }
  return os.str();
}

std::uint32_t Program::label(const std::string& name) const {
  auto it = labels.find(name);
  if (it == labels.end()) throw std::out_of_range("unknown label " + name);
  return it->second;
}

void Program::validate() const {
  if ((text_base & 3u) || (data_base & 3u)) throw std::invalid_argument("segment base not word aligned");
  if (data.size() % 4) throw std::invalid_argument("data image not a whole number of words");
  const std::uint64_t tend = text_end();
  const std::uint64_t dend = static_cast<std::uint64_t>(data_base) + data.size();
  if (!(tend <= data_base || dend <= text_base)) throw std::invalid_argument("text and data overlap");
  if (!text.empty() && !in_text(entry)) throw std::invalid_argument("entry outside text");
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto& in = text[i];
    const Format f = info(in.op).format;
    if ((f == Format::Branch || f == Format::Jump || f == Format::Jal) &&
        !in_text(static_cast<std::uint32_t>(in.imm)))
      throw std::invalid_argument("branch target outside text at index " + std::to_string(i));
  }
}

std::vector<std::uint8_t> to_binary(const Program& p) {
  if (p.text_base != kTextBase || p.data_base != kDataBase)
    throw std::invalid_argument("binary format requires the default segment bases");
  std::vector<std::uint8_t> out = {'W', 'R', 'S', 'C', kBinaryVersion};
  write_u32(out, static_cast<std::uint32_t>(p.text.size()));
  write_u32(out, static_cast<std::uint32_t>(p.data.size()));
  write_u32(out, p.entry);
  for (const auto& in : p.text) write_u32(out, encode(in));
  out.insert(out.end(), p.data.begin(), p.data.end());
  return out;
}

Program from_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 17 || std::memcmp(bytes.data(), "WRSC", 4) != 0) throw DecodeError("bad magic");
  if (bytes[4] != kBinaryVersion) throw DecodeError("unsupported binary version " + std::to_string(bytes[4]));
  Program p;
  const std::uint32_t nwords = read_u32(bytes, 5);
  const std::uint32_t dlen = read_u32(bytes, 9);
  p.entry = read_u32(bytes, 13);
  if (dlen % 4) throw DecodeError("data length not word multiple");
  std::size_t at = 17;
  p.text.reserve(nwords);
  for (std::uint32_t i = 0; i < nwords; ++i, at += 4) p.text.push_back(decode(read_u32(bytes, at)));
  if (at + dlen > bytes.size()) throw DecodeError("binary image truncated");
  p.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at), bytes.begin() + static_cast<std::ptrdiff_t>(at + dlen));
  p.validate();
  return p;
}

}  // namespace warp
