#include "binpart/isa.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace binpart {

const char* err_name(Err e) {
  switch (e) {
    case Err::UnknownOpcode: return "UnknownOpcode";
    case Err::FieldOutOfRange: return "FieldOutOfRange";
    case Err::UndefinedLabel: return "UndefinedLabel";
    case Err::DuplicateLabel: return "DuplicateLabel";
    case Err::BranchOutOfRange: return "BranchOutOfRange";
    case Err::SyntaxError: return "SyntaxError";
    case Err::UndefinedEntry: return "UndefinedEntry";
    case Err::BadMagic: return "BadMagic";
    case Err::TruncatedImage: return "TruncatedImage";
    case Err::VersionMismatch: return "VersionMismatch";
    case Err::UnalignedAccess: return "UnalignedAccess";
    case Err::PcOutOfRange: return "PcOutOfRange";
    case Err::InputExhausted: return "InputExhausted";
    case Err::MaxStepsExceeded: return "MaxStepsExceeded";
    case Err::MemoryFault: return "MemoryFault";
    case Err::BadSyscall: return "BadSyscall";
    case Err::IndirectJump: return "IndirectJump";
    case Err::UnknownSyscallService: return "UnknownSyscallService";
    case Err::UnreachableBlock: return "UnreachableBlock";
    case Err::EmptyProfile: return "EmptyProfile";
    case Err::NoFeasibleImpl: return "NoFeasibleImpl";
    case Err::MaxCyclesExceeded: return "MaxCyclesExceeded";
    case Err::MissingHwCycles: return "MissingHwCycles";
    case Err::IoError: return "IoError";
    case Err::BadConfig: return "BadConfig";
  }
  return "Error";
}

const char* mnemonic_name(Mnemonic m) {
  switch (m) {
    case Mnemonic::ADD: return "add";
    case Mnemonic::ADDU: return "addu";
    case Mnemonic::SUB: return "sub";
    case Mnemonic::SUBU: return "subu";
    case Mnemonic::AND: return "and";
    case Mnemonic::OR: return "or";
    case Mnemonic::XOR: return "xor";
    case Mnemonic::NOR: return "nor";
    case Mnemonic::SLT: return "slt";
    case Mnemonic::SLTU: return "sltu";
    case Mnemonic::SLL: return "sll";
    case Mnemonic::SRL: return "srl";
    case Mnemonic::SRA: return "sra";
    case Mnemonic::SLLV: return "sllv";
    case Mnemonic::SRLV: return "srlv";
    case Mnemonic::SRAV: return "srav";
    case Mnemonic::MUL: return "mul";
    case Mnemonic::ADDI: return "addi";
    case Mnemonic::ADDIU: return "addiu";
    case Mnemonic::SLTI: return "slti";
    case Mnemonic::ANDI: return "andi";
    case Mnemonic::ORI: return "ori";
    case Mnemonic::XORI: return "xori";
    case Mnemonic::LUI: return "lui";
    case Mnemonic::LW: return "lw";
    case Mnemonic::SW: return "sw";
    case Mnemonic::LB: return "lb";
    case Mnemonic::LBU: return "lbu";
    case Mnemonic::SB: return "sb";
    case Mnemonic::BEQ: return "beq";
    case Mnemonic::BNE: return "bne";
    case Mnemonic::BLEZ: return "blez";
    case Mnemonic::BGTZ: return "bgtz";
    case Mnemonic::J: return "j";
    case Mnemonic::JAL: return "jal";
    case Mnemonic::JR: return "jr";
    case Mnemonic::SYSCALL: return "syscall";
    case Mnemonic::NOP: return "nop";
  }
  return "?";
}

namespace {

constexpr uint32_t OP_SPECIAL = 0x00;
constexpr uint32_t OP_SPECIAL2 = 0x1C;

struct RSpec { Mnemonic mn; uint32_t funct; };
constexpr RSpec kRFuncts[] = {
    {Mnemonic::SLL, 0x00},  {Mnemonic::SRL, 0x02},  {Mnemonic::SRA, 0x03},
    {Mnemonic::SLLV, 0x04}, {Mnemonic::SRLV, 0x06}, {Mnemonic::SRAV, 0x07},
    {Mnemonic::JR, 0x08},   {Mnemonic::SYSCALL, 0x0C},
    {Mnemonic::ADD, 0x20},  {Mnemonic::ADDU, 0x21}, {Mnemonic::SUB, 0x22},
    {Mnemonic::SUBU, 0x23}, {Mnemonic::AND, 0x24},  {Mnemonic::OR, 0x25},
    {Mnemonic::XOR, 0x26},  {Mnemonic::NOR, 0x27},  {Mnemonic::SLT, 0x2A},
    {Mnemonic::SLTU, 0x2B},
};

struct ISpec { Mnemonic mn; uint32_t op; };
constexpr ISpec kIOps[] = {
    {Mnemonic::BEQ, 0x04},  {Mnemonic::BNE, 0x05},  {Mnemonic::BLEZ, 0x06},
    {Mnemonic::BGTZ, 0x07}, {Mnemonic::ADDI, 0x08}, {Mnemonic::ADDIU, 0x09},
    {Mnemonic::SLTI, 0x0A}, {Mnemonic::ANDI, 0x0C}, {Mnemonic::ORI, 0x0D},
    {Mnemonic::XORI, 0x0E}, {Mnemonic::LUI, 0x0F},  {Mnemonic::LB, 0x20},
    {Mnemonic::LW, 0x23},   {Mnemonic::LBU, 0x24},  {Mnemonic::SB, 0x28},
    {Mnemonic::SW, 0x2B},
};

bool is_shift_imm(Mnemonic m) {
  return m == Mnemonic::SLL || m == Mnemonic::SRL || m == Mnemonic::SRA;
}
bool is_shift_var(Mnemonic m) {
  return m == Mnemonic::SLLV || m == Mnemonic::SRLV || m == Mnemonic::SRAV;
}

[[noreturn]] void unknown(uint32_t word, uint32_t addr) {
  std::ostringstream os;
  os << "word 0x" << std::hex << word << " at 0x" << addr;
  throw ToolError(Err::UnknownOpcode, os.str());
}

}  // namespace

Instruction decode(uint32_t word, uint32_t address) {
  Instruction inst;
  inst.address = address;
  uint32_t op = word >> 26;
  uint32_t rs = (word >> 21) & 31, rt = (word >> 16) & 31;
  uint32_t rd = (word >> 11) & 31, sh = (word >> 6) & 31;
  uint32_t funct = word & 63;

  if (op == OP_SPECIAL) {
    if (word == 0) {
      inst.mn = Mnemonic::NOP;
      return inst;
    }
    for (const auto& r : kRFuncts) {
      if (r.funct != funct) continue;
      inst.mn = r.mn;
      if (r.mn == Mnemonic::SYSCALL) {
        if ((word >> 6) & 0xFFFFF) unknown(word, address);  // code field
        return inst;
      }
      if (r.mn == Mnemonic::JR) {
        if (rt || rd || sh) unknown(word, address);
        inst.rs = rs;
        return inst;
      }
      if (is_shift_imm(r.mn)) {
        if (rs) unknown(word, address);
        inst.rd = rd; inst.rt = rt; inst.shamt = sh;
        return inst;
      }
      if (sh) unknown(word, address);  // canonical zero shamt
      inst.rd = rd; inst.rs = rs; inst.rt = rt;
      if (is_shift_var(r.mn)) {
        // shift amount comes from rs; keep field placement standard
      }
      return inst;
    }
    unknown(word, address);
  }
  if (op == OP_SPECIAL2) {
    if (funct == 0x02 && sh == 0) {
      inst.mn = Mnemonic::MUL;
      inst.rd = rd; inst.rs = rs; inst.rt = rt;
      return inst;
    }
    unknown(word, address);
  }
  if (op == 0x02 || op == 0x03) {
    inst.mn = op == 0x02 ? Mnemonic::J : Mnemonic::JAL;
    inst.target = word & 0x03FFFFFF;
    return inst;
  }
  for (const auto& i : kIOps) {
    if (i.op != op) continue;
    inst.mn = i.mn;
    inst.rs = rs; inst.rt = rt;
    inst.imm = static_cast<int16_t>(word & 0xFFFF);
    if (i.mn == Mnemonic::LUI && rs) unknown(word, address);
    if ((i.mn == Mnemonic::BLEZ || i.mn == Mnemonic::BGTZ) && rt)
      unknown(word, address);
    return inst;
  }
  unknown(word, address);
}

uint32_t encode(const Instruction& inst) {
  auto check = [&](uint32_t v, uint32_t max, const char* what) {
    if (v > max)
      throw ToolError(Err::FieldOutOfRange,
                      std::string(what) + " in " + mnemonic_name(inst.mn));
  };
  check(inst.rd, 31, "rd");
  check(inst.rs, 31, "rs");
  check(inst.rt, 31, "rt");
  check(inst.shamt, 31, "shamt");

  auto rfield = [&](uint32_t funct) {
    return (uint32_t(inst.rs) << 21) | (uint32_t(inst.rt) << 16) |
           (uint32_t(inst.rd) << 11) | (uint32_t(inst.shamt) << 6) | funct;
  };
  auto ifield = [&](uint32_t op) {
    return (op << 26) | (uint32_t(inst.rs) << 21) | (uint32_t(inst.rt) << 16) |
           (uint32_t(inst.imm) & 0xFFFF);
  };

  switch (inst.mn) {
    case Mnemonic::NOP:
      return 0;
    case Mnemonic::SYSCALL:
      return 0x0C;
    case Mnemonic::JR:
      return uint32_t(inst.rs) << 21 | 0x08;
    case Mnemonic::MUL:
      return (OP_SPECIAL2 << 26) | rfield(0x02);
    case Mnemonic::J:
      check(inst.target, 0x03FFFFFF, "target");
      return (0x02u << 26) | inst.target;
    case Mnemonic::JAL:
      check(inst.target, 0x03FFFFFF, "target");
      return (0x03u << 26) | inst.target;
    default:
      break;
  }
  for (const auto& r : kRFuncts)
    if (r.mn == inst.mn) return rfield(r.funct);
  for (const auto& i : kIOps)
    if (i.mn == inst.mn) return ifield(i.op);
  throw ToolError(Err::FieldOutOfRange, "unencodable instruction");
}

bool is_branch(Mnemonic m) {
  return m == Mnemonic::BEQ || m == Mnemonic::BNE || m == Mnemonic::BLEZ ||
         m == Mnemonic::BGTZ;
}

bool is_control_transfer(Mnemonic m) {
  return is_branch(m) || m == Mnemonic::J || m == Mnemonic::JAL ||
         m == Mnemonic::JR;
}

uint32_t transfer_target(const Instruction& inst) {
  if (is_branch(inst.mn))
    return inst.address + 4 + (int32_t(inst.imm) << 2);
  if (inst.mn == Mnemonic::J || inst.mn == Mnemonic::JAL)
    return (inst.address & 0xF0000000u) | (inst.target << 2);
  return 0;
}

bool in_text(const ProgramImage& image, uint32_t addr) {
  return addr >= image.text_base &&
         addr < image.text_base + 4 * image.text.size();
}

uint32_t fetch_word(const ProgramImage& image, uint32_t addr) {
  if (addr % 4)
    throw ToolError(Err::UnalignedAccess, "fetch at 0x" + std::to_string(addr));
  if (!in_text(image, addr))
    throw ToolError(Err::PcOutOfRange, "fetch outside text");
  return image.text[(addr - image.text_base) / 4];
}

// ---------------------------------------------------------------------------
// Assembler
// ---------------------------------------------------------------------------

namespace {

struct Tokenized {
  std::string label;       // without ':'
  std::string op;          // mnemonic or directive (lowercased)
  std::vector<std::string> args;
};

[[noreturn]] void syntax(int line, const std::string& msg) {
  throw ToolError(Err::SyntaxError, "line " + std::to_string(line) + ": " + msg);
}

Tokenized tokenize_line(std::string s, int lineno) {
  Tokenized t;
  if (auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
  auto trim = [](std::string& x) {
    size_t a = x.find_first_not_of(" \t\r");
    size_t b = x.find_last_not_of(" \t\r");
    x = a == std::string::npos ? "" : x.substr(a, b - a + 1);
  };
  trim(s);
  if (auto colon = s.find(':'); colon != std::string::npos) {
    t.label = s.substr(0, colon);
    trim(t.label);
    if (t.label.empty()) syntax(lineno, "empty label");
    for (char c : t.label)
      if (!std::isalnum(uint8_t(c)) && c != '_') syntax(lineno, "bad label");
    s.erase(0, colon + 1);
    trim(s);
  }
  if (s.empty()) return t;
  size_t sp = s.find_first_of(" \t");
  t.op = s.substr(0, sp);
  std::transform(t.op.begin(), t.op.end(), t.op.begin(), ::tolower);
  if (sp != std::string::npos) {
    std::string rest = s.substr(sp + 1);
    std::string cur;
    for (char c : rest) {
      if (c == ',') {
        t.args.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    t.args.push_back(cur);
    for (auto& a : t.args) {
      trim(a);
      if (a.empty()) syntax(lineno, "empty operand");
    }
  }
  return t;
}

uint8_t parse_reg(const std::string& s, int line) {
  if (s.size() < 2 || s[0] != '$') syntax(line, "expected register, got '" + s + "'");
  int v = 0;
  for (size_t i = 1; i < s.size(); i++) {
    if (!std::isdigit(uint8_t(s[i]))) syntax(line, "bad register '" + s + "'");
    v = v * 10 + (s[i] - '0');
  }
  if (v > 31) syntax(line, "register out of range '" + s + "'");
  return uint8_t(v);
}

// Immediates: decimal (optionally negative), 0x hex, or a label name
// resolved to its address.
int64_t parse_imm(const std::string& s, const std::map<std::string, uint32_t>& syms,
                  int line, bool second_pass) {
  if (s.empty()) syntax(line, "empty immediate");
  bool neg = s[0] == '-';
  std::string body = neg ? s.substr(1) : s;
  auto all = [&](auto pred) {
    return !body.empty() && std::all_of(body.begin(), body.end(), pred);
  };
  if (body.rfind("0x", 0) == 0 || body.rfind("0X", 0) == 0) {
    int64_t v = 0;
    for (size_t i = 2; i < body.size(); i++) {
      if (!std::isxdigit(uint8_t(body[i]))) syntax(line, "bad hex '" + s + "'");
      v = v * 16 + (std::isdigit(uint8_t(body[i]))
                        ? body[i] - '0'
                        : std::tolower(body[i]) - 'a' + 10);
    }
    return neg ? -v : v;
  }
  if (all([](char c) { return std::isdigit(uint8_t(c)); })) {
    int64_t v = std::stoll(body);
    return neg ? -v : v;
  }
  if (neg) syntax(line, "bad immediate '" + s + "'");
  if (!second_pass) return 0;  // label value unknown in pass 1
  auto it = syms.find(body);
  if (it == syms.end())
    throw ToolError(Err::UndefinedLabel, "line " + std::to_string(line) + ": " + body);
  return it->second;
}

// "off($r)" memory operand.
void parse_mem(const std::string& s, int line,
               const std::map<std::string, uint32_t>& syms, bool second_pass,
               int64_t& off, uint8_t& base) {
  auto lp = s.find('(');
  auto rp = s.find(')');
  if (lp == std::string::npos || rp == std::string::npos || rp < lp ||
      rp != s.size() - 1)
    syntax(line, "expected off($reg), got '" + s + "'");
  std::string offs = s.substr(0, lp);
  off = offs.empty() ? 0 : parse_imm(offs, syms, line, second_pass);
  base = parse_reg(s.substr(lp + 1, rp - lp - 1), line);
}

const std::map<std::string, Mnemonic>& mnemonic_table() {
  static const std::map<std::string, Mnemonic> t = [] {
    std::map<std::string, Mnemonic> m;
    for (int i = 0; i <= int(Mnemonic::NOP); i++)
      m[mnemonic_name(Mnemonic(i))] = Mnemonic(i);
    return m;
  }();
  return t;
}

}  // namespace

ProgramImage assemble(const std::string& source) {
  ProgramImage image;
  image.text_base = 0;
  image.data_base = 0;

  struct Line {
    Tokenized tok;
    int lineno;
  };
  std::vector<Line> lines;
  {
    std::istringstream in(source);
    std::string raw;
    int n = 0;
    while (std::getline(in, raw)) lines.push_back({tokenize_line(raw, ++n), n});
  }

  std::map<std::string, uint32_t> syms;
  std::string entry_label;

  // Pass over both passes with the same walk so the address assignment
  // logic cannot diverge between them.
  for (int pass = 0; pass < 2; pass++) {
    bool in_data = false;
    bool text_base_set = false, data_base_set = false;
    uint32_t text_pc = image.text_base;
    uint32_t data_pc = image.data_base;
    if (pass == 1) {
      image.text.clear();
      image.data.clear();
    }
    for (const auto& ln : lines) {
      const Tokenized& t = ln.tok;
      int line = ln.lineno;
      if (!t.label.empty()) {
        uint32_t here = in_data ? data_pc : text_pc;
        if (pass == 0) {
          if (syms.count(t.label))
            throw ToolError(Err::DuplicateLabel,
                            "line " + std::to_string(line) + ": " + t.label);
          syms[t.label] = here;
        }
      }
      if (t.op.empty()) continue;

      if (t.op == ".text" || t.op == ".data") {
        if (t.args.size() != 1) syntax(line, t.op + " needs an address");
        uint32_t addr = uint32_t(parse_imm(t.args[0], syms, line, false));
        if (t.op == ".text") {
          if (text_base_set) syntax(line, "multiple .text directives");
          text_base_set = true;
          image.text_base = text_pc = addr;
          if (addr % 4) syntax(line, ".text address not word-aligned");
          in_data = false;
        } else {
          if (data_base_set) syntax(line, "multiple .data directives");
          data_base_set = true;
          image.data_base = data_pc = addr;
          in_data = true;
        }
        continue;
      }
      if (t.op == ".entry") {
        if (t.args.size() != 1) syntax(line, ".entry needs a label");
        entry_label = t.args[0];
        continue;
      }
      if (t.op == ".word" || t.op == ".byte") {
        if (!in_data) syntax(line, t.op + " outside .data");
        for (const auto& a : t.args) {
          int64_t v = parse_imm(a, syms, line, pass == 1);
          if (t.op == ".word") {
            if (pass == 1)
              for (int i = 0; i < 4; i++)
                image.data.push_back(uint8_t((uint64_t(v) >> (8 * i)) & 0xFF));
            data_pc += 4;
          } else {
            if (v < -128 || v > 255) syntax(line, "byte out of range");
            if (pass == 1) image.data.push_back(uint8_t(v & 0xFF));
            data_pc += 1;
          }
        }
        continue;
      }
      if (t.op[0] == '.') syntax(line, "unknown directive " + t.op);

      if (in_data) syntax(line, "instruction in .data section");
      auto mit = mnemonic_table().find(t.op);
      if (mit == mnemonic_table().end())
        syntax(line, "unknown mnemonic '" + t.op + "'");
      Mnemonic mn = mit->second;

      if (pass == 1) {
        Instruction inst;
        inst.mn = mn;
        inst.address = text_pc;
        auto want = [&](size_t n) {
          if (t.args.size() != n)
            syntax(line, std::string(mnemonic_name(mn)) + " expects " +
                             std::to_string(n) + " operands");
        };
        auto imm16 = [&](int64_t v, bool zext) {
          if (zext ? (v < 0 || v > 0xFFFF) : (v < -32768 || v > 32767))
            syntax(line, "immediate out of range");
          return int16_t(uint16_t(v & 0xFFFF));
        };
        switch (mn) {
          case Mnemonic::NOP:
          case Mnemonic::SYSCALL:
            want(0);
            break;
          case Mnemonic::ADD: case Mnemonic::ADDU: case Mnemonic::SUB:
          case Mnemonic::SUBU: case Mnemonic::AND: case Mnemonic::OR:
          case Mnemonic::XOR: case Mnemonic::NOR: case Mnemonic::SLT:
          case Mnemonic::SLTU: case Mnemonic::MUL:
            want(3);
            inst.rd = parse_reg(t.args[0], line);
            inst.rs = parse_reg(t.args[1], line);
            inst.rt = parse_reg(t.args[2], line);
            break;
          case Mnemonic::SLL: case Mnemonic::SRL: case Mnemonic::SRA: {
            want(3);
            inst.rd = parse_reg(t.args[0], line);
            inst.rt = parse_reg(t.args[1], line);
            int64_t sh = parse_imm(t.args[2], syms, line, true);
            if (sh < 0 || sh > 31) syntax(line, "shift amount out of range");
            inst.shamt = uint8_t(sh);
            break;
          }
          case Mnemonic::SLLV: case Mnemonic::SRLV: case Mnemonic::SRAV:
            want(3);
            inst.rd = parse_reg(t.args[0], line);
            inst.rt = parse_reg(t.args[1], line);
            inst.rs = parse_reg(t.args[2], line);
            break;
          case Mnemonic::ADDI: case Mnemonic::ADDIU: case Mnemonic::SLTI:
            want(3);
            inst.rt = parse_reg(t.args[0], line);
            inst.rs = parse_reg(t.args[1], line);
            inst.imm = imm16(parse_imm(t.args[2], syms, line, true), false);
            break;
          case Mnemonic::ANDI: case Mnemonic::ORI: case Mnemonic::XORI:
            want(3);
            inst.rt = parse_reg(t.args[0], line);
            inst.rs = parse_reg(t.args[1], line);
            inst.imm = imm16(parse_imm(t.args[2], syms, line, true), true);
            break;
          case Mnemonic::LUI:
            want(2);
            inst.rt = parse_reg(t.args[0], line);
            inst.imm = imm16(parse_imm(t.args[1], syms, line, true), true);
            break;
          case Mnemonic::LW: case Mnemonic::SW: case Mnemonic::LB:
          case Mnemonic::LBU: case Mnemonic::SB: {
            want(2);
            inst.rt = parse_reg(t.args[0], line);
            int64_t off;
            uint8_t base;
            parse_mem(t.args[1], line, syms, true, off, base);
            inst.imm = imm16(off, false);
            inst.rs = base;
            break;
          }
          case Mnemonic::BEQ: case Mnemonic::BNE: {
            want(3);
            inst.rs = parse_reg(t.args[0], line);
            inst.rt = parse_reg(t.args[1], line);
            int64_t tgt = parse_imm(t.args[2], syms, line, true);
            int64_t disp = (tgt - int64_t(text_pc) - 4) / 4;
            if ((tgt - int64_t(text_pc) - 4) % 4)
              syntax(line, "branch target not word-aligned");
            if (disp < -32768 || disp > 32767)
              throw ToolError(Err::BranchOutOfRange,
                              "line " + std::to_string(line));
            inst.imm = int16_t(disp);
            break;
          }
          case Mnemonic::BLEZ: case Mnemonic::BGTZ: {
            want(2);
            inst.rs = parse_reg(t.args[0], line);
            int64_t tgt = parse_imm(t.args[1], syms, line, true);
            int64_t disp = (tgt - int64_t(text_pc) - 4) / 4;
            if (disp < -32768 || disp > 32767)
              throw ToolError(Err::BranchOutOfRange,
                              "line " + std::to_string(line));
            inst.imm = int16_t(disp);
            break;
          }
          case Mnemonic::J: case Mnemonic::JAL: {
            want(1);
            int64_t tgt = parse_imm(t.args[0], syms, line, true);
            if (tgt % 4) syntax(line, "jump target not word-aligned");
            inst.target = (uint32_t(tgt) >> 2) & 0x03FFFFFF;
            break;
          }
          case Mnemonic::JR:
            want(1);
            inst.rs = parse_reg(t.args[0], line);
            break;
        }
        image.text.push_back(encode(inst));
      }
      text_pc += 4;
    }
  }

  if (image.text.empty())
    throw ToolError(Err::UndefinedEntry, "no instructions assembled");
  if (!entry_label.empty()) {
    auto it = syms.find(entry_label);
    if (it == syms.end())
      throw ToolError(Err::UndefinedLabel, ".entry " + entry_label);
    image.entry = it->second;
  } else {
    image.entry = image.text_base;
  }
  if (!in_text(image, image.entry) || image.entry % 4)
    throw ToolError(Err::UndefinedEntry, "entry outside text");
  image.symbols = std::move(syms);
  return image;
}

// ---------------------------------------------------------------------------
// Container
// ---------------------------------------------------------------------------

namespace {
void put32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; i++) out.push_back(uint8_t(v >> (8 * i)));
}
uint32_t get32(const std::vector<uint8_t>& in, size_t off) {
  if (off + 4 > in.size()) throw ToolError(Err::TruncatedImage, "short read");
  return uint32_t(in[off]) | uint32_t(in[off + 1]) << 8 |
         uint32_t(in[off + 2]) << 16 | uint32_t(in[off + 3]) << 24;
}
}  // namespace

std::vector<uint8_t> save_image(const ProgramImage& image) {
  std::vector<uint8_t> out;
  out.insert(out.end(), {'M', 'B', '0', '1'});
  put32(out, 1);
  put32(out, image.entry);
  put32(out, image.text_base);
  put32(out, uint32_t(image.text.size() * 4));
  put32(out, image.data_base);
  put32(out, uint32_t(image.data.size()));
  for (uint32_t w : image.text) put32(out, w);
  out.insert(out.end(), image.data.begin(), image.data.end());
  return out;
}

ProgramImage load_image(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4 || bytes[0] != 'M' || bytes[1] != 'B' ||
      bytes[2] != '0' || bytes[3] != '1')
    throw ToolError(Err::BadMagic, "not an MB01 container");
  uint32_t version = get32(bytes, 4);
  if (version != 1)
    throw ToolError(Err::VersionMismatch, "version " + std::to_string(version));
  ProgramImage image;
  image.entry = get32(bytes, 8);
  image.text_base = get32(bytes, 12);
  uint32_t text_size = get32(bytes, 16);
  image.data_base = get32(bytes, 20);
  uint32_t data_size = get32(bytes, 24);
  if (text_size % 4)
    throw ToolError(Err::TruncatedImage, "text size not a multiple of 4");
  if (28 + size_t(text_size) + data_size != bytes.size())
    throw ToolError(Err::TruncatedImage, "payload size mismatch");
  for (uint32_t off = 0; off < text_size; off += 4)
    image.text.push_back(get32(bytes, 28 + off));
  image.data.assign(bytes.begin() + 28 + text_size, bytes.end());
  if (!in_text(image, image.entry) || image.entry % 4)
    throw ToolError(Err::TruncatedImage, "entry outside text");
  return image;
}

ProgramImage load_image_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ToolError(Err::IoError, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return load_image(bytes);
}

void save_image_file(const ProgramImage& image, const std::string& path) {
  auto bytes = save_image(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ToolError(Err::IoError, "cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace binpart
