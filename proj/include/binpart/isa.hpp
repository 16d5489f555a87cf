#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "binpart/errors.hpp"

namespace binpart {

// MIPS-I subset, standard encodings, no branch delay slots, $0 hardwired
// to zero. MUL is the MIPS32 SPECIAL2 three-register form (no HI/LO).
enum class Mnemonic {
  ADD, ADDU, SUB, SUBU, AND, OR, XOR, NOR, SLT, SLTU,
  SLL, SRL, SRA, SLLV, SRLV, SRAV, MUL,
  ADDI, ADDIU, SLTI, ANDI, ORI, XORI, LUI,
  LW, SW, LB, LBU, SB,
  BEQ, BNE, BLEZ, BGTZ,
  J, JAL, JR, SYSCALL, NOP,
};

const char* mnemonic_name(Mnemonic m);

struct Instruction {
  Mnemonic mn = Mnemonic::NOP;
  uint8_t rd = 0, rs = 0, rt = 0, shamt = 0;
  int16_t imm = 0;
  uint32_t target = 0;   // 26-bit jump target field
  uint32_t address = 0;  // code address this instruction sits at

  bool operator==(const Instruction& o) const = default;
};

struct ProgramImage {
  uint32_t entry = 0;
  uint32_t text_base = 0;
  uint32_t data_base = 0;
  std::vector<uint32_t> text;  // words
  std::vector<uint8_t> data;   // bytes
  std::map<std::string, uint32_t> symbols;  // assembler-produced, optional
};

Instruction decode(uint32_t word, uint32_t address);
uint32_t encode(const Instruction& inst);

// Two-pass assembler for the grammar documented in the README:
// one instruction or directive per line, registers $0-$31, comments from
// '#', directives .text ADDR, .data ADDR, .word N, .byte N, .entry LABEL,
// labels "name:".
ProgramImage assemble(const std::string& source);

// "MB01" container, little-endian fields.
ProgramImage load_image(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> save_image(const ProgramImage& image);

ProgramImage load_image_file(const std::string& path);
void save_image_file(const ProgramImage& image, const std::string& path);

// Classification helpers shared by the profiler and the decompiler.
bool is_branch(Mnemonic m);             // BEQ/BNE/BLEZ/BGTZ
bool is_control_transfer(Mnemonic m);   // branches, J, JAL, JR
// Absolute target of a branch or J/JAL at inst.address; JR has none.
uint32_t transfer_target(const Instruction& inst);

bool in_text(const ProgramImage& image, uint32_t addr);
uint32_t fetch_word(const ProgramImage& image, uint32_t addr);

}  // namespace binpart
