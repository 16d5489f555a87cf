#include "binpart/sim.hpp"

#include <fstream>
#include <sstream>

namespace binpart {

uint8_t MachineState::load_byte(uint32_t addr) const {
  auto it = mem.find(addr);
  return it == mem.end() ? 0 : it->second;
}

void MachineState::store_byte(uint32_t addr, uint8_t v) { mem[addr] = v; }

uint32_t MachineState::load_word(uint32_t addr) const {
  if (addr % 4)
    throw ToolError(Err::UnalignedAccess, "load at 0x" + std::to_string(addr));
  return uint32_t(load_byte(addr)) | uint32_t(load_byte(addr + 1)) << 8 |
         uint32_t(load_byte(addr + 2)) << 16 |
         uint32_t(load_byte(addr + 3)) << 24;
}

void MachineState::store_word(uint32_t addr, uint32_t v) {
  if (addr % 4)
    throw ToolError(Err::UnalignedAccess, "store at 0x" + std::to_string(addr));
  for (int i = 0; i < 4; i++) store_byte(addr + i, uint8_t(v >> (8 * i)));
}

MachineState initial_state(const ProgramImage& image,
                           const std::vector<uint32_t>& inputs) {
  MachineState s;
  s.pc = image.entry;
  for (size_t i = 0; i < image.text.size(); i++) {
    uint32_t w = image.text[i];
    for (int b = 0; b < 4; b++)
      s.mem[image.text_base + uint32_t(i * 4 + b)] = uint8_t(w >> (8 * b));
  }
  for (size_t i = 0; i < image.data.size(); i++)
    s.mem[image.data_base + uint32_t(i)] = image.data[i];
  s.input_queue.assign(inputs.begin(), inputs.end());
  return s;
}

void step(MachineState& s, const ProgramImage& image,
          const CycleCostTable* costs, uint64_t* cycles) {
  Instruction i = decode(fetch_word(image, s.pc), s.pc);
  if (costs && cycles) *cycles += costs->cost(i.mn);

  auto rs = [&] { return s.regs[i.rs]; };
  auto rt = [&] { return s.regs[i.rt]; };
  auto wr = [&](uint8_t r, uint32_t v) {
    if (r) s.regs[r] = v;
  };
  uint32_t next = s.pc + 4;
  int32_t simm = int32_t(i.imm);
  uint32_t zimm = uint16_t(i.imm);

  switch (i.mn) {
    case Mnemonic::NOP: break;
    case Mnemonic::ADD: case Mnemonic::ADDU: wr(i.rd, rs() + rt()); break;
    case Mnemonic::SUB: case Mnemonic::SUBU: wr(i.rd, rs() - rt()); break;
    case Mnemonic::AND: wr(i.rd, rs() & rt()); break;
    case Mnemonic::OR: wr(i.rd, rs() | rt()); break;
    case Mnemonic::XOR: wr(i.rd, rs() ^ rt()); break;
    case Mnemonic::NOR: wr(i.rd, ~(rs() | rt())); break;
    case Mnemonic::SLT: wr(i.rd, int32_t(rs()) < int32_t(rt()) ? 1 : 0); break;
    case Mnemonic::SLTU: wr(i.rd, rs() < rt() ? 1 : 0); break;
    case Mnemonic::MUL: wr(i.rd, rs() * rt()); break;
    case Mnemonic::SLL: wr(i.rd, rt() << i.shamt); break;
    case Mnemonic::SRL: wr(i.rd, rt() >> i.shamt); break;
    case Mnemonic::SRA: wr(i.rd, uint32_t(int32_t(rt()) >> i.shamt)); break;
    case Mnemonic::SLLV: wr(i.rd, rt() << (rs() & 31)); break;
    case Mnemonic::SRLV: wr(i.rd, rt() >> (rs() & 31)); break;
    case Mnemonic::SRAV: wr(i.rd, uint32_t(int32_t(rt()) >> (rs() & 31))); break;
    case Mnemonic::ADDI: case Mnemonic::ADDIU:
      wr(i.rt, rs() + uint32_t(simm));
      break;
    case Mnemonic::SLTI: wr(i.rt, int32_t(rs()) < simm ? 1 : 0); break;
    case Mnemonic::ANDI: wr(i.rt, rs() & zimm); break;
    case Mnemonic::ORI: wr(i.rt, rs() | zimm); break;
    case Mnemonic::XORI: wr(i.rt, rs() ^ zimm); break;
    case Mnemonic::LUI: wr(i.rt, zimm << 16); break;
    case Mnemonic::LW: wr(i.rt, s.load_word(rs() + uint32_t(simm))); break;
    case Mnemonic::SW: s.store_word(rs() + uint32_t(simm), rt()); break;
    case Mnemonic::LB:
      wr(i.rt, uint32_t(int32_t(int8_t(s.load_byte(rs() + uint32_t(simm))))));
      break;
    case Mnemonic::LBU: wr(i.rt, s.load_byte(rs() + uint32_t(simm))); break;
    case Mnemonic::SB: s.store_byte(rs() + uint32_t(simm), uint8_t(rt())); break;
    case Mnemonic::BEQ: if (rs() == rt()) next = transfer_target(i); break;
    case Mnemonic::BNE: if (rs() != rt()) next = transfer_target(i); break;
    case Mnemonic::BLEZ: if (int32_t(rs()) <= 0) next = transfer_target(i); break;
    case Mnemonic::BGTZ: if (int32_t(rs()) > 0) next = transfer_target(i); break;
    case Mnemonic::J: next = transfer_target(i); break;
    case Mnemonic::JAL:
      s.regs[31] = s.pc + 4;
      next = transfer_target(i);
      break;
    case Mnemonic::JR: next = rs(); break;
    case Mnemonic::SYSCALL:
      switch (s.regs[2]) {
        case 1: s.output_log.push_back(s.regs[4]); break;
        case 5:
          if (s.input_queue.empty())
            throw ToolError(Err::InputExhausted, "syscall read");
          s.regs[2] = s.input_queue.front();
          s.input_queue.pop_front();
          break;
        case 10: s.halted = true; break;
        default:
          throw ToolError(Err::BadSyscall,
                          "service " + std::to_string(s.regs[2]));
      }
      break;
  }
  s.regs[0] = 0;
  if (!s.halted) s.pc = next;
}

namespace {

template <typename OnStep>
ExecutionResult run_loop(const ProgramImage& image,
                         const std::vector<uint32_t>& inputs,
                         uint64_t max_steps, const CycleCostTable& costs,
                         OnStep&& on_step) {
  MachineState s = initial_state(image, inputs);
  ExecutionResult r;
  try {
    while (!s.halted) {
      if (r.steps >= max_steps) {
        r.exit_reason = ExitReason::MaxStepsExceeded;
        break;
      }
      uint32_t at = s.pc;
      step(s, image, &costs, &r.total_cycles);
      r.steps++;
      on_step(at, s);
    }
  } catch (const ToolError& e) {
    r.exit_reason = ExitReason::Fault;
    r.fault = e.what();
  }
  r.outputs = s.output_log;
  return r;
}

}  // namespace

ExecutionResult run(const ProgramImage& image,
                    const std::vector<uint32_t>& inputs, uint64_t max_steps,
                    const CycleCostTable& costs) {
  return run_loop(image, inputs, max_steps, costs, [](uint32_t, const MachineState&) {});
}

std::set<uint32_t> block_leaders(const ProgramImage& image) {
  std::set<uint32_t> leaders;
  leaders.insert(image.entry);
  for (size_t i = 0; i < image.text.size(); i++) {
    uint32_t addr = image.text_base + uint32_t(i * 4);
    Instruction inst;
    try {
      inst = decode(image.text[i], addr);
    } catch (const ToolError&) {
      continue;  // data-in-text; never executed by well-formed programs
    }
    if (!is_control_transfer(inst.mn)) continue;
    if (inst.mn != Mnemonic::JR) {
      uint32_t tgt = transfer_target(inst);
      if (in_text(image, tgt)) leaders.insert(tgt);
    }
    if (in_text(image, addr + 4)) leaders.insert(addr + 4);
  }
  return leaders;
}

std::pair<ExecutionResult, Profile> profile_run(const ProgramImage& image,
                                                const std::vector<uint32_t>& inputs,
                                                uint64_t max_steps,
                                                const CycleCostTable& costs) {
  std::set<uint32_t> leaders = block_leaders(image);
  auto block_of = [&](uint32_t addr) {
    auto it = leaders.upper_bound(addr);
    return *std::prev(it);
  };

  (void)block_of;
  Profile prof;
  uint32_t cur_block = block_of(image.entry);
  prof.block_counts[cur_block] = 1;
  ExecutionResult r = run_loop(
      image, inputs, max_steps, costs, [&](uint32_t at, const MachineState& s) {
        prof.instr_cycles[at] += costs.cost(decode(fetch_word(image, at), at).mn);
        if (!s.halted && in_text(image, s.pc) && leaders.count(s.pc)) {
          prof.edge_counts[{cur_block, s.pc}]++;
          prof.block_counts[s.pc]++;
          cur_block = s.pc;
        }
      });
  for (const auto& [a, c] : prof.instr_cycles) prof.total_cycles += c;
  return {r, prof};
}

void attribute_block_cycles(Profile& p, const ProgramImage& image,
                            const CycleCostTable& costs) {
  if (!p.instr_cycles.empty()) return;
  auto leaders = block_leaders(image);
  uint64_t count = 0;
  for (size_t i = 0; i < image.text.size(); i++) {
    uint32_t addr = image.text_base + uint32_t(4 * i);
    if (leaders.count(addr)) {
      auto it = p.block_counts.find(addr);
      count = it == p.block_counts.end() ? 0 : it->second;
    }
    if (count)
      p.instr_cycles[addr] =
          count * costs.cost(decode(image.text[i], addr).mn);
  }
}

std::string profile_to_text(const Profile& p) {
  std::ostringstream os;
  for (const auto& [addr, n] : p.block_counts)
    os << "block " << std::hex << addr << std::dec << " " << n << "\n";
  for (const auto& [e, n] : p.edge_counts)
    os << "edge " << std::hex << e.first << " " << e.second << std::dec << " "
       << n << "\n";
  os << "cycles " << p.total_cycles << "\n";
  return os.str();
}

Profile profile_from_text(const std::string& text) {
  Profile p;
  std::istringstream in(text);
  std::string kind;
  while (in >> kind) {
    if (kind == "block") {
      uint32_t a;
      uint64_t n;
      in >> std::hex >> a >> std::dec >> n;
      p.block_counts[a] = n;
    } else if (kind == "edge") {
      uint32_t a, b;
      uint64_t n;
      in >> std::hex >> a >> b >> std::dec >> n;
      p.edge_counts[{a, b}] = n;
    } else if (kind == "cycles") {
      in >> p.total_cycles;
    } else {
      throw ToolError(Err::BadConfig, "bad profile record '" + kind + "'");
    }
  }
  return p;
}

std::vector<uint32_t> read_inputs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ToolError(Err::IoError, "cannot open " + path);
  std::vector<uint32_t> v;
  long long x;
  while (in >> x) v.push_back(uint32_t(x));
  return v;
}

}  // namespace binpart
