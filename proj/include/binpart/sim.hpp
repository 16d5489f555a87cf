#pragma once
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "binpart/isa.hpp"

namespace binpart {

// Per-instruction cycle costs. The paper-facing defaults: 1 cycle for
// everything, MUL=3, LW/SW=2.
struct CycleCostTable {
  std::map<Mnemonic, uint64_t> costs;
  uint64_t def = 1;
  uint64_t cost(Mnemonic m) const {
    auto it = costs.find(m);
    return it == costs.end() ? def : it->second;
  }
  static CycleCostTable defaults() {
    CycleCostTable t;
    t.costs[Mnemonic::MUL] = 3;
    t.costs[Mnemonic::LW] = 2;
    t.costs[Mnemonic::SW] = 2;
    return t;
  }
};

struct MachineState {
  uint32_t regs[32] = {};
  uint32_t pc = 0;
  std::unordered_map<uint32_t, uint8_t> mem;
  bool halted = false;
  std::vector<uint32_t> output_log;
  std::deque<uint32_t> input_queue;

  uint8_t load_byte(uint32_t addr) const;
  void store_byte(uint32_t addr, uint8_t v);
  uint32_t load_word(uint32_t addr) const;   // UnalignedAccess on addr%4
  void store_word(uint32_t addr, uint32_t v);
};

enum class ExitReason { Halted, MaxStepsExceeded, Fault };

struct ExecutionResult {
  std::vector<uint32_t> outputs;
  uint64_t total_cycles = 0;
  uint64_t steps = 0;
  ExitReason exit_reason = ExitReason::Halted;
  std::string fault;  // set when exit_reason == Fault
};

struct Profile {
  std::map<uint32_t, uint64_t> block_counts;                    // start addr
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> edge_counts;
  std::map<uint32_t, uint64_t> instr_cycles;                    // cumulative
  uint64_t total_cycles = 0;
};

MachineState initial_state(const ProgramImage& image,
                           const std::vector<uint32_t>& inputs);

// Executes one instruction. SYSCALL convention: $2==1 prints $4,
// $2==5 pops the input queue into $2, $2==10 halts.
void step(MachineState& state, const ProgramImage& image,
          const CycleCostTable* costs = nullptr, uint64_t* cycles = nullptr);

ExecutionResult run(const ProgramImage& image,
                    const std::vector<uint32_t>& inputs, uint64_t max_steps,
                    const CycleCostTable& costs = CycleCostTable::defaults());

// Block leaders as the decompiler defines them: entry, transfer targets,
// and successors of control transfers.
std::set<uint32_t> block_leaders(const ProgramImage& image);

std::pair<ExecutionResult, Profile> profile_run(
    const ProgramImage& image, const std::vector<uint32_t>& inputs,
    uint64_t max_steps,
    const CycleCostTable& costs = CycleCostTable::defaults());

// Rebuild per-instruction cycle attribution from block counts; the text
// profile format carries only block/edge counts. No-op when the profile
// already has instruction cycles.
void attribute_block_cycles(Profile& p, const ProgramImage& image,
                            const CycleCostTable& costs =
                                CycleCostTable::defaults());

// Line-oriented profile format: "block <hex> <count>", "edge <hex> <hex>
// <count>", "cycles <decimal>".
std::string profile_to_text(const Profile& p);
Profile profile_from_text(const std::string& text);

std::vector<uint32_t> read_inputs_file(const std::string& path);

}  // namespace binpart
