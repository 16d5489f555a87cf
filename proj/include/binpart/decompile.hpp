#pragma once
#include <cstdint>
#include <map>
#include <vector>

#include "binpart/cdfg.hpp"
#include "binpart/isa.hpp"
#include "binpart/sim.hpp"

namespace binpart {

// Linear, register-symbolic IR for one procedure: ops reference registers
// through ValueRef entry-register symbols and define registers via
// IrOp::def_reg. Produced per machine instruction (1-2 ops each).
struct LinearIr {
  uint32_t entry_addr = 0;
  std::vector<Instruction> insns;  // decoded, in address order
  std::vector<IrOp> ops;           // origin links each op to its instruction
};

// Binary parsing for one procedure: reachability from entry through
// branches and jumps (JAL targets become separate procedures).
LinearIr parse_binary(const ProgramImage& image, uint32_t entry_addr);

// Leader analysis + edges over a procedure's linear IR. Raises IndirectJump
// for JR through any register other than $31.
ProcCdfg build_cfg(const LinearIr& ir, const ProgramImage& image);

struct DomTree {
  std::vector<int> idom;   // idom[entry] == entry; -1 for unreachable
  std::vector<int> rpo;    // reverse postorder of reachable blocks
  bool dominates(int a, int b) const;
};

DomTree compute_dominators(const ProcCdfg& proc);
// Post-dominators over the reverse CFG with a virtual exit; idom[v] == -2
// marks the virtual exit as immediate post-dominator.
DomTree compute_post_dominators(const ProcCdfg& proc);

StructureTree recover_structures(const ProcCdfg& proc, const DomTree& dom);

// SSA-style renaming: phi insertion at join blocks for live registers,
// def-use rewiring, liveness annotation, memory-order edges.
void build_cdfg(ProcCdfg& proc, const std::map<uint32_t, ProcCdfg>* callees);

// Full pipeline over an image: procedure discovery (entry + JAL targets),
// per-procedure decompilation, bottom-up call summaries.
CdfgModule decompile(const ProgramImage& image);

// Recompute structure + liveness after a pass mutates blocks/edges.
void rebuild_structure(ProcCdfg& proc);

// ---------------------------------------------------------------------------
// CDFG reference executor (the stage-equivalence oracle)
// ---------------------------------------------------------------------------

ExecutionResult execute_cdfg(const CdfgModule& module, const ProgramImage& image,
                             const std::vector<uint32_t>& inputs,
                             uint64_t max_steps);

// Block-at-a-time CDFG interpreter. Subclasses may intercept block entry
// (hardware offload during partitioned execution).
class CdfgExecutor {
 public:
  ExecutionResult run(const CdfgModule& module, const ProgramImage& image,
                      const std::vector<uint32_t>& inputs, uint64_t max_steps);
  virtual ~CdfgExecutor() = default;

  // Truncate every value to its annotated width (width-soundness oracle).
  void set_mask_widths(bool on) { mask_widths_ = on; }

  struct Frame {
    const ProcCdfg* proc = nullptr;
    std::vector<uint32_t> values;  // per node id
    std::map<int, std::array<uint32_t, 32>> call_values;
    std::array<uint32_t, 32> regs_in{};

    uint32_t eval(const ValueRef& r) const;
  };

  uint8_t load_byte(uint32_t addr) const;
  void store_byte(uint32_t addr, uint8_t v);
  uint32_t load_mem(uint32_t addr, MemAccess acc) const;
  void store_mem(uint32_t addr, uint32_t v, MemAccess acc);
  std::unordered_map<uint32_t, uint8_t>& memory() { return mem_; }

 protected:
  // Called before executing `block` (entered from `from`, -1 at procedure
  // entry). May execute a region itself and set `block` to the block where
  // interpretation should resume; returns true in that case, after setting
  // hook_exit_ to the in-region block whose out-edge was taken.
  virtual bool on_block_entry(Frame& frame, int from, int& block) {
    (void)frame; (void)from; (void)block;
    return false;
  }

  int hook_exit_ = -1;

  virtual void on_halt() {}

  std::array<uint32_t, 32> exec_proc(const ProcCdfg& proc,
                                     const std::array<uint32_t, 32>& regs_in);

  const CdfgModule* module_ = nullptr;
  std::unordered_map<uint32_t, uint8_t> mem_;
  std::deque<uint32_t> inputs_;
  std::vector<uint32_t> outputs_;
  uint64_t steps_ = 0;
  uint64_t max_steps_ = 0;
  bool halted_ = false;
  bool mask_widths_ = false;
};

}  // namespace binpart
