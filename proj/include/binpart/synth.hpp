#pragma once
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "binpart/decompile.hpp"
#include "binpart/partition.hpp"

namespace binpart {

// Functional-unit inventory. Every class has latency 1 fpga cycle except
// the multiplier.
struct ResourceSet {
  int adders = 2;
  int multipliers = 1;
  int shifters = 1;
  int logic_units = 2;
  int comparators = 1;
  int memory_ports = 1;
  int mul_latency = 2;
};

enum class UnitClass { Adder, Multiplier, Shifter, Logic, Comparator,
                       MemoryPort, None };
const char* unit_class_name(UnitClass c);
UnitClass unit_class_of(OpKind kind);
int unit_count(const ResourceSet& r, UnitClass c);
int unit_latency(const ResourceSet& r, UnitClass c);

// A region lifted out of its procedure for synthesis. External values become
// numbered input ports (entry register i+1 in the copied proc); control
// edges leaving the region become indexed exits.
struct RegionCdfg {
  ProcCdfg proc;                  // renumbered copy; entry_block is the header
  std::vector<ValueRef> ports;    // original refs, port i == entry_reg(i+1)
  std::map<int, int> node_map;    // original node id -> copied node id
  std::vector<int> live_out;      // copied node ids visible after exit
  std::vector<int> live_out_orig; // matching original node ids
  struct Exit {
    int copy_block = -1;          // copied block the edge leaves from
    EdgeKind kind = EdgeKind::Fallthrough;
    int source_block = -1;        // original block id of copy_block
    int target_block = -1;        // original successor outside the region
  };
  std::vector<Exit> exits;
  std::vector<int> orig_block;    // copied block id -> original block id
};

RegionCdfg extract_region(const ProcCdfg& proc, const std::set<int>& blocks);

struct Schedule {
  struct Slot {
    int step = 0;  // 1-based issue step within the block
    UnitClass cls = UnitClass::None;
    int instance = 0;
  };
  std::map<int, Slot> slots;       // scheduled node -> slot
  std::map<int, int> block_steps;  // block -> control steps (>= 1)

  int total_steps() const;
  // `step <n>: <node-id>@<unit-class>#<instance>` lines, per block
  std::string to_text() const;
};

// Resource-constrained list scheduling, critical-path priority, node-id
// tie-break. Throws NoFeasibleImpl when an op has no unit of its class.
Schedule schedule(const ProcCdfg& proc, const ResourceSet& res);

// Independent validity check of a schedule (dependences, latencies,
// per-step unit usage, memory order). Throws on violation.
void check_schedule(const ProcCdfg& proc, const ResourceSet& res,
                    const Schedule& s);

enum class MulImpl { UseMultiplier, UseShiftAdd };

// Chooses an implementation per multiply (exhaustively for small counts)
// to minimize the scheduled length, preferring the multiplier on ties, and
// rewrites chosen shift/add expansions into the region. Keys are node ids
// before rewriting.
std::map<int, MulImpl> decide_multiplier_impls(RegionCdfg& region,
                                               const ResourceSet& res);

// FSMD binding: one state per (block, step); values that cross a step
// boundary get registers, shared left-edge within a block.
struct RtlDesign {
  std::string name;
  RegionCdfg region;
  Schedule sched;
  ResourceSet resources;
  std::vector<std::pair<int, int>> states;  // (block, step), emission order
  std::map<int, int> reg_of;                // node -> register index
  int reg_count = 0;
};

RtlDesign bind(const RegionCdfg& region, const Schedule& sched,
               const ResourceSet& res, const std::string& name);

inline constexpr uint64_t kHandshakeCycles = 2;

struct RegionRun {
  std::vector<uint32_t> outputs;  // live_out values at exit
  int exit_index = -1;            // index into region.exits
  uint64_t hw_cycles = 0;         // states visited + handshake
};

// Cycle-accurate FSMD interpretation against a shared byte memory.
RegionRun simulate_rtl(const RtlDesign& design,
                       const std::vector<uint32_t>& port_values,
                       std::unordered_map<uint32_t, uint8_t>& memory,
                       uint64_t max_cycles);

std::string emit_vhdl(const RtlDesign& design);

// Well-formedness: balanced constructs, declared signals, reachable states.
// Throws BadConfig with a description on the first violation.
void check_vhdl(const std::string& text);

struct SynthesizedRegion {
  int region_id = -1;
  uint32_t proc_addr = 0;
  int header_block = -1;
  std::set<int> blocks;  // original block ids
  RtlDesign design;
  std::map<int, MulImpl> mul_decisions;
};

SynthesizedRegion synthesize_region(const CdfgModule& module,
                                    const Region& region,
                                    const std::string& name,
                                    const ResourceSet& res = {});

// CDFG executor that offloads synthesized regions to the RTL simulator.
class PartitionedExecutor : public CdfgExecutor {
 public:
  void add_region(const SynthesizedRegion* r) {
    regions_[{r->proc_addr, r->header_block}] = r;
  }
  uint64_t hw_cycles(int region_id) const;
  uint64_t invocations(int region_id) const;
  uint64_t rtl_cycle_cap = 100000000;

 protected:
  bool on_block_entry(Frame& frame, int from, int& block) override;

 private:
  std::map<std::pair<uint32_t, int>, const SynthesizedRegion*> regions_;
  std::map<int, uint64_t> hw_cycles_, invocations_;
};

}  // namespace binpart
