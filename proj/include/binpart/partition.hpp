#pragma once
#include <set>
#include <string>
#include <vector>

#include "binpart/cdfg.hpp"
#include "binpart/sim.hpp"

namespace binpart {

// Approximate memory footprint of a region: a base symbol plus a byte-offset
// interval. Extracted footprints use base 0 with absolute address intervals;
// `top` is the distinguished symbol that aliases everything.
struct AddrRange {
  uint32_t base = 0;
  int64_t lo = 0, hi = 0;
  bool top = false;

  bool intersects(const AddrRange& o) const {
    if (top || o.top) return true;
    return base == o.base && lo <= o.hi && o.lo <= hi;
  }
};

struct Region {
  enum class Kind { Loop, ProcedureBody, Block };
  int id = -1;
  Kind kind = Kind::Loop;
  uint32_t proc = 0;        // owning procedure entry address
  std::set<int> blocks;     // block ids within that procedure
  uint32_t start_addr = 0;  // lowest member block address (tie-breaks)
  uint64_t cycles = 0;      // profile cycles attributed to member blocks
  uint64_t invocations = 0; // profile entries into the region
  uint64_t est_area = 0;    // equivalent gates
  std::vector<AddrRange> addr_set;
  double suitability = 0.0; // unit-interval hardware suitability
};

const char* region_kind_name(Region::Kind k);

struct PlatformModel {
  double cpu_clock_hz = 200e6;
  double fpga_clock_hz = 100e6;
  uint64_t area_capacity_gates = 30000;
  uint64_t comm_cycles_per_invocation = 100;
  double cpu_active_w = 0.5;
  double fpga_active_w = 0.25;
  double idle_w = 0.05;
};

// `key = value` lines; '#' starts a comment. Unknown keys are BadConfig.
PlatformModel platform_from_text(const std::string& text);
std::string platform_to_text(const PlatformModel& p);

// Per-kind gate weights; estimates are weight * width (multiplier weight
// scales with width squared, shifters with width * ceil(log2 width)).
struct GateTable {
  uint64_t add = 12;
  uint64_t mul = 20;
  uint64_t shift = 8;
  uint64_t logic = 4;
  uint64_t compare = 8;
  uint64_t reg = 8;
  uint64_t mux = 4;
};

uint64_t op_gates(const IrOp& op, const GateTable& table = {});
uint64_t estimate_area(const Region& region, const CdfgModule& module,
                       const GateTable& table = {});

double hardware_suitability(const Region& region, const CdfgModule& module);

// One region per recovered loop (flattened innermost-first into disjoint
// block sets) plus one per remaining procedure body, with cycles, areas,
// footprints and suitability filled in.
std::vector<Region> enumerate_regions(const CdfgModule& module,
                                      const Profile& profile);

// Alias groups: connected components of the pairwise footprint-intersection
// relation. Returns the group index for each region.
std::vector<int> compute_alias_sets(const std::vector<Region>& regions);

enum class SelectTag { Step1Hot, Step2Alias, Step3Greedy };
const char* select_tag_name(SelectTag t);

struct PartitionConfig {
  // Step 3 normally stops at the first region that does not fit; setting
  // this skips it and keeps scanning instead.
  bool skip_and_continue = false;
  double hot_fraction = 0.90;
};

struct PartitionResult {
  std::vector<Region> hw_regions;    // in selection order
  std::vector<SelectTag> rationale;  // parallel to hw_regions
  std::vector<std::pair<uint32_t, int>> sw_blocks;  // (proc, block id)
  uint64_t total_area = 0;
  uint64_t sw_cycles = 0;
  std::vector<std::string> violations;

  // `hw <region-id> <tag> <cycles> <gates>` lines, then `sw-cycles <n>`
  // and `total-gates <n>`.
  std::string to_text() const;
};

PartitionResult partition(const std::vector<Region>& regions,
                          const PlatformModel& platform,
                          const PartitionConfig& config = {});

}  // namespace binpart
