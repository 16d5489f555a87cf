#pragma once
#include <string>
#include <vector>

#include "binpart/cdfg.hpp"

namespace binpart {

struct PassConfig {
  bool constants = true;
  bool stack = true;
  bool reroll = true;
  bool promote = true;
  bool sizes = true;
  int size_iteration_cap = 64;   // fixpoint sweeps for width analysis
  int reroll_max_factor = 8;     // largest unroll factor undone
  int promote_max_chain = 8;     // largest shift/add tree absorbed
};

struct PassRewrite {
  std::string pass;
  int site = -1;  // node id the rewrite anchored on
  std::string rule;
};

struct PassStageStats {
  std::string pass;
  size_t nodes_before = 0;
  size_t nodes_after = 0;
  int iterations = 0;
};

struct PassReport {
  std::vector<PassRewrite> rewrites;
  std::vector<PassStageStats> stages;
  std::vector<std::string> reroll_rejects;  // human-readable reasons

  void note(const std::string& pass, int site, const std::string& rule) {
    rewrites.push_back({pass, site, rule});
  }
  std::string to_text() const;  // one `rewrite <pass> <site> <rule>` line each
};

// Each pass preserves observable behavior (outputs, halting) under the
// CDFG executor; `changed` return tells the pipeline whether to re-check.
bool propagate_constants(ProcCdfg& proc, PassReport& report);
bool remove_stack_ops(ProcCdfg& proc, PassReport& report);
bool promote_strength(ProcCdfg& proc, PassReport& report,
                      const PassConfig& config);
bool reroll_loops(ProcCdfg& proc, PassReport& report, const PassConfig& config);
void reduce_operator_sizes(ProcCdfg& proc, PassReport& report,
                           const PassConfig& config);

// Canonical signed-digit shift/add decomposition of multiplication by c
// (used when synthesis expands a bare multiply, and by promotion tests).
ShiftAddForm csd_expand(uint32_t c);

// Materialize a shift/add form as CDFG ops at the end of `block`, reading
// the variable from `x`. Returns the root value. (Testing / synthesis aid.)
ValueRef build_shift_add(ProcCdfg& proc, int block, const ShiftAddForm& form,
                         ValueRef x, uint32_t origin);

// Fixed order: constants, stack removal, constants, reroll, promote, sizes.
// Well-formedness is re-checked after every stage.
PassReport run_pipeline(CdfgModule& module, const PassConfig& config);

}  // namespace binpart
