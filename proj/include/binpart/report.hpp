#pragma once
#include <cstdint>
#include <map>
#include <string>

#include "binpart/partition.hpp"
#include "binpart/sim.hpp"

namespace binpart {

// Measured hardware execution of one offloaded region.
struct HwResult {
  uint64_t hw_cycles = 0;     // rtl cycles over all invocations, handshakes in
  uint64_t invocations = 0;
};

struct MetricsReport {
  double sw_only_time_s = 0;
  double partitioned_time_s = 0;
  double app_speedup = 1.0;
  std::map<int, double> kernel_speedup;  // region id -> speedup incl. comm
  double energy_sw_j = 0;
  double energy_partitioned_j = 0;
  double energy_savings_fraction = 0;
  uint64_t area_gates = 0;
};

// Sequential execution model: the cpu runs all software cycles plus the
// per-invocation communication cycles; the fpga runs the region cycles.
// Throws MissingHwCycles when a selected region has no measurement.
MetricsReport compute_metrics(const Profile& profile,
                              const PartitionResult& partition,
                              const std::map<int, HwResult>& hw,
                              const PlatformModel& platform);

// Deterministic plain-text report: platform echo, per-region rows, totals.
std::string render_report(const MetricsReport& metrics,
                          const PartitionResult& partition,
                          const PlatformModel& platform);

}  // namespace binpart
