#include "binpart/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "binpart/errors.hpp"

namespace binpart {

MetricsReport compute_metrics(const Profile& profile,
                              const PartitionResult& partition,
                              const std::map<int, HwResult>& hw,
                              const PlatformModel& platform) {
  MetricsReport m;
  double cpu_hz = platform.cpu_clock_hz;
  double fpga_hz = platform.fpga_clock_hz;
  double total = double(profile.total_cycles);
  m.sw_only_time_s = total / cpu_hz;
  m.area_gates = partition.total_area;

  double offloaded_cycles = 0;  // cpu cycles replaced by hardware
  double comm_time = 0;
  double hw_time = 0;
  for (const auto& r : partition.hw_regions) {
    auto it = hw.find(r.id);
    if (it == hw.end())
      throw ToolError(Err::MissingHwCycles,
                      "region " + std::to_string(r.id));
    const HwResult& h = it->second;
    double region_comm =
        double(h.invocations) * double(platform.comm_cycles_per_invocation) /
        cpu_hz;
    double region_hw = double(h.hw_cycles) / fpga_hz;
    offloaded_cycles += double(r.cycles);
    comm_time += region_comm;
    hw_time += region_hw;
    m.kernel_speedup[r.id] =
        (double(r.cycles) / cpu_hz) / (region_hw + region_comm);
  }

  double sw_time = (total - offloaded_cycles) / cpu_hz + comm_time;
  m.partitioned_time_s = sw_time + hw_time;
  m.app_speedup = m.sw_only_time_s / m.partitioned_time_s;

  // sequential execution: no overlap, so no idle slack term
  m.energy_sw_j = platform.cpu_active_w * m.sw_only_time_s;
  m.energy_partitioned_j =
      platform.cpu_active_w * sw_time + platform.fpga_active_w * hw_time;
  m.energy_savings_fraction = 1.0 - m.energy_partitioned_j / m.energy_sw_j;
  return m;
}

namespace {

std::string num(double v) {
  char buf[48];
  snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string render_report(const MetricsReport& metrics,
                          const PartitionResult& partition,
                          const PlatformModel& platform) {
  std::ostringstream os;
  os << "platform:\n";
  std::istringstream plat(platform_to_text(platform));
  for (std::string line; std::getline(plat, line);)
    os << "  " << line << "\n";
  os << "\n";
  if (partition.hw_regions.empty()) {
    os << "software-only: no hardware regions selected\n";
  } else {
    os << "region  tag  sw-cycles  gates  kernel-speedup\n";
    for (size_t i = 0; i < partition.hw_regions.size(); i++) {
      const Region& r = partition.hw_regions[i];
      os << r.id << "  " << select_tag_name(partition.rationale[i]) << "  "
         << r.cycles << "  " << r.est_area << "  "
         << num(metrics.kernel_speedup.at(r.id)) << "\n";
    }
  }
  os << "\n";
  os << "area-gates " << metrics.area_gates << "\n";
  os << "sw-only-time-s " << num(metrics.sw_only_time_s) << "\n";
  os << "partitioned-time-s " << num(metrics.partitioned_time_s) << "\n";
  os << "app-speedup " << num(metrics.app_speedup) << "\n";
  os << "energy-sw-j " << num(metrics.energy_sw_j) << "\n";
  os << "energy-partitioned-j " << num(metrics.energy_partitioned_j) << "\n";
  os << "energy-savings " << num(metrics.energy_savings_fraction) << "\n";
  return os.str();
}

}  // namespace binpart
