#include <random>

#include "binpart/decompile.hpp"
#include "binpart/errors.hpp"
#include "binpart/partition.hpp"
#include "binpart/passes.hpp"
#include "binpart/report.hpp"
#include "binpart/synth.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace binpart;

namespace {

Region make_region(int id, uint64_t cycles, uint64_t area) {
  Region r;
  r.id = id;
  r.kind = Region::Kind::Loop;
  r.cycles = cycles;
  r.est_area = area;
  r.suitability = 1.0;
  return r;
}

Profile make_profile(uint64_t total) {
  Profile p;
  p.total_cycles = total;
  return p;
}

PartitionResult one_region_partition(uint64_t cycles, uint64_t area = 1000) {
  PartitionResult pr;
  pr.hw_regions.push_back(make_region(0, cycles, area));
  pr.rationale.push_back(SelectTag::Step1Hot);
  pr.total_area = area;
  return pr;
}

}  // namespace

TEST_CASE("an empty partition means no speedup and no savings") {
  Profile prof = make_profile(1000000);
  PartitionResult pr;
  PlatformModel plat;
  MetricsReport m = compute_metrics(prof, pr, {}, plat);
  CHECK(m.app_speedup == doctest::Approx(1.0));
  CHECK(m.energy_savings_fraction == doctest::Approx(0.0));
  CHECK(m.partitioned_time_s == doctest::Approx(m.sw_only_time_s));
}

TEST_CASE("a 90 percent kernel at 44.8x yields 8.33x overall") {
  // closed form: 1 / (0.1 + 0.9/44.8)
  PlatformModel plat;
  plat.comm_cycles_per_invocation = 0;
  uint64_t total = 10000000;
  uint64_t kernel = 9000000;  // f = 0.9
  Profile prof = make_profile(total);
  PartitionResult pr = one_region_partition(kernel);
  // pick hw cycles so the kernel speedup is exactly 44.8 at the clock ratio
  double hw_time = (double(kernel) / plat.cpu_clock_hz) / 44.8;
  std::map<int, HwResult> hw;
  hw[0] = {uint64_t(std::llround(hw_time * plat.fpga_clock_hz)), 1};
  MetricsReport m = compute_metrics(prof, pr, hw, plat);
  CHECK(m.kernel_speedup.at(0) == doctest::Approx(44.8).epsilon(0.001));
  CHECK(m.app_speedup == doctest::Approx(8.33).epsilon(0.0015));
}

TEST_CASE("a missing hardware measurement is an error") {
  Profile prof = make_profile(1000);
  PartitionResult pr = one_region_partition(900);
  CHECK_THROWS_AS(compute_metrics(prof, pr, {}, PlatformModel{}), ToolError);
  try {
    compute_metrics(prof, pr, {}, PlatformModel{});
  } catch (const ToolError& e) {
    CHECK(e.code == Err::MissingHwCycles);
    CHECK(std::string(e.what()).find("region 0") != std::string::npos);
  }
}

TEST_CASE("speedup never exceeds the amdahl bound") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; trial++) {
    uint64_t total = 1000000 + rng() % 100000000;
    uint64_t kernel = 1 + rng() % total;
    PlatformModel plat;
    plat.cpu_clock_hz = 1e6 * (1 + rng() % 1000);
    plat.fpga_clock_hz = 1e6 * (1 + rng() % 1000);
    plat.comm_cycles_per_invocation = rng() % 10000;
    Profile prof = make_profile(total);
    PartitionResult pr = one_region_partition(kernel);
    std::map<int, HwResult> hw;
    hw[0] = {1 + rng() % 1000000, 1 + rng() % 1000};
    MetricsReport m = compute_metrics(prof, pr, hw, plat);
    double f = double(kernel) / double(total);
    double bound = f < 1.0 ? 1.0 / (1.0 - f)
                           : std::numeric_limits<double>::infinity();
    CHECK(m.app_speedup <= bound * (1 + 1e-12));
    CHECK(m.partitioned_time_s > 0);
  }
}

TEST_CASE("lowering communication cost never hurts") {
  PlatformModel plat;
  Profile prof = make_profile(5000000);
  PartitionResult pr = one_region_partition(4000000);
  std::map<int, HwResult> hw;
  hw[0] = {100000, 250};
  double prev = -1;
  for (uint64_t comm : {10000ull, 1000ull, 100ull, 10ull, 0ull}) {
    plat.comm_cycles_per_invocation = comm;
    MetricsReport m = compute_metrics(prof, pr, hw, plat);
    CHECK(m.app_speedup >= prev);
    prev = m.app_speedup;
  }
}

TEST_CASE("speedup strictly decreases as the cpu clock rises") {
  Profile prof = make_profile(5000000);
  PartitionResult pr = one_region_partition(4500000);
  std::map<int, HwResult> hw;
  hw[0] = {100000, 10};
  double prev = std::numeric_limits<double>::infinity();
  for (double clock : {40e6, 200e6, 400e6}) {
    PlatformModel plat;
    plat.cpu_clock_hz = clock;
    MetricsReport m = compute_metrics(prof, pr, hw, plat);
    CHECK(m.app_speedup < prev);
    prev = m.app_speedup;
  }
}

TEST_CASE("energy savings follow the time savings under equal power draw") {
  PlatformModel plat;
  plat.fpga_active_w = plat.cpu_active_w;
  Profile prof = make_profile(2000000);
  PartitionResult pr = one_region_partition(1500000);
  std::map<int, HwResult> hw;
  hw[0] = {50000, 5};
  MetricsReport m = compute_metrics(prof, pr, hw, plat);
  CHECK(m.energy_savings_fraction ==
        doctest::Approx(1.0 - m.partitioned_time_s / m.sw_only_time_s));
}

TEST_CASE("report totals recompute from the inputs") {
  PlatformModel plat;
  Profile prof = make_profile(3000000);
  PartitionResult pr = one_region_partition(2000000, 12345);
  std::map<int, HwResult> hw;
  hw[0] = {40000, 20};
  MetricsReport m = compute_metrics(prof, pr, hw, plat);
  double sw_part = double(3000000 - 2000000) / plat.cpu_clock_hz +
                   20.0 * 100.0 / plat.cpu_clock_hz;
  double hw_part = 40000.0 / plat.fpga_clock_hz;
  CHECK(m.partitioned_time_s == doctest::Approx(sw_part + hw_part));
  CHECK(m.app_speedup ==
        doctest::Approx(m.sw_only_time_s / m.partitioned_time_s));
  CHECK(m.energy_partitioned_j ==
        doctest::Approx(0.5 * sw_part + 0.25 * hw_part));
  CHECK(m.area_gates == 12345);
}

TEST_CASE("an empty partition renders the software-only banner") {
  Profile prof = make_profile(1000);
  PartitionResult pr;
  PlatformModel plat;
  MetricsReport m = compute_metrics(prof, pr, {}, plat);
  std::string text = render_report(m, pr, plat);
  CHECK(text.find("software-only") != std::string::npos);
  CHECK(text.find("app-speedup 1\n") != std::string::npos);
}

TEST_CASE("rendering is deterministic and matches the golden report") {
  // full pipeline on the dot-product benchmark at the default platform
  ProgramImage img = testutil::corpus_image("dot_product");
  auto inputs = testutil::corpus_inputs("dot_product");
  auto [ref, prof] = profile_run(img, inputs, 2000000);
  CdfgModule module = decompile(img);
  run_pipeline(module, PassConfig{});
  auto regions = enumerate_regions(module, prof);
  PlatformModel plat;
  PartitionResult pr = partition(regions, plat);
  REQUIRE(!pr.hw_regions.empty());

  PartitionedExecutor px;
  std::vector<SynthesizedRegion> synthesized;
  synthesized.reserve(pr.hw_regions.size());
  for (const auto& r : pr.hw_regions)
    synthesized.push_back(
        synthesize_region(module, r, "dot_product_" + std::to_string(r.id)));
  for (const auto& sr : synthesized) px.add_region(&sr);
  ExecutionResult out = px.run(module, img, inputs, 2000000);
  CHECK(out.outputs == ref.outputs);

  std::map<int, HwResult> hw;
  for (const auto& sr : synthesized)
    hw[sr.region_id] = {px.hw_cycles(sr.region_id),
                        px.invocations(sr.region_id)};
  MetricsReport m = compute_metrics(prof, pr, hw, plat);
  // the benchmark loop runs only 8 iterations, so communication overhead
  // dominates; the model reports that honestly
  CHECK(m.app_speedup > 0.0);
  std::string text = render_report(m, pr, plat);
  CHECK(text == render_report(m, pr, plat));
  CHECK(text == testutil::read_file(std::string(GOLDEN_DIR) +
                                    "/dot_product.report"));
}
