#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "binpart/decompile.hpp"
#include "binpart/partition.hpp"
#include "binpart/passes.hpp"
#include "binpart/report.hpp"
#include "binpart/sim.hpp"
#include "binpart/synth.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace binpart;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  std::string cmd = std::string(CLI_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "binpart_cli_test";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string corpus_asm(const std::string& name) {
  return std::string(CORPUS_DIR) + "/" + name + ".asm";
}

// assemble a corpus program once and cache the image path
std::string image_of(const std::string& name) {
  fs::path img = work_dir() / (name + ".img");
  if (!fs::exists(img)) {
    CliResult r = cli("asm " + corpus_asm(name) + " -o " + img.string());
    REQUIRE(r.exit_code == 0);
  }
  return img.string();
}

std::string profile_of(const std::string& name) {
  fs::path prof = work_dir() / (name + ".prof");
  if (!fs::exists(prof)) {
    std::string in;
    if (fs::exists(corpus_asm(name).substr(0, corpus_asm(name).size() - 4) +
                   ".inputs"))
      in = " --inputs " +
           corpus_asm(name).substr(0, corpus_asm(name).size() - 4) + ".inputs";
    CliResult r =
        cli("profile " + image_of(name) + in + " -o " + prof.string());
    REQUIRE(r.exit_code == 0);
  }
  return prof.string();
}

}  // namespace

TEST_CASE("asm then run prints the program output and the cycle count") {
  fs::path src = work_dir() / "seven.asm";
  std::ofstream(src) << ".text 0x1000\nmain:\n"
                        "  addiu $4, $0, 7\n"
                        "  addiu $2, $0, 1\n"
                        "  syscall\n"
                        "  addiu $2, $0, 10\n"
                        "  syscall\n";
  fs::path img = work_dir() / "seven.img";
  CHECK(cli("asm " + src.string() + " -o " + img.string()).exit_code == 0);
  CliResult r = cli("run " + img.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.substr(0, 2) == "7\n");
  CHECK(r.out.find("cycles ") != std::string::npos);
}

TEST_CASE("assembly errors use the assembler exit code") {
  fs::path src = work_dir() / "bad.asm";
  std::ofstream(src) << ".text 0x1000\nmain:\n  frobnicate $1, $2\n";
  fs::path img = work_dir() / "bad.img";
  CHECK(cli("asm " + src.string() + " -o " + img.string()).exit_code == 10);
}

TEST_CASE("a missing input file is an io error") {
  CHECK(cli("run /nonexistent.img").exit_code == 2);
  CHECK(cli("report " + image_of("dot_product") +
            " --profile /nonexistent.prof")
            .exit_code == 2);
}

TEST_CASE("usage errors exit nonzero without a stage code") {
  CHECK(cli("").exit_code != 0);
  CHECK(cli("partition").exit_code != 0);  // missing required arguments
}

TEST_CASE("the jump-table program fails with the indirect-jump exit code") {
  CHECK(cli("decomp " + image_of("jump_table")).exit_code == 30);
}

TEST_CASE("profile output parses back to the in-memory profile") {
  std::string text = testutil::read_file(profile_of("dot_product"));
  Profile p = profile_from_text(text);
  ProgramImage img = testutil::corpus_image("dot_product");
  auto [ref, direct] = profile_run(img, {}, 1000000);
  CHECK(p.block_counts == direct.block_counts);
  CHECK(p.edge_counts == direct.edge_counts);
  CHECK(p.total_cycles == direct.total_cycles);
  // per-instruction attribution rebuilds exactly from block counts
  attribute_block_cycles(p, img);
  CHECK(p.instr_cycles == direct.instr_cycles);
}

TEST_CASE("decomp reports rewrites and honors pass selection") {
  CliResult full = cli("decomp " + image_of("mulchain"));
  CHECK(full.exit_code == 0);
  CHECK(full.out.find("rewrite ") != std::string::npos);
  CliResult none = cli("decomp " + image_of("mulchain") + " --no-passes");
  CHECK(none.exit_code == 0);
  CHECK(none.out.find("rewrite ") == std::string::npos);
  CliResult sub =
      cli("decomp " + image_of("mulchain") + " --passes constants");
  CHECK(sub.exit_code == 0);
  CHECK(sub.out.find("rewrite constants") != std::string::npos);
  CHECK(sub.out.find("rewrite promote") == std::string::npos);
  CHECK(cli("decomp " + image_of("mulchain") + " --passes bogus").exit_code ==
        3);
}

TEST_CASE("decomp writes a parseable cdfg dump") {
  fs::path dump = work_dir() / "dp.cdfg";
  CHECK(cli("decomp " + image_of("dot_product") + " --dump-cdfg " +
            dump.string())
            .exit_code == 0);
  std::string text = testutil::read_file(dump.string());
  CHECK(text.find("node 0 ") != std::string::npos);
  CHECK(text.find("dedge") != std::string::npos);
}

TEST_CASE("partition emits the documented report lines") {
  CliResult r = cli("partition " + image_of("dot_product") + " --profile " +
                    profile_of("dot_product"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("hw 0 Step1Hot ") == 0);
  CHECK(r.out.find("sw-cycles ") != std::string::npos);
  CHECK(r.out.find("total-gates ") != std::string::npos);
}

TEST_CASE("synth writes a schedule and well-formed vhdl per region") {
  fs::path dir = work_dir() / "synth_out";
  fs::create_directories(dir);
  CliResult r = cli("synth " + image_of("dot_product") + " --profile " +
                    profile_of("dot_product") + " -o " + dir.string());
  CHECK(r.exit_code == 0);
  bool saw_vhd = false, saw_sched = false;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".vhd") {
      saw_vhd = true;
      check_vhdl(testutil::read_file(e.path().string()));
    }
    if (e.path().extension() == ".sched") {
      saw_sched = true;
      CHECK(testutil::read_file(e.path().string()).find("step 1: ") !=
            std::string::npos);
    }
  }
  CHECK(saw_vhd);
  CHECK(saw_sched);
}

TEST_CASE("report equals the manually chained library pipeline") {
  CliResult r = cli("report " + image_of("dot_product") + " --profile " +
                    profile_of("dot_product"));
  CHECK(r.exit_code == 0);

  ProgramImage img = testutil::corpus_image("dot_product");
  auto [ref, prof] = profile_run(img, {}, 1000000);
  CdfgModule module = decompile(img);
  run_pipeline(module, PassConfig{});
  PlatformModel plat;
  PartitionResult pr = partition(enumerate_regions(module, prof), plat);
  PartitionedExecutor px;
  std::vector<SynthesizedRegion> syn;
  for (const auto& reg : pr.hw_regions)
    syn.push_back(
        synthesize_region(module, reg, "dot_product_" +
                                           std::to_string(reg.id)));
  for (const auto& sr : syn) px.add_region(&sr);
  px.run(module, img, {}, 1000000);
  std::map<int, HwResult> hw;
  for (const auto& sr : syn)
    hw[sr.region_id] = {px.hw_cycles(sr.region_id),
                        px.invocations(sr.region_id)};
  MetricsReport m = compute_metrics(prof, pr, hw, plat);
  CHECK(r.out == render_report(m, pr, plat));
}

TEST_CASE("the cpu clock sweep prints strictly decreasing speedups") {
  CliResult r = cli("report " + image_of("dot_product") + " --profile " +
                    profile_of("dot_product") +
                    " --sweep cpu_clock_hz=40e6,200e6,400e6");
  CHECK(r.exit_code == 0);
  std::istringstream is(r.out);
  std::vector<double> speedups;
  std::string k1, v, k2;
  double s;
  while (is >> k1 >> v >> k2 >> s) {
    CHECK(k1 == "cpu_clock_hz");
    CHECK(k2 == "app-speedup");
    speedups.push_back(s);
  }
  REQUIRE(speedups.size() == 3);
  CHECK(speedups[0] > speedups[1]);
  CHECK(speedups[1] > speedups[2]);
  CHECK(cli("report " + image_of("dot_product") + " --profile " +
            profile_of("dot_product") + " --sweep bogus=1")
            .exit_code == 3);
}

TEST_CASE("a platform config file changes the report") {
  fs::path plat = work_dir() / "fast_fpga.conf";
  std::ofstream(plat) << "fpga_clock_hz = 400e6\n";
  CliResult base = cli("report " + image_of("dot_product") + " --profile " +
                       profile_of("dot_product"));
  CliResult fast = cli("report " + image_of("dot_product") + " --profile " +
                       profile_of("dot_product") + " --platform " +
                       plat.string());
  CHECK(base.exit_code == 0);
  CHECK(fast.exit_code == 0);
  CHECK(base.out != fast.out);
  std::ofstream(plat) << "nonsense = 1\n";
  CHECK(cli("report " + image_of("dot_product") + " --profile " +
            profile_of("dot_product") + " --platform " + plat.string())
            .exit_code == 3);
}

TEST_CASE("run outputs match the library simulator on every corpus program") {
  for (const auto& name : testutil::corpus_names()) {
    CAPTURE(name);
    std::string in_file =
        std::string(CORPUS_DIR) + "/" + name + ".inputs";
    std::string extra =
        fs::exists(in_file) ? " --inputs " + in_file : std::string();
    CliResult r = cli("run " + image_of(name) + extra);
    CHECK(r.exit_code == 0);
    ExecutionResult ref =
        run(testutil::corpus_image(name), testutil::corpus_inputs(name),
            1000000);
    std::ostringstream want;
    for (uint32_t v : ref.outputs) want << int32_t(v) << "\n";
    want << "cycles " << ref.total_cycles << "\n";
    CHECK(r.out == want.str());
  }
}
