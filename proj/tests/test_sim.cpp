#include "binpart/sim.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace binpart;

TEST_CASE("single steps") {
  ProgramImage img = assemble(".text 0x1000\naddi $2,$0,5\nsw $2,0x100($0)\nlw $3,0x100($0)\n");
  MachineState s = initial_state(img, {});
  step(s, img);
  CHECK(s.regs[2] == 5);
  CHECK(s.pc == 0x1004);
  step(s, img);
  step(s, img);
  CHECK(s.regs[3] == 5);
}

TEST_CASE("register zero stays zero") {
  ProgramImage img = assemble(".text 0\naddi $0,$0,7\n");
  MachineState s = initial_state(img, {});
  step(s, img);
  CHECK(s.regs[0] == 0);
}

TEST_CASE("wraparound add") {
  ProgramImage img = assemble(
      ".text 0\nlui $8,0x7FFF\nori $8,$8,0xFFFF\naddi $9,$0,1\naddu $10,$8,$9\n");
  MachineState s = initial_state(img, {});
  for (int i = 0; i < 4; i++) step(s, img);
  CHECK(s.regs[10] == 0x80000000u);
}

TEST_CASE("run prints constant and halts") {
  ExecutionResult r = run(testutil::corpus_image("straight_line"), {}, 1000);
  CHECK(r.exit_reason == ExitReason::Halted);
  REQUIRE(r.outputs.size() == 1);
  CHECK(r.outputs[0] == 7);
}

TEST_CASE("max steps on an infinite loop") {
  ProgramImage img = assemble(".text 0x1000\nspin: j spin\n");
  ExecutionResult r = run(img, {}, 1000);
  CHECK(r.exit_reason == ExitReason::MaxStepsExceeded);
  CHECK(r.steps == 1000);
}

TEST_CASE("input queue exhaustion faults") {
  ProgramImage img = assemble(".text 0\naddi $2,$0,5\nsyscall\n");
  ExecutionResult r = run(img, {}, 100);
  CHECK(r.exit_reason == ExitReason::Fault);
  CHECK(r.fault.find("InputExhausted") != std::string::npos);
}

TEST_CASE("dot product against a brute-force oracle") {
  // independent oracle: direct arithmetic over the same vectors
  int a[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  int b[8] = {2, 3, 4, 5, 6, 7, 8, 9};
  uint32_t expect = 0;
  for (int i = 0; i < 8; i++) expect += uint32_t(a[i] * b[i]);
  ExecutionResult r = run(testutil::corpus_image("dot_product"), {}, 100000);
  REQUIRE(r.outputs.size() == 1);
  CHECK(r.outputs[0] == expect);
}

TEST_CASE("corpus outputs against independent arithmetic oracles") {
  auto out1 = [](const std::string& name, std::vector<uint32_t> in = {}) {
    ExecutionResult r = run(testutil::corpus_image(name), in, 1000000);
    REQUIRE(r.exit_reason == ExitReason::Halted);
    return r.outputs;
  };
  CHECK(out1("loop_simple") == std::vector<uint32_t>{55});
  CHECK(out1("unrolled_sum") == std::vector<uint32_t>{136});
  CHECK(out1("nested_loops") == std::vector<uint32_t>{100});
  CHECK(out1("reduction_alias") == std::vector<uint32_t>{72});
  CHECK(out1("diamond", {5}) == std::vector<uint32_t>{200});
  CHECK(out1("diamond", {11}) == std::vector<uint32_t>{100});
  CHECK(out1("mulchain", {6}) == std::vector<uint32_t>{60, 42});
  CHECK(out1("spill") == std::vector<uint32_t>{47});
  CHECK(out1("jump_table", {1}) == std::vector<uint32_t>{222});
  CHECK(out1("jump_table", {0}) == std::vector<uint32_t>{111});
  // FIR: y[n] = 4x[n]+3x[n+1]+2x[n+2]+x[n+3], x[i]=i+1 -> y[n]=10n+20
  std::vector<uint32_t> fir;
  for (uint32_t n = 0; n < 8; n++) fir.push_back(10 * n + 20);
  CHECK(out1("fir") == fir);
}

TEST_CASE("determinism: repeated runs are bit-identical") {
  for (const auto& name : testutil::corpus_names()) {
    auto in = testutil::corpus_inputs(name);
    ProgramImage img = testutil::corpus_image(name);
    ExecutionResult a = run(img, in, 1000000);
    ExecutionResult b = run(img, in, 1000000);
    CHECK(a.outputs == b.outputs);
    CHECK(a.total_cycles == b.total_cycles);
    CHECK(a.steps == b.steps);
  }
}

TEST_CASE("profiling is observationally transparent") {
  for (const auto& name : testutil::corpus_names()) {
    auto in = testutil::corpus_inputs(name);
    ProgramImage img = testutil::corpus_image(name);
    ExecutionResult plain = run(img, in, 1000000);
    auto [prof_result, profile] = profile_run(img, in, 1000000);
    CHECK(plain.outputs == prof_result.outputs);
    CHECK(plain.total_cycles == prof_result.total_cycles);
    CHECK(plain.steps == prof_result.steps);
    CHECK(profile.total_cycles == plain.total_cycles);
  }
}

TEST_CASE("straight-line profile: one block, cost-table cycles") {
  auto [r, p] = profile_run(testutil::corpus_image("straight_line"), {}, 1000);
  CHECK(p.block_counts.size() == 1);
  CHECK(p.block_counts.begin()->second == 1);
  // 7 instructions, all cost 1 under the defaults
  CHECK(p.total_cycles == 7);
  CHECK(r.exit_reason == ExitReason::Halted);
}

TEST_CASE("loop profile matches the hand trace") {
  // loop_simple: header (slt+beq) runs 11 times, body (addi,add,j) 10
  // times; the back edge j->loop is taken 10 times.
  ProgramImage img = testutil::corpus_image("loop_simple");
  auto [r, p] = profile_run(img, {}, 100000);
  uint32_t header = 0x100C;  // after the three init instructions
  uint32_t body = header + 8;
  CHECK(p.block_counts.at(header) == 11);
  CHECK(p.block_counts.at(body) == 10);
  CHECK(p.edge_counts.at({body, header}) == 10);
  CHECK(p.edge_counts.at({header, body}) == 10);
}

TEST_CASE("flow conservation on every corpus profile") {
  for (const auto& name : testutil::corpus_names()) {
    auto in = testutil::corpus_inputs(name);
    ProgramImage img = testutil::corpus_image(name);
    auto [r, p] = profile_run(img, in, 1000000);
    REQUIRE(r.exit_reason == ExitReason::Halted);
    uint64_t cyc = 0;
    for (auto& [a, c] : p.instr_cycles) cyc += c;
    CHECK(cyc == p.total_cycles);
    for (auto& [addr, count] : p.block_counts) {
      if (addr == img.entry) continue;  // entry gets its initial count free
      uint64_t inflow = 0;
      for (auto& [e, c] : p.edge_counts)
        if (e.second == addr) inflow += c;
      CHECK(inflow == count);
    }
  }
}

TEST_CASE("profile text round-trip") {
  auto [r, p] = profile_run(testutil::corpus_image("loop_simple"), {}, 100000);
  Profile q = profile_from_text(profile_to_text(p));
  CHECK(q.block_counts == p.block_counts);
  CHECK(q.edge_counts == p.edge_counts);
  CHECK(q.total_cycles == p.total_cycles);
}
