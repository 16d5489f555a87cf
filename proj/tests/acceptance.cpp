// acceptance harness: one pass/fail line per criterion, exit 0 iff all pass
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "binpart/decompile.hpp"
#include "binpart/errors.hpp"
#include "binpart/partition.hpp"
#include "binpart/passes.hpp"
#include "binpart/report.hpp"
#include "binpart/synth.hpp"
#include "helpers.hpp"

using namespace binpart;

namespace {

int g_failures = 0;
bool g_ok = true;
std::string g_note;

void expect(bool cond, const std::string& note) {
  if (!cond && g_ok) {
    g_ok = false;
    g_note = note;
  }
}

template <class F>
void criterion(int n, const std::string& what, F fn) {
  g_ok = true;
  g_note.clear();
  try {
    fn();
  } catch (const std::exception& e) {
    g_ok = false;
    g_note = std::string("exception: ") + e.what();
  }
  if (!g_ok) g_failures++;
  std::printf("%s  %2d  %s%s%s\n", g_ok ? "PASS" : "FAIL", n, what.c_str(),
              g_ok ? "" : " -- ", g_note.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// shared fixtures
// ---------------------------------------------------------------------------

struct ProgramSet {
  std::string name;
  ProgramImage img;
  std::vector<uint32_t> inputs;
};

std::vector<ProgramSet>& programs() {
  static std::vector<ProgramSet> ps = [] {
    std::vector<ProgramSet> v;
    for (const auto& name : testutil::corpus_names())
      v.push_back({name, testutil::corpus_image(name),
                   testutil::corpus_inputs(name)});
    return v;
  }();
  return ps;
}

const IrOp* find_mul(const ProcCdfg& p, uint32_t c) {
  for (const auto& b : p.blocks)
    for (int id : b.ops) {
      const IrOp& n = p.op(id);
      if (n.kind != OpKind::Mul) continue;
      for (const auto& r : n.operands)
        if (r.is_node() && p.op(r.node).kind == OpKind::Const &&
            p.op(r.node).value == c)
          return &n;
    }
  return nullptr;
}

// single-block procedure builder for the scheduling criteria
struct ProcBuilder {
  ProcCdfg p;
  ProcBuilder() {
    Block b;
    b.id = 0;
    p.blocks.push_back(b);
    p.entry_block = 0;
    p.name = "t";
  }
  ValueRef in(int i) { return ValueRef::of_entry_reg(i); }
  int node(OpKind k, std::vector<ValueRef> operands) {
    int id = p.new_node(k, std::move(operands), 0);
    p.blocks[0].ops.push_back(id);
    return id;
  }
  ValueRef add(OpKind k, ValueRef a, ValueRef b) {
    return ValueRef::of_node(node(k, {a, b}));
  }
  ValueRef cst(uint32_t v) {
    int id = node(OpKind::Const, {});
    p.op(id).value = v;
    return ValueRef::of_node(id);
  }
};

// exhaustive minimum schedule length by iterative deepening
struct BruteForce {
  const ProcCdfg& p;
  const ResourceSet& res;
  std::vector<int> ops;
  std::map<int, std::vector<int>> deps;

  BruteForce(const ProcCdfg& pp, const ResourceSet& rr) : p(pp), res(rr) {
    const Block& b = p.blocks[0];
    std::set<int> here(b.ops.begin(), b.ops.end());
    for (int id : b.ops) {
      const IrOp& n = p.op(id);
      if (n.kind == OpKind::Phi || unit_class_of(n.kind) == UnitClass::None)
        continue;
      ops.push_back(id);
      for (const auto& r : n.operands) {
        if (!r.is_node() || !here.count(r.node)) continue;
        const IrOp& d = p.op(r.node);
        if (d.kind != OpKind::Phi && unit_class_of(d.kind) != UnitClass::None)
          deps[id].push_back(r.node);
      }
    }
    for (auto [a, c] : p.mem_edges)
      if (here.count(a) && here.count(c)) deps[c].push_back(a);
  }

  bool feasible(int limit) {
    std::map<int, int> step;
    std::map<std::pair<UnitClass, int>, int> used;
    std::function<bool(size_t)> go = [&](size_t i) {
      if (i == ops.size()) return true;
      int id = ops[i];
      UnitClass c = unit_class_of(p.op(id).kind);
      int lat = unit_latency(res, c);
      int lo = 1;
      for (int d : deps[id]) {
        int fin = step.at(d) + unit_latency(res, unit_class_of(p.op(d).kind));
        lo = std::max(lo, fin);
      }
      for (int s = lo; s + lat - 1 <= limit; s++) {
        bool ok = true;
        for (int t = s; t < s + lat; t++)
          if (used[{c, t}] >= unit_count(res, c)) ok = false;
        if (!ok) continue;
        for (int t = s; t < s + lat; t++) used[{c, t}]++;
        step[id] = s;
        if (go(i + 1)) return true;
        for (int t = s; t < s + lat; t++) used[{c, t}]--;
        step.erase(id);
      }
      return false;
    };
    return go(0);
  }

  int optimum(int hi) {
    for (int limit = 1; limit <= hi; limit++)
      if (feasible(limit)) return limit;
    return hi + 1;
  }
};

Region make_region(int id, Region::Kind kind, uint64_t cycles, uint64_t area,
                   double suit = 1.0) {
  Region r;
  r.id = id;
  r.kind = kind;
  r.cycles = cycles;
  r.est_area = area;
  r.suitability = suit;
  r.start_addr = uint32_t(0x1000 + 0x100 * id);
  return r;
}

PlatformModel with_capacity(uint64_t gates) {
  PlatformModel p;
  p.area_capacity_gates = gates;
  return p;
}

// loop block op count and induction step of the single loop in `p`
std::pair<int, int32_t> loop_shape(const ProcCdfg& p) {
  for (const auto& sn : p.structure.nodes) {
    if (sn.kind != StructNode::Kind::LoopPre &&
        sn.kind != StructNode::Kind::LoopPost)
      continue;
    int32_t step = 0;
    for (const auto& iv : sn.inductions)
      if (iv.has_step && iv.step != 0) step = iv.step;
    return {int(p.blocks[sn.header].ops.size()), step};
  }
  return {-1, 0};
}

ProcCdfg proc_with_form(const ShiftAddForm& f) {
  ProcCdfg p;
  p.name = "t";
  p.entry_addr = 0x1000;
  Block b;
  b.id = 0;
  b.start_addr = 0x1000;
  p.blocks.push_back(b);
  int x = p.new_node(OpKind::Input, {}, 0x1000);
  p.blocks[0].ops.push_back(x);
  ValueRef root = build_shift_add(p, 0, f, ValueRef::of_node(x), 0x1000);
  int out = p.new_node(OpKind::Output, {root}, 0x1004);
  p.blocks[0].ops.push_back(out);
  int ret = p.new_node(OpKind::Return, {}, 0x1008);
  p.op(ret).aux = 1;
  p.blocks[0].ops.push_back(ret);
  return p;
}

// a dominates b iff removing a from the graph makes b unreachable
bool dominates_brute(const std::vector<std::vector<int>>& succ, int entry,
                     int a, int b) {
  if (a == b || a == entry) return true;
  std::vector<char> seen(succ.size(), 0);
  std::vector<int> stack{entry};
  seen[entry] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (u == a) continue;
    for (int v : succ[u])
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  return !seen[b];
}

}  // namespace

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

static void c1_end_to_end() {
  for (const auto& ps : programs()) {
    ExecutionResult ref = run(ps.img, ps.inputs, 2000000);
    expect(ref.exit_reason == ExitReason::Halted, ps.name + ": did not halt");

    // stage the pipeline by hand and check the executor oracle at every
    // boundary
    CdfgModule m = decompile(ps.img);
    PassConfig cfg;
    PassReport rep;
    auto stage = [&](const char* what, auto&& fn) {
      for (auto& [addr, proc] : m.procs) {
        fn(proc);
        rebuild_structure(proc);
      }
      check_cdfg(m);
      ExecutionResult got = execute_cdfg(m, ps.img, ps.inputs, 2000000);
      expect(got.outputs == ref.outputs,
             ps.name + ": outputs diverge after " + what);
    };
    stage("decompile", [&](ProcCdfg&) {});
    stage("constants", [&](ProcCdfg& p) { propagate_constants(p, rep); });
    stage("stack", [&](ProcCdfg& p) { remove_stack_ops(p, rep); });
    stage("constants-2", [&](ProcCdfg& p) { propagate_constants(p, rep); });
    stage("reroll", [&](ProcCdfg& p) { reroll_loops(p, rep, cfg); });
    stage("promote", [&](ProcCdfg& p) { promote_strength(p, rep, cfg); });
    stage("sizes", [&](ProcCdfg& p) { reduce_operator_sizes(p, rep, cfg); });

    // every synthesizable loop region also matches in hardware
    auto [pref, prof] = profile_run(ps.img, ps.inputs, 2000000);
    auto regions = enumerate_regions(m, prof);
    std::vector<SynthesizedRegion> synthesized;
    for (const auto& r : regions) {
      if (r.kind != Region::Kind::Loop || r.suitability <= 0) continue;
      try {
        synthesized.push_back(
            synthesize_region(m, r, ps.name + "_r" + std::to_string(r.id)));
      } catch (const ToolError& e) {
        // a flattened outer loop re-entered from its inner loop stays in
        // software
        expect(std::string(e.what()).find("single-entry") != std::string::npos,
               ps.name + ": unexpected synthesis failure: " + e.what());
      }
    }
    if (synthesized.empty()) continue;
    PartitionedExecutor px;
    for (const auto& sr : synthesized) px.add_region(&sr);
    ExecutionResult hw = px.run(m, ps.img, ps.inputs, 2000000);
    expect(hw.outputs == ref.outputs, ps.name + ": rtl outputs diverge");
  }
}

static void c2_strength_promotion() {
  std::mt19937 rng(11);
  for (uint32_t c : {3u, 5u, 6u, 7u, 9u, 10u, 12u, 100u}) {
    ProcCdfg p = proc_with_form(csd_expand(c));
    PassReport rep;
    PassConfig cfg;
    expect(promote_strength(p, rep, cfg),
           "no rewrite for c=" + std::to_string(c));
    const IrOp* mul = find_mul(p, c);
    expect(mul != nullptr && mul->anno != nullptr,
           "mul(x," + std::to_string(c) + ") not recovered");
    if (!mul || !mul->anno) continue;
    for (int i = 0; i < 10000; i++) {
      uint32_t x = rng();
      if (mul->anno->eval(x) != c * x) {
        expect(false, "eval mismatch for c=" + std::to_string(c));
        break;
      }
    }
  }
}

static void c3_multiplier_choice() {
  for (uint32_t c : {3u, 5u, 6u, 7u, 9u, 10u, 12u, 100u}) {
    for (int extra : {0, 2}) {
      for (int shifters : {1, 2}) {
        auto build = [&](bool expanded) {
          ProcBuilder b;
          if (expanded) {
            ShiftAddForm f = csd_expand(c);
            std::function<ValueRef(int)> emit = [&](int i) -> ValueRef {
              const auto& nd = f.nodes[size_t(i)];
              switch (nd.k) {
                case ShiftAddForm::K::Var: return b.in(1);
                case ShiftAddForm::K::Shl:
                  return b.add(OpKind::Shl, emit(nd.a),
                               b.cst(uint32_t(nd.shamt)));
                case ShiftAddForm::K::Add:
                  return b.add(OpKind::Add, emit(nd.a), emit(nd.b));
                case ShiftAddForm::K::Sub:
                  return b.add(OpKind::Sub, emit(nd.a), emit(nd.b));
              }
              return ValueRef::none();
            };
            emit(f.root);
          } else {
            auto cc = b.cst(c);
            int mul = b.node(OpKind::Mul, {b.in(1), cc});
            b.p.op(mul).anno = std::make_shared<ShiftAddForm>(csd_expand(c));
          }
          for (int i = 0; i < extra; i++)
            b.add(OpKind::Add, b.in(2), b.in(3));
          return b.p;
        };
        ResourceSet res;
        res.shifters = shifters;
        ProcCdfg kept = build(false), exp = build(true);
        int opt_kept = BruteForce(kept, res).optimum(32);
        int opt_exp = BruteForce(exp, res).optimum(32);
        // keep the exhaustive oracle on small regions only
        if (int(exp.blocks[0].ops.size()) > 8 + 2 * extra) continue;

        RegionCdfg rc;
        rc.proc = build(false);
        auto decision = decide_multiplier_impls(rc, res);
        expect(decision.size() == 1, "expected one multiply decision");
        MulImpl want = opt_exp < opt_kept ? MulImpl::UseShiftAdd
                                          : MulImpl::UseMultiplier;
        std::string tag = "c=" + std::to_string(c) +
                          " extra=" + std::to_string(extra) +
                          " shifters=" + std::to_string(shifters);
        expect(decision.begin()->second == want, "wrong choice at " + tag);
        Schedule s = schedule(rc.proc, res);
        expect(s.total_steps() == std::min(opt_kept, opt_exp),
               "schedule not minimal at " + tag);
      }
    }
  }
}

static void c4_reroll() {
  ProgramImage img = testutil::corpus_image("unrolled_sum");
  ExecutionResult ref = run(img, {}, 1000000);
  CdfgModule m = decompile(img);
  PassConfig cfg;
  PassReport rep;
  for (auto& [a, p] : m.procs) {
    propagate_constants(p, rep);
    rebuild_structure(p);
  }
  auto [body_before, step_before] = loop_shape(m.entry_proc());
  expect(step_before == 16, "expected the x4 unrolled pointer step");
  bool changed = false;
  for (auto& [a, p] : m.procs) {
    changed |= reroll_loops(p, rep, cfg);
    rebuild_structure(p);
  }
  expect(changed, "reroll made no rewrite");
  auto [body_after, step_after] = loop_shape(m.entry_proc());
  expect(step_after == 4, "trip count did not quadruple");
  expect(body_after <= (body_before + 3) / 4 + 3,
         "rerolled body exceeds ceil(n/4)+3 ops");
  ExecutionResult got = execute_cdfg(m, img, {}, 1000000);
  expect(got.outputs == ref.outputs, "outputs changed by rerolling");
}

static void c5_hot_first() {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 100; trial++) {
    std::vector<Region> rs;
    rs.push_back(make_region(0, Region::Kind::Loop, 90000, 12000));
    int n = 1 + int(rng() % 8);
    uint64_t rest_budget = 9999;  // keeps the hot loop at >= 90%
    for (int i = 1; i <= n; i++) {
      uint64_t c = rest_budget ? rng() % (rest_budget + 1) : 0;
      rest_budget -= c;
      auto kind = rng() % 2 ? Region::Kind::Loop : Region::Kind::ProcedureBody;
      rs.push_back(make_region(i, kind, c, 1 + rng() % 20000,
                               double(rng() % 101) / 100.0));
    }
    std::shuffle(rs.begin(), rs.end(), rng);
    PartitionResult res = partition(rs, with_capacity(30000));
    expect(!res.hw_regions.empty(), "nothing selected");
    if (res.hw_regions.empty()) return;
    expect(res.hw_regions[0].cycles == 90000 &&
               res.rationale[0] == SelectTag::Step1Hot,
           "hot loop not selected first at trial " + std::to_string(trial));
  }
}

static void c6_area_safety() {
  std::mt19937 rng(20260826);
  for (int trial = 0; trial < 1000; trial++) {
    std::uniform_int_distribution<int> count(1, 12);
    std::uniform_int_distribution<uint64_t> cyc(0, 100000);
    std::uniform_int_distribution<uint64_t> area(1, 15000);
    std::uniform_real_distribution<double> suit(0.0, 1.0);
    int n = count(rng);
    std::vector<Region> rs;
    for (int i = 0; i < n; i++) {
      auto kind = rng() % 3 ? Region::Kind::Loop : Region::Kind::ProcedureBody;
      rs.push_back(make_region(i, kind, cyc(rng), area(rng), suit(rng)));
      if (rng() % 4 == 0)
        rs.back().addr_set = {
            {uint32_t(rng() % 3), 0, int64_t(rng() % 256), false}};
    }
    uint64_t total = 0;
    for (const auto& r : rs) total += r.cycles;
    if (total == 0) continue;
    PlatformModel pm = with_capacity(rng() % 30000);
    for (bool skip : {false, true}) {
      PartitionConfig cfg;
      cfg.skip_and_continue = skip;
      PartitionResult res = partition(rs, pm, cfg);
      expect(res.total_area <= pm.area_capacity_gates,
             "capacity exceeded at trial " + std::to_string(trial));
      uint64_t sum = 0;
      std::set<int> seen;
      for (const auto& r : res.hw_regions) {
        sum += r.est_area;
        expect(seen.insert(r.id).second, "double selection");
      }
      expect(sum == res.total_area, "area total mismatch");
    }
  }

  // hand traces, default stop-at-first-violation rule
  std::vector<Region> rs = {make_region(0, Region::Kind::Loop, 9000, 5000),
                            make_region(1, Region::Kind::Loop, 800, 4000),
                            make_region(2, Region::Kind::Loop, 200, 7000)};
  PartitionResult a = partition(rs, with_capacity(8000));
  expect(a.hw_regions.size() == 1 && a.hw_regions[0].id == 0 &&
             a.rationale == std::vector<SelectTag>{SelectTag::Step1Hot} &&
             a.total_area == 5000 && a.sw_cycles == 1000,
         "hand trace at capacity 8000 diverged");
  PartitionResult b = partition(rs, with_capacity(13000));
  expect(b.hw_regions.size() == 2 && b.hw_regions[0].id == 0 &&
             b.hw_regions[1].id == 1 && b.total_area == 9000 &&
             b.rationale == std::vector<SelectTag>{SelectTag::Step1Hot,
                                                   SelectTag::Step3Greedy},
         "hand trace at capacity 13000 diverged");
}

static void c7_indirect_jump() {
  ProgramImage img = testutil::corpus_image("jump_table");
  bool threw = false;
  try {
    decompile(img);
  } catch (const ToolError& e) {
    threw = true;
    expect(e.code == Err::IndirectJump,
           std::string("wrong error code: ") + e.what());
  }
  expect(threw, "decompilation unexpectedly succeeded");

#ifdef CLI_BIN
  // the command-line tool reports the same failure with its dedicated code
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "binpart_acceptance";
  fs::create_directories(dir);
  fs::path imgp = dir / "jump_table.img";
  save_image_file(img, imgp.string());
  std::string cmd = std::string(CLI_BIN) + " decomp " + imgp.string() +
                    " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  expect(WIFEXITED(rc) && WEXITSTATUS(rc) == 30,
         "cli exit code " + std::to_string(WEXITSTATUS(rc)) + ", wanted 30");
#endif
}

static void c8_metric_trends() {
  Profile prof;
  prof.total_cycles = 5000000;
  PartitionResult pr;
  pr.hw_regions.push_back(make_region(0, Region::Kind::Loop, 4500000, 1000));
  pr.rationale.push_back(SelectTag::Step1Hot);
  pr.total_area = 1000;
  std::map<int, HwResult> hw;
  hw[0] = {100000, 10};
  double prev = std::numeric_limits<double>::infinity();
  for (double clock : {40e6, 200e6, 400e6}) {
    PlatformModel plat;
    plat.cpu_clock_hz = clock;
    MetricsReport m = compute_metrics(prof, pr, hw, plat);
    expect(m.app_speedup < prev,
           "speedup not strictly decreasing at " + std::to_string(clock));
    prev = m.app_speedup;
  }

  // closed form: f = 0.9, kernel speedup 44.8, zero communication
  PlatformModel plat;
  plat.comm_cycles_per_invocation = 0;
  Profile p2;
  p2.total_cycles = 10000000;
  PartitionResult pr2;
  pr2.hw_regions.push_back(make_region(0, Region::Kind::Loop, 9000000, 1000));
  pr2.rationale.push_back(SelectTag::Step1Hot);
  pr2.total_area = 1000;
  double hw_time = (9000000.0 / plat.cpu_clock_hz) / 44.8;
  std::map<int, HwResult> hw2;
  hw2[0] = {uint64_t(std::llround(hw_time * plat.fpga_clock_hz)), 1};
  MetricsReport m = compute_metrics(p2, pr2, hw2, plat);
  expect(std::abs(m.app_speedup - 8.33) <= 0.01,
         "closed-form speedup " + std::to_string(m.app_speedup) +
             ", wanted 8.33 +- 0.01");
}

static void c9_analysis_oracles() {
  // dominators vs. the reachability oracle on random CFGs
  std::mt19937 rng(12345);
  for (int trial = 0; trial < 100; trial++) {
    int n = 2 + int(rng() % 11);  // 2..12 blocks
    std::vector<std::vector<int>> succ(n);
    for (int i = 0; i < n; i++) {
      int outs = int(rng() % 3);
      std::set<int> chosen;
      while (int(chosen.size()) < outs) chosen.insert(int(rng() % n));
      succ[i].assign(chosen.begin(), chosen.end());
    }
    ProcCdfg p;
    p.entry_block = 0;
    for (int i = 0; i < n; i++) {
      Block b;
      b.id = i;
      b.start_addr = uint32_t(0x1000 + 4 * i);
      p.blocks.push_back(b);
    }
    for (int i = 0; i < n; i++)
      for (size_t j = 0; j < succ[i].size(); j++)
        p.edges.push_back({i, succ[i][j],
                           j == 0 ? EdgeKind::Fallthrough : EdgeKind::Taken});
    DomTree dom = compute_dominators(p);
    std::vector<char> reach(n, 0);
    std::vector<int> st{0};
    reach[0] = 1;
    while (!st.empty()) {
      int u = st.back();
      st.pop_back();
      for (int v : succ[u])
        if (!reach[v]) {
          reach[v] = 1;
          st.push_back(v);
        }
    }
    for (int a = 0; a < n; a++)
      for (int b = 0; b < n; b++) {
        if (!reach[a] || !reach[b]) continue;
        if (dom.dominates(a, b) != dominates_brute(succ, 0, a, b)) {
          expect(false, "dominator mismatch at trial " + std::to_string(trial));
          return;
        }
      }
  }

  // width-masked evaluation equals the 32-bit evaluation on random inputs
  std::mt19937 rng2(4242);
  for (const auto& ps : programs()) {
    CdfgModule m = decompile(ps.img);
    run_pipeline(m, PassConfig{});
    for (int i = 0; i < 10000; i++) {
      std::vector<uint32_t> in;
      for (size_t j = 0; j < ps.inputs.size(); j++) in.push_back(rng2());
      ExecutionResult full = execute_cdfg(m, ps.img, in, 2000000);
      CdfgExecutor masked;
      masked.set_mask_widths(true);
      ExecutionResult narrow = masked.run(m, ps.img, in, 2000000);
      if (narrow.outputs != full.outputs) {
        expect(false, ps.name + ": masked outputs diverge");
        return;
      }
    }
  }
}

static void c10_vhdl_artifacts() {
  auto synth_hottest = [](const std::string& name) {
    ProgramImage img = testutil::corpus_image(name);
    auto inputs = testutil::corpus_inputs(name);
    auto [ref, prof] = profile_run(img, inputs, 2000000);
    CdfgModule m = decompile(img);
    run_pipeline(m, PassConfig{});
    auto regions = enumerate_regions(m, prof);
    const Region* best = nullptr;
    for (const auto& r : regions)
      if (r.kind == Region::Kind::Loop && r.suitability > 0 &&
          (!best || r.cycles > best->cycles))
        best = &r;
    return synthesize_region(m, *best, name + "_0");
  };

  for (const std::string name : {"dot_product", "fir", "unrolled_sum",
                                 "loop_simple"}) {
    SynthesizedRegion sr = synth_hottest(name);
    std::string text = emit_vhdl(sr.design);
    try {
      check_vhdl(text);
    } catch (const ToolError& e) {
      expect(false, name + ": " + e.what());
    }
    expect(text == emit_vhdl(sr.design), name + ": emission not deterministic");
  }

  SynthesizedRegion dp = synth_hottest("dot_product");
  std::string golden =
      testutil::read_file(std::string(GOLDEN_DIR) + "/dot_product_0.vhd");
  expect(emit_vhdl(dp.design) == golden,
         "dot_product rtl differs from the golden file");
}

int main() {
  auto t0 = std::chrono::steady_clock::now();
  criterion(1, "simulator, staged pipeline, and rtl agree on the corpus",
            c1_end_to_end);
  criterion(2, "strength promotion recovers constant multiplies",
            c2_strength_promotion);
  criterion(3, "multiplier implementation choice is schedule-optimal",
            c3_multiplier_choice);
  criterion(4, "unrolled_sum rerolls with a compact body and same outputs",
            c4_reroll);
  criterion(5, "the >=90% loop is always selected first as Step1Hot",
            c5_hot_first);
  criterion(6, "selections never exceed capacity; hand traces reproduce",
            c6_area_safety);
  criterion(7, "jump_table fails with IndirectJump and its cli exit code",
            c7_indirect_jump);
  criterion(8, "clock sweep and closed-form speedup behave as modeled",
            c8_metric_trends);
  criterion(9, "dominators and width masking match their oracles",
            c9_analysis_oracles);
  criterion(10, "emitted vhdl is checker-clean and matches the golden file",
            c10_vhdl_artifacts);
  double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::printf("%d/10 criteria passed in %.1fs\n", 10 - g_failures, dt);
  return g_failures == 0 ? 0 : 1;
}
