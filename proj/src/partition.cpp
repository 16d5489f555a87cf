#include "binpart/partition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "binpart/errors.hpp"

namespace binpart {

const char* region_kind_name(Region::Kind k) {
  switch (k) {
    case Region::Kind::Loop: return "loop";
    case Region::Kind::ProcedureBody: return "body";
    case Region::Kind::Block: return "block";
  }
  return "?";
}

const char* select_tag_name(SelectTag t) {
  switch (t) {
    case SelectTag::Step1Hot: return "Step1Hot";
    case SelectTag::Step2Alias: return "Step2Alias";
    case SelectTag::Step3Greedy: return "Step3Greedy";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// platform config
// ---------------------------------------------------------------------------

PlatformModel platform_from_text(const std::string& text) {
  PlatformModel p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    std::string key, val;
    if (eq == std::string::npos) {
      std::istringstream ls(line);
      if (!(ls >> key)) continue;  // blank
      throw ToolError(Err::BadConfig,
                      "platform line " + std::to_string(lineno) + ": no '='");
    }
    {
      std::istringstream ls(line.substr(0, eq));
      ls >> key;
      std::string extra;
      if (key.empty() || (ls >> extra))
        throw ToolError(Err::BadConfig,
                        "platform line " + std::to_string(lineno));
    }
    try {
      val = line.substr(eq + 1);
      if (key == "cpu_clock_hz") p.cpu_clock_hz = std::stod(val);
      else if (key == "fpga_clock_hz") p.fpga_clock_hz = std::stod(val);
      else if (key == "area_capacity_gates")
        p.area_capacity_gates = uint64_t(std::stod(val));
      else if (key == "comm_cycles_per_invocation")
        p.comm_cycles_per_invocation = uint64_t(std::stod(val));
      else if (key == "cpu_active_w") p.cpu_active_w = std::stod(val);
      else if (key == "fpga_active_w") p.fpga_active_w = std::stod(val);
      else if (key == "idle_w") p.idle_w = std::stod(val);
      else
        throw ToolError(Err::BadConfig, "unknown platform key: " + key);
    } catch (const std::invalid_argument&) {
      throw ToolError(Err::BadConfig, "bad value for " + key + ": " + val);
    }
  }
  if (p.cpu_clock_hz <= 0 || p.fpga_clock_hz <= 0 || p.cpu_active_w <= 0 ||
      p.fpga_active_w <= 0 || p.idle_w <= 0)
    throw ToolError(Err::BadConfig, "platform values must be positive");
  return p;
}

std::string platform_to_text(const PlatformModel& p) {
  std::ostringstream os;
  os << "cpu_clock_hz = " << p.cpu_clock_hz << "\n"
     << "fpga_clock_hz = " << p.fpga_clock_hz << "\n"
     << "area_capacity_gates = " << p.area_capacity_gates << "\n"
     << "comm_cycles_per_invocation = " << p.comm_cycles_per_invocation << "\n"
     << "cpu_active_w = " << p.cpu_active_w << "\n"
     << "fpga_active_w = " << p.fpga_active_w << "\n"
     << "idle_w = " << p.idle_w << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// area estimation
// ---------------------------------------------------------------------------

uint64_t op_gates(const IrOp& op, const GateTable& t) {
  uint64_t w = uint64_t(op.width);
  auto log2ceil = [](uint64_t v) {
    uint64_t l = 0;
    while ((uint64_t(1) << l) < v) l++;
    return std::max<uint64_t>(l, 1);
  };
  switch (op.kind) {
    case OpKind::Add:
    case OpKind::Sub:
      return t.add * w;
    case OpKind::Mul:
      return t.mul * w * w;
    case OpKind::Shl:
    case OpKind::Lshr:
    case OpKind::Ashr:
      return t.shift * w * log2ceil(std::max<uint64_t>(w, 2));
    case OpKind::And:
    case OpKind::Or:
    case OpKind::Xor:
    case OpKind::Nor:
    case OpKind::Copy:
      return t.logic * w;
    case OpKind::Slt:
    case OpKind::Sltu:
    case OpKind::BranchCond:
      return t.compare * w;
    case OpKind::Phi:
      return t.reg * w + t.mux * w;  // register plus the control-join mux
    case OpKind::Load:
    case OpKind::Store:
      return t.reg * w;  // memory interface register
    default:
      return 0;  // const wiring, jumps, calls, syscalls
  }
}

uint64_t estimate_area(const Region& region, const CdfgModule& module,
                       const GateTable& table) {
  const ProcCdfg& p = module.procs.at(region.proc);
  uint64_t total = 0;
  size_t ops = 0;
  for (int b : region.blocks)
    for (int id : p.blocks[b].ops) {
      total += op_gates(p.op(id), table);
      ops++;
    }
  if (ops && total == 0) total = 1;  // any real op occupies some area
  return total;
}

// ---------------------------------------------------------------------------
// suitability
// ---------------------------------------------------------------------------

double hardware_suitability(const Region& region, const CdfgModule& module) {
  const ProcCdfg& p = module.procs.at(region.proc);
  size_t total = 0, arith = 0;
  bool calls = false, unstructured = false;
  for (int b : region.blocks)
    for (int id : p.blocks[b].ops) {
      const IrOp& n = p.op(id);
      total++;
      switch (n.kind) {
        case OpKind::Add: case OpKind::Sub: case OpKind::Mul:
        case OpKind::And: case OpKind::Or: case OpKind::Xor:
        case OpKind::Nor: case OpKind::Shl: case OpKind::Lshr:
        case OpKind::Ashr: case OpKind::Slt: case OpKind::Sltu:
          arith++;
          break;
        case OpKind::Call:
        case OpKind::Input:
        case OpKind::Output:
          calls = true;  // syscalls are calls for synthesizability
          break;
        default:
          break;
      }
    }
  for (const auto& sn : p.structure.nodes)
    if (sn.kind == StructNode::Kind::Unstructured)
      for (int b : sn.blocks)
        if (region.blocks.count(b)) unstructured = true;
  if (calls || total == 0) return 0.0;
  double frac = double(arith) / double(total);
  return frac * (unstructured ? 0.5 : 1.0);
}

// ---------------------------------------------------------------------------
// region enumeration
// ---------------------------------------------------------------------------

namespace {

bool const_of(const ProcCdfg& p, const ValueRef& r, uint32_t* out) {
  if (r.is_entry_reg() && r.reg == 0) { *out = 0; return true; }
  if (r.is_node() && p.op(r.node).kind == OpKind::Const) {
    *out = p.op(r.node).value;
    return true;
  }
  return false;
}

// absolute address interval of a load/store base expression; false -> top.
// Induction phis are bounded by the profiled execution count of their loop
// header, so the footprint covers exactly the span the modeled run touches.
bool addr_interval(const ProcCdfg& p, const Profile& prof,
                   const ValueRef& ref, int64_t& lo, int64_t& hi) {
  uint32_t c;
  if (const_of(p, ref, &c)) { lo = hi = int64_t(c); return true; }
  if (!ref.is_node()) return false;
  const IrOp& n = p.op(ref.node);
  switch (n.kind) {
    case OpKind::Add:
    case OpKind::Sub: {
      int64_t alo, ahi, blo, bhi;
      if (!addr_interval(p, prof, n.operands[0], alo, ahi)) return false;
      if (!addr_interval(p, prof, n.operands[1], blo, bhi)) return false;
      if (n.kind == OpKind::Add) { lo = alo + blo; hi = ahi + bhi; }
      else { lo = alo - bhi; hi = ahi - blo; }
      return true;
    }
    case OpKind::Shl: {
      int64_t alo, ahi;
      if (!const_of(p, n.operands[1], &c) || (c & 31) > 16) return false;
      if (!addr_interval(p, prof, n.operands[0], alo, ahi)) return false;
      if (alo < 0) return false;
      lo = alo << (c & 31);
      hi = ahi << (c & 31);
      return true;
    }
    case OpKind::Phi: {
      for (const auto& sn : p.structure.nodes) {
        if (sn.header < 0) continue;
        for (const auto& iv : sn.inductions) {
          if (iv.phi != ref.node || !iv.has_init || !iv.has_step ||
              iv.step == 0)
            continue;
          uint64_t count = 0;
          auto it =
              prof.block_counts.find(p.blocks[sn.header].start_addr);
          if (it != prof.block_counts.end()) count = it->second;
          int64_t a = int64_t(iv.init);
          int64_t b = a + int64_t(iv.step) * int64_t(count);
          lo = std::min(a, b);
          hi = std::max(a, b);
          return true;
        }
      }
      return false;
    }
    default:
      return false;
  }
}

void collect_footprint(const ProcCdfg& p, const Profile& prof,
                       const std::set<int>& blocks,
                       std::vector<AddrRange>& out) {
  for (int b : blocks)
    for (int id : p.blocks[b].ops) {
      const IrOp& n = p.op(id);
      if (n.kind != OpKind::Load && n.kind != OpKind::Store) continue;
      AddrRange r;
      int64_t lo, hi;
      if (addr_interval(p, prof, n.operands[0], lo, hi)) {
        r.base = 0;
        r.lo = lo + int64_t(int32_t(n.value));
        r.hi = hi + int64_t(int32_t(n.value)) + 3;  // word extent
      } else {
        r.top = true;
      }
      out.push_back(r);
    }
}

uint64_t region_cycles(const ProcCdfg& p, const std::set<int>& blocks,
                       const Profile& prof) {
  uint64_t total = 0;
  for (int b : blocks)
    for (uint32_t a : p.blocks[b].insn_addrs) {
      auto it = prof.instr_cycles.find(a);
      if (it != prof.instr_cycles.end()) total += it->second;
    }
  return total;
}

uint64_t region_invocations(const ProcCdfg& p, const std::set<int>& blocks,
                            const Profile& prof) {
  // profile edges are keyed by block start address
  std::set<uint32_t> inside;
  for (int b : blocks) inside.insert(p.blocks[b].start_addr);
  uint64_t inv = 0;
  for (const auto& [edge, count] : prof.edge_counts)
    if (inside.count(edge.second) && !inside.count(edge.first)) inv += count;
  if (blocks.count(p.entry_block)) {
    // entries not accounted by any edge (program start / calls)
    uint64_t entry_total = 0, entry_edges = 0;
    uint32_t ea = p.blocks[p.entry_block].start_addr;
    auto it = prof.block_counts.find(ea);
    if (it != prof.block_counts.end()) entry_total = it->second;
    for (const auto& [edge, count] : prof.edge_counts)
      if (edge.second == ea) entry_edges += count;
    inv += entry_total > entry_edges ? entry_total - entry_edges : 0;
  }
  return inv;
}

}  // namespace

std::vector<Region> enumerate_regions(const CdfgModule& module,
                                      const Profile& profile) {
  std::vector<Region> out;
  for (const auto& [addr, p] : module.procs) {
    // loop regions, flattened to disjoint block sets
    std::vector<std::set<int>> loop_blocks;
    for (const auto& sn : p.structure.nodes) {
      if (sn.kind != StructNode::Kind::LoopPre &&
          sn.kind != StructNode::Kind::LoopPost)
        continue;
      auto cov =
          p.structure.covered(int(&sn - p.structure.nodes.data()));
      loop_blocks.emplace_back(cov.begin(), cov.end());
    }
    // subtract inner loops from enclosing ones
    std::vector<std::set<int>> flat = loop_blocks;
    for (size_t i = 0; i < flat.size(); i++)
      for (size_t j = 0; j < loop_blocks.size(); j++) {
        if (i == j || loop_blocks[j].size() >= loop_blocks[i].size()) continue;
        if (!std::includes(loop_blocks[i].begin(), loop_blocks[i].end(),
                           loop_blocks[j].begin(), loop_blocks[j].end()))
          continue;
        for (int b : loop_blocks[j]) flat[i].erase(b);
      }
    std::set<int> in_loops;
    for (const auto& s : loop_blocks) in_loops.insert(s.begin(), s.end());

    auto start_of = [&](const std::set<int>& blocks) {
      uint32_t a = UINT32_MAX;
      for (int b : blocks) a = std::min(a, p.blocks[b].start_addr);
      return a;
    };
    std::sort(flat.begin(), flat.end(),
              [&](const auto& a, const auto& b) {
                return start_of(a) < start_of(b);
              });
    for (auto& blocks : flat) {
      if (blocks.empty()) continue;
      Region r;
      r.kind = Region::Kind::Loop;
      r.proc = addr;
      r.blocks = std::move(blocks);
      out.push_back(std::move(r));
    }
    std::set<int> rest;
    for (const auto& b : p.blocks)
      if (!in_loops.count(b.id)) rest.insert(b.id);
    if (!rest.empty()) {
      Region r;
      r.kind = Region::Kind::ProcedureBody;
      r.proc = addr;
      r.blocks = std::move(rest);
      out.push_back(std::move(r));
    }
  }
  for (size_t i = 0; i < out.size(); i++) {
    Region& r = out[i];
    const ProcCdfg& p = module.procs.at(r.proc);
    r.id = int(i);
    for (int b : r.blocks)
      r.start_addr = r.start_addr == 0
                         ? p.blocks[b].start_addr
                         : std::min(r.start_addr, p.blocks[b].start_addr);
    r.cycles = region_cycles(p, r.blocks, profile);
    r.invocations = region_invocations(p, r.blocks, profile);
    r.est_area = estimate_area(r, module);
    r.suitability = hardware_suitability(r, module);
    collect_footprint(p, profile, r.blocks, r.addr_set);
  }
  return out;
}

// ---------------------------------------------------------------------------
// aliasing
// ---------------------------------------------------------------------------

std::vector<int> compute_alias_sets(const std::vector<Region>& regions) {
  size_t n = regions.size();
  std::vector<int> parent(n);
  for (size_t i = 0; i < n; i++) parent[i] = int(i);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto alias = [&](const Region& a, const Region& b) {
    bool a_top = std::any_of(a.addr_set.begin(), a.addr_set.end(),
                             [](const AddrRange& r) { return r.top; });
    bool b_top = std::any_of(b.addr_set.begin(), b.addr_set.end(),
                             [](const AddrRange& r) { return r.top; });
    if (a_top || b_top) return true;  // top aliases all regions
    for (const auto& ra : a.addr_set)
      for (const auto& rb : b.addr_set)
        if (ra.intersects(rb)) return true;
    return false;
  };
  for (size_t i = 0; i < n; i++)
    for (size_t j = i + 1; j < n; j++)
      if (alias(regions[i], regions[j])) parent[find(int(i))] = find(int(j));
  std::vector<int> group(n);
  std::map<int, int> dense;
  for (size_t i = 0; i < n; i++) {
    int root = find(int(i));
    auto it = dense.emplace(root, int(dense.size())).first;
    group[i] = it->second;
  }
  return group;
}

// ---------------------------------------------------------------------------
// partitioning
// ---------------------------------------------------------------------------

PartitionResult partition(const std::vector<Region>& regions,
                          const PlatformModel& platform,
                          const PartitionConfig& config) {
  uint64_t total_cycles = 0;
  for (const auto& r : regions) total_cycles += r.cycles;
  if (regions.empty() || total_cycles == 0)
    throw ToolError(Err::EmptyProfile, "no profiled cycles to partition");

  PartitionResult res;
  std::vector<bool> selected(regions.size(), false);
  uint64_t used = 0;
  const uint64_t cap = platform.area_capacity_gates;
  auto fits = [&](const Region& r) { return used + r.est_area <= cap; };
  std::vector<size_t> sel_order;
  auto take = [&](size_t i, SelectTag tag) {
    selected[i] = true;
    used += regions[i].est_area;
    res.hw_regions.push_back(regions[i]);
    res.rationale.push_back(tag);
    sel_order.push_back(i);
  };
  auto hotter = [&](size_t a, size_t b) {  // ranking for steps 1 and 2
    const Region &ra = regions[a], &rb = regions[b];
    if (ra.cycles != rb.cycles) return ra.cycles > rb.cycles;
    if (ra.est_area != rb.est_area) return ra.est_area < rb.est_area;
    if (ra.start_addr != rb.start_addr) return ra.start_addr < rb.start_addr;
    return a < b;
  };

  // Step 1: hottest loops until the selection covers the hot fraction
  std::vector<size_t> loops;
  for (size_t i = 0; i < regions.size(); i++)
    if (regions[i].kind == Region::Kind::Loop) loops.push_back(i);
  std::sort(loops.begin(), loops.end(), hotter);
  uint64_t hot_cycles = 0;
  for (size_t i : loops) {
    if (double(hot_cycles) >= config.hot_fraction * double(total_cycles))
      break;
    if (!fits(regions[i])) continue;  // never fits alone: skipped
    take(i, SelectTag::Step1Hot);
    hot_cycles += regions[i].cycles;
  }

  // Step 2: alias partners of the selected regions, hottest first
  std::vector<int> group = compute_alias_sets(regions);
  for (size_t s = 0; s < sel_order.size(); s++) {
    int g = group[sel_order[s]];
    std::vector<size_t> partners;
    for (size_t i = 0; i < regions.size(); i++)
      if (!selected[i] && group[i] == g) partners.push_back(i);
    std::sort(partners.begin(), partners.end(), hotter);
    for (size_t i : partners)
      if (fits(regions[i])) take(i, SelectTag::Step2Alias);
  }

  // Step 3: greedy by cycles x suitability; stop at the first region that
  // violates the area constraint (unless configured to skip over it)
  std::vector<size_t> rest;
  for (size_t i = 0; i < regions.size(); i++)
    if (!selected[i] && regions[i].cycles * regions[i].suitability > 0)
      rest.push_back(i);
  std::sort(rest.begin(), rest.end(), [&](size_t a, size_t b) {
    double sa = double(regions[a].cycles) * regions[a].suitability;
    double sb = double(regions[b].cycles) * regions[b].suitability;
    if (sa != sb) return sa > sb;
    return hotter(a, b);
  });
  for (size_t i : rest) {
    if (fits(regions[i])) {
      take(i, SelectTag::Step3Greedy);
    } else if (!config.skip_and_continue) {
      break;
    }
  }

  for (size_t i = 0; i < regions.size(); i++) {
    if (selected[i]) continue;
    res.sw_cycles += regions[i].cycles;
    for (int b : regions[i].blocks) res.sw_blocks.push_back({regions[i].proc, b});
  }
  std::sort(res.sw_blocks.begin(), res.sw_blocks.end());
  res.total_area = used;
  if (used > cap)
    res.violations.push_back("area " + std::to_string(used) + " exceeds " +
                             std::to_string(cap));
  return res;
}

std::string PartitionResult::to_text() const {
  std::ostringstream os;
  for (size_t i = 0; i < hw_regions.size(); i++)
    os << "hw " << hw_regions[i].id << " " << select_tag_name(rationale[i])
       << " " << hw_regions[i].cycles << " " << hw_regions[i].est_area << "\n";
  os << "sw-cycles " << sw_cycles << "\n";
  os << "total-gates " << total_area << "\n";
  return os.str();
}

}  // namespace binpart
