#include "binpart/synth.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

#include "binpart/errors.hpp"
#include "binpart/passes.hpp"

namespace binpart {

const char* unit_class_name(UnitClass c) {
  switch (c) {
    case UnitClass::Adder: return "adder";
    case UnitClass::Multiplier: return "mul";
    case UnitClass::Shifter: return "shift";
    case UnitClass::Logic: return "logic";
    case UnitClass::Comparator: return "cmp";
    case UnitClass::MemoryPort: return "mem";
    case UnitClass::None: return "none";
  }
  return "?";
}

UnitClass unit_class_of(OpKind kind) {
  switch (kind) {
    case OpKind::Add:
    case OpKind::Sub:
      return UnitClass::Adder;
    case OpKind::Mul:
      return UnitClass::Multiplier;
    case OpKind::Shl:
    case OpKind::Lshr:
    case OpKind::Ashr:
      return UnitClass::Shifter;
    case OpKind::And:
    case OpKind::Or:
    case OpKind::Xor:
    case OpKind::Nor:
    case OpKind::Copy:
      return UnitClass::Logic;
    case OpKind::Slt:
    case OpKind::Sltu:
    case OpKind::BranchCond:
      return UnitClass::Comparator;
    case OpKind::Load:
    case OpKind::Store:
      return UnitClass::MemoryPort;
    default:
      return UnitClass::None;  // const, phi, jump: wires and transitions
  }
}

int unit_count(const ResourceSet& r, UnitClass c) {
  switch (c) {
    case UnitClass::Adder: return r.adders;
    case UnitClass::Multiplier: return r.multipliers;
    case UnitClass::Shifter: return r.shifters;
    case UnitClass::Logic: return r.logic_units;
    case UnitClass::Comparator: return r.comparators;
    case UnitClass::MemoryPort: return r.memory_ports;
    case UnitClass::None: return 0;
  }
  return 0;
}

int unit_latency(const ResourceSet& r, UnitClass c) {
  return c == UnitClass::Multiplier ? r.mul_latency : 1;
}

// ---------------------------------------------------------------------------
// region extraction
// ---------------------------------------------------------------------------

RegionCdfg extract_region(const ProcCdfg& proc, const std::set<int>& blocks) {
  RegionCdfg rc;
  // header: the unique block entered from outside
  int header = -1;
  for (int b : blocks) {
    bool entered = b == proc.entry_block;
    for (int p : proc.preds(b))
      if (!blocks.count(p)) entered = true;
    if (!entered) continue;
    if (header >= 0)
      throw ToolError(Err::BadConfig, "region is not single-entry");
    header = b;
  }
  if (header < 0)
    throw ToolError(Err::BadConfig, "region has no entry block");

  std::map<int, int> bmap;  // original block -> copy block
  for (int b : blocks) {
    bmap[b] = int(rc.orig_block.size());
    rc.orig_block.push_back(b);
  }

  // pre-assign copied ids so phi back-references resolve
  for (int b : blocks)
    for (int id : proc.blocks[b].ops)
      rc.node_map[id] = int(rc.node_map.size());

  std::vector<int> extra_consts;  // external constants cloned into the copy
  std::map<ValueRef, int> port_of;
  auto xlate = [&](const ValueRef& r) -> ValueRef {
    if (!r.valid()) return r;
    if (r.is_entry_reg() && r.reg == 0) return r;
    if (r.is_node() && !r.is_call_reg()) {
      auto it = rc.node_map.find(r.node);
      if (it != rc.node_map.end()) return ValueRef::of_node(it->second);
      if (proc.op(r.node).kind == OpKind::Const) {
        // clone the constant rather than spending a port on it
        int id = int(rc.proc.nodes.size());
        IrOp c = proc.op(r.node);
        c.id = id;
        c.operands.clear();
        rc.proc.nodes.push_back(c);
        extra_consts.push_back(id);
        rc.node_map[r.node] = id;
        return ValueRef::of_node(id);
      }
    }
    auto [it, fresh] = port_of.insert({r, int(rc.ports.size())});
    if (fresh) rc.ports.push_back(r);
    if (it->second + 1 > 31)
      throw ToolError(Err::BadConfig, "region needs more than 31 ports");
    return ValueRef::of_entry_reg(it->second + 1);
  };

  rc.proc.name = proc.name;
  rc.proc.entry_addr = proc.entry_addr;
  rc.proc.nodes.resize(rc.node_map.size());
  for (int b : blocks) {
    if (b != header)
      for (int p : proc.preds(b))
        if (!blocks.count(p))
          throw ToolError(Err::BadConfig, "region is not single-entry");
    Block nb;
    nb.id = bmap[b];
    nb.start_addr = proc.blocks[b].start_addr;
    nb.insn_addrs = proc.blocks[b].insn_addrs;
    for (int id : proc.blocks[b].ops) nb.ops.push_back(rc.node_map[id]);
    while (int(rc.proc.blocks.size()) <= nb.id) rc.proc.blocks.push_back({});
    rc.proc.blocks[nb.id] = std::move(nb);
  }
  rc.proc.entry_block = bmap[header];

  // intra-region edges and indexed exits
  for (const auto& e : proc.edges) {
    if (!blocks.count(e.from)) continue;
    if (blocks.count(e.to)) {
      rc.proc.edges.push_back({bmap[e.from], bmap[e.to], e.kind});
    } else {
      rc.exits.push_back({bmap[e.from], e.kind, e.from, e.to});
    }
  }

  // node payloads with translated operands
  // operand order must agree with the copied proc's own notion of it
  auto pred_order_in_copy = [&](int orig_block_id) {
    return rc.proc.phi_pred_order(bmap[orig_block_id]);
  };
  for (int b : blocks)
    for (int id : proc.blocks[b].ops) {
      const IrOp& src = proc.op(id);
      if (src.kind == OpKind::Call || src.kind == OpKind::Return ||
          src.kind == OpKind::Input || src.kind == OpKind::Output)
        throw ToolError(Err::BadConfig,
                        "region contains unsynthesizable op at " +
                            std::to_string(src.origin));
      IrOp n = src;
      n.id = rc.node_map[id];
      if (src.kind == OpKind::Phi) {
        // remap operands from the original to the copied predecessor order;
        // all external predecessors must agree on one entry value
        auto orig_order = proc.phi_pred_order(b);
        std::vector<ValueRef> by_pred = src.operands;
        ValueRef entry = ValueRef::none();
        std::map<int, ValueRef> inside_ops;  // copied pred -> operand
        for (size_t i = 0; i < orig_order.size(); i++) {
          int p = orig_order[i];
          if (p >= 0 && blocks.count(p)) {
            inside_ops[bmap[p]] = by_pred[i];
          } else {
            if (entry.valid() && !(entry == by_pred[i]))
              throw ToolError(Err::BadConfig,
                              "region entry phi has conflicting inputs");
            entry = by_pred[i];
          }
        }
        n.operands.clear();
        for (int p : pred_order_in_copy(b))
          n.operands.push_back(xlate(p == -1 ? entry : inside_ops.at(p)));
      } else {
        for (auto& r : n.operands) r = xlate(r);
      }
      rc.proc.nodes[n.id] = std::move(n);
    }
  // cloned constants live in the entry block, ahead of everything non-phi
  if (!extra_consts.empty()) {
    Block& eb = rc.proc.blocks[rc.proc.entry_block];
    size_t at = 0;
    while (at < eb.ops.size() &&
           rc.proc.op(eb.ops[at]).kind == OpKind::Phi)
      at++;
    eb.ops.insert(eb.ops.begin() + long(at), extra_consts.begin(),
                  extra_consts.end());
  }

  for (auto [a, b2] : proc.mem_edges)
    if (rc.node_map.count(a) && rc.node_map.count(b2))
      rc.proc.mem_edges.push_back({rc.node_map[a], rc.node_map[b2]});

  // region values consumed after exit
  std::set<int> outs;
  for (const auto& blk : proc.blocks) {
    if (blocks.count(blk.id)) continue;
    for (int id : blk.ops)
      for (const auto& r : proc.op(id).operands)
        if (r.is_node() && rc.node_map.count(r.node)) outs.insert(r.node);
  }
  for (int id : outs) {
    rc.live_out_orig.push_back(id);
    rc.live_out.push_back(rc.node_map[id]);
  }
  return rc;
}

// ---------------------------------------------------------------------------
// scheduling
// ---------------------------------------------------------------------------

namespace {

// same-block dependence edges (data plus memory order) among scheduled ops
std::map<int, std::vector<int>> block_deps(const ProcCdfg& p, const Block& b) {
  std::set<int> here(b.ops.begin(), b.ops.end());
  std::map<int, std::vector<int>> preds;  // user -> producers
  for (int id : b.ops) {
    const IrOp& n = p.op(id);
    if (n.kind == OpKind::Phi || unit_class_of(n.kind) == UnitClass::None)
      continue;
    for (const auto& r : n.operands) {
      if (!r.is_node() || !here.count(r.node)) continue;
      const IrOp& d = p.op(r.node);
      if (d.kind == OpKind::Phi || unit_class_of(d.kind) == UnitClass::None)
        continue;
      preds[id].push_back(r.node);
    }
  }
  for (auto [a, c] : p.mem_edges)
    if (here.count(a) && here.count(c)) preds[c].push_back(a);
  return preds;
}

}  // namespace

Schedule schedule(const ProcCdfg& proc, const ResourceSet& res) {
  Schedule s;
  for (const auto& b : proc.blocks) {
    auto preds = block_deps(proc, b);
    std::map<int, std::vector<int>> succs;
    for (const auto& [u, ds] : preds)
      for (int d : ds) succs[d].push_back(u);

    std::vector<int> todo;
    for (int id : b.ops) {
      const IrOp& n = proc.op(id);
      if (n.kind != OpKind::Phi && unit_class_of(n.kind) != UnitClass::None)
        todo.push_back(id);
    }
    // critical path to block exit
    std::map<int, int> cp;
    std::function<int(int)> path = [&](int u) {
      auto it = cp.find(u);
      if (it != cp.end()) return it->second;
      int lat = unit_latency(res, unit_class_of(proc.op(u).kind));
      int best = 0;
      for (int v : succs[u]) best = std::max(best, path(v));
      return cp[u] = lat + best;
    };
    for (int id : todo) path(id);

    std::map<int, int> finish;  // node -> finish step
    // per class: last occupied step per instance
    std::map<UnitClass, std::vector<int>> busy;
    std::set<int> pending(todo.begin(), todo.end());
    int step = 0, max_finish = 0;
    while (!pending.empty()) {
      step++;
      if (step > int(proc.nodes.size()) * (res.mul_latency + 1) + 8)
        throw ToolError(Err::NoFeasibleImpl,
                        "schedule does not converge in block " +
                            std::to_string(b.id));
      std::vector<int> ready;
      for (int id : pending) {
        bool ok = true;
        for (int d : preds[id])
          if (!finish.count(d) || finish[d] >= step) ok = false;
        if (ok) ready.push_back(id);
      }
      std::sort(ready.begin(), ready.end(), [&](int x, int y) {
        if (cp[x] != cp[y]) return cp[x] > cp[y];
        return x < y;
      });
      for (int id : ready) {
        UnitClass c = unit_class_of(proc.op(id).kind);
        int count = unit_count(res, c);
        if (count <= 0)
          throw ToolError(Err::NoFeasibleImpl,
                          std::string("no ") + unit_class_name(c) +
                              " available");
        auto& lanes = busy[c];
        lanes.resize(size_t(count), 0);
        int lat = unit_latency(res, c);
        for (int inst = 0; inst < count; inst++) {
          if (lanes[inst] >= step) continue;
          lanes[inst] = step + lat - 1;
          s.slots[id] = {step, c, inst};
          finish[id] = step + lat - 1;
          max_finish = std::max(max_finish, step + lat - 1);
          pending.erase(id);
          break;
        }
      }
    }
    s.block_steps[b.id] = std::max(max_finish, 1);
    // block-local bookkeeping resets
  }
  return s;
}

int Schedule::total_steps() const {
  int t = 0;
  for (const auto& [b, n] : block_steps) t += n;
  return t;
}

std::string Schedule::to_text() const {
  std::ostringstream os;
  std::vector<std::pair<std::pair<int, int>, int>> rows;  // ((step, id), id)
  for (const auto& [id, slot] : slots) rows.push_back({{slot.step, id}, id});
  std::sort(rows.begin(), rows.end());
  for (const auto& [key, id] : rows) {
    const Slot& sl = slots.at(id);
    os << "step " << sl.step << ": " << id << "@" << unit_class_name(sl.cls)
       << "#" << sl.instance << "\n";
  }
  return os.str();
}

void check_schedule(const ProcCdfg& proc, const ResourceSet& res,
                    const Schedule& s) {
  auto fail = [](const std::string& m) {
    throw ToolError(Err::BadConfig, "schedule check: " + m);
  };
  for (const auto& b : proc.blocks) {
    std::vector<int> here;
    for (int id : b.ops) {
      const IrOp& n = proc.op(id);
      bool needs = n.kind != OpKind::Phi &&
                   unit_class_of(n.kind) != UnitClass::None;
      if (needs && !s.slots.count(id))
        fail("node " + std::to_string(id) + " unscheduled");
      if (needs) here.push_back(id);
    }
    int steps = 0;
    auto it = s.block_steps.find(b.id);
    if (it == s.block_steps.end() || it->second < 1)
      fail("block " + std::to_string(b.id) + " has no step count");
    steps = it->second;
    // occupancy: per (class, instance), intervals must not overlap
    std::map<std::pair<UnitClass, int>, std::vector<std::pair<int, int>>> occ;
    for (int id : here) {
      const Schedule::Slot& sl = s.slots.at(id);
      UnitClass c = unit_class_of(proc.op(id).kind);
      int lat = unit_latency(res, c);
      if (sl.cls != c) fail("node " + std::to_string(id) + " on wrong unit");
      if (sl.instance < 0 || sl.instance >= unit_count(res, c))
        fail("node " + std::to_string(id) + " instance out of range");
      if (sl.step < 1 || sl.step + lat - 1 > steps)
        fail("node " + std::to_string(id) + " outside block steps");
      occ[{c, sl.instance}].push_back({sl.step, sl.step + lat - 1});
    }
    for (auto& [unit, iv] : occ) {
      std::sort(iv.begin(), iv.end());
      for (size_t i = 1; i < iv.size(); i++)
        if (iv[i].first <= iv[i - 1].second) fail("unit double-booked");
    }
    auto deps = block_deps(proc, b);
    for (const auto& [u, ds] : deps)
      for (int d : ds) {
        int lat = unit_latency(res, unit_class_of(proc.op(d).kind));
        if (s.slots.at(u).step < s.slots.at(d).step + lat)
          fail("dependence " + std::to_string(d) + "->" + std::to_string(u) +
               " violated");
      }
  }
}

// ---------------------------------------------------------------------------
// multiplier implementation decision
// ---------------------------------------------------------------------------

namespace {

bool const_operand(const ProcCdfg& p, const IrOp& n, uint32_t* c, int* idx) {
  for (int i = 0; i < 2; i++) {
    const ValueRef& r = n.operands[size_t(i)];
    if (r.is_entry_reg() && r.reg == 0) { *c = 0; *idx = i; return true; }
    if (r.is_node() && p.op(r.node).kind == OpKind::Const) {
      *c = p.op(r.node).value;
      *idx = i;
      return true;
    }
  }
  return false;
}

// replaces `mul_id` with its shift/add form, inline at the same position
void expand_mul(ProcCdfg& p, int mul_id, const ShiftAddForm& form,
                ValueRef x) {
  int bi = -1;
  size_t pos = 0;
  for (const auto& b : p.blocks)
    for (size_t i = 0; i < b.ops.size(); i++)
      if (b.ops[i] == mul_id) { bi = b.id; pos = i; }
  assert(bi >= 0);
  Block& b = p.blocks[bi];
  uint32_t origin = p.op(mul_id).origin;
  std::vector<int> emitted;
  std::function<ValueRef(int)> emit = [&](int i) -> ValueRef {
    const auto& n = form.nodes[size_t(i)];
    switch (n.k) {
      case ShiftAddForm::K::Var:
        return x;
      case ShiftAddForm::K::Shl: {
        ValueRef a = emit(n.a);
        int c = p.new_node(OpKind::Const, {}, origin);
        p.op(c).value = uint32_t(n.shamt);
        emitted.push_back(c);
        int sh = p.new_node(OpKind::Shl, {a, ValueRef::of_node(c)}, origin);
        emitted.push_back(sh);
        return ValueRef::of_node(sh);
      }
      case ShiftAddForm::K::Add:
      case ShiftAddForm::K::Sub: {
        ValueRef a = emit(n.a);
        ValueRef c = emit(n.b);
        int op = p.new_node(
            n.k == ShiftAddForm::K::Add ? OpKind::Add : OpKind::Sub, {a, c},
            origin);
        emitted.push_back(op);
        return ValueRef::of_node(op);
      }
    }
    return ValueRef::none();
  };
  ValueRef root = emit(form.root);
  b.ops.erase(b.ops.begin() + long(pos));
  b.ops.insert(b.ops.begin() + long(pos), emitted.begin(), emitted.end());
  for (auto& n : p.nodes)
    for (auto& r : n.operands)
      if (r.is_node() && r.node == mul_id && !r.is_call_reg()) r = root;
}

}  // namespace

std::map<int, MulImpl> decide_multiplier_impls(RegionCdfg& region,
                                               const ResourceSet& res) {
  ProcCdfg& p = region.proc;
  struct Cand {
    int id;
    ShiftAddForm form;
    ValueRef x;
  };
  std::vector<Cand> cands;
  std::vector<int> fixed_muls;  // no alternative form
  for (const auto& b : p.blocks)
    for (int id : b.ops) {
      const IrOp& n = p.op(id);
      if (n.kind != OpKind::Mul) continue;
      uint32_t c;
      int ci;
      if (n.anno) {
        cands.push_back({id, *n.anno, n.operands[0]});
      } else if (const_operand(p, n, &c, &ci)) {
        cands.push_back({id, csd_expand(c), n.operands[ci ^ 1]});
      } else {
        fixed_muls.push_back(id);
      }
    }
  if (!fixed_muls.empty() && res.multipliers < 1)
    throw ToolError(Err::NoFeasibleImpl,
                    "multiply without shift/add alternative and no "
                    "multiplier unit");

  std::map<int, MulImpl> best_combo;
  if (cands.empty()) return best_combo;
  if (cands.size() > 10) {
    // degenerate: keep the multiplier form wherever one exists
    for (const auto& c : cands)
      best_combo[c.id] =
          res.multipliers >= 1 ? MulImpl::UseMultiplier : MulImpl::UseShiftAdd;
  } else {
    long best_len = -1;
    int best_expanded = 0;
    uint32_t best_mask = 0;
    for (uint32_t mask = 0; mask < (1u << cands.size()); mask++) {
      ProcCdfg trial = p;
      int expanded = 0;
      for (size_t i = 0; i < cands.size(); i++)
        if (mask & (1u << i)) {
          expand_mul(trial, cands[i].id, cands[i].form, cands[i].x);
          expanded++;
        }
      long len;
      try {
        len = schedule(trial, res).total_steps();
      } catch (const ToolError& e) {
        if (e.code == Err::NoFeasibleImpl) continue;
        throw;
      }
      if (best_len < 0 || len < best_len ||
          (len == best_len && expanded < best_expanded)) {
        best_len = len;
        best_expanded = expanded;
        best_mask = mask;
      }
    }
    if (best_len < 0)
      throw ToolError(Err::NoFeasibleImpl, "no feasible multiplier choice");
    for (size_t i = 0; i < cands.size(); i++) {
      bool exp = best_mask & (1u << i);
      best_combo[cands[i].id] =
          exp ? MulImpl::UseShiftAdd : MulImpl::UseMultiplier;
      if (exp) expand_mul(p, cands[i].id, cands[i].form, cands[i].x);
    }
  }
  return best_combo;
}

// ---------------------------------------------------------------------------
// binding
// ---------------------------------------------------------------------------

RtlDesign bind(const RegionCdfg& region, const Schedule& sched,
               const ResourceSet& res, const std::string& name) {
  RtlDesign d;
  d.name = name;
  d.region = region;
  d.sched = sched;
  d.resources = res;
  const ProcCdfg& p = d.region.proc;
  for (const auto& b : p.blocks)
    for (int s = 1; s <= sched.block_steps.at(b.id); s++)
      d.states.push_back({b.id, s});

  // values that must survive a block boundary get dedicated registers
  std::map<int, int> block_of;
  for (const auto& b : p.blocks)
    for (int id : b.ops) block_of[id] = b.id;
  std::set<int> live_out(region.live_out.begin(), region.live_out.end());
  auto produces_value = [&](const IrOp& n) {
    switch (n.kind) {
      case OpKind::Store:
      case OpKind::BranchCond:  // holds its condition bit until block end
      case OpKind::Jump:
        return n.kind == OpKind::BranchCond;
      default:
        return n.kind != OpKind::Const;
    }
  };
  std::set<int> cross;
  for (const auto& b : p.blocks)
    for (int id : b.ops) {
      const IrOp& n = p.op(id);
      if (n.kind == OpKind::Phi) { cross.insert(id); continue; }
      if (!produces_value(n)) continue;
      if (n.kind == OpKind::BranchCond) { cross.insert(id); continue; }
      if (live_out.count(id)) { cross.insert(id); continue; }
      for (const auto& other : p.nodes)
        for (const auto& r : other.operands)
          if (r.is_node() && r.node == id && !r.is_call_reg() &&
              (block_of.at(other.id) != b.id || other.kind == OpKind::Phi))
            cross.insert(id);
    }
  for (int id : cross) d.reg_of[id] = d.reg_count++;

  // within-block values: left-edge sharing over step intervals
  for (const auto& b : p.blocks) {
    struct Interval { int start, end, id; };
    std::vector<Interval> ivs;
    for (int id : b.ops) {
      const IrOp& n = p.op(id);
      if (cross.count(id) || !produces_value(n) || n.kind == OpKind::Phi ||
          n.kind == OpKind::Const)
        continue;
      auto it = sched.slots.find(id);
      if (it == sched.slots.end()) continue;
      int fin = it->second.step +
                unit_latency(res, unit_class_of(n.kind)) - 1;
      // consumers sample operands combinationally at their finish step
      int last = fin;
      for (int u : b.ops)
        for (const auto& r : p.op(u).operands)
          if (r.is_node() && r.node == id && sched.slots.count(u))
            last = std::max(
                last, sched.slots.at(u).step +
                          unit_latency(res, unit_class_of(p.op(u).kind)) - 1);
      ivs.push_back({fin, last, id});
    }
    std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b2) {
      return a.start != b2.start ? a.start < b2.start : a.id < b2.id;
    });
    std::vector<int> pool_end;   // per pool register: last step in use
    std::vector<int> pool_reg;   // pool slot -> register index
    for (const auto& iv : ivs) {
      int slot = -1;
      for (size_t i = 0; i < pool_end.size(); i++)
        if (pool_end[i] < iv.start) { slot = int(i); break; }
      if (slot < 0) {
        slot = int(pool_end.size());
        pool_end.push_back(0);
        pool_reg.push_back(d.reg_count++);
      }
      pool_end[size_t(slot)] = iv.end;
      d.reg_of[iv.id] = pool_reg[size_t(slot)];
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// RTL simulation
// ---------------------------------------------------------------------------

namespace {

uint32_t mem_load(const std::unordered_map<uint32_t, uint8_t>& mem,
                  uint32_t addr, MemAccess acc) {
  auto byte = [&](uint32_t a) -> uint8_t {
    auto it = mem.find(a);
    return it == mem.end() ? 0 : it->second;
  };
  if (acc == MemAccess::Word) {
    if (addr % 4)
      throw ToolError(Err::UnalignedAccess, "rtl load at " +
                                                std::to_string(addr));
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v |= uint32_t(byte(addr + i)) << (8 * i);
    return v;
  }
  uint8_t b = byte(addr);
  return acc == MemAccess::ByteSigned ? uint32_t(int32_t(int8_t(b)))
                                      : uint32_t(b);
}

void mem_store(std::unordered_map<uint32_t, uint8_t>& mem, uint32_t addr,
               uint32_t v, MemAccess acc) {
  if (acc == MemAccess::Word) {
    if (addr % 4)
      throw ToolError(Err::UnalignedAccess, "rtl store at " +
                                                std::to_string(addr));
    for (int i = 0; i < 4; i++) mem[addr + i] = uint8_t(v >> (8 * i));
  } else {
    mem[addr] = uint8_t(v);
  }
}

}  // namespace

RegionRun simulate_rtl(const RtlDesign& design,
                       const std::vector<uint32_t>& port_values,
                       std::unordered_map<uint32_t, uint8_t>& memory,
                       uint64_t max_cycles) {
  const ProcCdfg& p = design.region.proc;
  if (port_values.size() != design.region.ports.size())
    throw ToolError(Err::BadConfig, "port value count mismatch");
  std::vector<uint32_t> vals(p.nodes.size(), 0);
  for (const auto& n : p.nodes)
    if (n.kind == OpKind::Const) vals[size_t(n.id)] = n.value;
  auto eval = [&](const ValueRef& r) -> uint32_t {
    if (r.is_entry_reg())
      return r.reg == 0 ? 0 : port_values[size_t(r.reg - 1)];
    return vals[size_t(r.node)];
  };
  RegionRun run;
  int block = p.entry_block;
  int from = -1;
  bool done = false;
  while (!done) {
    const Block& b = p.blocks[block];
    // phi registers update on the transition into the block
    auto order = p.phi_pred_order(block);
    int pred_idx = -1;
    for (size_t i = 0; i < order.size(); i++)
      if (order[i] == from) pred_idx = int(i);
    std::vector<std::pair<int, uint32_t>> updates;
    for (int id : b.ops) {
      const IrOp& n = p.op(id);
      if (n.kind != OpKind::Phi) break;
      assert(pred_idx >= 0);
      updates.push_back({id, eval(n.operands[size_t(pred_idx)])});
    }
    for (auto [id, v] : updates) vals[size_t(id)] = v;

    int taken_branch = -1;
    int steps = design.sched.block_steps.at(block);
    for (int step = 1; step <= steps; step++) {
      run.hw_cycles++;
      if (run.hw_cycles > max_cycles)
        throw ToolError(Err::MaxCyclesExceeded,
                        std::to_string(max_cycles) + " rtl cycles");
      for (int id : b.ops) {
        auto it = design.sched.slots.find(id);
        if (it == design.sched.slots.end()) continue;
        const IrOp& n = p.op(id);
        int fin = it->second.step +
                  unit_latency(design.resources, it->second.cls) - 1;
        if (fin != step) continue;
        auto a = [&] { return eval(n.operands[0]); };
        auto c = [&] { return eval(n.operands[1]); };
        switch (n.kind) {
          case OpKind::Copy: vals[id] = a(); break;
          case OpKind::Add: vals[id] = a() + c(); break;
          case OpKind::Sub: vals[id] = a() - c(); break;
          case OpKind::Mul: vals[id] = a() * c(); break;
          case OpKind::And: vals[id] = a() & c(); break;
          case OpKind::Or: vals[id] = a() | c(); break;
          case OpKind::Xor: vals[id] = a() ^ c(); break;
          case OpKind::Nor: vals[id] = ~(a() | c()); break;
          case OpKind::Shl: vals[id] = a() << (c() & 31); break;
          case OpKind::Lshr: vals[id] = a() >> (c() & 31); break;
          case OpKind::Ashr:
            vals[id] = uint32_t(int32_t(a()) >> (c() & 31));
            break;
          case OpKind::Slt:
            vals[id] = int32_t(a()) < int32_t(c()) ? 1 : 0;
            break;
          case OpKind::Sltu: vals[id] = a() < c() ? 1 : 0; break;
          case OpKind::Load:
            vals[id] = mem_load(memory, a() + n.value, MemAccess(n.aux));
            break;
          case OpKind::Store:
            mem_store(memory, a() + n.value, c(), MemAccess(n.aux));
            break;
          case OpKind::BranchCond: {
            bool t;
            switch (CondCode(n.aux)) {
              case CondCode::Eq: t = a() == c(); break;
              case CondCode::Ne: t = a() != c(); break;
              case CondCode::Lez: t = int32_t(a()) <= 0; break;
              case CondCode::Gtz: t = int32_t(a()) > 0; break;
              default: t = false; break;
            }
            vals[id] = t ? 1 : 0;
            taken_branch = id;
            break;
          }
          default:
            break;
        }
      }
    }

    // control transfer at block end; an edge may be internal or an exit
    auto take = [&](EdgeKind k) {
      int next = p.succ_on(block, k);
      if (next >= 0) {
        from = block;
        block = next;
        return true;
      }
      for (size_t i = 0; i < design.region.exits.size(); i++) {
        const auto& ex = design.region.exits[i];
        if (ex.copy_block == block && ex.kind == k) {
          run.exit_index = int(i);
          done = true;
          return true;
        }
      }
      return false;
    };
    EdgeKind want = EdgeKind::Fallthrough;
    if (taken_branch >= 0)
      want = vals[size_t(taken_branch)] ? EdgeKind::Taken
                                        : EdgeKind::Fallthrough;
    else if (p.terminator(block) >= 0 &&
             p.op(p.terminator(block)).kind == OpKind::Jump)
      want = EdgeKind::Taken;
    EdgeKind alt =
        want == EdgeKind::Taken ? EdgeKind::Fallthrough : EdgeKind::Taken;
    if (!take(want) && !take(alt))
      throw ToolError(Err::BadConfig, "rtl control fell off block " +
                                          std::to_string(block));
  }
  for (int id : design.region.live_out) run.outputs.push_back(vals[size_t(id)]);
  run.hw_cycles += kHandshakeCycles;
  return run;
}

// ---------------------------------------------------------------------------
// top level and partitioned execution
// ---------------------------------------------------------------------------

SynthesizedRegion synthesize_region(const CdfgModule& module,
                                    const Region& region,
                                    const std::string& name,
                                    const ResourceSet& res) {
  const ProcCdfg& p = module.procs.at(region.proc);
  SynthesizedRegion out;
  out.region_id = region.id;
  out.proc_addr = region.proc;
  out.blocks = region.blocks;
  RegionCdfg rc = extract_region(p, region.blocks);
  out.header_block = rc.orig_block[size_t(rc.proc.entry_block)];
  out.mul_decisions = decide_multiplier_impls(rc, res);
  Schedule s = schedule(rc.proc, res);
  check_schedule(rc.proc, res, s);
  out.design = binpart::bind(rc, s, res, name);
  return out;
}

bool PartitionedExecutor::on_block_entry(Frame& frame, int from, int& block) {
  auto it = regions_.find({frame.proc->entry_addr, block});
  if (it == regions_.end()) return false;
  const SynthesizedRegion* r = it->second;
  if (from >= 0 && r->blocks.count(from)) return false;  // internal edge
  std::vector<uint32_t> ports;
  for (const auto& ref : r->design.region.ports)
    ports.push_back(frame.eval(ref));
  RegionRun run = simulate_rtl(r->design, ports, memory(), rtl_cycle_cap);
  const auto& lo = r->design.region.live_out_orig;
  for (size_t i = 0; i < lo.size(); i++)
    frame.values[size_t(lo[i])] = run.outputs[i];
  hw_cycles_[r->region_id] += run.hw_cycles;
  invocations_[r->region_id]++;
  const auto& ex = r->design.region.exits[size_t(run.exit_index)];
  hook_exit_ = ex.source_block;
  block = ex.target_block;
  return true;
}

uint64_t PartitionedExecutor::hw_cycles(int region_id) const {
  auto it = hw_cycles_.find(region_id);
  return it == hw_cycles_.end() ? 0 : it->second;
}

uint64_t PartitionedExecutor::invocations(int region_id) const {
  auto it = invocations_.find(region_id);
  return it == invocations_.end() ? 0 : it->second;
}

}  // namespace binpart
