#include "binpart/passes.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "binpart/decompile.hpp"

namespace binpart {

namespace {

bool pure_binary(OpKind k) {
  switch (k) {
    case OpKind::Add: case OpKind::Sub: case OpKind::Mul:
    case OpKind::And: case OpKind::Or: case OpKind::Xor: case OpKind::Nor:
    case OpKind::Shl: case OpKind::Lshr: case OpKind::Ashr:
    case OpKind::Slt: case OpKind::Sltu:
      return true;
    default:
      return false;
  }
}

uint32_t fold(OpKind k, uint32_t a, uint32_t b) {
  switch (k) {
    case OpKind::Add: return a + b;
    case OpKind::Sub: return a - b;
    case OpKind::Mul: return a * b;
    case OpKind::And: return a & b;
    case OpKind::Or: return a | b;
    case OpKind::Xor: return a ^ b;
    case OpKind::Nor: return ~(a | b);
    case OpKind::Shl: return a << (b & 31);
    case OpKind::Lshr: return a >> (b & 31);
    case OpKind::Ashr: return uint32_t(int32_t(a) >> (b & 31));
    case OpKind::Slt: return int32_t(a) < int32_t(b) ? 1 : 0;
    case OpKind::Sltu: return a < b ? 1 : 0;
    default: return 0;
  }
}

// constant value of a reference, if statically known without dataflow
bool const_ref(const ProcCdfg& proc, const ValueRef& r, uint32_t* v) {
  if (r.is_entry_reg() && r.reg == 0) { *v = 0; return true; }
  if (r.is_node() && proc.op(r.node).kind == OpKind::Const) {
    *v = proc.op(r.node).value;
    return true;
  }
  return false;
}

bool has_side_effect(OpKind k) {
  switch (k) {
    case OpKind::Store: case OpKind::BranchCond: case OpKind::Jump:
    case OpKind::Call: case OpKind::Return: case OpKind::Input:
    case OpKind::Output:
      return true;
    default:
      return false;
  }
}

// drop pure ops whose results are never referenced
bool dce(ProcCdfg& proc, PassReport& rep, const char* pass) {
  std::vector<char> live(proc.nodes.size(), 0);
  std::vector<int> work;
  for (const auto& b : proc.blocks)
    for (int id : b.ops)
      if (has_side_effect(proc.op(id).kind)) { live[id] = 1; work.push_back(id); }
  while (!work.empty()) {
    int id = work.back();
    work.pop_back();
    for (const auto& r : proc.op(id).operands)
      if (r.node >= 0 && !live[r.node]) { live[r.node] = 1; work.push_back(r.node); }
  }
  bool changed = false;
  for (auto& b : proc.blocks) {
    std::vector<int> keep;
    keep.reserve(b.ops.size());
    for (int id : b.ops) {
      if (live[id]) {
        keep.push_back(id);
      } else {
        rep.note(pass, id, "dce");
        changed = true;
      }
    }
    b.ops = std::move(keep);
  }
  if (changed) {
    std::vector<std::pair<int, int>> kept;
    for (auto [a, b] : proc.mem_edges)
      if (live[a] && live[b]) kept.push_back({a, b});
    proc.mem_edges = std::move(kept);
  }
  return changed;
}

// (user node, operand index) lists per defining node
std::map<int, std::vector<std::pair<int, int>>> build_uses(const ProcCdfg& proc) {
  std::map<int, std::vector<std::pair<int, int>>> uses;
  for (const auto& b : proc.blocks)
    for (int id : b.ops) {
      const IrOp& n = proc.op(id);
      for (size_t i = 0; i < n.operands.size(); i++)
        if (n.operands[i].node >= 0)
          uses[n.operands[i].node].push_back({id, int(i)});
    }
  return uses;
}

void drop_from_block(Block& b, const std::set<int>& ids) {
  std::vector<int> keep;
  for (int id : b.ops)
    if (!ids.count(id)) keep.push_back(id);
  b.ops = std::move(keep);
}

void insert_before(Block& b, int anchor, int id) {
  auto it = std::find(b.ops.begin(), b.ops.end(), anchor);
  b.ops.insert(it, id);
}

}  // namespace

// ---------------------------------------------------------------------------
// constant propagation
// ---------------------------------------------------------------------------

bool propagate_constants(ProcCdfg& proc, PassReport& rep) {
  bool any = false;
  int iterations = 0;
  for (;;) {
    iterations++;
    bool changed = false;

    // constant lattice over SSA values (pessimistic sweeps to a fixpoint)
    std::map<int, uint32_t> cv;
    auto known = [&](const ValueRef& r, uint32_t* v) {
      if (r.is_entry_reg() && r.reg == 0) { *v = 0; return true; }
      if (!r.is_node()) return false;
      auto it = cv.find(r.node);
      if (it == cv.end()) return false;
      *v = it->second;
      return true;
    };
    for (bool grow = true; grow;) {
      grow = false;
      for (const auto& b : proc.blocks)
        for (int id : b.ops) {
          if (cv.count(id)) continue;
          const IrOp& n = proc.op(id);
          uint32_t a, c;
          if (n.kind == OpKind::Const) {
            cv[id] = n.value;
            grow = true;
          } else if (n.kind == OpKind::Copy) {
            if (known(n.operands[0], &a)) { cv[id] = a; grow = true; }
          } else if (n.kind == OpKind::Phi) {
            // self-references contribute nothing: phi(c, self) is always c
            bool ok = true, have = false;
            uint32_t common = 0;
            for (const auto& r : n.operands) {
              if (r.is_node() && r.node == id) continue;
              uint32_t v;
              if (!known(r, &v)) { ok = false; break; }
              if (have && v != common) { ok = false; break; }
              common = v;
              have = true;
            }
            if (ok && have) { cv[id] = common; grow = true; }
          } else if (pure_binary(n.kind)) {
            if (known(n.operands[0], &a) && known(n.operands[1], &c)) {
              cv[id] = fold(n.kind, a, c);
              grow = true;
            }
          }
        }
    }

    // fold value ops with known results into const nodes
    for (auto& b : proc.blocks)
      for (int id : b.ops) {
        IrOp& n = proc.op(id);
        if (n.kind == OpKind::Const) continue;
        bool foldable = pure_binary(n.kind) || n.kind == OpKind::Copy ||
                        n.kind == OpKind::Phi;
        if (!foldable || !cv.count(id)) continue;
        const char* rule = n.kind == OpKind::Phi ? "phi-const" : "fold-const";
        n.kind = OpKind::Const;
        n.value = cv[id];
        n.operands.clear();
        n.anno = nullptr;
        rep.note("constants", id, rule);
        changed = true;
      }

    // identity rewrites
    for (auto& b : proc.blocks)
      for (int id : b.ops) {
        IrOp& n = proc.op(id);
        uint32_t v;
        auto is_c = [&](int i, uint32_t want) {
          return const_ref(proc, n.operands[i], &v) && v == want;
        };
        auto to_copy = [&](int keep, const char* rule) {
          ValueRef src = n.operands[keep];
          n.kind = OpKind::Copy;
          n.operands = {src};
          rep.note("constants", id, rule);
          changed = true;
        };
        auto to_const = [&](uint32_t val, const char* rule) {
          n.kind = OpKind::Const;
          n.value = val;
          n.operands.clear();
          n.anno = nullptr;
          rep.note("constants", id, rule);
          changed = true;
        };
        switch (n.kind) {
          case OpKind::Add:
            if (is_c(1, 0)) to_copy(0, "add-zero");
            else if (is_c(0, 0)) to_copy(1, "add-zero");
            break;
          case OpKind::Sub:
            if (is_c(1, 0)) to_copy(0, "sub-zero");
            break;
          case OpKind::Or:
            if (is_c(1, 0)) to_copy(0, "or-zero");
            else if (is_c(0, 0)) to_copy(1, "or-zero");
            break;
          case OpKind::Xor:
            if (is_c(1, 0)) to_copy(0, "xor-zero");
            else if (is_c(0, 0)) to_copy(1, "xor-zero");
            break;
          case OpKind::And:
            if (is_c(1, 0xFFFFFFFFu)) to_copy(0, "and-ones");
            else if (is_c(0, 0xFFFFFFFFu)) to_copy(1, "and-ones");
            else if (is_c(1, 0) || is_c(0, 0)) to_const(0, "and-zero");
            break;
          case OpKind::Mul:
            if (is_c(1, 1)) to_copy(0, "mul-one");
            else if (is_c(0, 1)) to_copy(1, "mul-one");
            else if (is_c(1, 0) || is_c(0, 0)) to_const(0, "mul-zero");
            break;
          case OpKind::Shl:
          case OpKind::Lshr:
          case OpKind::Ashr:
            if (is_c(1, 0)) to_copy(0, "shift-zero");
            break;
          default:
            break;
        }
      }

    // chase copies to their sources everywhere (phis included)
    for (auto& b : proc.blocks)
      for (int id : b.ops) {
        IrOp& n = proc.op(id);
        for (auto& r : n.operands) {
          int guard = 0;
          while (r.is_node() && proc.op(r.node).kind == OpKind::Copy &&
                 guard++ < 64) {
            r = proc.op(r.node).operands[0];
            rep.note("constants", id, "copy-chase");
            changed = true;
          }
        }
      }

    if (!changed) break;
    any = true;
  }
  // folding a phi in place can leave a const among the leading phis;
  // restore the phis-first block layout
  if (any)
    for (auto& b : proc.blocks)
      std::stable_partition(b.ops.begin(), b.ops.end(), [&](int id) {
        return proc.op(id).kind == OpKind::Phi;
      });
  if (dce(proc, rep, "constants")) any = true;
  rep.stages.push_back({"constants", 0, 0, iterations});
  return any;
}

// ---------------------------------------------------------------------------
// stack operation removal
// ---------------------------------------------------------------------------

bool remove_stack_ops(ProcCdfg& proc, PassReport& rep) {
  // 1. symbolic tracking of sp-relative values (offsets from entry $29)
  std::map<int, int64_t> delta;
  auto sp_of = [&](const ValueRef& r, int64_t* d) {
    if (r.is_entry_reg() && r.reg == 29) { *d = 0; return true; }
    if (r.is_node()) {
      auto it = delta.find(r.node);
      if (it != delta.end()) { *d = it->second; return true; }
    }
    return false;
  };
  for (bool grow = true; grow;) {
    grow = false;
    for (const auto& b : proc.blocks)
      for (int id : b.ops) {
        if (delta.count(id)) continue;
        const IrOp& n = proc.op(id);
        int64_t d;
        uint32_t c;
        if (n.kind == OpKind::Copy && sp_of(n.operands[0], &d)) {
          delta[id] = d;
          grow = true;
        } else if (n.kind == OpKind::Add) {
          if (sp_of(n.operands[0], &d) && const_ref(proc, n.operands[1], &c)) {
            delta[id] = d + int32_t(c);
            grow = true;
          } else if (sp_of(n.operands[1], &d) &&
                     const_ref(proc, n.operands[0], &c)) {
            delta[id] = d + int32_t(c);
            grow = true;
          }
        } else if (n.kind == OpKind::Sub && sp_of(n.operands[0], &d) &&
                   const_ref(proc, n.operands[1], &c)) {
          delta[id] = d - int32_t(c);
          grow = true;
        }
      }
  }

  // 2. escape analysis: sp values may feed loads/stores (as base), further
  // tracked sp arithmetic, or return register slots (the frame below the
  // returned sp is dead). Anything else publishes a frame address.
  bool escapes = false;
  int64_t ret_floor = INT64_MAX;  // promote only slots strictly below this
  for (const auto& b : proc.blocks)
    for (int id : b.ops) {
      const IrOp& n = proc.op(id);
      for (size_t i = 0; i < n.operands.size(); i++) {
        int64_t d;
        if (!sp_of(n.operands[i], &d)) continue;
        if ((n.kind == OpKind::Load || n.kind == OpKind::Store) && i == 0)
          continue;
        if ((n.kind == OpKind::Add || n.kind == OpKind::Sub ||
             n.kind == OpKind::Copy) && delta.count(id))
          continue;
        if (n.kind == OpKind::Return) {
          ret_floor = std::min(ret_floor, d);
          continue;
        }
        escapes = true;  // calls, stores-as-data, outputs, phis, compares...
      }
      // any untracked-base or byte-sized access could alias the frame
      if (n.kind == OpKind::Load || n.kind == OpKind::Store) {
        int64_t d;
        if (!sp_of(n.operands[0], &d) ||
            MemAccess(n.aux) != MemAccess::Word)
          escapes = true;
      }
    }
  if (escapes || delta.empty()) {
    rep.stages.push_back({"stack", 0, 0, 1});
    return false;
  }

  // 3. group word accesses by slot offset
  std::map<int64_t, std::vector<int>> slot_stores, slot_loads;
  std::map<int, int64_t> acc_slot;  // memory op -> slot
  for (const auto& b : proc.blocks)
    for (int id : b.ops) {
      const IrOp& n = proc.op(id);
      if (n.kind != OpKind::Load && n.kind != OpKind::Store) continue;
      int64_t d = 0;
      sp_of(n.operands[0], &d);  // always tracked: escapes was false
      int64_t slot = d + int32_t(n.value);
      acc_slot[id] = slot;
      (n.kind == OpKind::Store ? slot_stores : slot_loads)[slot].push_back(id);
    }

  // 4. reaching-store resolution per load: unique store value on all paths
  struct SlotVal { bool bot = true; ValueRef v; };
  auto meet = [](const SlotVal& a, const SlotVal& b) {
    if (a.bot || b.bot || !(a.v == b.v)) return SlotVal{};
    return a;
  };
  auto resolve_load = [&](int64_t slot, int load_id) -> SlotVal {
    // value of `slot` at block entry, memoized; cycles/entry give bottom
    std::map<int, SlotVal> at_entry;
    std::set<int> visiting;
    std::function<SlotVal(int)> entry_val = [&](int blk) -> SlotVal {
      auto it = at_entry.find(blk);
      if (it != at_entry.end()) return it->second;
      if (blk == proc.entry_block || visiting.count(blk)) return SlotVal{};
      visiting.insert(blk);
      SlotVal out;
      bool first = true;
      for (int p : proc.preds(blk)) {
        SlotVal v = entry_val(p);
        // apply block p
        for (int id : proc.blocks[p].ops) {
          const IrOp& n = proc.op(id);
          if (n.kind == OpKind::Call) v = SlotVal{};
          if (n.kind == OpKind::Store && acc_slot[id] == slot)
            v = SlotVal{false, n.operands[1]};
        }
        out = first ? v : meet(out, v);
        first = false;
      }
      if (first) out = SlotVal{};
      visiting.erase(blk);
      at_entry[blk] = out;
      return out;
    };
    for (const auto& b : proc.blocks) {
      auto pos = std::find(b.ops.begin(), b.ops.end(), load_id);
      if (pos == b.ops.end()) continue;
      SlotVal v = entry_val(b.id);
      for (auto it = b.ops.begin(); it != pos; ++it) {
        const IrOp& n = proc.op(*it);
        if (n.kind == OpKind::Call) v = SlotVal{};
        if (n.kind == OpKind::Store && acc_slot[*it] == slot)
          v = SlotVal{false, n.operands[1]};
      }
      return v;
    }
    return SlotVal{};
  };

  bool changed = false;
  std::set<int> removed;
  for (auto& [slot, loads] : slot_loads) {
    if (slot >= ret_floor) continue;
    std::map<int, ValueRef> fwd;
    bool ok = true;
    for (int l : loads) {
      SlotVal v = resolve_load(slot, l);
      if (v.bot) { ok = false; break; }
      fwd[l] = v.v;
    }
    if (!ok) continue;
    for (auto [l, src] : fwd) {
      for (auto& b : proc.blocks)
        for (int id : b.ops)
          for (auto& r : proc.op(id).operands)
            if (r.is_node() && r.node == l) r = src;
      removed.insert(l);
      rep.note("stack", l, "load-forward");
    }
    for (int s : slot_stores[slot]) {
      removed.insert(s);
      rep.note("stack", s, "store-remove");
    }
    changed = true;
  }
  // store-only slots below the return floor are dead
  for (auto& [slot, stores] : slot_stores) {
    if (slot >= ret_floor || slot_loads.count(slot)) continue;
    for (int s : stores) {
      removed.insert(s);
      rep.note("stack", s, "dead-store");
    }
    changed = true;
  }

  if (changed) {
    for (auto& b : proc.blocks) drop_from_block(b, removed);
    std::vector<std::pair<int, int>> kept;
    for (auto [a, b] : proc.mem_edges)
      if (!removed.count(a) && !removed.count(b)) kept.push_back({a, b});
    proc.mem_edges = std::move(kept);
    dce(proc, rep, "stack");
  }
  rep.stages.push_back({"stack", 0, 0, 1});
  return changed;
}

// ---------------------------------------------------------------------------
// strength promotion
// ---------------------------------------------------------------------------

ShiftAddForm csd_expand(uint32_t c) {
  ShiftAddForm f;
  int var = 0;
  f.nodes.push_back({ShiftAddForm::K::Var, -1, -1, 0});
  // canonical signed-digit recoding: digits in {-1,0,+1}, no two adjacent;
  // terms with shift >= 32 vanish modulo 2^32 and are dropped
  std::vector<std::pair<int, int>> terms;  // (shift, sign)
  int64_t y = int64_t(uint64_t(c));
  int i = 0;
  while (y) {
    if (y & 1) {
      int d = 2 - int(y & 3);
      if (i < 32) terms.push_back({i, d});
      y -= d;
    }
    y >>= 1;
    i++;
  }
  if (terms.empty()) {
    f.root = int(f.nodes.size());
    f.nodes.push_back({ShiftAddForm::K::Sub, var, var, 0});  // x - x == 0
    return f;
  }
  auto term = [&](int shift) {
    if (shift == 0) return var;
    f.nodes.push_back({ShiftAddForm::K::Shl, var, -1, shift});
    return int(f.nodes.size()) - 1;
  };
  // combine as (sum of positive digits) - (sum of negative digits); when the
  // leading positive digit sat at shift 32 and vanished, the positive side
  // can be empty -- the wanted value is then -N, rebuilt as N - 2N with the
  // doubled terms reduced modulo 2^32
  std::vector<int> pos, neg;
  for (auto [shift, sign] : terms) (sign > 0 ? pos : neg).push_back(shift);
  if (pos.empty()) {
    pos = neg;
    neg.clear();
    for (int s : pos)
      if (s + 1 < 32) neg.push_back(s + 1);
  }
  auto chain = [&](const std::vector<int>& shifts) {
    int acc = term(shifts.back());
    for (int t = int(shifts.size()) - 2; t >= 0; t--) {
      int rhs = term(shifts[t]);
      f.nodes.push_back({ShiftAddForm::K::Add, acc, rhs, 0});
      acc = int(f.nodes.size()) - 1;
    }
    return acc;
  };
  int acc = chain(pos);
  if (!neg.empty()) {
    int rhs = chain(neg);
    f.nodes.push_back({ShiftAddForm::K::Sub, acc, rhs, 0});
    acc = int(f.nodes.size()) - 1;
  }
  f.root = acc;
  return f;
}

ValueRef build_shift_add(ProcCdfg& proc, int block, const ShiftAddForm& form,
                         ValueRef x, uint32_t origin) {
  Block& b = proc.blocks[block];
  int anchor = proc.terminator(block);
  auto place = [&](int id) {
    if (anchor >= 0)
      insert_before(b, anchor, id);
    else
      b.ops.push_back(id);
  };
  std::function<ValueRef(int)> emit = [&](int i) -> ValueRef {
    const auto& n = form.nodes[i];
    switch (n.k) {
      case ShiftAddForm::K::Var:
        return x;
      case ShiftAddForm::K::Shl: {
        ValueRef a = emit(n.a);
        int c = proc.new_node(OpKind::Const, {}, origin);
        proc.op(c).value = uint32_t(n.shamt);
        place(c);
        int s = proc.new_node(OpKind::Shl, {a, ValueRef::of_node(c)}, origin);
        place(s);
        return ValueRef::of_node(s);
      }
      case ShiftAddForm::K::Add:
      case ShiftAddForm::K::Sub: {
        ValueRef a = emit(n.a);
        ValueRef bb = emit(n.b);
        int s = proc.new_node(
            n.k == ShiftAddForm::K::Add ? OpKind::Add : OpKind::Sub, {a, bb},
            origin);
        place(s);
        return ValueRef::of_node(s);
      }
    }
    return ValueRef::none();
  };
  return emit(form.root);
}

bool promote_strength(ProcCdfg& proc, PassReport& rep,
                      const PassConfig& config) {
  bool changed = false;
  auto uses = build_uses(proc);
  std::set<int> consumed;

  // op ids in reverse placement order so outermost roots match first
  std::vector<std::pair<int, int>> order;  // (block, op)
  for (const auto& b : proc.blocks)
    for (int id : b.ops) order.push_back({b.id, id});
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto [blk, root] = *it;
    const IrOp& rn = proc.op(root);
    if (consumed.count(root)) continue;
    if (rn.kind != OpKind::Add && rn.kind != OpKind::Sub &&
        rn.kind != OpKind::Shl)
      continue;

    ShiftAddForm form;
    ValueRef x = ValueRef::none();
    std::vector<int> internal;
    bool failed = false;
    std::function<int(const ValueRef&, bool)> go = [&](const ValueRef& r,
                                                       bool is_root) -> int {
      if (failed) return -1;
      bool tree_node = false;
      uint32_t shamt = 0;
      if (r.is_node() && !consumed.count(r.node)) {
        const IrOp& n = proc.op(r.node);
        if ((n.kind == OpKind::Add || n.kind == OpKind::Sub) &&
            (is_root || uses[r.node].size() == 1) &&
            int(internal.size()) < config.promote_max_chain)
          tree_node = true;
        if (n.kind == OpKind::Shl && (is_root || uses[r.node].size() == 1) &&
            int(internal.size()) < config.promote_max_chain &&
            const_ref(proc, n.operands[1], &shamt) && shamt < 32)
          tree_node = true;
      }
      if (tree_node) {
        const IrOp& n = proc.op(r.node);
        internal.push_back(r.node);
        if (n.kind == OpKind::Shl) {
          int a = go(n.operands[0], false);
          form.nodes.push_back({ShiftAddForm::K::Shl, a, -1, int(shamt)});
        } else {
          int a = go(n.operands[0], false);
          int b = go(n.operands[1], false);
          form.nodes.push_back({n.kind == OpKind::Add ? ShiftAddForm::K::Add
                                                      : ShiftAddForm::K::Sub,
                                a, b, 0});
        }
        return int(form.nodes.size()) - 1;
      }
      // leaf: the single variable
      if (r.is_node() && proc.op(r.node).kind == OpKind::Const) {
        failed = true;  // constant leaves belong to constant folding
        return -1;
      }
      if (x.valid() && !(x == r)) {
        failed = true;
        return -1;
      }
      x = r;
      form.nodes.push_back({ShiftAddForm::K::Var, -1, -1, 0});
      return int(form.nodes.size()) - 1;
    };
    form.root = go(ValueRef::of_node(root), true);
    if (failed || !x.valid() || int(internal.size()) < 2) continue;
    uint32_t c = form.eval(1);
    if (c == 0 || c == 1) continue;

    int cid = proc.new_node(OpKind::Const, {}, rn.origin);
    proc.op(cid).value = c;
    insert_before(proc.blocks[blk], root, cid);
    IrOp& mul = proc.op(root);
    mul.kind = OpKind::Mul;
    mul.operands = {x, ValueRef::of_node(cid)};
    mul.anno = std::make_shared<ShiftAddForm>(form);
    rep.note("promote", root, "promote-mul-" + std::to_string(c));
    for (int id : internal)
      if (id != root) consumed.insert(id);
    consumed.insert(root);
    changed = true;
  }
  if (changed) dce(proc, rep, "promote");
  rep.stages.push_back({"promote", 0, 0, 1});
  return changed;
}

// ---------------------------------------------------------------------------
// loop rerolling
// ---------------------------------------------------------------------------

namespace {

struct GroupMatch {
  int k = 0, m = 0;
  std::vector<int> seq;            // k*m op ids
  int64_t stride = 0;              // shared progression stride (0: none)
  bool has_stride = false;
  std::set<int> reductions;        // positions t whose carry crosses groups
  std::map<int, int> red_index;    // position -> operand index of the carry
  std::map<int, ValueRef> carry;   // position -> group-0 carry-in
  std::set<int> value_prog;        // positions with displacement progression
  std::set<int> const_prog;        // Const positions with value progression
};

// classify ops the group matcher must never treat as body work
bool groupable(OpKind k) {
  switch (k) {
    case OpKind::BranchCond: case OpKind::Jump: case OpKind::Call:
    case OpKind::Return: case OpKind::Phi: case OpKind::Input:
    case OpKind::Output:
      return false;
    default:
      return true;
  }
}

// try to split `seq` into k isomorphic groups; on failure sets *why
bool match_groups(const ProcCdfg& proc,
                  const std::map<int, std::vector<std::pair<int, int>>>& uses,
                  const std::vector<int>& seq, int k, GroupMatch* out,
                  std::string* why) {
  int len = int(seq.size());
  if (k < 2 || len % k != 0) { *why = "group count does not divide"; return false; }
  int m = len / k;
  GroupMatch gm;
  gm.k = k;
  gm.m = m;
  gm.seq = seq;
  std::map<int, std::pair<int, int>> pos;  // id -> (group, position)
  for (int j = 0; j < k; j++)
    for (int t = 0; t < m; t++) pos[seq[j * m + t]] = {j, t};

  for (int t = 0; t < m; t++) {
    const IrOp& a = proc.op(seq[t]);
    if (!groupable(a.kind)) { *why = "control or call op in body"; return false; }
    for (int j = 1; j < k; j++) {
      const IrOp& b = proc.op(seq[j * m + t]);
      if (a.kind != b.kind || a.aux != b.aux ||
          a.operands.size() != b.operands.size()) {
        *why = "op kind mismatch";
        return false;
      }
      // displacement / const payload progression
      if (a.kind == OpKind::Const || a.kind == OpKind::Load ||
          a.kind == OpKind::Store) {
        int64_t diff = int64_t(int32_t(b.value - a.value));
        if (diff != 0) {
          if (diff % j != 0) { *why = "non-constant stride"; return false; }
          int64_t s = diff / j;
          if (gm.has_stride && s != gm.stride) {
            *why = "non-constant stride";
            return false;
          }
          gm.stride = s;
          gm.has_stride = true;
          (a.kind == OpKind::Const ? gm.const_prog : gm.value_prog).insert(t);
        }
      } else if (a.value != b.value) {
        *why = "payload mismatch";
        return false;
      }
      for (size_t q = 0; q < a.operands.size(); q++) {
        ValueRef r0 = a.operands[q], rj = b.operands[q];
        auto p0 = r0.is_node() && pos.count(r0.node)
                      ? pos[r0.node]
                      : std::pair<int, int>{-1, -1};
        auto pj = rj.is_node() && pos.count(rj.node)
                      ? pos[rj.node]
                      : std::pair<int, int>{-1, -1};
        if (p0.first == 0 && pj == std::pair<int, int>{j, p0.second})
          continue;  // intra-group reference at matching position
        if (p0.first < 0 && pj.first < 0 && r0 == rj) continue;  // invariant
        // reduction carry: group j reads position t of group j-1
        if (pj == std::pair<int, int>{j - 1, t} && p0.first < 0) {
          auto it = gm.red_index.find(t);
          if (it != gm.red_index.end() && it->second != int(q)) {
            *why = "cross-group flow";
            return false;
          }
          gm.red_index[t] = int(q);
          gm.reductions.insert(t);
          gm.carry[t] = r0;
          continue;
        }
        *why = "cross-group flow";
        return false;
      }
    }
  }
  // use discipline: non-final group results stay within their group or the
  // following group's reduction slot
  for (int j = 0; j + 1 < k; j++)
    for (int t = 0; t < m; t++) {
      int id = seq[j * m + t];
      auto it = uses.find(id);
      if (it == uses.end()) continue;
      for (auto [user, q] : it->second) {
        auto pit = pos.find(user);
        if (pit != pos.end() && pit->second.first == j) continue;
        if (pit != pos.end() && pit->second == std::pair<int, int>{j + 1, t} &&
            gm.red_index.count(t) && gm.red_index[t] == q)
          continue;
        *why = "cross-group flow";
        return false;
      }
    }
  // inter-group memory-order edges would become loop-carried
  for (auto [a, b] : proc.mem_edges) {
    auto ia = pos.find(a), ib = pos.find(b);
    if (ia != pos.end() && ib != pos.end() &&
        ia->second.first != ib->second.first) {
      *why = "inter-group memory dependence";
      return false;
    }
  }
  *out = gm;
  return true;
}

// ops belonging to the terminator's private backward slice within a block
std::set<int> terminator_slice(
    const ProcCdfg& proc,
    const std::map<int, std::vector<std::pair<int, int>>>& uses, int block) {
  std::set<int> slice;
  int term = proc.terminator(block);
  if (term < 0) return slice;
  slice.insert(term);
  const std::vector<int>& ops = proc.blocks[block].ops;
  std::set<int> in_block(ops.begin(), ops.end());
  for (bool grow = true; grow;) {
    grow = false;
    for (int id : slice) {
      for (const auto& r : proc.op(id).operands) {
        if (!r.is_node() || !in_block.count(r.node) || slice.count(r.node))
          continue;
        if (proc.op(r.node).kind == OpKind::Phi) continue;
        bool only_slice = true;
        auto it = uses.find(r.node);
        if (it != uses.end())
          for (auto [user, q] : it->second)
            if (!slice.count(user)) only_slice = false;
        if (only_slice) {
          slice.insert(r.node);
          grow = true;
          break;
        }
      }
      if (grow) break;
    }
  }
  return slice;
}

void rewire_all(ProcCdfg& proc, const std::map<int, ValueRef>& repl) {
  for (auto& b : proc.blocks)
    for (int id : b.ops)
      for (auto& r : proc.op(id).operands) {
        if (!r.is_node()) continue;
        auto it = repl.find(r.node);
        if (it != repl.end()) r = it->second;
      }
}

// fuse k unrolled groups inside a single-block self-loop back into the loop
bool try_fuse_loop(ProcCdfg& proc, PassReport& rep, const PassConfig& config,
                   int block) {
  bool self_loop = false;
  for (const auto& e : proc.edges)
    if (e.from == block && e.to == block) self_loop = true;
  if (!self_loop) return false;

  auto uses = build_uses(proc);
  Block& b = proc.blocks[block];
  auto order = proc.phi_pred_order(block);
  int back_idx = -1;
  for (size_t i = 0; i < order.size(); i++)
    if (order[i] == block) back_idx = int(i);
  if (back_idx < 0) return false;

  // induction: phi updated by add(phi, const) feeding its own back edge
  int iv_phi = -1, iv_update = -1;
  int64_t step = 0;
  uint32_t iv_init = 0;
  bool init_known = false;
  for (int id : b.ops) {
    const IrOp& n = proc.op(id);
    if (n.kind != OpKind::Phi) continue;
    ValueRef back = n.operands[back_idx];
    if (!back.is_node()) continue;
    const IrOp& u = proc.op(back.node);
    if (u.kind != OpKind::Add) continue;
    uint32_t c;
    ValueRef self = ValueRef::of_node(id);
    bool upd = (u.operands[0] == self && const_ref(proc, u.operands[1], &c)) ||
               (u.operands[1] == self && const_ref(proc, u.operands[0], &c));
    if (!upd) continue;
    iv_phi = id;
    iv_update = back.node;
    step = int32_t(c);
    uint32_t init;
    for (size_t i = 0; i < order.size(); i++)
      if (order[i] != block && const_ref(proc, n.operands[i], &init)) {
        iv_init = init;
        init_known = true;
      }
    break;
  }
  if (iv_phi < 0 || !init_known || step == 0) return false;

  // exit test: slt/sltu(updated-iv, const bound), branch ne taken to self
  int term = proc.terminator(block);
  if (term < 0) return false;
  const IrOp& br = proc.op(term);
  if (br.kind != OpKind::BranchCond || CondCode(br.aux) != CondCode::Ne)
    return false;
  if (proc.succ_on(block, EdgeKind::Taken) != block) return false;
  if (!br.operands[0].is_node()) return false;
  const IrOp& cmp = proc.op(br.operands[0].node);
  if (cmp.kind != OpKind::Slt && cmp.kind != OpKind::Sltu) return false;
  uint32_t bound;
  if (!(cmp.operands[0] == ValueRef::of_node(iv_update)) ||
      !const_ref(proc, cmp.operands[1], &bound))
    return false;
  int64_t span = int64_t(int32_t(bound)) - int64_t(int32_t(iv_init));
  if (span <= 0) return false;

  // candidate body: everything except phis, the induction update (and its
  // private const), and the exit-test slice
  std::set<int> excluded = terminator_slice(proc, uses, block);
  excluded.insert(iv_update);
  for (const auto& r : proc.op(iv_update).operands)
    if (r.is_node() && proc.op(r.node).kind == OpKind::Const &&
        uses[r.node].size() == 1)
      excluded.insert(r.node);
  std::vector<int> seq;
  for (int id : b.ops)
    if (proc.op(id).kind != OpKind::Phi && !excluded.count(id))
      seq.push_back(id);
  if (seq.size() < 2) return false;

  std::string last_reject;
  for (int k = std::min(config.reroll_max_factor, int(seq.size())); k >= 2;
       k--) {
    if (int(seq.size()) % k != 0) continue;
    GroupMatch gm;
    std::string why;
    if (!match_groups(proc, uses, seq, k, &gm, &why)) {
      last_reject = why;
      continue;
    }
    if (!gm.has_stride || gm.stride <= 0 || step != k * gm.stride ||
        !gm.const_prog.empty()) {
      last_reject = "stride incompatible with induction step";
      continue;
    }
    if (span % step != 0) {
      last_reject = "trip bound not aligned to unrolled step";
      continue;
    }
    // references to the induction inside the body must be progressing
    // load/store bases compensated by the displacement progression
    bool bad = false;
    for (int t = 0; t < gm.m && !bad; t++) {
      const IrOp& n = proc.op(seq[t]);
      for (size_t q = 0; q < n.operands.size(); q++) {
        bool is_iv = n.operands[q] == ValueRef::of_node(iv_phi) ||
                     n.operands[q] == ValueRef::of_node(iv_update);
        if (!is_iv) continue;
        bool good = (n.kind == OpKind::Load || n.kind == OpKind::Store) &&
                    q == 0 && gm.value_prog.count(t);
        if (!good) bad = true;
      }
    }
    // every loop phi fed from inside the groups must be a validated carry
    for (int id : b.ops) {
      const IrOp& n = proc.op(id);
      if (n.kind != OpKind::Phi || bad) continue;
      ValueRef back = n.operands[back_idx];
      if (!back.is_node()) continue;
      auto at = std::find(gm.seq.begin(), gm.seq.end(), back.node);
      if (at == gm.seq.end()) continue;
      int idx = int(at - gm.seq.begin());
      int grp = idx / gm.m, t = idx % gm.m;
      if (grp != k - 1 || !gm.reductions.count(t) ||
          !(gm.carry[t] == ValueRef::of_node(id)))
        bad = true;
    }
    if (bad) {
      last_reject = "loop-carried dependence";
      continue;
    }

    // --- apply the fusion ---
    int s_node = proc.new_node(OpKind::Const, {}, proc.op(iv_update).origin);
    proc.op(s_node).value = uint32_t(gm.stride);
    insert_before(b, iv_update, s_node);
    for (auto& r : proc.op(iv_update).operands)
      if (r.is_node() && proc.op(r.node).kind == OpKind::Const)
        r = ValueRef::of_node(s_node);

    // last-group values are the body values of the final iteration
    std::map<int, ValueRef> repl;
    for (int t = 0; t < gm.m; t++)
      repl[gm.seq[(k - 1) * gm.m + t]] = ValueRef::of_node(gm.seq[t]);
    rewire_all(proc, repl);

    std::set<int> dead(gm.seq.begin() + gm.m, gm.seq.end());
    drop_from_block(b, dead);
    std::vector<std::pair<int, int>> kept;
    for (auto [x, y] : proc.mem_edges)
      if (!dead.count(x) && !dead.count(y)) kept.push_back({x, y});
    proc.mem_edges = std::move(kept);
    // hoist loop-invariant constants into the preheader so the rolled body
    // carries only the real work
    std::vector<int> outside;
    for (int p : proc.preds(block))
      if (p != block) outside.push_back(p);
    if (outside.size() == 1) {
      Block& pre = proc.blocks[outside[0]];
      int anchor = proc.terminator(outside[0]);
      std::vector<int> keep;
      for (int id : b.ops) {
        if (proc.op(id).kind == OpKind::Const) {
          if (anchor >= 0)
            insert_before(pre, anchor, id);
          else
            pre.ops.push_back(id);
        } else {
          keep.push_back(id);
        }
      }
      b.ops = std::move(keep);
    }
    rep.note("reroll", gm.seq[0], "fuse-x" + std::to_string(k));
    return true;
  }
  if (!last_reject.empty())
    rep.reroll_rejects.push_back("block @" +
                                 std::to_string(proc.blocks[block].start_addr) +
                                 ": " + last_reject);
  return false;
}

// materialize a fresh post-test loop from a straight-line group match;
// returns false if the candidate ops are not physically contiguous
bool apply_straight_roll(ProcCdfg& proc, PassReport& rep, int block,
                         const GroupMatch& gm) {
  const int k = gm.k, m = gm.m;
  const std::set<int> cand(gm.seq.begin(), gm.seq.end());
  {
    // require physical contiguity so prefix/suffix placement is trivial
    const std::vector<int>& ops = proc.blocks[block].ops;
    int first = -1, last = -1;
    for (size_t i = 0; i < ops.size(); i++)
      if (cand.count(ops[i])) {
        if (first < 0) first = int(i);
        last = int(i);
      }
    if (last - first + 1 != int(cand.size())) return false;
    // progressing memory accesses need loop-invariant bases
    for (int t = 0; t < m; t++)
      if (gm.value_prog.count(t)) {
        const ValueRef& base = proc.op(gm.seq[t]).operands[0];
        if (base.is_node() && cand.count(base.node)) return false;
      }
  }

  uint32_t origin = proc.op(gm.seq[0]).origin;
  int Lid = int(proc.blocks.size()), Tid = Lid + 1;
  proc.blocks.push_back({});
  proc.blocks.push_back({});
  Block& B = proc.blocks[block];
  Block& L = proc.blocks[Lid];
  Block& T = proc.blocks[Tid];
  L.id = Lid;
  T.id = Tid;
  L.start_addr = origin;
  T.start_addr = B.start_addr;

  // split the original op list around the candidate span
  std::vector<int> prefix, suffix;
  bool seen = false;
  for (int id : B.ops) {
    if (cand.count(id)) { seen = true; continue; }
    (seen ? suffix : prefix).push_back(id);
  }

  auto mk = [&](OpKind kind, std::vector<ValueRef> operands) {
    return proc.new_node(kind, std::move(operands), origin);
  };
  auto cnode = [&](uint32_t v) {
    int id = mk(OpKind::Const, {});
    proc.op(id).value = v;
    return id;
  };

  int c0 = cnode(0);
  prefix.push_back(c0);

  int iv = mk(OpKind::Phi, {ValueRef::of_node(c0), ValueRef::none()});
  std::vector<int> body{iv};
  std::map<int, int> red_phi;  // position -> phi id
  for (int t : gm.reductions) {
    int p = mk(OpKind::Phi,
               {gm.carry.at(t), ValueRef::of_node(gm.seq[t])});
    red_phi[t] = p;
    body.push_back(p);
  }
  std::map<int, ValueRef> final_val;  // position -> value after the last trip
  for (int t = 0; t < m; t++) {
    int id = gm.seq[t];
    IrOp& n = proc.op(id);
    if (gm.const_prog.count(t)) {
      body.push_back(id);
      int a = mk(OpKind::Add, {ValueRef::of_node(iv), ValueRef::of_node(id)});
      body.push_back(a);
      // group-internal readers of the const see the progressing sum
      for (int t2 = t + 1; t2 < m; t2++)
        for (auto& r : proc.op(gm.seq[t2]).operands)
          if (r.is_node() && r.node == id) r = ValueRef::of_node(a);
      final_val[t] = ValueRef::of_node(a);
      continue;
    }
    if (gm.value_prog.count(t)) {
      int a = mk(OpKind::Add, {n.operands[0], ValueRef::of_node(iv)});
      body.push_back(a);
      n.operands[0] = ValueRef::of_node(a);
    }
    if (gm.reductions.count(t))
      n.operands[gm.red_index.at(t)] = ValueRef::of_node(red_phi[t]);
    body.push_back(id);
    final_val[t] = ValueRef::of_node(id);
  }
  int cs = cnode(uint32_t(gm.stride));
  int upd = mk(OpKind::Add, {ValueRef::of_node(iv), ValueRef::of_node(cs)});
  int cb = cnode(uint32_t(gm.stride * k));
  int cmp = mk(OpKind::Sltu, {ValueRef::of_node(upd), ValueRef::of_node(cb)});
  int br = mk(OpKind::BranchCond,
              {ValueRef::of_node(cmp), ValueRef::of_entry_reg(0)});
  proc.op(br).aux = int(CondCode::Ne);
  proc.op(iv).operands[1] = ValueRef::of_node(upd);
  body.insert(body.end(), {cs, upd, cb, cmp, br});

  // everything downstream of the final group reads the last-iteration value
  std::map<int, ValueRef> repl;
  for (int t = 0; t < m; t++) repl[gm.seq[(k - 1) * m + t]] = final_val[t];

  B.ops = prefix;
  L.ops = body;
  T.ops = suffix;
  rewire_all(proc, repl);

  std::set<int> dead(gm.seq.begin() + m, gm.seq.end());
  for (auto& e : proc.edges)
    if (e.from == block) e.from = Tid;
  proc.edges.push_back({block, Lid, EdgeKind::Fallthrough});
  proc.edges.push_back({Lid, Lid, EdgeKind::Taken});
  proc.edges.push_back({Lid, Tid, EdgeKind::Fallthrough});

  std::vector<std::pair<int, int>> kept;
  for (auto [x, y] : proc.mem_edges)
    if (!dead.count(x) && !dead.count(y)) kept.push_back({x, y});
  proc.mem_edges = std::move(kept);

  // the rolled loop inherits every unrolled instruction address
  auto addrs_of = [&](const std::vector<int>& ids) {
    std::set<uint32_t> s;
    for (int id : ids) s.insert(proc.op(id).origin);
    return std::vector<uint32_t>(s.begin(), s.end());
  };
  std::vector<int> all_group(gm.seq.begin(), gm.seq.end());
  B.insn_addrs = addrs_of(B.ops);
  L.insn_addrs = addrs_of(all_group);
  T.insn_addrs = addrs_of(T.ops);

  rep.note("reroll", gm.seq[0], "roll-x" + std::to_string(k));
  return true;
}

// roll k consecutive straight-line groups into a fresh post-test loop
bool try_roll_straight(ProcCdfg& proc, PassReport& rep,
                       const PassConfig& config, int block) {
  // the fusion path owns loop headers
  for (const auto& sn : proc.structure.nodes)
    if ((sn.kind == StructNode::Kind::LoopPre ||
         sn.kind == StructNode::Kind::LoopPost) &&
        sn.header == block)
      return false;
  for (const auto& e : proc.edges)
    if (e.from == block && e.to == block) return false;

  auto uses = build_uses(proc);
  std::set<int> excluded = terminator_slice(proc, uses, block);
  std::vector<int> seq;
  for (int id : proc.blocks[block].ops)
    if (proc.op(id).kind != OpKind::Phi && !excluded.count(id))
      seq.push_back(id);

  int len = int(seq.size());
  std::string last_reject;
  for (int k = std::min(config.reroll_max_factor, len); k >= 2; k--)
    for (int m = len / k; m >= 1; m--)
      for (int start = 0; start + k * m <= len; start++) {
        std::vector<int> cand(seq.begin() + start, seq.begin() + start + k * m);
        GroupMatch gm;
        std::string why;
        if (!match_groups(proc, uses, cand, k, &gm, &why)) {
          if (k * m >= 4 && last_reject.empty()) last_reject = why;
          continue;
        }
        if (!gm.has_stride || gm.stride <= 0) continue;
        if (apply_straight_roll(proc, rep, block, gm)) return true;
      }
  if (!last_reject.empty())
    rep.reroll_rejects.push_back(
        "block @" + std::to_string(proc.blocks[block].start_addr) + ": " +
        last_reject);
  return false;
}

}  // namespace

bool reroll_loops(ProcCdfg& proc, PassReport& rep, const PassConfig& config) {
  bool changed = false;
  for (bool again = true; again;) {
    again = false;
    for (size_t blk = 0; blk < proc.blocks.size(); blk++) {
      if (try_fuse_loop(proc, rep, config, int(blk))) {
        again = true;
        changed = true;
        break;
      }
      if (try_roll_straight(proc, rep, config, int(blk))) {
        again = true;
        changed = true;
        break;
      }
    }
    if (again) {
      dce(proc, rep, "reroll");
      rebuild_structure(proc);
    }
  }
  rep.stages.push_back({"reroll", 0, 0, 1});
  return changed;
}

// ---------------------------------------------------------------------------
// operator size reduction
// ---------------------------------------------------------------------------

void reduce_operator_sizes(ProcCdfg& proc, PassReport& rep,
                           const PassConfig& config) {
  size_t n = proc.nodes.size();
  std::vector<int> sig(n, 0), dem(n, 0);
  auto sig_of = [&](const ValueRef& r) -> int {
    if (r.is_entry_reg()) return r.reg == 0 ? 0 : 32;
    if (r.is_call_reg()) return 32;
    if (r.is_node()) return sig[r.node];
    return 0;
  };
  auto width_of_const = [](uint32_t v) {
    int w = 0;
    while (v) { w++; v >>= 1; }
    return w;
  };

  // forward significant-bit bound (optimistic, grows monotonically)
  bool stable = false;
  int iters = 0;
  while (!stable && iters++ < config.size_iteration_cap) {
    stable = true;
    for (const auto& b : proc.blocks)
      for (int id : b.ops) {
        const IrOp& op = proc.op(id);
        int s = 32;
        uint32_t c;
        switch (op.kind) {
          case OpKind::Const: s = width_of_const(op.value); break;
          case OpKind::Copy: s = sig_of(op.operands[0]); break;
          case OpKind::Phi: {
            s = 0;
            for (const auto& r : op.operands)
              if (!(r.is_node() && r.node == id)) s = std::max(s, sig_of(r));
            break;
          }
          case OpKind::And:
            s = std::min(sig_of(op.operands[0]), sig_of(op.operands[1]));
            break;
          case OpKind::Or:
          case OpKind::Xor:
            s = std::max(sig_of(op.operands[0]), sig_of(op.operands[1]));
            break;
          case OpKind::Add:
            s = std::max(sig_of(op.operands[0]), sig_of(op.operands[1])) + 1;
            break;
          case OpKind::Mul:
            s = sig_of(op.operands[0]) + sig_of(op.operands[1]);
            break;
          case OpKind::Shl:
            s = const_ref(proc, op.operands[1], &c)
                    ? sig_of(op.operands[0]) + int(c & 31)
                    : 32;
            break;
          case OpKind::Lshr:
            s = const_ref(proc, op.operands[1], &c)
                    ? std::max(0, sig_of(op.operands[0]) - int(c & 31))
                    : sig_of(op.operands[0]);
            break;
          case OpKind::Ashr: {
            int sa = sig_of(op.operands[0]);
            if (sa >= 32) { s = 32; break; }
            s = const_ref(proc, op.operands[1], &c)
                    ? std::max(0, sa - int(c & 31))
                    : sa;
            break;
          }
          case OpKind::Slt:
          case OpKind::Sltu:
            s = 1;
            break;
          case OpKind::Load:
            s = MemAccess(op.aux) == MemAccess::ByteUnsigned ? 8 : 32;
            break;
          default:
            s = 32;  // sub (wraps), input, calls, unknowns
        }
        s = std::min(s, 32);
        if (s > sig[id]) { sig[id] = s; stable = false; }
      }
  }
  if (!stable)
    for (auto& v : sig) v = 32;  // did not converge: stay sound

  // backward demanded-bit bound
  auto demand = [&](const ValueRef& r, int bits) {
    if (r.is_node() && bits > dem[r.node]) {
      dem[r.node] = bits;
      return true;
    }
    return false;
  };
  stable = false;
  int back_iters = 0;
  while (!stable && back_iters++ < config.size_iteration_cap) {
    stable = true;
    for (auto bit = proc.blocks.rbegin(); bit != proc.blocks.rend(); ++bit)
      for (auto oit = bit->ops.rbegin(); oit != bit->ops.rend(); ++oit) {
        const IrOp& op = proc.op(*oit);
        int d = dem[*oit];
        uint32_t c;
        auto all32 = [&]() {
          for (const auto& r : op.operands)
            if (demand(r, 32)) stable = false;
        };
        switch (op.kind) {
          case OpKind::Const:
            break;
          case OpKind::Copy:
          case OpKind::Phi:
            for (const auto& r : op.operands)
              if (!(r.is_node() && r.node == *oit) && demand(r, d))
                stable = false;
            break;
          case OpKind::Add: case OpKind::Sub: case OpKind::Mul:
          case OpKind::And: case OpKind::Or: case OpKind::Xor:
          case OpKind::Nor:
            if (demand(op.operands[0], d)) stable = false;
            if (demand(op.operands[1], d)) stable = false;
            break;
          case OpKind::Shl:
            if (const_ref(proc, op.operands[1], &c)) {
              if (demand(op.operands[0], std::max(0, d - int(c & 31))))
                stable = false;
              // evaluation masks the amount to 5 bits
              if (demand(op.operands[1], 5)) stable = false;
            } else {
              all32();
            }
            break;
          case OpKind::Lshr:
          case OpKind::Ashr:
            if (const_ref(proc, op.operands[1], &c)) {
              if (demand(op.operands[0], std::min(32, d + int(c & 31))))
                stable = false;
              if (demand(op.operands[1], 5)) stable = false;
            } else {
              all32();
            }
            break;
          case OpKind::Slt: case OpKind::Sltu:
          case OpKind::BranchCond: case OpKind::Output:
          case OpKind::Call: case OpKind::Return: case OpKind::Jump:
            all32();
            break;
          case OpKind::Load:
            if (demand(op.operands[0], 32)) stable = false;
            break;
          case OpKind::Store: {
            if (demand(op.operands[0], 32)) stable = false;
            int w = MemAccess(op.aux) == MemAccess::Word ? 32 : 8;
            if (demand(op.operands[1], w)) stable = false;
            break;
          }
          default:
            all32();
        }
      }
  }
  if (!stable)
    for (auto& v : dem) v = 32;

  for (auto& b : proc.blocks)
    for (int id : b.ops) {
      IrOp& op = proc.op(id);
      switch (op.kind) {
        case OpKind::Const: case OpKind::Copy: case OpKind::Phi:
        case OpKind::Add: case OpKind::Sub: case OpKind::Mul:
        case OpKind::And: case OpKind::Or: case OpKind::Xor:
        case OpKind::Nor: case OpKind::Shl: case OpKind::Lshr:
        case OpKind::Ashr: case OpKind::Slt: case OpKind::Sltu:
        case OpKind::Load: case OpKind::Input: {
          int w = std::max(1, std::min({32, sig[id] == 0 ? 1 : sig[id],
                                        dem[id] == 0 ? 1 : dem[id]}));
          if (w < op.width) {
            op.width = w;
            rep.note("sizes", id, "narrow-to-" + std::to_string(w));
          }
          break;
        }
        default:
          break;
      }
    }
  rep.stages.push_back({"sizes", 0, 0, iters + back_iters});
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

std::string PassReport::to_text() const {
  std::string out;
  for (const auto& r : rewrites)
    out += "rewrite " + r.pass + " " + std::to_string(r.site) + " " + r.rule +
           "\n";
  for (const auto& s : reroll_rejects) out += "reject reroll " + s + "\n";
  return out;
}

PassReport run_pipeline(CdfgModule& module, const PassConfig& config) {
  PassReport rep;
  auto each = [&](const char* name, auto&& fn) {
    size_t before = 0, after = 0;
    for (auto& [addr, proc] : module.procs) before += live_node_count(proc);
    for (auto& [addr, proc] : module.procs) {
      fn(proc);
      rebuild_structure(proc);
    }
    check_cdfg(module);
    for (auto& [addr, proc] : module.procs) after += live_node_count(proc);
    // overwrite the per-proc stage stub(s) with one aggregated entry
    while (!rep.stages.empty() && rep.stages.back().pass == name)
      rep.stages.pop_back();
    rep.stages.push_back({name, before, after, 0});
  };
  if (config.constants)
    each("constants", [&](ProcCdfg& p) { propagate_constants(p, rep); });
  if (config.stack)
    each("stack", [&](ProcCdfg& p) { remove_stack_ops(p, rep); });
  if (config.constants)
    each("constants", [&](ProcCdfg& p) { propagate_constants(p, rep); });
  if (config.reroll)
    each("reroll", [&](ProcCdfg& p) { reroll_loops(p, rep, config); });
  if (config.promote)
    each("promote", [&](ProcCdfg& p) { promote_strength(p, rep, config); });
  if (config.sizes)
    each("sizes", [&](ProcCdfg& p) { reduce_operator_sizes(p, rep, config); });
  return rep;
}

}  // namespace binpart
