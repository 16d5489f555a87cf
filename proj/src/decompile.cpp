#include "binpart/decompile.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <set>
#include <sstream>

namespace binpart {

namespace {

ValueRef reg_ref(int r) { return ValueRef::of_entry_reg(r); }

// Register written by a machine instruction, or -1.
int insn_def_reg(const Instruction& i) {
  switch (i.mn) {
    case Mnemonic::ADD: case Mnemonic::ADDU: case Mnemonic::SUB:
    case Mnemonic::SUBU: case Mnemonic::AND: case Mnemonic::OR:
    case Mnemonic::XOR: case Mnemonic::NOR: case Mnemonic::SLT:
    case Mnemonic::SLTU: case Mnemonic::MUL: case Mnemonic::SLL:
    case Mnemonic::SRL: case Mnemonic::SRA: case Mnemonic::SLLV:
    case Mnemonic::SRLV: case Mnemonic::SRAV:
      return i.rd;
    case Mnemonic::ADDI: case Mnemonic::ADDIU: case Mnemonic::SLTI:
    case Mnemonic::ANDI: case Mnemonic::ORI: case Mnemonic::XORI:
    case Mnemonic::LUI: case Mnemonic::LW: case Mnemonic::LB:
    case Mnemonic::LBU:
      return i.rt;
    case Mnemonic::JAL:
      return 31;
    default:
      return -1;
  }
}

// Statically resolve the SYSCALL service number: nearest preceding
// constant write to $2 with no intervening control transfer.
int resolve_syscall_service(const std::map<uint32_t, Instruction>& insns,
                            uint32_t at) {
  for (uint32_t a = at - 4;; a -= 4) {
    auto it = insns.find(a);
    if (it == insns.end()) break;
    const Instruction& i = it->second;
    if (is_control_transfer(i.mn)) break;
    if (i.mn == Mnemonic::SYSCALL) break;  // may define $2 dynamically
    if (insn_def_reg(i) == 2) {
      if ((i.mn == Mnemonic::ADDI || i.mn == Mnemonic::ADDIU) && i.rs == 0)
        return int(int32_t(i.imm));
      if (i.mn == Mnemonic::ORI && i.rs == 0) return int(uint16_t(i.imm));
      break;
    }
    if (a == 0) break;
  }
  std::ostringstream os;
  os << "syscall at 0x" << std::hex << at;
  throw ToolError(Err::UnknownSyscallService, os.str());
}

}  // namespace

LinearIr parse_binary(const ProgramImage& image, uint32_t entry_addr) {
  LinearIr ir;
  ir.entry_addr = entry_addr;

  std::map<uint32_t, Instruction> insns;
  std::deque<uint32_t> work{entry_addr};
  std::set<uint32_t> seen{entry_addr};
  auto push = [&](uint32_t a) {
    if (in_text(image, a) && seen.insert(a).second) work.push_back(a);
  };
  while (!work.empty()) {
    uint32_t a = work.front();
    work.pop_front();
    Instruction i = decode(fetch_word(image, a), a);
    insns[a] = i;
    switch (i.mn) {
      case Mnemonic::J:
        push(transfer_target(i));
        break;
      case Mnemonic::JR:
        break;  // procedure return or indirect jump; no static successor
      case Mnemonic::JAL:
        push(a + 4);  // callee is a separate procedure
        break;
      case Mnemonic::SYSCALL:
        if (resolve_syscall_service(insns, a) != 10) push(a + 4);
        break;
      default:
        if (is_branch(i.mn)) push(transfer_target(i));
        push(a + 4);
        break;
    }
  }

  for (const auto& [a, i] : insns) ir.insns.push_back(i);

  // Lowering: 1-2 IrOps per instruction, register-symbolic operands,
  // $0 reads/writes folded away where they are pure idioms.
  auto emit = [&](OpKind k, std::vector<ValueRef> operands, uint32_t origin,
                  int def = -1) {
    IrOp op;
    op.id = int(ir.ops.size());
    op.kind = k;
    op.operands = std::move(operands);
    op.origin = origin;
    op.def_reg = def;
    ir.ops.push_back(op);
    return ValueRef::of_node(op.id);
  };
  auto emit_const = [&](uint32_t v, uint32_t origin, int def = -1) {
    ValueRef r = emit(OpKind::Const, {}, origin, def);
    ir.ops.back().value = v;
    return r;
  };

  for (const Instruction& i : ir.insns) {
    uint32_t A = i.address;
    int32_t simm = int32_t(i.imm);
    uint32_t zimm = uint16_t(i.imm);
    auto bin = [&](OpKind k) {
      if (i.rd == 0) return;
      emit(k, {reg_ref(i.rs), reg_ref(i.rt)}, A, i.rd);
    };
    switch (i.mn) {
      case Mnemonic::NOP: break;
      case Mnemonic::ADD: case Mnemonic::ADDU: bin(OpKind::Add); break;
      case Mnemonic::SUB: case Mnemonic::SUBU: bin(OpKind::Sub); break;
      case Mnemonic::AND: bin(OpKind::And); break;
      case Mnemonic::OR: bin(OpKind::Or); break;
      case Mnemonic::XOR: bin(OpKind::Xor); break;
      case Mnemonic::NOR: bin(OpKind::Nor); break;
      case Mnemonic::SLT: bin(OpKind::Slt); break;
      case Mnemonic::SLTU: bin(OpKind::Sltu); break;
      case Mnemonic::MUL: bin(OpKind::Mul); break;
      case Mnemonic::SLL: case Mnemonic::SRL: case Mnemonic::SRA: {
        if (i.rd == 0) break;
        OpKind k = i.mn == Mnemonic::SLL   ? OpKind::Shl
                   : i.mn == Mnemonic::SRL ? OpKind::Lshr
                                           : OpKind::Ashr;
        ValueRef sh = emit_const(i.shamt, A);
        emit(k, {reg_ref(i.rt), sh}, A, i.rd);
        break;
      }
      case Mnemonic::SLLV: case Mnemonic::SRLV: case Mnemonic::SRAV: {
        if (i.rd == 0) break;
        OpKind k = i.mn == Mnemonic::SLLV   ? OpKind::Shl
                   : i.mn == Mnemonic::SRLV ? OpKind::Lshr
                                            : OpKind::Ashr;
        emit(k, {reg_ref(i.rt), reg_ref(i.rs)}, A, i.rd);
        break;
      }
      case Mnemonic::ADDI: case Mnemonic::ADDIU: {
        if (i.rt == 0) break;
        if (i.rs == 0) {
          emit_const(uint32_t(simm), A, i.rt);
        } else {
          ValueRef c = emit_const(uint32_t(simm), A);
          emit(OpKind::Add, {reg_ref(i.rs), c}, A, i.rt);
        }
        break;
      }
      case Mnemonic::SLTI: {
        if (i.rt == 0) break;
        ValueRef c = emit_const(uint32_t(simm), A);
        emit(OpKind::Slt, {reg_ref(i.rs), c}, A, i.rt);
        break;
      }
      case Mnemonic::ANDI: case Mnemonic::ORI: case Mnemonic::XORI: {
        if (i.rt == 0) break;
        if (i.rs == 0) {
          emit_const(i.mn == Mnemonic::ANDI ? 0 : zimm, A, i.rt);
          break;
        }
        ValueRef c = emit_const(zimm, A);
        OpKind k = i.mn == Mnemonic::ANDI  ? OpKind::And
                   : i.mn == Mnemonic::ORI ? OpKind::Or
                                           : OpKind::Xor;
        emit(k, {reg_ref(i.rs), c}, A, i.rt);
        break;
      }
      case Mnemonic::LUI:
        if (i.rt) emit_const(zimm << 16, A, i.rt);
        break;
      case Mnemonic::LW: case Mnemonic::LB: case Mnemonic::LBU: {
        if (i.rt == 0) break;
        ValueRef r = emit(OpKind::Load, {reg_ref(i.rs)}, A, i.rt);
        ir.ops.back().value = uint32_t(simm);
        ir.ops.back().aux = int(i.mn == Mnemonic::LW    ? MemAccess::Word
                                : i.mn == Mnemonic::LB  ? MemAccess::ByteSigned
                                                        : MemAccess::ByteUnsigned);
        if (i.mn == Mnemonic::LBU) ir.ops.back().width = 8;
        (void)r;
        break;
      }
      case Mnemonic::SW: case Mnemonic::SB: {
        emit(OpKind::Store, {reg_ref(i.rs), reg_ref(i.rt)}, A);
        ir.ops.back().value = uint32_t(simm);
        ir.ops.back().aux =
            int(i.mn == Mnemonic::SW ? MemAccess::Word : MemAccess::ByteSigned);
        break;
      }
      case Mnemonic::BEQ: case Mnemonic::BNE: {
        emit(OpKind::BranchCond, {reg_ref(i.rs), reg_ref(i.rt)}, A);
        ir.ops.back().aux =
            int(i.mn == Mnemonic::BEQ ? CondCode::Eq : CondCode::Ne);
        break;
      }
      case Mnemonic::BLEZ: case Mnemonic::BGTZ: {
        emit(OpKind::BranchCond, {reg_ref(i.rs)}, A);
        ir.ops.back().aux =
            int(i.mn == Mnemonic::BLEZ ? CondCode::Lez : CondCode::Gtz);
        break;
      }
      case Mnemonic::J: {
        emit(OpKind::Jump, {}, A);
        ir.ops.back().value = transfer_target(i);
        ir.ops.back().aux = -1;
        break;
      }
      case Mnemonic::JR: {
        if (i.rs == 31) {
          emit(OpKind::Return, {}, A);
        } else {
          emit(OpKind::Jump, {}, A);
          ir.ops.back().aux = i.rs;  // indirect; build_cfg rejects
        }
        break;
      }
      case Mnemonic::JAL: {
        emit(OpKind::Call, {}, A, -1);
        ir.ops.back().value = transfer_target(i);
        break;
      }
      case Mnemonic::SYSCALL: {
        int svc = resolve_syscall_service(insns, A);
        if (svc == 1) {
          emit(OpKind::Output, {reg_ref(4)}, A);
        } else if (svc == 5) {
          emit(OpKind::Input, {}, A, 2);
        } else if (svc == 10) {
          emit(OpKind::Return, {}, A);
          ir.ops.back().aux = 1;  // program halt
        } else {
          throw ToolError(Err::BadSyscall, "service " + std::to_string(svc));
        }
        break;
      }
    }
  }
  return ir;
}

ProcCdfg build_cfg(const LinearIr& ir, const ProgramImage& image) {
  ProcCdfg proc;
  proc.entry_addr = ir.entry_addr;
  proc.nodes = ir.ops;

  std::set<uint32_t> addrs;
  std::map<uint32_t, const Instruction*> at;
  for (const auto& i : ir.insns) {
    addrs.insert(i.address);
    at[i.address] = &i;
  }

  // Leaders: entry, transfer targets, successors of control transfers.
  std::set<uint32_t> leaders{ir.entry_addr};
  for (const auto& i : ir.insns) {
    if (!is_control_transfer(i.mn) && i.mn != Mnemonic::SYSCALL) continue;
    if (i.mn == Mnemonic::JR) {
      if (i.rs != 31) {
        std::ostringstream os;
        os << "jr $" << int(i.rs) << " at 0x" << std::hex << i.address;
        throw ToolError(Err::IndirectJump, os.str());
      }
    } else if (i.mn != Mnemonic::SYSCALL) {
      uint32_t tgt = transfer_target(i);
      if (i.mn != Mnemonic::JAL) {
        if (!addrs.count(tgt)) {
          std::ostringstream os;
          os << "unresolvable target 0x" << std::hex << tgt << " at 0x"
             << i.address;
          throw ToolError(Err::IndirectJump, os.str());
        }
        leaders.insert(tgt);
      }
    }
    if (addrs.count(i.address + 4)) leaders.insert(i.address + 4);
  }

  // Blocks in address order.
  std::map<uint32_t, int> block_of_leader;
  for (uint32_t l : leaders) {
    Block b;
    b.id = int(proc.blocks.size());
    b.start_addr = l;
    block_of_leader[l] = b.id;
    proc.blocks.push_back(b);
  }
  auto block_of = [&](uint32_t a) {
    auto it = block_of_leader.upper_bound(a);
    return std::prev(it)->second;
  };
  for (uint32_t a : addrs) proc.blocks[block_of(a)].insn_addrs.push_back(a);
  for (const IrOp& op : proc.nodes)
    proc.blocks[block_of(op.origin)].ops.push_back(op.id);
  proc.entry_block = block_of_leader.at(ir.entry_addr);

  // Edges from each block's last instruction.
  for (const Block& b : proc.blocks) {
    uint32_t last = b.insn_addrs.back();
    const Instruction& i = *at.at(last);
    auto add_edge = [&](uint32_t tgt, EdgeKind k) {
      proc.edges.push_back({b.id, block_of_leader.at(tgt), k});
    };
    if (is_branch(i.mn)) {
      add_edge(transfer_target(i), EdgeKind::Taken);
      if (addrs.count(last + 4)) add_edge(last + 4, EdgeKind::Fallthrough);
    } else if (i.mn == Mnemonic::J) {
      add_edge(transfer_target(i), EdgeKind::Taken);
    } else if (i.mn == Mnemonic::JR) {
      // return: no intra-procedure successor
    } else if (i.mn == Mnemonic::SYSCALL &&
               !ir.ops.empty() && proc.blocks[b.id].ops.size() &&
               proc.nodes[proc.blocks[b.id].ops.back()].kind == OpKind::Return) {
      // halt: no successor
    } else if (addrs.count(last + 4)) {
      add_edge(last + 4, EdgeKind::Fallthrough);
    }
  }
  return proc;
}

// ---------------------------------------------------------------------------
// Dominators (iterative intersection over reverse postorder)
// ---------------------------------------------------------------------------

namespace {

DomTree dominators_generic(int n, int entry,
                           const std::vector<std::vector<int>>& succ,
                           const std::vector<std::vector<int>>& pred) {
  DomTree t;
  t.idom.assign(n, -1);
  // reverse postorder
  std::vector<int> order;
  std::vector<int> state(n, 0);
  std::vector<int> stack{entry};
  std::vector<size_t> pos{0};
  state[entry] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    if (pos.back() < succ[v].size()) {
      int s = succ[v][pos.back()++];
      if (!state[s]) {
        state[s] = 1;
        stack.push_back(s);
        pos.push_back(0);
      }
    } else {
      order.push_back(v);
      stack.pop_back();
      pos.pop_back();
    }
  }
  std::reverse(order.begin(), order.end());
  t.rpo = order;
  std::vector<int> rpo_index(n, -1);
  for (size_t i = 0; i < order.size(); i++) rpo_index[order[i]] = int(i);

  t.idom[entry] = entry;
  bool changed = true;
  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (rpo_index[a] > rpo_index[b]) a = t.idom[a];
      while (rpo_index[b] > rpo_index[a]) b = t.idom[b];
    }
    return a;
  };
  while (changed) {
    changed = false;
    for (int v : order) {
      if (v == entry) continue;
      int ni = -1;
      for (int p : pred[v]) {
        if (rpo_index[p] < 0 || t.idom[p] < 0) continue;
        ni = ni < 0 ? p : intersect(ni, p);
      }
      if (ni >= 0 && t.idom[v] != ni) {
        t.idom[v] = ni;
        changed = true;
      }
    }
  }
  return t;
}

}  // namespace

bool DomTree::dominates(int a, int b) const {
  if (b < 0 || size_t(b) >= idom.size() || idom[b] < 0) return false;
  while (true) {
    if (a == b) return true;
    int p = idom[b];
    if (p == b) return false;  // reached root
    b = p;
  }
}

DomTree compute_dominators(const ProcCdfg& proc) {
  int n = int(proc.blocks.size());
  std::vector<std::vector<int>> succ(n), pred(n);
  for (const auto& e : proc.edges) {
    succ[e.from].push_back(e.to);
    pred[e.to].push_back(e.from);
  }
  for (auto& v : succ) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return dominators_generic(n, proc.entry_block, succ, pred);
}

DomTree compute_post_dominators(const ProcCdfg& proc) {
  // Virtual exit has index n; every block without successors feeds it.
  int n = int(proc.blocks.size());
  std::vector<std::vector<int>> succ(n + 1), pred(n + 1);
  std::vector<bool> has_succ(n, false);
  for (const auto& e : proc.edges) {
    succ[e.to].push_back(e.from);  // reversed
    pred[e.from].push_back(e.to);
    has_succ[e.from] = true;
  }
  for (int b = 0; b < n; b++)
    if (!has_succ[b]) {
      succ[n].push_back(b);
      pred[b].push_back(n);
    }
  for (auto& v : succ) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return dominators_generic(n + 1, n, succ, pred);
}

// ---------------------------------------------------------------------------
// Control structure recovery
// ---------------------------------------------------------------------------

namespace {

struct LoopInfo {
  int header;
  std::set<int> body;  // includes header
  std::vector<std::pair<int, int>> back_edges;
};

std::map<int, LoopInfo> find_loops(const ProcCdfg& proc, const DomTree& dom) {
  std::map<int, LoopInfo> loops;
  for (const auto& e : proc.edges) {
    if (!dom.dominates(e.to, e.from)) continue;
    LoopInfo& L = loops[e.to];
    L.header = e.to;
    L.back_edges.push_back({e.from, e.to});
    // natural loop: blocks reaching the back-edge source without passing
    // the header
    L.body.insert(e.to);
    std::vector<int> work;
    if (!L.body.count(e.from)) {
      L.body.insert(e.from);
      work.push_back(e.from);
    }
    while (!work.empty()) {
      int b = work.back();
      work.pop_back();
      for (int p : proc.preds(b))
        if (!L.body.count(p)) {
          L.body.insert(p);
          work.push_back(p);
        }
    }
  }
  return loops;
}

struct Structurer {
  const ProcCdfg& proc;
  const DomTree& dom;
  DomTree pdom;
  std::map<int, LoopInfo> loops;
  StructureTree tree;
  std::set<int> consumed;
  int virtual_exit;

  explicit Structurer(const ProcCdfg& p, const DomTree& d)
      : proc(p), dom(d), pdom(compute_post_dominators(p)),
        loops(find_loops(p, d)), virtual_exit(int(p.blocks.size())) {}

  int add(StructNode n) {
    tree.nodes.push_back(std::move(n));
    return int(tree.nodes.size()) - 1;
  }

  // Successors of b, restricted to `region`, with back edges of the loop
  // headed at `loop_header` removed.
  std::vector<int> walk_succs(int b, const std::set<int>& region,
                              int loop_header) {
    std::vector<int> out;
    for (int s : proc.succs(b))
      if (region.count(s) && !(s == loop_header && dom.dominates(s, b)))
        out.push_back(s);
    return out;
  }

  // Structure the subgraph `region` starting at `entry`, stopping before
  // `stop` (-1: walk to the end). Returns a StructNode index.
  int structure(const std::set<int>& region, int entry, int stop,
                int loop_header) {
    StructNode seq;
    seq.kind = StructNode::Kind::Seq;
    int cur = entry;
    bool bail = false;
    std::set<int> local;  // blocks consumed by this walk

    auto wrap_unstructured = [&]() {
      StructNode u;
      u.kind = StructNode::Kind::Unstructured;
      for (int b : region)
        if (!consumed.count(b)) {
          u.blocks.push_back(b);
          consumed.insert(b);
        }
      std::sort(u.blocks.begin(), u.blocks.end());
      seq.children.push_back(add(std::move(u)));
    };

    while (cur >= 0 && cur != stop) {
      if (consumed.count(cur)) {
        bail = true;
        break;
      }
      // Loop region?
      auto lit = loops.find(cur);
      if (lit != loops.end() && cur != loop_header) {
        const LoopInfo& L = lit->second;
        bool inside = true;
        for (int b : L.body)
          if (!region.count(b)) inside = false;
        if (!inside) {
          bail = true;
          break;
        }
        // classify + unique exit target
        std::set<int> exit_targets;
        bool header_exits = false, latch_exits = false;
        for (int b : L.body)
          for (int s : proc.succs(b))
            if (!L.body.count(s)) {
              exit_targets.insert(s);
              if (b == L.header) header_exits = true;
              for (auto& be : L.back_edges)
                if (be.first == b) latch_exits = true;
            }
        if (exit_targets.size() > 1) {
          bail = true;
          break;
        }
        StructNode loop;
        loop.kind = header_exits ? StructNode::Kind::LoopPre
                    : latch_exits ? StructNode::Kind::LoopPost
                                  : StructNode::Kind::LoopPre;
        loop.header = L.header;
        loop.back_edges = L.back_edges;
        find_inductions(L, loop);
        int body = structure(L.body, L.header, -1, L.header);
        loop.children.push_back(body);
        seq.children.push_back(add(std::move(loop)));
        if (exit_targets.empty()) {
          cur = -1;
          break;
        }
        cur = *exit_targets.begin();
        if (!region.count(cur) && cur != stop) {
          bail = true;
          cur = -1;
        }
        continue;
      }

      // Plain or branching block.
      consumed.insert(cur);
      local.insert(cur);
      seq.blocks.push_back(cur);
      std::vector<int> ss = walk_succs(cur, region, loop_header);
      int term = proc.terminator(cur);
      bool is_branch_term =
          term >= 0 && proc.op(term).kind == OpKind::BranchCond;
      if (ss.empty()) {
        cur = -1;
        break;
      }
      if (ss.size() == 1 || !is_branch_term) {
        cur = ss[0];
        continue;
      }
      // diamond / triangle via immediate post-dominator
      int j = pdom.idom.size() > size_t(cur) ? pdom.idom[cur] : -1;
      if (j < 0 || j == virtual_exit || (!region.count(j) && j != stop)) {
        bail = true;
        break;
      }
      int t = proc.succ_on(cur, EdgeKind::Taken);
      int f = proc.succ_on(cur, EdgeKind::Fallthrough);
      if (t < 0 || f < 0) {
        bail = true;
        break;
      }
      StructNode iff;
      iff.header = cur;
      // the branch block itself belongs to the if-region
      seq.blocks.pop_back();
      iff.blocks.push_back(cur);
      if (t == j || f == j) {
        iff.kind = StructNode::Kind::IfThen;
        int arm = t == j ? f : t;
        iff.children.push_back(structure(region, arm, j, loop_header));
      } else {
        iff.kind = StructNode::Kind::IfThenElse;
        iff.children.push_back(structure(region, t, j, loop_header));
        iff.children.push_back(structure(region, f, j, loop_header));
      }
      seq.children.push_back(add(std::move(iff)));
      cur = j;
    }
    if (bail) wrap_unstructured();
    return add(std::move(seq));
  }

  void find_inductions(const LoopInfo& L, StructNode& loop) {
    int h = L.header;
    auto pred_order = proc.phi_pred_order(h);
    for (int id : proc.blocks[h].ops) {
      const IrOp& phi = proc.op(id);
      if (phi.kind != OpKind::Phi) break;
      InductionCandidate c;
      c.phi = id;
      c.reg = phi.aux;
      for (size_t k = 0; k < pred_order.size() && k < phi.operands.size(); k++) {
        int p = pred_order[k];
        const ValueRef& r = phi.operands[k];
        bool is_back = false;
        for (auto& be : L.back_edges)
          if (be.first == p) is_back = true;
        if (!is_back && (p < 0 || !L.body.count(p))) {
          if (r.is_node() && proc.op(r.node).kind == OpKind::Const) {
            c.has_init = true;
            c.init = proc.op(r.node).value;
          }
        } else if (is_back) {
          if (r.is_node()) {
            const IrOp& step_op = proc.op(r.node);
            if ((step_op.kind == OpKind::Add || step_op.kind == OpKind::Sub) &&
                step_op.operands.size() == 2) {
              const ValueRef &a = step_op.operands[0], &b = step_op.operands[1];
              auto is_phi = [&](const ValueRef& v) {
                return v.is_node() && v.node == id;
              };
              auto const_val = [&](const ValueRef& v, int32_t& out) {
                if (v.is_node() && proc.op(v.node).kind == OpKind::Const) {
                  out = int32_t(proc.op(v.node).value);
                  return true;
                }
                return false;
              };
              int32_t cv;
              if (is_phi(a) && const_val(b, cv)) {
                c.has_step = true;
                c.step = step_op.kind == OpKind::Add ? cv : -cv;
              } else if (step_op.kind == OpKind::Add && is_phi(b) &&
                         const_val(a, cv)) {
                c.has_step = true;
                c.step = cv;
              }
            }
          }
        }
      }
      // bound: a branch_cond in the header or a latch referencing the phi
      auto scan_branch = [&](int blk) {
        int term = proc.terminator(blk);
        if (term < 0 || proc.op(term).kind != OpKind::BranchCond) return;
        for (const ValueRef& r : proc.op(term).operands)
          if (r.is_node() &&
              (r.node == id || (proc.op(r.node).operands.size() &&
                                proc.op(r.node).operands[0] ==
                                    ValueRef::of_node(id))))
            c.bound_branch = term;
      };
      scan_branch(h);
      for (auto& be : L.back_edges) scan_branch(be.first);
      if (c.has_init || c.has_step) loop.inductions.push_back(c);
    }
  }
};

}  // namespace

StructureTree recover_structures(const ProcCdfg& proc, const DomTree& dom) {
  Structurer s(proc, dom);
  std::set<int> all;
  // only reachable blocks
  for (int b : dom.rpo) all.insert(b);
  int root = s.structure(all, proc.entry_block, -1, -1);
  // anything never consumed (unreachable from the walk) -> unstructured
  std::vector<int> leftovers;
  for (int b : all)
    if (!s.consumed.count(b)) leftovers.push_back(b);
  if (!leftovers.empty()) {
    StructNode u;
    u.kind = StructNode::Kind::Unstructured;
    u.blocks = leftovers;
    int ui = s.add(std::move(u));
    s.tree.nodes[root].children.push_back(ui);
  }
  s.tree.root = root;
  return s.tree;
}

// ---------------------------------------------------------------------------
// SSA construction (build_cdfg)
// ---------------------------------------------------------------------------

namespace {

struct RegMasks {
  std::vector<uint32_t> use, def;  // per block
};

uint32_t callee_use_mask(const std::map<uint32_t, ProcCdfg>* callees,
                         uint32_t target) {
  if (!callees) return 0xFFFFFFFEu;  // conservative: everything but $0
  auto it = callees->find(target);
  return it == callees->end() ? 0xFFFFFFFEu : it->second.use_summary;
}

uint32_t callee_def_mask(const std::map<uint32_t, ProcCdfg>* callees,
                         uint32_t target) {
  uint32_t m = 1u << 31;  // $31 is always rewritten at the call site
  if (!callees) return 0xFFFFFFFEu | m;
  auto it = callees->find(target);
  return it == callees->end() ? (0xFFFFFFFEu | m) : (it->second.def_summary | m);
}

RegMasks reg_masks(const ProcCdfg& proc,
                   const std::map<uint32_t, ProcCdfg>* callees,
                   uint32_t own_def_summary) {
  RegMasks m;
  m.use.assign(proc.blocks.size(), 0);
  m.def.assign(proc.blocks.size(), 0);
  for (const Block& b : proc.blocks) {
    uint32_t defined = 0;
    auto use = [&](int r) {
      if (r > 0 && !((defined >> r) & 1)) m.use[b.id] |= 1u << r;
    };
    for (int id : b.ops) {
      const IrOp& op = proc.nodes[id];
      if (op.kind == OpKind::Call) {
        uint32_t u = callee_use_mask(callees, op.value);
        for (int r = 1; r < 32; r++)
          if ((u >> r) & 1) use(r);
        defined |= callee_def_mask(callees, op.value);
        continue;
      }
      if (op.kind == OpKind::Return && op.aux == 0) {
        for (int r = 1; r < 32; r++)
          if ((own_def_summary >> r) & 1) use(r);
        continue;
      }
      for (const ValueRef& o : op.operands)
        if (o.is_entry_reg()) use(o.reg);
      if (op.def_reg > 0) defined |= 1u << op.def_reg;
    }
    m.def[b.id] = defined;
  }
  return m;
}

void liveness(const ProcCdfg& proc, const RegMasks& m,
              std::vector<uint32_t>& live_in, std::vector<uint32_t>& live_out) {
  size_t n = proc.blocks.size();
  live_in.assign(n, 0);
  live_out.assign(n, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t b = n; b-- > 0;) {
      uint32_t lo = 0;
      for (int s : proc.succs(int(b))) lo |= live_in[s];
      uint32_t li = m.use[b] | (lo & ~m.def[b]);
      if (lo != live_out[b] || li != live_in[b]) {
        live_out[b] = lo;
        live_in[b] = li;
        changed = true;
      }
    }
  }
}

}  // namespace

void build_cdfg(ProcCdfg& proc, const std::map<uint32_t, ProcCdfg>* callees) {
  RegMasks masks = reg_masks(proc, callees, proc.def_summary);
  liveness(proc, masks, proc.live_in, proc.live_out);

  DomTree dom = compute_dominators(proc);

  // Phi insertion: every reachable block with >=2 predecessors (counting the
  // virtual entry predecessor of the entry block) gets a phi per live-in
  // register.
  std::map<int, std::map<int, int>> phis;  // block -> reg -> phi node
  for (int b : dom.rpo) {
    size_t np = proc.preds(b).size() + (b == proc.entry_block ? 1 : 0);
    if (np < 2) continue;
    for (int r = 1; r < 32; r++) {
      if (!((proc.live_in[b] >> r) & 1)) continue;
      int id = proc.new_node(OpKind::Phi, {}, proc.blocks[b].start_addr);
      proc.nodes[id].aux = r;
      proc.nodes[id].def_reg = r;
      phis[b][r] = id;
    }
    // prepend in ascending register order
    std::vector<int> head;
    for (auto& [r, id] : phis[b]) head.push_back(id);
    auto& ops = proc.blocks[b].ops;
    ops.insert(ops.begin(), head.begin(), head.end());
  }

  // Rename in reverse postorder.
  using RegMap = std::array<ValueRef, 32>;
  std::vector<RegMap> exit_map(proc.blocks.size());
  std::vector<bool> renamed(proc.blocks.size(), false);

  for (int b : dom.rpo) {
    RegMap map;
    map.fill(ValueRef::none());
    map[0] = ValueRef::of_entry_reg(0);
    if (b == proc.entry_block || phis.count(b) ||
        proc.preds(b).size() != 1) {
      if (b == proc.entry_block && !phis.count(b)) {
        for (int r = 1; r < 32; r++) map[r] = ValueRef::of_entry_reg(r);
      } else {
        // live registers come from phis; everything else is dead here
        for (int r = 1; r < 32; r++) {
          auto bit = phis.find(b);
          if (bit != phis.end() && bit->second.count(r))
            map[r] = ValueRef::of_node(bit->second.at(r));
        }
      }
    } else {
      int p = proc.preds(b)[0];
      assert(renamed[p] && "single predecessor precedes in RPO");
      map = exit_map[p];
    }

    for (int id : proc.blocks[b].ops) {
      IrOp& op = proc.nodes[id];
      if (op.kind == OpKind::Phi) continue;  // filled later
      if (op.kind == OpKind::Call) {
        uint32_t u = callee_use_mask(callees, op.value);
        op.operands.assign(32, ValueRef::none());
        for (int r = 1; r < 32; r++)
          if ((u >> r) & 1) op.operands[r] = map[r];
        op.operands[0] = ValueRef::of_entry_reg(0);
        uint32_t d = callee_def_mask(callees, op.value);
        for (int r = 1; r < 32; r++)
          if ((d >> r) & 1) map[r] = ValueRef::of_call_reg(id, r);
        continue;
      }
      if (op.kind == OpKind::Return && op.aux == 0) {
        op.operands.assign(32, ValueRef::none());
        op.operands[0] = ValueRef::of_entry_reg(0);
        for (int r = 1; r < 32; r++)
          if ((proc.def_summary >> r) & 1) op.operands[r] = map[r];
        continue;
      }
      for (ValueRef& o : op.operands)
        if (o.is_entry_reg() && o.reg != 0) {
          assert(map[o.reg].valid() && "use of undefined register");
          o = map[o.reg];
        }
      if (op.def_reg > 0) map[op.def_reg] = ValueRef::of_node(id);
    }
    exit_map[b] = map;
    renamed[b] = true;
  }

  // Fill phi operands following each block's predecessor order.
  for (auto& [b, regs] : phis) {
    auto order = proc.phi_pred_order(b);
    for (auto& [r, id] : regs) {
      IrOp& phi = proc.nodes[id];
      phi.operands.clear();
      for (int p : order) {
        if (p < 0)
          phi.operands.push_back(ValueRef::of_entry_reg(r));
        else
          phi.operands.push_back(renamed[p] ? exit_map[p][r] : ValueRef::none());
      }
    }
  }

  // Memory-order edges within each block: conservative unless both accesses
  // share a base value and constant offset ranges provably miss each other.
  proc.mem_edges.clear();
  auto access_size = [](const IrOp& op) {
    return MemAccess(op.aux) == MemAccess::Word ? 4u : 1u;
  };
  auto disjoint = [&](const IrOp& a, const IrOp& b) {
    if (a.operands.empty() || b.operands.empty()) return false;
    if (!(a.operands[0] == b.operands[0])) return false;
    int64_t ao = int32_t(a.value), bo = int32_t(b.value);
    return ao + access_size(a) <= bo || bo + access_size(b) <= ao;
  };
  for (const Block& b : proc.blocks) {
    std::vector<int> prior_loads, prior_stores, prior_barriers;
    for (int id : b.ops) {
      const IrOp& op = proc.nodes[id];
      if (op.kind == OpKind::Call) {
        for (int x : prior_loads) proc.mem_edges.push_back({x, id});
        for (int x : prior_stores) proc.mem_edges.push_back({x, id});
        prior_barriers.push_back(id);
      } else if (op.kind == OpKind::Load) {
        for (int x : prior_stores)
          if (!disjoint(proc.nodes[x], op)) proc.mem_edges.push_back({x, id});
        for (int x : prior_barriers) proc.mem_edges.push_back({x, id});
        prior_loads.push_back(id);
      } else if (op.kind == OpKind::Store) {
        for (int x : prior_loads)
          if (!disjoint(proc.nodes[x], op)) proc.mem_edges.push_back({x, id});
        for (int x : prior_stores)
          if (!disjoint(proc.nodes[x], op)) proc.mem_edges.push_back({x, id});
        for (int x : prior_barriers) proc.mem_edges.push_back({x, id});
        prior_stores.push_back(id);
      }
    }
  }

  rebuild_structure(proc);
}

void rebuild_structure(ProcCdfg& proc) {
  DomTree dom = compute_dominators(proc);
  proc.structure = recover_structures(proc, dom);
}

CdfgModule decompile(const ProgramImage& image) {
  CdfgModule module;
  module.entry = image.entry;

  // discover procedures: entry + JAL targets, transitively
  std::map<uint32_t, LinearIr> irs;
  std::deque<uint32_t> work{image.entry};
  std::set<uint32_t> seen{image.entry};
  while (!work.empty()) {
    uint32_t e = work.front();
    work.pop_front();
    LinearIr ir = parse_binary(image, e);
    for (const Instruction& i : ir.insns)
      if (i.mn == Mnemonic::JAL) {
        uint32_t t = transfer_target(i);
        if (seen.insert(t).second) work.push_back(t);
      }
    irs.emplace(e, std::move(ir));
  }

  for (auto& [e, ir] : irs) {
    ProcCdfg proc = build_cfg(ir, image);
    std::ostringstream name;
    if (e == image.entry)
      name << "main";
    else
      name << "proc_" << std::hex << e;
    proc.name = name.str();
    module.procs.emplace(e, std::move(proc));
  }

  // Call summaries to a fixed point (handles recursion conservatively:
  // masks only grow).
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& [e, proc] : module.procs) {
      uint32_t d = 0;
      for (const IrOp& op : proc.nodes) {
        if (op.def_reg > 0) d |= 1u << op.def_reg;
        if (op.kind == OpKind::Call) d |= callee_def_mask(&module.procs, op.value);
      }
      RegMasks m = reg_masks(proc, &module.procs, d);
      std::vector<uint32_t> li, lo;
      liveness(proc, m, li, lo);
      uint32_t u = li[proc.entry_block];
      if (d != proc.def_summary || u != proc.use_summary) {
        proc.def_summary = d;
        proc.use_summary = u;
        changed = true;
      }
    }
  }

  for (auto& [e, proc] : module.procs) build_cdfg(proc, &module.procs);
  check_cdfg(module);
  return module;
}

}  // namespace binpart
