#include "binpart/cdfg.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace binpart {

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Const: return "const";
    case OpKind::Copy: return "copy";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::And: return "and";
    case OpKind::Or: return "or";
    case OpKind::Xor: return "xor";
    case OpKind::Nor: return "nor";
    case OpKind::Shl: return "shl";
    case OpKind::Lshr: return "lshr";
    case OpKind::Ashr: return "ashr";
    case OpKind::Slt: return "slt";
    case OpKind::Sltu: return "sltu";
    case OpKind::Load: return "load";
    case OpKind::Store: return "store";
    case OpKind::BranchCond: return "branch_cond";
    case OpKind::Jump: return "jump";
    case OpKind::Call: return "call";
    case OpKind::Return: return "return";
    case OpKind::Input: return "input";
    case OpKind::Output: return "output";
    case OpKind::Phi: return "phi";
  }
  return "?";
}

const char* cond_name(CondCode c) {
  switch (c) {
    case CondCode::Eq: return "eq";
    case CondCode::Ne: return "ne";
    case CondCode::Lez: return "lez";
    case CondCode::Gtz: return "gtz";
  }
  return "?";
}

const char* struct_kind_name(StructNode::Kind k) {
  switch (k) {
    case StructNode::Kind::Seq: return "Seq";
    case StructNode::Kind::IfThen: return "IfThen";
    case StructNode::Kind::IfThenElse: return "IfThenElse";
    case StructNode::Kind::LoopPre: return "Loop(pre-tested)";
    case StructNode::Kind::LoopPost: return "Loop(post-tested)";
    case StructNode::Kind::Unstructured: return "Unstructured";
  }
  return "?";
}

uint32_t ShiftAddForm::eval(uint32_t x) const {
  std::vector<uint32_t> v(nodes.size());
  for (size_t i = 0; i < nodes.size(); i++) {
    const Node& n = nodes[i];
    switch (n.k) {
      case K::Var: v[i] = x; break;
      case K::Shl: v[i] = v[n.a] << (n.shamt & 31); break;
      case K::Add: v[i] = v[n.a] + v[n.b]; break;
      case K::Sub: v[i] = v[n.a] - v[n.b]; break;
    }
  }
  return v[root];
}

int ShiftAddForm::op_count() const {
  int c = 0;
  for (const auto& n : nodes)
    if (n.k != K::Var) c++;
  return c;
}

std::vector<int> StructureTree::covered(int r) const {
  std::vector<int> out;
  std::vector<int> stack{r};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    const StructNode& n = nodes[i];
    out.insert(out.end(), n.blocks.begin(), n.blocks.end());
    for (int c : n.children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> ProcCdfg::succs(int block) const {
  std::vector<int> out;
  for (const auto& e : edges)
    if (e.from == block) out.push_back(e.to);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> ProcCdfg::preds(int block) const {
  std::vector<int> out;
  for (const auto& e : edges)
    if (e.to == block) out.push_back(e.from);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int ProcCdfg::succ_on(int block, EdgeKind kind) const {
  for (const auto& e : edges)
    if (e.from == block && e.kind == kind) return e.to;
  return -1;
}

int ProcCdfg::terminator(int block) const {
  const auto& ops = blocks[block].ops;
  if (ops.empty()) return -1;
  OpKind k = nodes[ops.back()].kind;
  if (k == OpKind::BranchCond || k == OpKind::Jump || k == OpKind::Return)
    return ops.back();
  return -1;
}

int ProcCdfg::new_node(OpKind kind, std::vector<ValueRef> operands,
                       uint32_t origin) {
  IrOp op;
  op.id = int(nodes.size());
  op.kind = kind;
  op.operands = std::move(operands);
  op.origin = origin;
  nodes.push_back(std::move(op));
  return nodes.back().id;
}

std::vector<int> ProcCdfg::phi_pred_order(int block) const {
  std::vector<int> order = preds(block);
  if (block == entry_block) order.insert(order.begin(), -1);
  return order;
}

namespace {
void print_ref(std::ostringstream& os, const ValueRef& r) {
  if (r.is_node())
    os << r.node;
  else if (r.is_entry_reg())
    os << "$" << r.reg;
  else if (r.is_call_reg())
    os << r.node << ":$" << r.reg;
  else
    os << "_";
}
}  // namespace

std::string dump_cdfg(const ProcCdfg& proc) {
  std::ostringstream os;
  os << "proc " << proc.name << " @" << std::hex << proc.entry_addr << std::dec
     << "\n";
  for (const auto& b : proc.blocks) {
    os << "block " << b.id << " @" << std::hex << b.start_addr << std::dec
       << "\n";
    for (int id : b.ops) {
      const IrOp& n = proc.nodes[id];
      os << "node " << n.id << " " << op_kind_name(n.kind) << " " << n.width;
      if (n.kind == OpKind::Const) os << " #" << int32_t(n.value);
      if (n.kind == OpKind::BranchCond) os << " " << cond_name(CondCode(n.aux));
      if (n.kind == OpKind::Load || n.kind == OpKind::Store)
        os << " +" << int32_t(n.value);
      for (const auto& r : n.operands) {
        os << " ";
        print_ref(os, r);
      }
      os << " @" << std::hex << n.origin << std::dec << "\n";
    }
  }
  // data edges derived from operands
  for (const auto& b : proc.blocks)
    for (int id : b.ops)
      for (const auto& r : proc.nodes[id].operands)
        if (r.is_node()) os << "dedge " << r.node << " " << id << "\n";
  for (const auto& [a, bb] : proc.mem_edges) os << "medge " << a << " " << bb << "\n";
  for (const auto& e : proc.edges) {
    const char* k = e.kind == EdgeKind::Fallthrough ? "fall"
                    : e.kind == EdgeKind::Taken     ? "taken"
                    : e.kind == EdgeKind::Call      ? "call"
                                                    : "return";
    os << "cedge " << e.from << " " << e.to << " " << k << "\n";
  }
  return os.str();
}

std::string dump_cdfg(const CdfgModule& module) {
  std::string out;
  for (const auto& [addr, proc] : module.procs) out += dump_cdfg(proc);
  return out;
}

namespace {

[[noreturn]] void bad(const ProcCdfg& proc, const std::string& msg) {
  throw ToolError(Err::BadConfig, "cdfg " + proc.name + ": " + msg);
}

int expected_arity(const IrOp& n) {
  switch (n.kind) {
    case OpKind::Const: case OpKind::Input: return 0;
    case OpKind::Copy: case OpKind::Output: return 1;
    case OpKind::Add: case OpKind::Sub: case OpKind::Mul: case OpKind::And:
    case OpKind::Or: case OpKind::Xor: case OpKind::Nor: case OpKind::Shl:
    case OpKind::Lshr: case OpKind::Ashr: case OpKind::Slt: case OpKind::Sltu:
      return 2;
    case OpKind::Load: return 1;   // base; displacement in value
    case OpKind::Store: return 2;  // base, value
    case OpKind::BranchCond:
      return CondCode(n.aux) == CondCode::Lez || CondCode(n.aux) == CondCode::Gtz
                 ? 1
                 : 2;
    case OpKind::Jump: return 0;
    case OpKind::Call: case OpKind::Return: case OpKind::Phi:
      return -1;  // variable
  }
  return -1;
}

}  // namespace

void check_cdfg(const ProcCdfg& proc) {
  std::set<int> placed;
  for (const auto& b : proc.blocks) {
    for (int id : b.ops) {
      if (id < 0 || size_t(id) >= proc.nodes.size()) bad(proc, "bad node id");
      if (!placed.insert(id).second) bad(proc, "node placed twice");
      const IrOp& n = proc.nodes[id];
      if (n.id != id) bad(proc, "node id mismatch");
      if (n.width < 1 || n.width > 32) bad(proc, "width out of range");
      int ar = expected_arity(n);
      if (ar >= 0 && int(n.operands.size()) != ar)
        bad(proc, std::string("arity mismatch on ") + op_kind_name(n.kind));
      if (n.kind == OpKind::Return && n.aux == 0 && n.operands.size() != 32)
        bad(proc, "return needs 32 register operands");
      if (n.kind == OpKind::Call && n.operands.size() != 32)
        bad(proc, "call needs 32 register operands");
      for (const auto& r : n.operands) {
        if (r.is_node() || r.is_call_reg()) {
          if (r.node < 0 || size_t(r.node) >= proc.nodes.size())
            bad(proc, "operand refers to missing node");
          if (r.is_call_reg() && proc.nodes[r.node].kind != OpKind::Call)
            bad(proc, "call-register ref to non-call node");
        }
        if (r.reg >= 32) bad(proc, "register out of range");
      }
    }
    // control ops may only terminate a block
    for (size_t i = 0; i + 1 < b.ops.size(); i++) {
      OpKind k = proc.nodes[b.ops[i]].kind;
      if (k == OpKind::BranchCond || k == OpKind::Jump || k == OpKind::Return)
        bad(proc, "control op not at block end");
    }
    // phis only at block head
    bool body_seen = false;
    for (int id : b.ops) {
      if (proc.nodes[id].kind == OpKind::Phi) {
        if (body_seen) bad(proc, "phi after non-phi");
        auto order = proc.phi_pred_order(b.id);
        if (proc.nodes[id].operands.size() != order.size())
          bad(proc, "phi operand count != predecessor count");
      } else {
        body_seen = true;
      }
    }
  }
  for (const auto& e : proc.edges) {
    if (e.from < 0 || size_t(e.from) >= proc.blocks.size() || e.to < 0 ||
        size_t(e.to) >= proc.blocks.size())
      bad(proc, "edge endpoint out of range");
  }
  if (proc.entry_block < 0 || size_t(proc.entry_block) >= proc.blocks.size())
    bad(proc, "bad entry block");
}

void check_cdfg(const CdfgModule& module) {
  for (const auto& [addr, proc] : module.procs) check_cdfg(proc);
}

size_t live_node_count(const ProcCdfg& proc) {
  size_t n = 0;
  for (const auto& b : proc.blocks) n += b.ops.size();
  return n;
}

}  // namespace binpart
