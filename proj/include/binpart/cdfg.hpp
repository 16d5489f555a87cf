#pragma once
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "binpart/errors.hpp"

namespace binpart {

enum class OpKind {
  Const, Copy, Add, Sub, Mul, And, Or, Xor, Nor,
  Shl, Lshr, Ashr, Slt, Sltu,
  Load, Store, BranchCond, Jump, Call, Return, Input, Output, Phi,
};

const char* op_kind_name(OpKind k);

// Branch condition codes carried in IrOp::aux for BranchCond nodes.
enum class CondCode { Eq, Ne, Lez, Gtz };
const char* cond_name(CondCode c);

// Value reference: a node result, a register at procedure entry, or a
// register after a call node.
struct ValueRef {
  int32_t node = -1;
  int16_t reg = -1;
  bool is_node() const { return node >= 0 && reg < 0; }
  bool is_entry_reg() const { return node < 0 && reg >= 0; }
  bool is_call_reg() const { return node >= 0 && reg >= 0; }
  bool valid() const { return node >= 0 || reg >= 0; }
  bool operator==(const ValueRef&) const = default;
  auto operator<=>(const ValueRef&) const = default;
  static ValueRef of_node(int n) { return {n, -1}; }
  static ValueRef of_entry_reg(int r) { return {-1, int16_t(r)}; }
  static ValueRef of_call_reg(int n, int r) { return {n, int16_t(r)}; }
  static ValueRef none() { return {-1, -1}; }
};

// A recoverable shift/add alternative for a multiplication by constant,
// kept so synthesis can re-decide strength reduction. Expression tree over
// a single variable.
struct ShiftAddForm {
  enum class K { Var, Shl, Add, Sub };
  struct Node {
    K k = K::Var;
    int a = -1, b = -1;  // child indices
    int shamt = 0;       // for Shl
  };
  std::vector<Node> nodes;
  int root = -1;

  uint32_t eval(uint32_t x) const;
  // internal (non-Var) node count
  int op_count() const;
};

// Load/Store access shapes carried in aux.
enum class MemAccess { Word = 0, ByteSigned = 1, ByteUnsigned = 2 };

struct IrOp {
  int id = -1;
  OpKind kind = OpKind::Const;
  std::vector<ValueRef> operands;
  int width = 32;          // inferred bit-width annotation, 1..32
  uint32_t origin = 0;     // source instruction address
  uint32_t value = 0;      // Const payload; Load/Store displacement;
                           // Jump/Call absolute target
  int aux = 0;             // BranchCond: CondCode; Load/Store: MemAccess;
                           // Phi: renamed register; Return: 1 == program halt;
                           // Jump: source register for indirect jumps, else -1
  int def_reg = -1;        // register defined (register-symbolic stage only)
  std::shared_ptr<ShiftAddForm> anno;  // promoted-multiply alternative
};

struct Block {
  int id = -1;
  uint32_t start_addr = 0;
  std::vector<uint32_t> insn_addrs;  // machine instructions covered
  std::vector<int> ops;              // node ids, in order
};

enum class EdgeKind { Fallthrough, Taken, Call, Return };

struct CfgEdge {
  int from = -1, to = -1;
  EdgeKind kind = EdgeKind::Fallthrough;
  bool operator==(const CfgEdge&) const = default;
};

struct InductionCandidate {
  int phi = -1;          // header phi node id
  int reg = -1;          // register the phi renames
  bool has_init = false;
  uint32_t init = 0;
  bool has_step = false;
  int32_t step = 0;
  int bound_branch = -1;  // branch_cond node testing the induction, or -1
};

struct StructNode {
  enum class Kind { Seq, IfThen, IfThenElse, LoopPre, LoopPost, Unstructured };
  Kind kind = Kind::Seq;
  std::vector<int> children;   // indices into StructureTree::nodes
  std::vector<int> blocks;     // leaf blocks directly owned by this region
  int header = -1;             // loop header / branch block
  std::vector<std::pair<int, int>> back_edges;
  std::vector<InductionCandidate> inductions;
};

struct StructureTree {
  std::vector<StructNode> nodes;
  int root = -1;

  // All blocks covered by region r (its own plus its descendants').
  std::vector<int> covered(int r) const;
};

const char* struct_kind_name(StructNode::Kind k);

struct ProcCdfg {
  std::string name;
  uint32_t entry_addr = 0;
  std::vector<IrOp> nodes;
  std::vector<Block> blocks;
  int entry_block = 0;
  std::vector<CfgEdge> edges;                 // intra-procedure
  std::vector<std::pair<int, int>> mem_edges; // (earlier node, later node)
  StructureTree structure;
  std::vector<uint32_t> live_in;   // register bitmask per block
  std::vector<uint32_t> live_out;
  uint32_t use_summary = 0;  // registers read (incl. callees)
  uint32_t def_summary = 0;  // registers possibly written (incl. callees)

  IrOp& op(int id) { return nodes[id]; }
  const IrOp& op(int id) const { return nodes[id]; }
  std::vector<int> succs(int block) const;
  std::vector<int> preds(int block) const;
  int succ_on(int block, EdgeKind kind) const;  // -1 when absent
  int terminator(int block) const;  // node id of trailing control op, or -1
  int new_node(OpKind kind, std::vector<ValueRef> operands, uint32_t origin);
  // Predecessor order used for phi operand layout: sorted pred ids, with -1
  // (virtual entry) first when block == entry_block.
  std::vector<int> phi_pred_order(int block) const;
};

struct CdfgModule {
  std::map<uint32_t, ProcCdfg> procs;  // keyed by entry address
  uint32_t entry = 0;

  ProcCdfg& entry_proc() { return procs.at(entry); }
  const ProcCdfg& entry_proc() const { return procs.at(entry); }
};

// Deterministic text dump used by golden-file tests:
//   node <id> <kind> <width> [operands...] @<origin-addr>
//   dedge <def> <use> / medge <a> <b> / cedge <from> <to> <kind>
std::string dump_cdfg(const ProcCdfg& proc);
std::string dump_cdfg(const CdfgModule& module);

// Structural well-formedness: operand arities, widths in range, edge
// targets, phi/pred consistency. Throws on violation.
void check_cdfg(const ProcCdfg& proc);
void check_cdfg(const CdfgModule& module);

// Total op count across reachable nodes (dead nodes excluded from blocks
// are not counted).
size_t live_node_count(const ProcCdfg& proc);

}  // namespace binpart
