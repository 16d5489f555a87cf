#include <cassert>

#include "binpart/decompile.hpp"

namespace binpart {

uint32_t CdfgExecutor::Frame::eval(const ValueRef& r) const {
  if (r.is_node()) return values[r.node];
  if (r.is_entry_reg()) return r.reg == 0 ? 0 : regs_in[r.reg];
  if (r.is_call_reg()) return call_values.at(r.node)[r.reg];
  assert(false && "evaluating an empty value reference");
  return 0;
}

uint8_t CdfgExecutor::load_byte(uint32_t addr) const {
  auto it = mem_.find(addr);
  return it == mem_.end() ? 0 : it->second;
}

void CdfgExecutor::store_byte(uint32_t addr, uint8_t v) { mem_[addr] = v; }

uint32_t CdfgExecutor::load_mem(uint32_t addr, MemAccess acc) const {
  if (acc == MemAccess::Word) {
    if (addr % 4)
      throw ToolError(Err::UnalignedAccess, "load at " + std::to_string(addr));
    return uint32_t(load_byte(addr)) | uint32_t(load_byte(addr + 1)) << 8 |
           uint32_t(load_byte(addr + 2)) << 16 |
           uint32_t(load_byte(addr + 3)) << 24;
  }
  uint8_t b = load_byte(addr);
  return acc == MemAccess::ByteSigned ? uint32_t(int32_t(int8_t(b))) : b;
}

void CdfgExecutor::store_mem(uint32_t addr, uint32_t v, MemAccess acc) {
  if (acc == MemAccess::Word) {
    if (addr % 4)
      throw ToolError(Err::UnalignedAccess, "store at " + std::to_string(addr));
    for (int i = 0; i < 4; i++) store_byte(addr + i, uint8_t(v >> (8 * i)));
  } else {
    store_byte(addr, uint8_t(v));
  }
}

std::array<uint32_t, 32> CdfgExecutor::exec_proc(
    const ProcCdfg& proc, const std::array<uint32_t, 32>& regs_in) {
  Frame f;
  f.proc = &proc;
  f.values.assign(proc.nodes.size(), 0);
  f.regs_in = regs_in;

  int block = proc.entry_block;
  int prev = -1;
  std::array<uint32_t, 32> regs_out{};

  while (!halted_) {
    if (on_block_entry(f, prev, block)) {
      // hook handled a region and set `block` to the resume target;
      // hook_exit_ names the in-region block whose edge was taken, so the
      // resume block's phis resolve against the right predecessor
      prev = hook_exit_;
      continue;
    }
    const Block& b = proc.blocks[block];

    // resolve phis in parallel against the traversed edge
    auto order = proc.phi_pred_order(block);
    int pred_idx = -1;
    for (size_t i = 0; i < order.size(); i++)
      if (order[i] == prev) pred_idx = int(i);
    std::vector<std::pair<int, uint32_t>> phi_updates;
    for (int id : b.ops) {
      const IrOp& op = proc.nodes[id];
      if (op.kind != OpKind::Phi) break;
      assert(pred_idx >= 0 && "phi without matching predecessor");
      phi_updates.push_back({id, f.eval(op.operands[pred_idx])});
    }
    for (auto& [id, v] : phi_updates) {
      f.values[id] = v;
      if (mask_widths_ && proc.nodes[id].width < 32)
        f.values[id] &= (uint32_t(1) << proc.nodes[id].width) - 1;
    }

    int next = -2;  // -2: fall through CFG edge
    for (int id : b.ops) {
      const IrOp& op = proc.nodes[id];
      if (op.kind == OpKind::Phi) continue;
      if (steps_ >= max_steps_)
        throw ToolError(Err::MaxStepsExceeded,
                        std::to_string(max_steps_) + " steps");
      steps_++;
      auto a = [&] { return f.eval(op.operands[0]); };
      auto c = [&] { return f.eval(op.operands[1]); };
      switch (op.kind) {
        case OpKind::Const: f.values[id] = op.value; break;
        case OpKind::Copy: f.values[id] = a(); break;
        case OpKind::Add: f.values[id] = a() + c(); break;
        case OpKind::Sub: f.values[id] = a() - c(); break;
        case OpKind::Mul: f.values[id] = a() * c(); break;
        case OpKind::And: f.values[id] = a() & c(); break;
        case OpKind::Or: f.values[id] = a() | c(); break;
        case OpKind::Xor: f.values[id] = a() ^ c(); break;
        case OpKind::Nor: f.values[id] = ~(a() | c()); break;
        case OpKind::Shl: f.values[id] = a() << (c() & 31); break;
        case OpKind::Lshr: f.values[id] = a() >> (c() & 31); break;
        case OpKind::Ashr:
          f.values[id] = uint32_t(int32_t(a()) >> (c() & 31));
          break;
        case OpKind::Slt:
          f.values[id] = int32_t(a()) < int32_t(c()) ? 1 : 0;
          break;
        case OpKind::Sltu: f.values[id] = a() < c() ? 1 : 0; break;
        case OpKind::Load:
          f.values[id] = load_mem(a() + op.value, MemAccess(op.aux));
          break;
        case OpKind::Store:
          store_mem(a() + op.value, c(), MemAccess(op.aux));
          break;
        case OpKind::Input:
          if (inputs_.empty())
            throw ToolError(Err::InputExhausted, "input node");
          f.values[id] = inputs_.front();
          inputs_.pop_front();
          break;
        case OpKind::Output:
          outputs_.push_back(a());
          break;
        case OpKind::Call: {
          auto it = module_->procs.find(op.value);
          if (it == module_->procs.end())
            throw ToolError(Err::MemoryFault,
                            "call to unknown procedure " +
                                std::to_string(op.value));
          std::array<uint32_t, 32> callee_regs{};
          for (int r = 1; r < 32; r++)
            if (op.operands[r].valid()) callee_regs[r] = f.eval(op.operands[r]);
          callee_regs[31] = op.origin + 4;  // return address convention
          f.call_values[id] = exec_proc(it->second, callee_regs);
          if (halted_) return regs_out;
          break;
        }
        case OpKind::Return:
          if (op.aux == 1) {
            halted_ = true;
            on_halt();
            return regs_out;
          }
          for (int r = 1; r < 32; r++)
            if (op.operands[r].valid()) regs_out[r] = f.eval(op.operands[r]);
          return regs_out;
        case OpKind::BranchCond: {
          bool taken;
          switch (CondCode(op.aux)) {
            case CondCode::Eq: taken = a() == c(); break;
            case CondCode::Ne: taken = a() != c(); break;
            case CondCode::Lez: taken = int32_t(a()) <= 0; break;
            case CondCode::Gtz: taken = int32_t(a()) > 0; break;
            default: taken = false; break;
          }
          next = proc.succ_on(block, taken ? EdgeKind::Taken
                                           : EdgeKind::Fallthrough);
          if (next < 0)  // conditional with both arms on the same target
            next = proc.succ_on(block, EdgeKind::Taken);
          break;
        }
        case OpKind::Jump:
          next = proc.succ_on(block, EdgeKind::Taken);
          if (next < 0) next = proc.succ_on(block, EdgeKind::Fallthrough);
          break;
        case OpKind::Phi: break;
      }
      // width-soundness checking mode: truncate every value to its
      // annotated width before any consumer sees it
      if (mask_widths_ && op.width < 32) {
        switch (op.kind) {
          case OpKind::Const: case OpKind::Copy: case OpKind::Add:
          case OpKind::Sub: case OpKind::Mul: case OpKind::And:
          case OpKind::Or: case OpKind::Xor: case OpKind::Nor:
          case OpKind::Shl: case OpKind::Lshr: case OpKind::Ashr:
          case OpKind::Slt: case OpKind::Sltu: case OpKind::Load:
          case OpKind::Input:
            f.values[id] &= (uint32_t(1) << op.width) - 1;
            break;
          default:
            break;
        }
      }
    }
    if (next == -2) {
      next = proc.succ_on(block, EdgeKind::Fallthrough);
      if (next < 0) next = proc.succ_on(block, EdgeKind::Taken);
    }
    if (next < 0)
      throw ToolError(Err::MemoryFault, "control fell off block " +
                                            std::to_string(block));
    prev = block;
    block = next;
  }
  return regs_out;
}

ExecutionResult CdfgExecutor::run(const CdfgModule& module,
                                  const ProgramImage& image,
                                  const std::vector<uint32_t>& inputs,
                                  uint64_t max_steps) {
  module_ = &module;
  mem_.clear();
  for (size_t i = 0; i < image.text.size(); i++)
    for (int b = 0; b < 4; b++)
      mem_[image.text_base + uint32_t(i * 4 + b)] =
          uint8_t(image.text[i] >> (8 * b));
  for (size_t i = 0; i < image.data.size(); i++)
    mem_[image.data_base + uint32_t(i)] = image.data[i];
  inputs_.assign(inputs.begin(), inputs.end());
  outputs_.clear();
  steps_ = 0;
  max_steps_ = max_steps;
  halted_ = false;

  ExecutionResult r;
  try {
    exec_proc(module.procs.at(module.entry), {});
    r.exit_reason = halted_ ? ExitReason::Halted : ExitReason::Fault;
    if (!halted_) r.fault = "entry procedure returned without halting";
  } catch (const ToolError& e) {
    r.exit_reason = e.code == Err::MaxStepsExceeded
                        ? ExitReason::MaxStepsExceeded
                        : ExitReason::Fault;
    if (r.exit_reason == ExitReason::Fault) r.fault = e.what();
  }
  r.outputs = outputs_;
  r.steps = steps_;
  return r;
}

ExecutionResult execute_cdfg(const CdfgModule& module, const ProgramImage& image,
                             const std::vector<uint32_t>& inputs,
                             uint64_t max_steps) {
  CdfgExecutor ex;
  return ex.run(module, image, inputs, max_steps);
}

}  // namespace binpart
