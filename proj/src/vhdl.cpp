#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "binpart/errors.hpp"
#include "binpart/synth.hpp"

namespace binpart {

namespace {

std::string state_name(int block, int step) {
  return "s_b" + std::to_string(block) + "_s" + std::to_string(step);
}

std::string hex32(uint32_t v) {
  char buf[16];
  snprintf(buf, sizeof buf, "x\"%08x\"", v);
  return buf;
}

struct Emitter {
  const RtlDesign& d;
  const ProcCdfg& p;
  std::ostringstream os;

  explicit Emitter(const RtlDesign& dd) : d(dd), p(dd.region.proc) {}

  std::string reg(int node) const {
    return "r" + std::to_string(d.reg_of.at(node));
  }

  // operand as an rvalue expression; every non-constant value lives in a
  // register by construction
  std::string ref(const ValueRef& r) const {
    if (r.is_entry_reg())
      return r.reg == 0 ? "c_zero" : "in" + std::to_string(r.reg - 1);
    const IrOp& n = p.op(r.node);
    if (n.kind == OpKind::Const) return "unsigned'(" + hex32(n.value) + ")";
    return reg(r.node);
  }

  std::string rtl_expr(const IrOp& n) const {
    auto a = [&] { return ref(n.operands[0]); };
    auto b = [&] { return ref(n.operands[1]); };
    auto sh = [&] { return "to_integer(" + b() + "(4 downto 0))"; };
    switch (n.kind) {
      case OpKind::Copy: return a();
      case OpKind::Add: return a() + " + " + b();
      case OpKind::Sub: return a() + " - " + b();
      case OpKind::Mul: return "resize(" + a() + " * " + b() + ", 32)";
      case OpKind::And: return a() + " and " + b();
      case OpKind::Or: return a() + " or " + b();
      case OpKind::Xor: return a() + " xor " + b();
      case OpKind::Nor: return "not (" + a() + " or " + b() + ")";
      case OpKind::Shl: return "shift_left(" + a() + ", " + sh() + ")";
      case OpKind::Lshr: return "shift_right(" + a() + ", " + sh() + ")";
      case OpKind::Ashr:
        return "unsigned(shift_right(signed(" + a() + "), " + sh() + "))";
      case OpKind::Slt:
        return "b2u(signed(" + a() + ") < signed(" + b() + "))";
      case OpKind::Sltu: return "b2u(" + a() + " < " + b() + ")";
      case OpKind::Load: {
        MemAccess acc = MemAccess(n.aux);
        if (acc == MemAccess::Word) return "mem_rdata";
        if (acc == MemAccess::ByteUnsigned)
          return "resize(mem_rdata(7 downto 0), 32)";
        return "unsigned(resize(signed(mem_rdata(7 downto 0)), 32))";
      }
      case OpKind::BranchCond: {
        std::string cmp;
        switch (CondCode(n.aux)) {
          case CondCode::Eq: cmp = a() + " = " + b(); break;
          case CondCode::Ne: cmp = a() + " /= " + b(); break;
          case CondCode::Lez: cmp = "signed(" + a() + ") <= 0"; break;
          case CondCode::Gtz: cmp = "signed(" + a() + ") > 0"; break;
        }
        return "b2u(" + cmp + ")";
      }
      default: return "c_zero";
    }
  }

  std::string addr_expr(const IrOp& n) const {
    std::string base = ref(n.operands[0]);
    if (n.value == 0) return base;
    return base + " + unsigned'(" + hex32(n.value) + ")";
  }

  // control resolution at the end of a block, one edge kind at a time
  struct Target {
    bool is_exit = false;
    int block = -1;  // copied block
    int exit_index = -1;
  };
  std::optional<Target> resolve(int block, EdgeKind k) const {
    int next = p.succ_on(block, k);
    if (next >= 0) return Target{false, next, -1};
    for (size_t i = 0; i < d.region.exits.size(); i++)
      if (d.region.exits[i].copy_block == block &&
          d.region.exits[i].kind == k)
        return Target{true, -1, int(i)};
    return std::nullopt;
  }
  Target resolve_or_alt(int block, EdgeKind want) const {
    if (auto t = resolve(block, want)) return *t;
    EdgeKind alt =
        want == EdgeKind::Taken ? EdgeKind::Fallthrough : EdgeKind::Taken;
    if (auto t = resolve(block, alt)) return *t;
    throw ToolError(Err::BadConfig,
                    "no successor for block " + std::to_string(block));
  }

  // next-state plus target-phi updates for entering `t` from block `from`
  void emit_enter(const Target& t, int from, const std::string& ind) {
    if (t.is_exit) {
      os << ind << "state_n <= s_done;\n";
      os << ind << "exit_n <= to_unsigned(" << t.exit_index << ", 8);\n";
      return;
    }
    os << ind << "state_n <= " << state_name(t.block, 1) << ";\n";
    auto order = p.phi_pred_order(t.block);
    int idx = -1;
    for (size_t i = 0; i < order.size(); i++)
      if (order[i] == from) idx = int(i);
    for (int id : p.blocks[t.block].ops) {
      const IrOp& n = p.op(id);
      if (n.kind != OpKind::Phi) break;
      os << ind << reg(id) << "_n <= " << ref(n.operands[size_t(idx)])
         << ";\n";
    }
  }

  void run() {
    os << "library ieee;\n";
    os << "use ieee.std_logic_1164.all;\n";
    os << "use ieee.numeric_std.all;\n\n";
    os << "entity " << d.name << " is\n";
    os << "  port (\n";
    os << "    clk : in std_logic;\n";
    os << "    rst : in std_logic;\n";
    os << "    start : in std_logic;\n";
    os << "    done : out std_logic;\n";
    for (size_t i = 0; i < d.region.ports.size(); i++)
      os << "    in" << i << " : in unsigned(31 downto 0);\n";
    for (size_t i = 0; i < d.region.live_out.size(); i++)
      os << "    out" << i << " : out unsigned(31 downto 0);\n";
    os << "    exit_sel : out unsigned(7 downto 0);\n";
    os << "    mem_addr : out unsigned(31 downto 0);\n";
    os << "    mem_wdata : out unsigned(31 downto 0);\n";
    os << "    mem_rdata : in unsigned(31 downto 0);\n";
    os << "    mem_we : out std_logic\n";
    os << "  );\n";
    os << "end " << d.name << ";\n\n";

    os << "architecture rtl of " << d.name << " is\n";
    os << "  type state_t is (s_idle";
    for (auto [b, s] : d.states) os << ", " << state_name(b, s);
    os << ", s_done);\n";
    os << "  signal state_r, state_n : state_t;\n";
    for (int i = 0; i < d.reg_count; i++)
      os << "  signal r" << i << ", r" << i << "_n : unsigned(31 downto 0);\n";
    os << "  signal exit_r, exit_n : unsigned(7 downto 0);\n";
    os << "  constant c_zero : unsigned(31 downto 0) := (others => '0');\n";
    os << "  function b2u(b : boolean) return unsigned is\n";
    os << "  begin\n";
    os << "    if b then\n";
    os << "      return to_unsigned(1, 32);\n";
    os << "    else\n";
    os << "      return to_unsigned(0, 32);\n";
    os << "    end if;\n";
    os << "  end function;\n";
    os << "begin\n\n";

    os << "  sync : process (clk)\n";
    os << "  begin\n";
    os << "    if rising_edge(clk) then\n";
    os << "      if rst = '1' then\n";
    os << "        state_r <= s_idle;\n";
    os << "      else\n";
    os << "        state_r <= state_n;\n";
    for (int i = 0; i < d.reg_count; i++)
      os << "        r" << i << " <= r" << i << "_n;\n";
    os << "        exit_r <= exit_n;\n";
    os << "      end if;\n";
    os << "    end if;\n";
    os << "  end process;\n\n";

    os << "  comb : process (all)\n";
    os << "  begin\n";
    os << "    state_n <= state_r;\n";
    for (int i = 0; i < d.reg_count; i++)
      os << "    r" << i << "_n <= r" << i << ";\n";
    os << "    exit_n <= exit_r;\n";
    os << "    mem_addr <= c_zero;\n";
    os << "    mem_wdata <= c_zero;\n";
    os << "    mem_we <= '0';\n";
    os << "    case state_r is\n";

    // idle: wait for start, load entry phis, jump to the first header state
    os << "      when s_idle =>\n";
    os << "        if start = '1' then\n";
    emit_enter(Target{false, p.entry_block, -1}, -1, "          ");
    os << "        end if;\n";

    for (auto [b, step] : d.states) {
      os << "      when " << state_name(b, step) << " =>\n";
      const std::string ind = "        ";
      int steps = d.sched.block_steps.at(b);
      int branch = -1;
      // datapath: drive memory at issue, capture results at finish
      for (int id : p.blocks[b].ops) {
        auto it = d.sched.slots.find(id);
        if (it == d.sched.slots.end()) continue;
        const IrOp& n = p.op(id);
        int lat = unit_latency(d.resources, it->second.cls);
        int fin = it->second.step + lat - 1;
        if (n.kind == OpKind::Load || n.kind == OpKind::Store) {
          if (it->second.step == step) {
            os << ind << "mem_addr <= " << addr_expr(n) << ";\n";
            if (n.kind == OpKind::Store) {
              os << ind << "mem_wdata <= " << ref(n.operands[1]) << ";\n";
              os << ind << "mem_we <= '1';\n";
            }
          }
        }
        if (fin != step || n.kind == OpKind::Store) continue;
        if (n.kind == OpKind::BranchCond) branch = id;
        if (d.reg_of.count(id))
          os << ind << reg(id) << "_n <= " << rtl_expr(n) << ";\n";
      }
      if (step < steps) {
        os << ind << "state_n <= " << state_name(b, step + 1) << ";\n";
        continue;
      }
      // last step: control transfer
      int term = p.terminator(b);
      if (term >= 0 && p.op(term).kind == OpKind::BranchCond) {
        // the condition computed this very step is used combinationally
        std::string cond = branch == term
                               ? rtl_expr(p.op(term))
                               : reg(term);
        os << ind << "if " << cond << "(0) = '1' then\n";
        emit_enter(resolve_or_alt(b, EdgeKind::Taken), b, ind + "  ");
        os << ind << "else\n";
        emit_enter(resolve_or_alt(b, EdgeKind::Fallthrough), b, ind + "  ");
        os << ind << "end if;\n";
      } else {
        EdgeKind want = (term >= 0 && p.op(term).kind == OpKind::Jump)
                            ? EdgeKind::Taken
                            : EdgeKind::Fallthrough;
        emit_enter(resolve_or_alt(b, want), b, ind);
      }
    }

    os << "      when s_done =>\n";
    os << "        if start = '0' then\n";
    os << "          state_n <= s_idle;\n";
    os << "        end if;\n";
    os << "    end case;\n";
    os << "  end process;\n\n";

    os << "  done <= '1' when state_r = s_done else '0';\n";
    os << "  exit_sel <= exit_r;\n";
    for (size_t i = 0; i < d.region.live_out.size(); i++)
      os << "  out" << i << " <= " << reg(d.region.live_out[i]) << ";\n";
    os << "\nend rtl;\n";
  }
};

}  // namespace

std::string emit_vhdl(const RtlDesign& design) {
  Emitter e(design);
  e.run();
  return e.os.str();
}

// ---------------------------------------------------------------------------
// well-formedness checking
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> toks;
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
      while (i < text.size() && text[i] != '\n') i++;
    } else if (isalpha(uint8_t(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() &&
             (isalnum(uint8_t(text[j])) || text[j] == '_'))
        j++;
      std::string t = text.substr(i, j - i);
      for (auto& ch : t) ch = char(tolower(uint8_t(ch)));
      toks.push_back(t);
      i = j;
    } else if (c == 'x' && i + 1 < text.size() && text[i + 1] == '"') {
      size_t j = text.find('"', i + 2);
      toks.push_back("<lit>");
      i = j == std::string::npos ? text.size() : j + 1;
    } else if (c == '"') {
      size_t j = text.find(c, i + 1);
      toks.push_back("<lit>");
      i = j == std::string::npos ? text.size() : j + 1;
    } else if (c == '\'') {
      // only 'X' is a character literal; a lone tick qualifies a type
      if (i + 2 < text.size() && text[i + 2] == '\'') {
        toks.push_back("<lit>");
        i += 3;
      } else {
        toks.push_back("'");
        i++;
      }
    } else if (isdigit(uint8_t(c))) {
      while (i < text.size() && isalnum(uint8_t(text[i]))) i++;
      toks.push_back("<lit>");
    } else if (c == '<' && i + 1 < text.size() && text[i + 1] == '=') {
      toks.push_back("<=");
      i += 2;
    } else if (!isspace(uint8_t(c))) {
      toks.push_back(std::string(1, c));
      i++;
    } else {
      i++;
    }
  }
  return toks;
}

[[noreturn]] void bad(const std::string& m) {
  throw ToolError(Err::BadConfig, "vhdl check: " + m);
}

}  // namespace

void check_vhdl(const std::string& text) {
  auto toks = tokenize(text);
  if (toks.empty()) bad("empty file");

  // structural balance
  std::vector<std::string> stack;
  long process_count = 0;
  for (size_t i = 0; i < toks.size(); i++) {
    const std::string& t = toks[i];
    auto next = [&](size_t k) {
      return i + k < toks.size() ? toks[i + k] : std::string();
    };
    if (t == "entity" && next(2) == "is") {
      stack.push_back("entity");
    } else if (t == "architecture") {
      stack.push_back("architecture");
    } else if (t == "process") {
      if (!stack.empty() && stack.back() == "process-end") {
        stack.pop_back();  // "end process"
      } else {
        stack.push_back("process");
        process_count++;
      }
    } else if (t == "case" && (i == 0 || toks[i - 1] != "end")) {
      stack.push_back("case");
    } else if (t == "if" && (i == 0 || toks[i - 1] != "end")) {
      // "end if" handled below; plain "if" opens a region
      stack.push_back("if");
    } else if (t == "function") {
      if (i == 0 || toks[i - 1] != "end") stack.push_back("function");
    } else if (t == "end") {
      std::string what = next(1);
      if (what == "process") {
        if (stack.empty() || stack.back() != "process")
          bad("unbalanced end process");
        stack.pop_back();
        i++;  // consume so "process" is not re-counted
      } else if (what == "case") {
        if (stack.empty() || stack.back() != "case")
          bad("unbalanced end case");
        stack.pop_back();
        i++;
      } else if (what == "if") {
        if (stack.empty() || stack.back() != "if")
          bad("unbalanced end if");
        stack.pop_back();
        i++;
      } else if (what == "function") {
        if (stack.empty() || stack.back() != "function")
          bad("unbalanced end function");
        stack.pop_back();
        i++;
      } else {
        // "end <name>;" / "end rtl;" close entity or architecture
        if (stack.empty() ||
            (stack.back() != "entity" && stack.back() != "architecture"))
          bad("unexpected end " + what);
        stack.pop_back();
        if (what != ";") i++;
      }
    }
  }
  if (!stack.empty()) bad("unclosed " + stack.back());
  if (process_count < 1) bad("no process found");

  // declared names: ports, signals, constants, state literals, functions
  std::set<std::string> decl = {"rising_edge", "to_unsigned", "to_integer",
                                "resize", "shift_left", "shift_right",
                                "signed", "unsigned", "std_logic",
                                "std_logic_vector", "boolean", "others",
                                "all", "downto"};
  std::set<std::string> states;
  for (size_t i = 0; i + 1 < toks.size(); i++) {
    if (toks[i] == "signal" || toks[i] == "constant") {
      size_t j = i + 1;
      while (j < toks.size() && toks[j] != ":") {
        if (toks[j] != ",") decl.insert(toks[j]);
        j++;
      }
    } else if (toks[i] == "function") {
      decl.insert(toks[i + 1]);
      // parameter names
      size_t j = i + 2;
      while (j < toks.size() && toks[j] != ")") {
        if (toks[j] == "(" || toks[j] == ";") {
          size_t k = j + 1;
          while (k < toks.size() && toks[k] != ":") {
            if (toks[k] != ",") decl.insert(toks[k]);
            k++;
          }
        }
        j++;
      }
    } else if (toks[i] == "type" && toks[i + 2] == "is") {
      size_t j = i + 3;
      if (j < toks.size() && toks[j] == "(") {
        j++;
        while (j < toks.size() && toks[j] != ")") {
          if (toks[j] != ",") {
            decl.insert(toks[j]);
            states.insert(toks[j]);
          }
          j++;
        }
      }
      decl.insert(toks[i + 1]);
    } else if (toks[i] == "port" && toks[i + 1] == "(") {
      size_t j = i + 2;
      int depth = 1;
      bool naming = true;
      while (j < toks.size() && depth > 0) {
        if (toks[j] == "(") depth++;
        else if (toks[j] == ")") depth--;
        else if (depth == 1) {
          if (toks[j] == ":") naming = false;
          else if (toks[j] == ";") naming = true;
          else if (naming && toks[j] != ",") decl.insert(toks[j]);
        }
        j++;
      }
    }
  }

  // every assignment target must be declared
  for (size_t i = 1; i < toks.size(); i++)
    if (toks[i] == "<=" && isalpha(uint8_t(toks[i - 1][0])) &&
        !decl.count(toks[i - 1]) && toks[i - 1] != "<lit>")
      bad("assignment to undeclared name " + toks[i - 1]);

  // state machine reachability over `when s => ... state_n <= t` sections
  if (!states.empty()) {
    if (!states.count("s_idle")) bad("no s_idle state");
    std::map<std::string, std::set<std::string>> trans;
    std::string cur;
    for (size_t i = 0; i + 1 < toks.size(); i++) {
      if (toks[i] == "when" && states.count(toks[i + 1]))
        cur = toks[i + 1];
      else if (toks[i] == "<=" && i >= 1 && toks[i - 1] == "state_n" &&
               !cur.empty()) {
        if (!states.count(toks[i + 1]))
          bad("transition to unknown state " + toks[i + 1]);
        trans[cur].insert(toks[i + 1]);
      }
    }
    std::set<std::string> seen = {"s_idle"};
    std::vector<std::string> work = {"s_idle"};
    while (!work.empty()) {
      std::string s = work.back();
      work.pop_back();
      for (const auto& t : trans[s])
        if (seen.insert(t).second) work.push_back(t);
    }
    for (const auto& s : states)
      if (!seen.count(s)) bad("unreachable state " + s);
  }
}

}  // namespace binpart
