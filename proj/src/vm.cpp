#include "cbpd/vm.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace cbpd {

Instruction Instruction::emit(Action a) {
  Instruction i;
  i.op = Opcode::Emit;
  i.action = a;
  return i;
}

Instruction Instruction::compare(CmpOp cmp, Operand lhs, Operand rhs,
                                 int on_true, int on_false) {
  Instruction i;
  i.op = Opcode::Compare;
  i.cmp = cmp;
  i.lhs = lhs;
  i.rhs = rhs;
  i.on_true = on_true;
  i.on_false = on_false;
  return i;
}

Instruction Instruction::increment(int reg) {
  Instruction i;
  i.op = Opcode::Increment;
  i.reg = reg;
  return i;
}

Instruction Instruction::load_const(int reg, std::int64_t value) {
  Instruction i;
  i.op = Opcode::LoadConst;
  i.reg = reg;
  i.value = value;
  return i;
}

Instruction Instruction::load_obs(int reg, ObsField field) {
  Instruction i;
  i.op = Opcode::LoadObs;
  i.reg = reg;
  i.field = field;
  return i;
}

Instruction Instruction::jump(int target) {
  Instruction i;
  i.op = Opcode::Jump;
  i.target = target;
  return i;
}

Instruction Instruction::halt() { return Instruction{}; }

int compare_cost(int width_bits) { return width_bits; }

VmState reset(const StrategyProgram& program) {
  VmState s;
  s.registers.assign(program.register_widths.size(), 0);
  return s;
}

namespace {

std::uint64_t mask_for(int width) {
  return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

struct Value {
  bool none = false;
  bool is_payoff = false;
  std::int64_t i = 0;
  Payoff p{0};
  int width = 1;
};

Value resolve(const Operand& op, const StrategyProgram& prog,
              const VmState& state, const Observation& obs) {
  Value v;
  switch (op.kind) {
    case Operand::Kind::Register:
      v.i = static_cast<std::int64_t>(state.registers[op.index]);
      v.width = prog.register_widths[op.index];
      break;
    case Operand::Kind::Constant:
      v.i = op.value;
      v.width = bit_width_of(static_cast<std::uint64_t>(op.value < 0 ? -op.value : op.value));
      break;
    case Operand::Kind::PayoffConst:
      v.is_payoff = true;
      v.p = op.payoff;
      v.width = kPayoffWidth;
      break;
    case Operand::Kind::Field:
      switch (static_cast<ObsField>(op.index)) {
        case ObsField::OppLast:
        case ObsField::OwnLast: {
          const auto& a = static_cast<ObsField>(op.index) == ObsField::OppLast
                              ? obs.opp_last
                              : obs.own_last;
          v.width = kActionWidth;
          if (a) v.i = static_cast<std::int64_t>(*a);
          else v.none = true;
          break;
        }
        case ObsField::LastPayoff:
          v.is_payoff = true;
          v.p = obs.last_payoff;
          v.width = kPayoffWidth;
          break;
        case ObsField::Horizon:
          v.i = obs.horizon - op.value;
          v.width = bit_width_of(static_cast<std::uint64_t>(std::max(obs.horizon, 0)));
          break;
      }
      break;
  }
  return v;
}

struct Evaluated {
  bool result;
  int cost;
};

Evaluated evaluate(const Instruction& ins, const StrategyProgram& prog,
                   const VmState& state, const Observation& obs) {
  const Value a = resolve(ins.lhs, prog, state, obs);
  const Value b = resolve(ins.rhs, prog, state, obs);
  if (a.none || b.none) return {false, 1};
  const int width = std::max(a.width, b.width);

  int order;  // sign of a - b
  if (a.is_payoff || b.is_payoff) {
    const Payoff pa = a.is_payoff ? a.p : Payoff(a.i);
    const Payoff pb = b.is_payoff ? b.p : Payoff(b.i);
    order = pa < pb ? -1 : (pb < pa ? 1 : 0);
  } else {
    order = a.i < b.i ? -1 : (b.i < a.i ? 1 : 0);
  }

  switch (ins.cmp) {
    case CmpOp::Eq: return {order == 0, order == 0 ? width : 1};
    case CmpOp::Ne: return {order != 0, order == 0 ? width : 1};
    case CmpOp::Lt: return {order < 0, width};
    case CmpOp::Ge: return {order >= 0, width};
  }
  return {false, width};
}

std::uint64_t observe(ObsField f, const Observation& obs) {
  switch (f) {
    case ObsField::OppLast:
      return obs.opp_last ? static_cast<std::uint64_t>(*obs.opp_last) : 0;
    case ObsField::OwnLast:
      return obs.own_last ? static_cast<std::uint64_t>(*obs.own_last) : 0;
    case ObsField::LastPayoff: {
      const auto n = obs.last_payoff.numerator() / obs.last_payoff.denominator();
      return static_cast<std::uint64_t>(n);
    }
    case ObsField::Horizon:
      return static_cast<std::uint64_t>(std::max(obs.horizon, 0));
  }
  return 0;
}

bool register_ok(const Operand& op, const StrategyProgram& prog) {
  return op.kind != Operand::Kind::Register ||
         (op.index >= 0 && op.index < static_cast<int>(prog.register_widths.size()));
}

TickResult fault(VmState& state, int pc, int spent) {
  state.faulted = true;
  state.pending.reset();
  state.emitted.reset();
  state.spent = spent;
  state.pc = 0;
  TickResult r;
  r.faulted = true;
  r.pc = pc;
  r.cost = spent;
  return r;
}

}  // namespace

TickResult tick(VmState& state, const StrategyProgram& program,
                const Observation& obs, int k) {
  if (state.faulted) return fault(state, state.pc, 0);

  const int size = program.size();
  int pc = state.pending ? state.pending->pc : 0;
  int spent = 0;
  // Forward-only programs finish in at most `size` steps; anything longer is
  // a bookkeeping loop that never yields.
  const int step_cap = 4 * size + 16;

  for (int steps = 0;; ++steps) {
    if (steps > step_cap) return fault(state, pc, spent);
    if (pc == size) {
      state.pc = 0;
      state.spent = spent;
      state.emitted.reset();
      TickResult r;
      r.cost = spent;
      r.pc = pc;
      r.reached_end = true;
      return r;
    }
    if (pc < 0 || pc > size) return fault(state, pc, spent);

    const Instruction& ins = program.code[static_cast<std::size_t>(pc)];
    switch (ins.op) {
      case Opcode::Emit: {
        state.pc = 0;
        state.spent = spent;
        state.emitted = ins.action;
        TickResult r;
        r.action = ins.action;
        r.cost = spent;
        r.pc = pc;
        return r;
      }
      case Opcode::Compare: {
        Evaluated ev;
        if (state.pending && state.pending->pc == pc) {
          ev = {state.pending->result, state.pending->remaining};
        } else if (!register_ok(ins.lhs, program) || !register_ok(ins.rhs, program)) {
          return fault(state, pc, spent);
        } else {
          ev = evaluate(ins, program, state, obs);
        }
        if (spent + ev.cost > k) {
          state.pending = PendingCompare{pc, ev.cost - (k - spent), ev.result};
          state.pc = pc;
          state.spent = k;
          state.emitted.reset();
          TickResult r;
          r.cost = k;
          r.pc = pc;
          r.suspended = true;
          return r;
        }
        spent += ev.cost;
        state.pending.reset();
        pc = ev.result ? ins.on_true : ins.on_false;
        break;
      }
      case Opcode::Increment:
      case Opcode::LoadConst:
      case Opcode::LoadObs: {
        if (ins.reg < 0 || ins.reg >= static_cast<int>(state.registers.size())) {
          return fault(state, pc, spent);
        }
        auto& reg = state.registers[static_cast<std::size_t>(ins.reg)];
        const std::uint64_t mask = mask_for(program.register_widths[ins.reg]);
        if (ins.op == Opcode::Increment) reg = (reg + 1) & mask;
        else if (ins.op == Opcode::LoadConst) reg = static_cast<std::uint64_t>(ins.value) & mask;
        else reg = observe(ins.field, obs) & mask;
        ++pc;
        break;
      }
      case Opcode::Jump:
        pc = ins.target;
        break;
      case Opcode::Halt:
        pc = size;
        break;
    }
  }
}

std::vector<std::string> validate_program(const StrategyProgram& p) {
  std::vector<std::string> out;
  const int size = p.size();
  const int nregs = static_cast<int>(p.register_widths.size());
  auto check_target = [&](int pc, int t) {
    if (t < 0 || t > size) {
      out.push_back("instruction " + std::to_string(pc) + ": jump target " +
                    std::to_string(t) + " out of range");
    }
  };
  auto check_operand = [&](int pc, const Operand& o) {
    if (o.kind == Operand::Kind::Register && (o.index < 0 || o.index >= nregs)) {
      out.push_back("instruction " + std::to_string(pc) + ": unknown register");
    }
  };
  for (int w : p.register_widths) {
    if (w < 1 || w > kMaxRegisterWidth) {
      out.push_back("register width " + std::to_string(w) + " outside 1.." +
                    std::to_string(kMaxRegisterWidth));
    }
  }
  for (int pc = 0; pc < size; ++pc) {
    const auto& ins = p.code[static_cast<std::size_t>(pc)];
    switch (ins.op) {
      case Opcode::Compare:
        check_operand(pc, ins.lhs);
        check_operand(pc, ins.rhs);
        check_target(pc, ins.on_true);
        check_target(pc, ins.on_false);
        break;
      case Opcode::Jump:
        check_target(pc, ins.target);
        break;
      case Opcode::Increment:
      case Opcode::LoadConst:
      case Opcode::LoadObs:
        if (ins.reg < 0 || ins.reg >= nregs) {
          out.push_back("instruction " + std::to_string(pc) + ": unknown register");
        }
        break;
      default:
        break;
    }
  }
  return out;
}

int operand_width(const Operand& op, const StrategyProgram& program, int N) {
  switch (op.kind) {
    case Operand::Kind::Register:
      return program.register_widths.at(static_cast<std::size_t>(op.index));
    case Operand::Kind::Constant:
      return bit_width_of(static_cast<std::uint64_t>(op.value < 0 ? -op.value : op.value));
    case Operand::Kind::PayoffConst:
      return kPayoffWidth;
    case Operand::Kind::Field:
      switch (static_cast<ObsField>(op.index)) {
        case ObsField::OppLast:
        case ObsField::OwnLast: return kActionWidth;
        case ObsField::LastPayoff: return kPayoffWidth;
        case ObsField::Horizon: return bit_width_of(static_cast<std::uint64_t>(std::max(N, 0)));
      }
  }
  return 1;
}

int worst_case_tick_cost(const StrategyProgram& p, int N) {
  const int size = p.size();
  std::vector<int> memo(static_cast<std::size_t>(size), -1);
  std::function<int(int)> longest = [&](int pc) -> int {
    if (pc < 0 || pc >= size) return 0;
    auto& m = memo[static_cast<std::size_t>(pc)];
    if (m >= 0) return m;
    const auto& ins = p.code[static_cast<std::size_t>(pc)];
    int best = 0;
    auto follow = [&](int next) { return next > pc ? longest(next) : 0; };
    switch (ins.op) {
      case Opcode::Emit:
      case Opcode::Halt:
        best = 0;
        break;
      case Opcode::Compare: {
        const int w = std::max(operand_width(ins.lhs, p, N), operand_width(ins.rhs, p, N));
        best = compare_cost(w) + std::max(follow(ins.on_true), follow(ins.on_false));
        break;
      }
      case Opcode::Jump:
        best = follow(ins.target);
        break;
      default:
        best = follow(pc + 1);
        break;
    }
    m = best;
    return best;
  };
  return longest(0);
}

std::string format_trace_line(const TickResult& r) {
  std::ostringstream os;
  os << r.pc << ' ' << r.cost << ' ' << to_char(r.action);
  if (r.suspended) os << " suspended";
  if (r.faulted) os << " faulted";
  return os.str();
}

namespace {

std::string describe(const Operand& o, const StrategyProgram& p) {
  switch (o.kind) {
    case Operand::Kind::Register:
      if (o.index >= 0 && o.index < static_cast<int>(p.register_names.size())) {
        return "r" + std::to_string(o.index) + "(" + p.register_names[o.index] + ")";
      }
      return "r" + std::to_string(o.index);
    case Operand::Kind::Constant:
      return "#" + std::to_string(o.value);
    case Operand::Kind::PayoffConst:
      return "$" + to_string(o.payoff);
    case Operand::Kind::Field:
      switch (static_cast<ObsField>(o.index)) {
        case ObsField::OppLast: return "opp";
        case ObsField::OwnLast: return "own";
        case ObsField::LastPayoff: return "payoff";
        case ObsField::Horizon:
          return o.value == 0 ? "N" : "N-" + std::to_string(o.value);
      }
  }
  return "?";
}

const char* cmp_text(CmpOp c) {
  switch (c) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

}  // namespace

std::string disassemble(const StrategyProgram& p) {
  std::ostringstream os;
  for (int pc = 0; pc < p.size(); ++pc) {
    const auto& i = p.code[static_cast<std::size_t>(pc)];
    os << pc << ": ";
    switch (i.op) {
      case Opcode::Emit: os << "EMIT " << to_char(i.action); break;
      case Opcode::Compare:
        os << "COMPARE " << describe(i.lhs, p) << ' ' << cmp_text(i.cmp) << ' '
           << describe(i.rhs, p) << " ? " << i.on_true << " : " << i.on_false;
        break;
      case Opcode::Increment: os << "INCREMENT r" << i.reg; break;
      case Opcode::LoadConst: os << "LOAD_CONST r" << i.reg << ' ' << i.value; break;
      case Opcode::LoadObs:
        os << "LOAD_OBS r" << i.reg << ' ' << describe(Operand::field(i.field), p);
        break;
      case Opcode::Jump: os << "JUMP " << i.target; break;
      case Opcode::Halt: os << "HALT"; break;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cbpd
