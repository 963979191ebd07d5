#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbpd/game.hpp"

namespace cbpd {

// Strategy virtual machine.
//
// Every clock tick a program gets a fresh budget of k XOR-units. Only COMPARE
// spends budget; emitting, jumping, loading and incrementing are bookkeeping.
// A compare that does not fit in what is left of the budget spends the rest,
// suspends, and resumes next tick where it left off. A tick that ends without
// an EMIT (suspended, ran off the end, or faulted) is recorded as W.
//
// Compare cost: an equality test that holds must XOR every bit of the wider
// operand; one that fails is refuted by a single differing bit. Ordering
// tests always cost the full width. Comparing against an absent observation
// (first tick) is refuted for 1 unit and is false.

enum class Opcode : std::uint8_t {
  Emit,
  Compare,
  Increment,
  LoadConst,
  LoadObs,
  Jump,
  Halt,
};

enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Ge };

enum class ObsField : std::uint8_t { OppLast, OwnLast, LastPayoff, Horizon };

/// Fixed comparison width charged for the last-payoff field.
inline constexpr int kPayoffWidth = 8;
/// Largest declarable register width.
inline constexpr int kMaxRegisterWidth = 32;

struct Operand {
  enum class Kind : std::uint8_t { Register, Constant, Field, PayoffConst };

  Kind kind = Kind::Constant;
  int index = 0;            // register index, or ObsField
  std::int64_t value = 0;   // constant; for Horizon the operand is N - value
  Payoff payoff{0};         // PayoffConst

  static Operand reg(int r) { return {Kind::Register, r, 0, {}}; }
  static Operand constant(std::int64_t v) { return {Kind::Constant, 0, v, {}}; }
  static Operand action(Action a) {
    return {Kind::Constant, 0, static_cast<std::int64_t>(a), {}};
  }
  static Operand field(ObsField f, std::int64_t horizon_offset = 0) {
    return {Kind::Field, static_cast<int>(f), horizon_offset, {}};
  }
  static Operand payoff_const(Payoff p) { return {Kind::PayoffConst, 0, 0, p}; }

  bool operator==(const Operand&) const = default;
};

struct Instruction {
  Opcode op = Opcode::Halt;
  Action action = Action::W;  // Emit
  CmpOp cmp = CmpOp::Eq;      // Compare
  Operand lhs, rhs;           // Compare
  int on_true = 0;            // Compare
  int on_false = 0;           // Compare
  int reg = 0;                // Increment, LoadConst, LoadObs
  std::int64_t value = 0;     // LoadConst
  ObsField field = ObsField::OppLast;  // LoadObs
  int target = 0;             // Jump

  static Instruction emit(Action a);
  static Instruction compare(CmpOp cmp, Operand lhs, Operand rhs, int on_true,
                             int on_false);
  static Instruction increment(int reg);
  static Instruction load_const(int reg, std::int64_t value);
  static Instruction load_obs(int reg, ObsField field);
  static Instruction jump(int target);
  static Instruction halt();

  bool operator==(const Instruction&) const = default;
};

struct StrategyProgram {
  std::string name;
  std::vector<Instruction> code;
  std::vector<int> register_widths;
  std::vector<std::string> register_names;
  /// Worst-case XOR-units on any single evaluation path, for the horizon the
  /// program was compiled against.
  int worst_case_cost = 0;

  int size() const { return static_cast<int>(code.size()); }
  bool operator==(const StrategyProgram&) const = default;
};

struct Observation {
  std::optional<Action> opp_last;
  std::optional<Action> own_last;
  Payoff last_payoff{0};
  int horizon = 0;
};

struct PendingCompare {
  int pc = 0;
  int remaining = 0;
  bool result = false;

  bool operator==(const PendingCompare&) const = default;
};

struct VmState {
  int pc = 0;
  std::vector<std::uint64_t> registers;
  int spent = 0;  // XOR-units spent in the most recent tick
  std::optional<PendingCompare> pending;
  std::optional<Action> emitted;  // action emitted in the most recent tick
  bool faulted = false;

  bool operator==(const VmState&) const = default;
};

struct TickResult {
  Action action = Action::W;
  int cost = 0;
  int pc = 0;  // where execution stopped
  bool suspended = false;
  bool reached_end = false;
  bool faulted = false;
};

/// XOR-units needed to confirm equality of two `width_bits`-wide words.
int compare_cost(int width_bits);

VmState reset(const StrategyProgram& program);

/// Advances one clock tick. Deterministic in (state, program, obs, k).
TickResult tick(VmState& state, const StrategyProgram& program,
                const Observation& obs, int k);

/// Structural checks: jump targets in [0, size], registers declared, widths
/// within cap. Empty when the program is well formed.
std::vector<std::string> validate_program(const StrategyProgram& program);

/// Bit width of an operand when the horizon is N.
int operand_width(const Operand& op, const StrategyProgram& program, int N);

/// Longest compare-cost path from entry to any EMIT/HALT/end, charging each
/// compare its full width. Backward jumps are treated as path ends.
int worst_case_tick_cost(const StrategyProgram& program, int N);

/// "pc cost action" debug line.
std::string format_trace_line(const TickResult& r);

/// One line per instruction, for debugging.
std::string disassemble(const StrategyProgram& program);

}  // namespace cbpd
