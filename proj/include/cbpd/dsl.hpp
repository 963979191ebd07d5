#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cbpd/game.hpp"
#include "cbpd/vm.hpp"

namespace cbpd::dsl {

// Strategy language (.pdstrat):
//
//   program := "strategy" NAME decl* rule+
//   decl    := "counter" NAME ":" (INT | "auto") "bits"
//   rule    := [LABEL ":"] ("if" guard "then" stmt+ | "always" stmt+)
//   guard   := term ("and" term)*
//   term    := field cmp value
//   field   := "opp" | "own" | "payoff" | "N" | counter
//   cmp     := "==" | "!=" | "<" | ">="
//   value   := ACTION | INT | "N" ["-" INT] | counter | ["-"] INT ["/" INT]
//   stmt    := "play" ACTION | "inc" NAME | "set" NAME (INT | ACTION)
//            | "goto" LABEL
//
// Comments run from "#" to end of line. Rules are tried in order and the first
// `play` or `goto` ends the rule; a rule whose body does neither falls through
// to the next one. `goto` may only jump forward. A counter declared `auto` gets
// ceil(log2(N+1)) bits for the horizon it is compiled against.

inline constexpr int kWidthCap = kMaxRegisterWidth;

struct Field {
  enum class Kind : std::uint8_t { Opp, Own, Payoff, Horizon, Counter };
  Kind kind = Kind::Opp;
  std::string counter;

  bool operator==(const Field&) const = default;
};

struct Value {
  enum class Kind : std::uint8_t { Action, Int, Horizon, Counter, Rational };
  Kind kind = Kind::Int;
  Action action = Action::C;
  std::int64_t integer = 0;  // Int, or the offset k in N-k
  std::string counter;
  Payoff rational{0};

  bool operator==(const Value&) const = default;
};

struct Term {
  Field field;
  CmpOp cmp = CmpOp::Eq;
  Value value;

  bool operator==(const Term&) const = default;
};

struct Stmt {
  enum class Kind : std::uint8_t { Play, Inc, Set, Goto };
  Kind kind = Kind::Play;
  Action action = Action::C;  // Play
  std::string name;           // Inc, Set, Goto
  Value value;                // Set

  bool operator==(const Stmt&) const = default;
};

struct Rule {
  std::string label;
  std::vector<Term> guard;  // empty for `always`
  std::vector<Stmt> body;

  bool operator==(const Rule&) const = default;
};

struct CounterDecl {
  std::string name;
  int width = 1;
  bool auto_width = false;

  bool operator==(const CounterDecl&) const = default;
};

struct StrategySource {
  std::string name;
  std::vector<CounterDecl> counters;
  std::vector<Rule> rules;

  bool operator==(const StrategySource&) const = default;
};

/// A located diagnostic; what() is "line:col: message".
class DslError : public std::runtime_error {
 public:
  DslError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

/// Parses and checks names, field/value types and widths. Never fails with
/// anything other than DslError.
StrategySource parse(std::string_view text);

/// Canonical text: one declaration or rule per line, no comments.
std::string print(const StrategySource& src);

/// parse(print(src)) text form; identity on canonical input.
std::string roundtrip(std::string_view text);

struct CompileOptions {
  /// Allow `play O`; FTPD games reject it.
  GameMode mode = GameMode::FTPD;
  int N = 10;
};

/// Compiles to VM code. `warnings` (optional) receives unreachable-code notes.
StrategyProgram compile(const StrategySource& src, const CompileOptions& options,
                        std::vector<std::string>* warnings = nullptr);
StrategyProgram compile(const StrategySource& src, const GameConfig& config,
                        std::vector<std::string>* warnings = nullptr);

/// Recovers a source from code shaped like compile()'s output. Throws
/// std::invalid_argument for code it cannot express.
StrategySource decompile(const StrategyProgram& program);

/// Number of VM instructions compile() emits for `src`.
int instruction_count(const StrategySource& src);

}  // namespace cbpd::dsl
