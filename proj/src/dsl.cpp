#include "cbpd/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace cbpd::dsl {

DslError::DslError(int line, int column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

enum class Tok { Ident, Int, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(static_cast<unsigned char>(text[j]))) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(c)) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      t.kind = Tok::Int;
      t.text = std::string(text.substr(i, j - i));
      auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, t.value);
      if (ec != std::errc{} || ptr != text.data() + j) {
        throw DslError(line, col, "integer literal out of range");
      }
      advance(j - i);
    } else {
      const std::string_view two = text.substr(i, 2);
      t.kind = Tok::Symbol;
      if (two == "==" || two == "!=" || two == ">=") {
        t.text = std::string(two);
        advance(2);
      } else if (c == '<' || c == ':' || c == '-' || c == '/') {
        t.text = std::string(1, static_cast<char>(c));
        advance(1);
      } else {
        std::string shown = std::isprint(c) ? std::string(1, static_cast<char>(c))
                                            : "\\x" + std::to_string(c);
        throw DslError(line, col, "unexpected character '" + shown + "'");
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

const std::set<std::string, std::less<>> kReserved{
    "strategy", "counter", "bits", "if", "then", "always", "and", "play", "inc",
    "set", "goto", "auto", "opp", "own", "payoff", "N", "C", "D", "W", "O"};

bool is_action_word(std::string_view s) {
  return s.size() == 1 && action_from_char(s[0]).has_value();
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  StrategySource run() {
    StrategySource src;
    expect_word("strategy");
    src.name = expect_ident("strategy name").text;

    while (peek_word("counter")) {
      const Token& kw = next();
      CounterDecl d;
      const Token& name = expect_ident("counter name");
      if (kReserved.count(name.text)) {
        throw DslError(name.line, name.col, "'" + name.text + "' is reserved");
      }
      d.name = name.text;
      expect_symbol(":");
      if (peek_word("auto")) {
        next();
        d.auto_width = true;
        d.width = 0;
      } else {
        const Token& w = peek();
        if (w.kind != Tok::Int) throw error_at(w, "expected counter width");
        next();
        if (w.value < 1) throw error_at(w, "counter width must be at least 1 bit");
        if (w.value > kWidthCap) {
          throw error_at(w, "counter width " + w.text + " exceeds cap of " +
                                std::to_string(kWidthCap) + " bits");
        }
        d.width = static_cast<int>(w.value);
      }
      expect_word("bits");
      if (counters_.count(d.name)) {
        throw DslError(kw.line, kw.col, "duplicate counter '" + d.name + "'");
      }
      counters_.insert(d.name);
      src.counters.push_back(d);
    }

    while (peek().kind != Tok::End) src.rules.push_back(parse_rule());
    if (src.rules.empty()) throw error_at(peek(), "expected at least one rule");

    std::map<std::string, std::size_t, std::less<>> label_index;
    for (std::size_t r = 0; r < src.rules.size(); ++r) {
      if (!src.rules[r].label.empty()) label_index[src.rules[r].label] = r;
    }
    for (const auto& g : gotos_) {
      auto it = label_index.find(g.label);
      if (it == label_index.end()) {
        throw DslError(g.line, g.col, "unknown label '" + g.label + "'");
      }
      if (it->second <= g.rule) {
        throw DslError(g.line, g.col, "goto '" + g.label + "' must jump forward");
      }
    }
    return src;
  }

 private:
  struct PendingGoto {
    std::string label;
    std::size_t rule;
    int line;
    int col;
  };

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool peek_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }
  bool peek_symbol(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Symbol && peek(ahead).text == s;
  }
  static DslError error_at(const Token& t, const std::string& msg) {
    return DslError(t.line, t.col, msg);
  }
  static std::string shown(const Token& t) {
    return t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
  }
  void expect_word(std::string_view w) {
    if (!peek_word(w)) {
      throw error_at(peek(), "expected '" + std::string(w) + "', found " + shown(peek()));
    }
    next();
  }
  void expect_symbol(std::string_view s) {
    if (!peek_symbol(s)) {
      throw error_at(peek(), "expected '" + std::string(s) + "', found " + shown(peek()));
    }
    next();
  }
  const Token& expect_ident(const std::string& what) {
    if (peek().kind != Tok::Ident) {
      throw error_at(peek(), "expected " + what + ", found " + shown(peek()));
    }
    return next();
  }

  Rule parse_rule() {
    Rule rule;
    if (peek().kind == Tok::Ident && peek_symbol(":", 1) && !kReserved.count(peek().text)) {
      const Token& lab = next();
      next();
      if (labels_.count(lab.text)) {
        throw error_at(lab, "duplicate label '" + lab.text + "'");
      }
      labels_.insert(lab.text);
      rule.label = lab.text;
    }
    if (peek_word("if")) {
      next();
      rule.guard.push_back(parse_term());
      while (peek_word("and")) {
        next();
        rule.guard.push_back(parse_term());
      }
      expect_word("then");
    } else if (peek_word("always")) {
      next();
    } else {
      throw error_at(peek(), "expected 'if' or 'always', found " + shown(peek()));
    }
    if (!starts_stmt()) {
      throw error_at(peek(), "expected a statement, found " + shown(peek()));
    }
    while (starts_stmt()) rule.body.push_back(parse_stmt());
    ++rule_count_;
    return rule;
  }

  bool starts_stmt() const {
    return peek_word("play") || peek_word("inc") || peek_word("set") || peek_word("goto");
  }

  const Token& expect_counter() {
    const Token& t = expect_ident("counter name");
    if (!counters_.count(t.text)) {
      throw error_at(t, "unknown counter '" + t.text + "'");
    }
    return t;
  }

  Action expect_action() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || !is_action_word(t.text)) {
      throw error_at(t, "expected an action (C, D, W, O), found " + shown(t));
    }
    next();
    return *action_from_char(t.text[0]);
  }

  Stmt parse_stmt() {
    Stmt s;
    const Token& kw = next();
    if (kw.text == "play") {
      s.kind = Stmt::Kind::Play;
      s.action = expect_action();
    } else if (kw.text == "inc") {
      s.kind = Stmt::Kind::Inc;
      s.name = expect_counter().text;
    } else if (kw.text == "set") {
      s.kind = Stmt::Kind::Set;
      s.name = expect_counter().text;
      const Token& v = peek();
      if (v.kind == Tok::Int) {
        next();
        s.value.kind = Value::Kind::Int;
        s.value.integer = v.value;
      } else if (v.kind == Tok::Ident && is_action_word(v.text)) {
        next();
        s.value.kind = Value::Kind::Action;
        s.value.action = *action_from_char(v.text[0]);
      } else {
        throw error_at(v, "expected an integer or action, found " + shown(v));
      }
    } else {
      s.kind = Stmt::Kind::Goto;
      const Token& lab = expect_ident("label");
      s.name = lab.text;
      gotos_.push_back({lab.text, rule_count_, lab.line, lab.col});
    }
    return s;
  }

  Term parse_term() {
    Term term;
    const Token& f = peek();
    if (f.kind != Tok::Ident) throw error_at(f, "expected a field, found " + shown(f));
    next();
    if (f.text == "opp") term.field.kind = Field::Kind::Opp;
    else if (f.text == "own") term.field.kind = Field::Kind::Own;
    else if (f.text == "payoff") term.field.kind = Field::Kind::Payoff;
    else if (f.text == "N") term.field.kind = Field::Kind::Horizon;
    else if (counters_.count(f.text)) {
      term.field.kind = Field::Kind::Counter;
      term.field.counter = f.text;
    } else {
      throw error_at(f, "unknown field '" + f.text + "'");
    }

    const Token& c = peek();
    if (peek_symbol("==")) term.cmp = CmpOp::Eq;
    else if (peek_symbol("!=")) term.cmp = CmpOp::Ne;
    else if (peek_symbol("<")) term.cmp = CmpOp::Lt;
    else if (peek_symbol(">=")) term.cmp = CmpOp::Ge;
    else throw error_at(c, "expected a comparison, found " + shown(c));
    next();

    const Token& vt = peek();
    term.value = parse_value();
    check_types(term, f, vt);
    return term;
  }

  Value parse_value() {
    Value v;
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      next();
      if (is_action_word(t.text)) {
        v.kind = Value::Kind::Action;
        v.action = *action_from_char(t.text[0]);
      } else if (t.text == "N") {
        v.kind = Value::Kind::Horizon;
        if (peek_symbol("-")) {
          next();
          const Token& off = peek();
          if (off.kind != Tok::Int) throw error_at(off, "expected an offset after 'N-'");
          next();
          v.integer = off.value;
        }
      } else if (counters_.count(t.text)) {
        v.kind = Value::Kind::Counter;
        v.counter = t.text;
      } else {
        throw error_at(t, "unknown value '" + t.text + "'");
      }
      return v;
    }
    bool negative = false;
    if (peek_symbol("-")) {
      negative = true;
      next();
    }
    const Token& num = peek();
    if (num.kind != Tok::Int) throw error_at(num, "expected a value, found " + shown(num));
    next();
    std::int64_t n = negative ? -num.value : num.value;
    if (peek_symbol("/")) {
      next();
      const Token& den = peek();
      if (den.kind != Tok::Int) throw error_at(den, "expected a denominator");
      next();
      if (den.value == 0) throw error_at(den, "zero denominator");
      v.kind = Value::Kind::Rational;
      v.rational = Payoff(n, den.value);
    } else if (negative) {
      v.kind = Value::Kind::Rational;
      v.rational = Payoff(n);
    } else {
      v.kind = Value::Kind::Int;
      v.integer = n;
    }
    return v;
  }

  void check_types(const Term& term, const Token& field_tok, const Token& value_tok) const {
    const auto vk = term.value.kind;
    const bool ordering = term.cmp == CmpOp::Lt || term.cmp == CmpOp::Ge;
    switch (term.field.kind) {
      case Field::Kind::Opp:
      case Field::Kind::Own:
        if (vk != Value::Kind::Action && vk != Value::Kind::Counter) {
          throw error_at(value_tok, "action field '" + field_tok.text +
                                        "' compares only with an action or counter");
        }
        if (ordering) throw error_at(field_tok, "actions support only == and !=");
        break;
      case Field::Kind::Payoff:
        if (vk != Value::Kind::Int && vk != Value::Kind::Rational) {
          throw error_at(value_tok, "payoff compares only with a number");
        }
        break;
      case Field::Kind::Horizon:
        if (vk != Value::Kind::Int && vk != Value::Kind::Counter) {
          throw error_at(value_tok, "N compares only with an integer or counter");
        }
        break;
      case Field::Kind::Counter:
        if (vk == Value::Kind::Rational) {
          throw error_at(value_tok, "counters hold non-negative integers");
        }
        if (vk == Value::Kind::Action && ordering) {
          throw error_at(value_tok, "actions support only == and !=");
        }
        break;
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string, std::less<>> counters_;
  std::set<std::string, std::less<>> labels_;
  std::vector<PendingGoto> gotos_;
  std::size_t rule_count_ = 0;
};

const char* cmp_text(CmpOp c) {
  switch (c) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string value_text(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Action: return std::string(1, to_char(v.action));
    case Value::Kind::Int: return std::to_string(v.integer);
    case Value::Kind::Horizon:
      return v.integer == 0 ? "N" : "N-" + std::to_string(v.integer);
    case Value::Kind::Counter: return v.counter;
    case Value::Kind::Rational: return to_string(v.rational);
  }
  return "?";
}

std::string field_text(const Field& f) {
  switch (f.kind) {
    case Field::Kind::Opp: return "opp";
    case Field::Kind::Own: return "own";
    case Field::Kind::Payoff: return "payoff";
    case Field::Kind::Horizon: return "N";
    case Field::Kind::Counter: return f.counter;
  }
  return "?";
}

}  // namespace

StrategySource parse(std::string_view text) {
  return Parser(lex(text)).run();
}

std::string print(const StrategySource& src) {
  std::ostringstream os;
  os << "strategy " << src.name << '\n';
  for (const auto& c : src.counters) {
    os << "counter " << c.name << ": ";
    if (c.auto_width) os << "auto";
    else os << c.width;
    os << " bits\n";
  }
  for (const auto& r : src.rules) {
    if (!r.label.empty()) os << r.label << ": ";
    if (r.guard.empty()) {
      os << "always";
    } else {
      os << "if";
      for (std::size_t i = 0; i < r.guard.size(); ++i) {
        const auto& t = r.guard[i];
        if (i > 0) os << " and";
        os << ' ' << field_text(t.field) << ' ' << cmp_text(t.cmp) << ' '
           << value_text(t.value);
      }
      os << " then";
    }
    for (const auto& s : r.body) {
      switch (s.kind) {
        case Stmt::Kind::Play: os << " play " << to_char(s.action); break;
        case Stmt::Kind::Inc: os << " inc " << s.name; break;
        case Stmt::Kind::Set: os << " set " << s.name << ' ' << value_text(s.value); break;
        case Stmt::Kind::Goto: os << " goto " << s.name; break;
      }
    }
    os << '\n';
  }
  return os.str();
}

std::string roundtrip(std::string_view text) { return print(parse(text)); }

namespace {

bool terminates(const Stmt& s) {
  return s.kind == Stmt::Kind::Play || s.kind == Stmt::Kind::Goto;
}

/// Body statements up to and including the first play/goto.
std::size_t live_body_length(const Rule& r) {
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    if (terminates(r.body[i])) return i + 1;
  }
  return r.body.size();
}

}  // namespace

int instruction_count(const StrategySource& src) {
  int n = 0;
  for (const auto& r : src.rules) {
    n += static_cast<int>(r.guard.size() + live_body_length(r));
  }
  return n;
}

StrategyProgram compile(const StrategySource& src, const GameConfig& config,
                        std::vector<std::string>* warnings) {
  return compile(src, CompileOptions{config.mode, config.N}, warnings);
}

StrategyProgram compile(const StrategySource& src, const CompileOptions& options,
                        std::vector<std::string>* warnings) {
  StrategyProgram prog;
  prog.name = src.name;

  std::map<std::string, int, std::less<>> reg_of;
  for (const auto& c : src.counters) {
    const int width = c.auto_width
                          ? bit_width_of(static_cast<std::uint64_t>(std::max(options.N, 0)))
                          : c.width;
    if (width < 1 || width > kWidthCap) {
      throw std::invalid_argument("counter '" + c.name + "' width " +
                                  std::to_string(width) + " exceeds cap of " +
                                  std::to_string(kWidthCap) + " bits");
    }
    reg_of[c.name] = static_cast<int>(prog.register_widths.size());
    prog.register_widths.push_back(width);
    prog.register_names.push_back(c.name);
  }
  auto reg = [&](const std::string& name) {
    auto it = reg_of.find(name);
    if (it == reg_of.end()) throw std::invalid_argument("unknown counter '" + name + "'");
    return it->second;
  };

  auto field_operand = [&](const Field& f) {
    switch (f.kind) {
      case Field::Kind::Opp: return Operand::field(ObsField::OppLast);
      case Field::Kind::Own: return Operand::field(ObsField::OwnLast);
      case Field::Kind::Payoff: return Operand::field(ObsField::LastPayoff);
      case Field::Kind::Horizon: return Operand::field(ObsField::Horizon);
      case Field::Kind::Counter: return Operand::reg(reg(f.counter));
    }
    return Operand{};
  };
  auto value_operand = [&](const Value& v) {
    switch (v.kind) {
      case Value::Kind::Action: return Operand::action(v.action);
      case Value::Kind::Int: return Operand::constant(v.integer);
      case Value::Kind::Horizon: return Operand::field(ObsField::Horizon, v.integer);
      case Value::Kind::Counter: return Operand::reg(reg(v.counter));
      case Value::Kind::Rational: return Operand::payoff_const(v.rational);
    }
    return Operand{};
  };

  std::vector<int> rule_start(src.rules.size() + 1, 0);
  std::map<std::string, std::size_t, std::less<>> label_rule;
  for (std::size_t r = 0; r < src.rules.size(); ++r) {
    if (!src.rules[r].label.empty()) label_rule[src.rules[r].label] = r;
  }

  // First pass: instruction offsets.
  int pc = 0;
  for (std::size_t r = 0; r < src.rules.size(); ++r) {
    rule_start[r] = pc;
    pc += static_cast<int>(src.rules[r].guard.size() + live_body_length(src.rules[r]));
  }
  rule_start[src.rules.size()] = pc;

  bool reachable = true;
  for (std::size_t r = 0; r < src.rules.size(); ++r) {
    const Rule& rule = src.rules[r];
    const bool targeted = !rule.label.empty();
    if (!reachable && !targeted && warnings) {
      warnings->push_back("rule " + std::to_string(r + 1) + " is unreachable");
    }
    const int next_rule = rule_start[r + 1];
    for (const auto& t : rule.guard) {
      const int here = static_cast<int>(prog.code.size());
      prog.code.push_back(Instruction::compare(t.cmp, field_operand(t.field),
                                               value_operand(t.value), here + 1,
                                               next_rule));
    }
    const std::size_t live = live_body_length(rule);
    if (live < rule.body.size() && warnings) {
      warnings->push_back("rule " + std::to_string(r + 1) +
                          ": statements after play/goto are unreachable");
    }
    for (std::size_t i = 0; i < live; ++i) {
      const Stmt& s = rule.body[i];
      switch (s.kind) {
        case Stmt::Kind::Play:
          if (!action_legal(s.action, options.mode)) {
            throw std::invalid_argument("strategy '" + src.name +
                                        "' plays O, which is illegal in FTPD");
          }
          prog.code.push_back(Instruction::emit(s.action));
          break;
        case Stmt::Kind::Inc:
          prog.code.push_back(Instruction::increment(reg(s.name)));
          break;
        case Stmt::Kind::Set: {
          const std::int64_t v = s.value.kind == Value::Kind::Action
                                     ? static_cast<std::int64_t>(s.value.action)
                                     : s.value.integer;
          prog.code.push_back(Instruction::load_const(reg(s.name), v));
          break;
        }
        case Stmt::Kind::Goto: {
          auto it = label_rule.find(s.name);
          if (it == label_rule.end() || it->second <= r) {
            throw std::invalid_argument("goto '" + s.name + "' must name a later rule");
          }
          prog.code.push_back(Instruction::jump(rule_start[it->second]));
          break;
        }
      }
    }
    const bool unconditional_exit = rule.guard.empty() && live > 0 && terminates(rule.body[live - 1]);
    if (unconditional_exit) reachable = false;
    else if (targeted) reachable = true;
  }

  prog.worst_case_cost = worst_case_tick_cost(prog, options.N);
  return prog;
}

StrategySource decompile(const StrategyProgram& prog) {
  StrategySource src;
  src.name = prog.name;
  for (std::size_t r = 0; r < prog.register_widths.size(); ++r) {
    CounterDecl d;
    d.name = r < prog.register_names.size() && !prog.register_names[r].empty()
                 ? prog.register_names[r]
                 : "c" + std::to_string(r);
    d.width = prog.register_widths[r];
    src.counters.push_back(d);
  }
  auto reg_name = [&](int r) {
    if (r < 0 || r >= static_cast<int>(src.counters.size())) {
      throw std::invalid_argument("register out of range");
    }
    return src.counters[static_cast<std::size_t>(r)].name;
  };

  std::set<int> jump_targets;
  for (const auto& ins : prog.code) {
    if (ins.op == Opcode::Jump) jump_targets.insert(ins.target);
  }
  auto label_for = [](int pc) { return "L" + std::to_string(pc); };

  auto to_field = [&](const Operand& o) {
    Field f;
    if (o.kind == Operand::Kind::Register) {
      f.kind = Field::Kind::Counter;
      f.counter = reg_name(o.index);
      return f;
    }
    if (o.kind != Operand::Kind::Field) throw std::invalid_argument("constant on the left of a compare");
    switch (static_cast<ObsField>(o.index)) {
      case ObsField::OppLast: f.kind = Field::Kind::Opp; break;
      case ObsField::OwnLast: f.kind = Field::Kind::Own; break;
      case ObsField::LastPayoff: f.kind = Field::Kind::Payoff; break;
      case ObsField::Horizon:
        if (o.value != 0) throw std::invalid_argument("N-k on the left of a compare");
        f.kind = Field::Kind::Horizon;
        break;
    }
    return f;
  };
  auto to_value = [&](const Operand& o, const Field& lhs) {
    Value v;
    switch (o.kind) {
      case Operand::Kind::Register:
        v.kind = Value::Kind::Counter;
        v.counter = reg_name(o.index);
        break;
      case Operand::Kind::Constant:
        if (lhs.kind == Field::Kind::Opp || lhs.kind == Field::Kind::Own) {
          v.kind = Value::Kind::Action;
          v.action = static_cast<Action>(o.value & 3);
        } else if (lhs.kind == Field::Kind::Payoff && o.value < 0) {
          v.kind = Value::Kind::Rational;
          v.rational = Payoff(o.value);
        } else {
          v.kind = Value::Kind::Int;
          v.integer = o.value;
        }
        break;
      case Operand::Kind::PayoffConst:
        if (o.payoff.denominator() == 1 && o.payoff.numerator() >= 0) {
          v.kind = Value::Kind::Int;
          v.integer = o.payoff.numerator();
        } else {
          v.kind = Value::Kind::Rational;
          v.rational = o.payoff;
        }
        break;
      case Operand::Kind::Field:
        if (static_cast<ObsField>(o.index) != ObsField::Horizon) {
          throw std::invalid_argument("observation on the right of a compare");
        }
        v.kind = Value::Kind::Horizon;
        v.integer = o.value;
        break;
    }
    return v;
  };

  const int size = prog.size();
  int pc = 0;
  while (pc < size) {
    Rule rule;
    if (jump_targets.count(pc)) rule.label = label_for(pc);
    int next_rule = -1;
    while (pc < size && prog.code[static_cast<std::size_t>(pc)].op == Opcode::Compare) {
      const auto& ins = prog.code[static_cast<std::size_t>(pc)];
      if (ins.on_true != pc + 1 || (next_rule >= 0 && ins.on_false != next_rule)) {
        throw std::invalid_argument("compare at " + std::to_string(pc) +
                                    " does not follow the guard pattern");
      }
      next_rule = ins.on_false;
      Term t;
      t.field = to_field(ins.lhs);
      t.cmp = ins.cmp;
      t.value = to_value(ins.rhs, t.field);
      rule.guard.push_back(t);
      ++pc;
    }
    bool ended = false;
    while (pc < size && !ended) {
      if (next_rule >= 0 && pc == next_rule) break;
      if (!rule.body.empty() && jump_targets.count(pc)) break;
      const auto& ins = prog.code[static_cast<std::size_t>(pc)];
      Stmt s;
      switch (ins.op) {
        case Opcode::Compare:
          if (rule.body.empty()) throw std::invalid_argument("guard without body");
          ended = true;
          continue;
        case Opcode::Emit:
          s.kind = Stmt::Kind::Play;
          s.action = ins.action;
          ended = true;
          break;
        case Opcode::Increment:
          s.kind = Stmt::Kind::Inc;
          s.name = reg_name(ins.reg);
          break;
        case Opcode::LoadConst:
          s.kind = Stmt::Kind::Set;
          s.name = reg_name(ins.reg);
          s.value.kind = Value::Kind::Int;
          s.value.integer = ins.value;
          break;
        case Opcode::Jump:
          if (ins.target <= pc) throw std::invalid_argument("backward jump");
          s.kind = Stmt::Kind::Goto;
          s.name = label_for(ins.target);
          ended = true;
          break;
        case Opcode::LoadObs:
        case Opcode::Halt:
          throw std::invalid_argument("instruction has no source form");
      }
      rule.body.push_back(s);
      ++pc;
    }
    if (rule.body.empty()) throw std::invalid_argument("rule with empty body");
    if (next_rule >= 0 && pc != next_rule) {
      throw std::invalid_argument("guard exit does not land on the next rule");
    }
    src.rules.push_back(std::move(rule));
  }
  // Jumps to the end of the program become a trailing no-op target; express
  // them only if some rule is labelled there.
  for (int t : jump_targets) {
    if (t == size) throw std::invalid_argument("jump to end of program has no source form");
  }
  return src;
}

}  // namespace cbpd::dsl
