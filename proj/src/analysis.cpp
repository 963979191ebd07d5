#include "cbpd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace cbpd {

Estimate Estimate::of_exact(Payoff p) {
  Estimate e;
  e.mean = boost::rational_cast<double>(p);
  e.samples = 1;
  e.exact = p;
  return e;
}

Estimate Estimate::of_samples(const std::vector<double>& xs) {
  Estimate e;
  e.samples = static_cast<int>(xs.size());
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return e;
}

std::string Estimate::describe() const {
  if (exact) return to_string(*exact);
  std::ostringstream os;
  os << std::setprecision(6) << mean << " ± " << 1.96 * std_error << " (95% CI, n=" << samples
     << ")";
  return os.str();
}

Population Population::against(std::string name, StrategyProgram opponent) {
  Population p;
  p.name = std::move(name);
  p.fixed = std::move(opponent);
  p.trials = 1;
  return p;
}

Population Population::sampled(Environment env, int trials) {
  Population p;
  p.name = env.name;
  p.environment = std::move(env);
  p.trials = trials;
  return p;
}

GameConfig with_rematch_delay(GameConfig config, int r) {
  if (r <= 0) {
    config.instantaneous_rematch = true;
    config.t = 1;
  } else {
    config.instantaneous_rematch = false;
    config.t = 2 * r + 1;
  }
  return config;
}

namespace {

Environment only(const StrategyProgram& opponent, const std::string& name) {
  Environment env;
  env.name = name;
  env.q = 1.0;
  env.cooperative = opponent;
  return env;
}

Estimate sample_environment(const StrategyProgram& S, const Environment& env, int trials,
                            const GameConfig& config, const PayoffTable& table) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    const FocalResult r = simulate_focal(S, env, config, table, config.seed + static_cast<std::uint64_t>(i));
    xs.push_back(boost::rational_cast<double>(r.payoff));
  }
  return Estimate::of_samples(xs);
}

}  // namespace

Estimate evaluate(const StrategyProgram& S, const Population& population,
                  const GameConfig& config, const PayoffTable& table) {
  if (population.fixed) {
    if (config.mode == GameMode::FTPD) {
      return Estimate::of_exact(run_match(S, *population.fixed, config, table).total1);
    }
    const FocalResult r =
        simulate_focal(S, only(*population.fixed, population.name), config, table, config.seed);
    return Estimate::of_exact(r.payoff);
  }
  if (!population.environment) throw std::invalid_argument("population has no members");
  if (config.mode != GameMode::OPD) throw ConfigError("sampled populations need OPD mode");
  return sample_environment(S, *population.environment, population.trials, config, table);
}

SecurityLevel security_level(const StrategyProgram& S, const std::vector<Population>& gamma,
                             const GameConfig& config, const PayoffTable& table) {
  if (gamma.empty()) throw std::invalid_argument("security level needs a nonempty gamma");
  SecurityLevel out;
  for (const auto& p : gamma) {
    Estimate e = evaluate(S, p, config, table);
    if (out.per_population.empty() || e.mean < out.value.mean) {
      out.value = e;
      out.argmin = p.name;
    }
    out.per_population.emplace_back(p.name, e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Best-response enumeration.
//
// Programs are grown one instruction at a time. A partial program is run as
// is; execution that reaches the first undefined position (the end of the
// code, or the false exit of the rule still being written) is the frontier.
// Ticks before the first frontier hit are identical for every extension, so
// a partial program that never reaches the frontier has no distinct
// extensions, and for a fixed opponent the payoff of those ticks plus the
// best unconstrained continuation bounds the whole subtree.

namespace {

struct Choice {
  enum class Kind { Term, Stmt, Play } kind = Kind::Play;
  Instruction ins;
  dsl::Term term;
  dsl::Stmt stmt;
};

struct Alphabet {
  std::vector<int> widths;
  std::vector<Choice> terms, stmts, plays;
};

std::string counter_name(std::size_t i) { return "c" + std::to_string(i); }

std::vector<Action> playable(GameMode mode) {
  std::vector<Action> out{Action::C, Action::D, Action::W};
  if (mode == GameMode::OPD) out.push_back(Action::O);
  return out;
}

Alphabet make_alphabet(const std::vector<int>& widths, const GameConfig& config,
                       const EnumerationBounds& bounds) {
  Alphabet a;
  a.widths = widths;
  const auto actions = playable(config.mode);

  auto add_term = [&](dsl::Term t, Operand lhs, Operand rhs) {
    Choice c;
    c.kind = Choice::Kind::Term;
    c.term = std::move(t);
    c.ins = Instruction::compare(c.term.cmp, lhs, rhs, 0, 0);
    a.terms.push_back(std::move(c));
  };

  for (auto f : {dsl::Field::Kind::Opp, dsl::Field::Kind::Own}) {
    const Operand lhs = Operand::field(f == dsl::Field::Kind::Opp ? ObsField::OppLast : ObsField::OwnLast);
    for (CmpOp cmp : {CmpOp::Eq, CmpOp::Ne}) {
      for (Action v : actions) {
        dsl::Term t;
        t.field.kind = f;
        t.cmp = cmp;
        t.value.kind = dsl::Value::Kind::Action;
        t.value.action = v;
        add_term(t, lhs, Operand::action(v));
      }
      for (std::size_t r = 0; r < widths.size(); ++r) {
        dsl::Term t;
        t.field.kind = f;
        t.cmp = cmp;
        t.value.kind = dsl::Value::Kind::Counter;
        t.value.counter = counter_name(r);
        add_term(t, lhs, Operand::reg(static_cast<int>(r)));
      }
    }
  }

  for (std::size_t r = 0; r < widths.size(); ++r) {
    const int w = widths[r];
    const std::int64_t top = (std::int64_t{1} << w) - 1;
    for (CmpOp cmp : {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Ge}) {
      for (std::int64_t v = 0; v <= top; ++v) {
        // c < 0 and c >= 0 are constant.
        if (v == 0 && (cmp == CmpOp::Lt || cmp == CmpOp::Ge)) continue;
        dsl::Term t;
        t.field.kind = dsl::Field::Kind::Counter;
        t.field.counter = counter_name(r);
        t.cmp = cmp;
        t.value.kind = dsl::Value::Kind::Int;
        t.value.integer = v;
        add_term(t, Operand::reg(static_cast<int>(r)), Operand::constant(v));
      }
      if (bounds.horizon_terms) {
        for (std::int64_t off : {0, 1, 2}) {
          if (off >= config.N) continue;
          dsl::Term t;
          t.field.kind = dsl::Field::Kind::Counter;
          t.field.counter = counter_name(r);
          t.cmp = cmp;
          t.value.kind = dsl::Value::Kind::Horizon;
          t.value.integer = off;
          add_term(t, Operand::reg(static_cast<int>(r)), Operand::field(ObsField::Horizon, off));
        }
      }
    }
  }

  for (std::size_t r = 0; r < widths.size(); ++r) {
    Choice inc;
    inc.kind = Choice::Kind::Stmt;
    inc.stmt.kind = dsl::Stmt::Kind::Inc;
    inc.stmt.name = counter_name(r);
    inc.ins = Instruction::increment(static_cast<int>(r));
    a.stmts.push_back(inc);
    const std::int64_t top = (std::int64_t{1} << widths[r]) - 1;
    for (std::int64_t v = 0; v <= top; ++v) {
      Choice set;
      set.kind = Choice::Kind::Stmt;
      set.stmt.kind = dsl::Stmt::Kind::Set;
      set.stmt.name = counter_name(r);
      set.stmt.value.kind = dsl::Value::Kind::Int;
      set.stmt.value.integer = v;
      set.ins = Instruction::load_const(static_cast<int>(r), v);
      a.stmts.push_back(set);
    }
  }

  for (Action act : actions) {
    Choice p;
    p.kind = Choice::Kind::Play;
    p.stmt.kind = dsl::Stmt::Kind::Play;
    p.stmt.action = act;
    p.ins = Instruction::emit(act);
    a.plays.push_back(p);
  }
  return a;
}

std::vector<std::vector<int>> declaration_sets(const EnumerationBounds& bounds, const GameConfig& config) {
  const int wmax = bounds.max_counter_width > 0
                       ? bounds.max_counter_width
                       : bit_width_of(static_cast<std::uint64_t>(std::max(config.N, 0)));
  std::vector<std::vector<int>> out{{}};
  std::vector<std::vector<int>> frontier{{}};
  for (int n = 1; n <= bounds.max_counters; ++n) {
    std::vector<std::vector<int>> next;
    for (const auto& s : frontier) {
      const int lo = s.empty() ? 1 : s.back();
      for (int w = lo; w <= wmax; ++w) {
        auto t = s;
        t.push_back(w);
        next.push_back(t);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

struct Score {
  bool exact = true;
  Payoff value{0};
  double mean = 0.0;

  bool operator<(const Score& o) const { return exact ? value < o.value : mean < o.mean; }
  bool operator==(const Score& o) const { return exact ? value == o.value : mean == o.mean; }
};

struct Evaluation {
  Score score;
  Estimate estimate;
  bool frontier = false;
  // Fixed opponent only: payoff before the first frontier tick, and the
  // candidate's actions on those ticks.
  Payoff before{0};
  std::string prefix;
};

class Enumerator {
 public:
  Enumerator(const GameConfig& config, const PayoffTable& table, const EnumerationBounds& bounds)
      : config_(config), table_(table), bounds_(bounds) {}

  BestResponse against_program(const StrategyProgram& opponent) {
    opponent_ = &opponent;
    return run();
  }

  BestResponse against_population(const Population& population) {
    population_ = &population;
    return run();
  }

 private:
  enum class Phase { RuleStart, Guard, Body };
  enum class OpKind { Choice, Close };
  struct Op {
    OpKind kind;
    const Choice* choice;
  };

  BestResponse run() {
    // Decision mode deepens one instruction at a time so the smallest
    // witness turns up first.
    const int deepest = bounds_.max_instructions;
    const int shallowest = bounds_.exceed ? 1 : deepest;
    for (limit_ = shallowest; limit_ <= deepest && !stop_; ++limit_) {
      for (const auto& widths : declaration_sets(bounds_, config_)) {
        alphabet_ = make_alphabet(widths, config_, bounds_);
        program_ = StrategyProgram{};
        program_.name = "BR";
        program_.register_widths = widths;
        for (std::size_t i = 0; i < widths.size(); ++i) program_.register_names.push_back(counter_name(i));
        ops_.clear();
        open_.clear();
        expand(Phase::RuleStart, std::nullopt, false, -1);
        if (stop_) break;
      }
    }
    if (!found_) throw std::logic_error("best-response search found no program");
    best_.nodes = nodes_;
    best_.evaluated = evaluated_;
    best_.complete = !bounds_.exceed || stop_;
    return best_;
  }

  /// Visits the node already in program_/ops_. `same_code` carries the
  /// parent's evaluation when this node only closed a rule. After closing an
  /// unguarded rule the next one must start with a guard; anything else
  /// would spell the same code as continuing the closed rule.
  /// Within one body each counter is updated at most once, in counter
  /// order; `last_reg` is the last counter the open body touched.
  void expand(Phase phase, const std::optional<Evaluation>& same_code, bool guard_required,
              int last_reg) {
    if (stop_) return;
    ++nodes_;
    Evaluation ev;
    if (same_code) {
      ev = *same_code;
    } else if (!program_.code.empty()) {
      ev = evaluate_current();
      if (phase != Phase::Guard) consider(ev);
    } else {
      ev.frontier = true;
    }
    if (!ev.frontier) return;
    if (prunable(ev)) return;
    const bool room = program_.size() < limit_;

    if (phase == Phase::Body) {
      // Closing the rule changes no code; the next rule then starts fresh.
      ops_.push_back({OpKind::Close, nullptr});
      auto saved_open = open_;
      const bool unguarded = open_.empty();
      open_.clear();
      expand(Phase::RuleStart, ev, unguarded, -1);
      open_ = std::move(saved_open);
      ops_.pop_back();
      if (!room) return;
      for (const auto& c : alphabet_.stmts) {
        if (c.ins.reg > last_reg) push_and_expand(c, Phase::Body);
      }
      for (const auto& c : alphabet_.plays) push_and_expand(c, Phase::RuleStart);
      return;
    }
    if (!room) return;
    for (const auto& c : alphabet_.terms) push_and_expand(c, Phase::Guard);
    if (guard_required) return;
    for (const auto& c : alphabet_.stmts) push_and_expand(c, Phase::Body);
    for (const auto& c : alphabet_.plays) push_and_expand(c, Phase::RuleStart);
  }

  void push_and_expand(const Choice& c, Phase next) {
    const int at = program_.size();
    Instruction ins = c.ins;
    if (c.kind == Choice::Kind::Term) ins.on_true = at + 1;
    program_.code.push_back(ins);
    for (int i : open_) program_.code[static_cast<std::size_t>(i)].on_false = at + 1;
    const bool term = c.kind == Choice::Kind::Term;
    if (term) {
      program_.code.back().on_false = at + 1;
      open_.push_back(at);
    }
    ops_.push_back({OpKind::Choice, &c});

    auto saved_open = open_;
    if (next == Phase::RuleStart) open_.clear();
    expand(next, std::nullopt, false, c.kind == Choice::Kind::Stmt ? c.ins.reg : -1);
    open_ = std::move(saved_open);

    ops_.pop_back();
    if (term) open_.pop_back();
    for (int i : open_) program_.code[static_cast<std::size_t>(i)].on_false = at;
    program_.code.pop_back();
  }

  bool prunable(const Evaluation& ev) {
    if (!opponent_ || !ev.score.exact) return false;
    if (!bounds_.exceed && !found_) return false;
    const auto cont = continuation(ev.prefix);
    if (!cont) return false;
    const Payoff bound = ev.before + *cont;
    if (bounds_.exceed && bound <= *bounds_.exceed) return true;
    return found_ && bound < best_score_.value;
  }

  Evaluation evaluate_current() {
    ++evaluated_;
    Evaluation ev;
    if (opponent_) {
      VmState me = reset(program_);
      VmState them = reset(*opponent_);
      Observation om, ot;
      om.horizon = ot.horizon = config_.N;
      Payoff total{0};
      for (int t = 0; t < config_.N; ++t) {
        const TickResult a = tick(me, program_, om, config_.k);
        const TickResult b = tick(them, *opponent_, ot, config_.k);
        if (a.reached_end && !ev.frontier) {
          ev.frontier = true;
          ev.before = total;
        }
        const PayoffOutcome p = payoff(a.action, b.action, table_, GameMode::FTPD);
        total += p.first;
        if (!ev.frontier) ev.prefix.push_back(to_char(a.action));
        om.opp_last = b.action;
        om.own_last = a.action;
        om.last_payoff = p.first;
        ot.opp_last = a.action;
        ot.own_last = b.action;
        ot.last_payoff = p.second;
      }
      ev.score.exact = true;
      ev.score.value = total;
      ev.estimate = Estimate::of_exact(total);
      return ev;
    }

    const Population& pop = *population_;
    Environment env = pop.environment ? *pop.environment : only(*pop.fixed, pop.name);
    const int trials = pop.fixed ? 1 : std::min(pop.trials, bounds_.trials);
    std::vector<double> xs;
    Payoff exact_total{0};
    for (int i = 0; i < trials; ++i) {
      const FocalResult r = simulate_focal(program_, env, config_, table_,
                                           config_.seed + static_cast<std::uint64_t>(i));
      ev.frontier = ev.frontier || r.reached_end;
      xs.push_back(boost::rational_cast<double>(r.payoff));
      exact_total = r.payoff;
    }
    if (pop.fixed) {
      ev.score.exact = true;
      ev.score.value = exact_total;
      ev.estimate = Estimate::of_exact(exact_total);
    } else {
      ev.estimate = Estimate::of_samples(xs);
      ev.score.exact = false;
      ev.score.mean = ev.estimate.mean;
    }
    return ev;
  }

  /// Best payoff any action sequence could add from the tick after `prefix`
  /// against the fixed opponent. Unset when the horizon is too long to search.
  std::optional<Payoff> continuation(const std::string& prefix) {
    if (config_.N > 12) return std::nullopt;
    if (auto it = cont_.find(prefix); it != cont_.end()) return it->second;
    Payoff best;
    if (static_cast<int>(prefix.size()) >= config_.N) {
      best = 0;
    } else {
      const Action theirs = opponent_reply(prefix);
      bool first = true;
      for (Action a : {Action::C, Action::D, Action::W}) {
        const Payoff here = payoff(a, theirs, table_, GameMode::FTPD).first;
        const Payoff v = here + *continuation(prefix + to_char(a));
        if (first || best < v) best = v;
        first = false;
      }
    }
    cont_.emplace(prefix, best);
    return best;
  }

  Action opponent_reply(const std::string& prefix) {
    VmState them = reset(*opponent_);
    Observation ot;
    ot.horizon = config_.N;
    Action b = Action::W;
    for (std::size_t t = 0; t <= prefix.size(); ++t) {
      b = tick(them, *opponent_, ot, config_.k).action;
      if (t == prefix.size()) break;
      const Action a = *action_from_char(prefix[t]);
      ot.opp_last = a;
      ot.own_last = b;
      ot.last_payoff = payoff(a, b, table_, GameMode::FTPD).second;
    }
    return b;
  }

  dsl::StrategySource current_source() const {
    dsl::StrategySource src;
    src.name = program_.name;
    for (std::size_t i = 0; i < alphabet_.widths.size(); ++i) {
      src.counters.push_back({counter_name(i), alphabet_.widths[i], false});
    }
    bool open = false;
    bool in_body = false;
    for (const auto& op : ops_) {
      if (op.kind == OpKind::Close) {
        open = false;
        continue;
      }
      const Choice& c = *op.choice;
      if (c.kind == Choice::Kind::Term) {
        if (!open || in_body) {
          src.rules.emplace_back();
          open = true;
          in_body = false;
        }
        src.rules.back().guard.push_back(c.term);
      } else {
        if (!open) {
          src.rules.emplace_back();
          open = true;
        }
        in_body = true;
        src.rules.back().body.push_back(c.stmt);
        if (c.kind == Choice::Kind::Play) open = false;
      }
    }
    return src;
  }

  void consider(const Evaluation& ev) {
    if (found_ && ev.score < best_score_) return;
    const bool better = !found_ || best_score_ < ev.score;
    dsl::StrategySource src = current_source();
    std::string text = dsl::print(src);
    if (!better && text >= best_text_) return;
    found_ = true;
    best_score_ = ev.score;
    if (bounds_.exceed && ev.score.exact && *bounds_.exceed < ev.score.value) stop_ = true;
    best_text_ = std::move(text);
    best_.source = std::move(src);
    best_.program = program_;
    best_.payoff = ev.estimate;
  }

  GameConfig config_;
  PayoffTable table_;
  EnumerationBounds bounds_;
  const StrategyProgram* opponent_ = nullptr;
  const Population* population_ = nullptr;

  Alphabet alphabet_;
  StrategyProgram program_;
  std::vector<Op> ops_;
  std::vector<int> open_;

  int limit_ = 0;
  bool found_ = false;
  bool stop_ = false;
  Score best_score_;
  std::string best_text_;
  BestResponse best_;
  std::uint64_t nodes_ = 0;
  std::uint64_t evaluated_ = 0;
  std::unordered_map<std::string, Payoff> cont_;
};

void check_search_size(const EnumerationBounds& bounds, const GameConfig& config) {
  const double est = search_size_estimate(bounds, config);
  if (!(est <= bounds.max_search)) {
    std::ostringstream os;
    os << "search bound too large: about " << std::setprecision(3) << est
       << " programs (limit " << bounds.max_search << ")";
    throw SearchTooLarge(est, os.str());
  }
}

}  // namespace

double search_size_estimate(const EnumerationBounds& bounds, const GameConfig& config) {
  double total = 0.0;
  for (const auto& widths : declaration_sets(bounds, config)) {
    const Alphabet a = make_alphabet(widths, config, bounds);
    const double n = static_cast<double>(a.terms.size() + a.stmts.size() + a.plays.size());
    double power = 1.0;
    for (int len = 1; len <= bounds.max_instructions; ++len) {
      power *= n;
      total += power;
    }
  }
  return total;
}

BestResponse best_response(const StrategyProgram& opponent, const GameConfig& config,
                           const PayoffTable& table, const EnumerationBounds& bounds) {
  require_valid(config);
  require_valid(table, config.mode);
  check_search_size(bounds, config);
  if (config.mode == GameMode::OPD) {
    return best_response(Population::against(opponent.name, opponent), config, table, bounds);
  }
  return Enumerator(config, table, bounds).against_program(opponent);
}

BestResponse best_response(const Population& population, const GameConfig& config,
                           const PayoffTable& table, const EnumerationBounds& bounds) {
  require_valid(config);
  require_valid(table, config.mode);
  check_search_size(bounds, config);
  if (population.fixed && config.mode == GameMode::FTPD) {
    return Enumerator(config, table, bounds).against_program(*population.fixed);
  }
  if (config.mode != GameMode::OPD) throw ConfigError("sampled populations need OPD mode");
  return Enumerator(config, table, bounds).against_population(population);
}

EquilibriumVerdict equilibrium_check(const StrategyProgram& sigma1, const StrategyProgram& sigma2,
                                     const GameConfig& config, const PayoffTable& table,
                                     const EnumerationBounds& bounds) {
  EquilibriumVerdict v;
  const MatchTrace base = run_match(sigma1, sigma2, config, table);
  v.payoff1 = base.total1;
  v.payoff2 = base.total2;
  v.cooperative = base.total1 == config.N * table.R && base.total2 == config.N * table.R;

  // The stage game is symmetric, so player 2's deviation against sigma1 is a
  // player-1 best response to sigma1.
  BestResponse br1 = best_response(sigma2, config, table, bounds);
  if (*br1.payoff.exact > v.payoff1) {
    v.deviating_player = 1;
    v.witness = std::move(br1);
    return v;
  }
  BestResponse br2 = best_response(sigma1, config, table, bounds);
  if (*br2.payoff.exact > v.payoff2) {
    v.deviating_player = 2;
    v.witness = std::move(br2);
    return v;
  }
  v.nash = true;
  return v;
}

AnalysisReport competitive_ratio(const StrategyProgram& S, const std::vector<Population>& gamma,
                                 const GameConfig& config, const PayoffTable& table,
                                 const EnumerationBounds& bounds) {
  AnalysisReport rep;
  rep.strategy = S.name;
  rep.N = config.N;
  const SecurityLevel sl = security_level(S, gamma, config, table);
  rep.SL = sl.value;
  rep.sl_population = sl.argmin;

  std::vector<double> means;
  bool all_exact = true;
  Payoff exact_sum{0};
  double var_sum = 0.0;
  for (const auto& [name, e] : sl.per_population) {
    means.push_back(e.mean);
    all_exact = all_exact && e.exact.has_value();
    if (e.exact) exact_sum += *e.exact;
    var_sum += e.std_error * e.std_error;
  }
  const auto m = static_cast<std::int64_t>(means.size());
  if (all_exact) {
    rep.mu = Estimate::of_exact(exact_sum / m);
  } else {
    double s = 0.0;
    for (double x : means) s += x;
    rep.mu.mean = s / static_cast<double>(m);
    rep.mu.std_error = std::sqrt(var_sum) / static_cast<double>(m);
    rep.mu.samples = sl.value.samples;
  }

  bool have_h = false;
  double gap = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const BestResponse br = best_response(gamma[i], config, table, bounds);
    if (!have_h || rep.h.mean < br.payoff.mean) rep.h = br.payoff;
    have_h = true;
    gap = std::max(gap, br.payoff.mean - sl.per_population[i].second.mean);
  }
  rep.best_response_gap = gap;
  const double R = boost::rational_cast<double>(table.R);
  rep.beta_bound = rep.h.mean / config.N - R;
  if (rep.h.mean > 0) {
    rep.CR = (rep.SL.exact && rep.h.exact)
                 ? boost::rational_cast<double>(*rep.SL.exact / *rep.h.exact)
                 : rep.SL.mean / rep.h.mean;
  }
  return rep;
}

double oft_constant(double q, double r, const PayoffTable& table) {
  if (!(q > 0.0) || q > 1.0) throw std::domain_error("q must lie in (0, 1]");
  if (r < 0.0) throw std::domain_error("r must be non-negative");
  const double R = boost::rational_cast<double>(table.R);
  const double S = boost::rational_cast<double>(table.S);
  return ((r + 1.0) * R - S) / q;
}

double deviation_cap(int N, double r, const PayoffTable& table) {
  return N * boost::rational_cast<double>(table.R) + (r + 1.0) * boost::rational_cast<double>(table.T);
}

bool reacts_only_to_deviation(const MatchTrace& trace, int player) {
  bool provoked = false;
  for (const auto& t : trace.ticks) {
    const Action mine = player == 1 ? t.a1 : t.a2;
    const Action theirs = player == 1 ? t.a2 : t.a1;
    if (mine != Action::C && !provoked) return false;
    if (theirs != Action::C) provoked = true;
  }
  return true;
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

}  // namespace

std::string report_csv(const std::vector<AnalysisReport>& rows, const std::string& header_comment) {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "strategy,N,SL,SL_se,SL_population,mu,mu_se,h,h_se,CR,best_response_gap,beta_bound\n";
  for (const auto& r : rows) {
    os << r.strategy << ',' << r.N << ',' << fmt(r.SL.mean) << ',' << fmt(r.SL.std_error) << ','
       << r.sl_population << ',' << fmt(r.mu.mean) << ',' << fmt(r.mu.std_error) << ','
       << fmt(r.h.mean) << ',' << fmt(r.h.std_error) << ',';
    if (r.CR) os << fmt(*r.CR);
    else os << "undefined";
    os << ',' << fmt(r.best_response_gap) << ',' << fmt(r.beta_bound) << '\n';
  }
  return os.str();
}

std::string report_summary(const AnalysisReport& r) {
  std::ostringstream os;
  os << "strategy " << r.strategy << ", N=" << r.N << '\n';
  os << "  security level  " << r.SL.describe() << " (worst population: " << r.sl_population
     << "; certified only over the given populations)\n";
  os << "  expected payoff " << r.mu.describe() << '\n';
  os << "  maximizer h     " << r.h.describe() << '\n';
  os << "  competitive ratio ";
  if (r.CR) os << fmt(*r.CR);
  else os << "undefined (h <= 0)";
  os << '\n';
  os << "  best-response gap " << fmt(r.best_response_gap) << ", beta " << fmt(r.beta_bound) << '\n';
  return os.str();
}

}  // namespace cbpd
