#include "cbpd/ftpd.hpp"

#include <sstream>

namespace cbpd {

MatchState::MatchState(const StrategyProgram& p1, const StrategyProgram& p2,
                       const GameConfig& config, const PayoffTable& table)
    : p1_(&p1), p2_(&p2), config_(config), table_(table),
      vm1_(reset(p1)), vm2_(reset(p2)) {
  history_.reserve(static_cast<std::size_t>(std::max(config.N, 0)));
}

Observation MatchState::observation(bool first) const {
  Observation o;
  o.horizon = config_.N;
  if (history_.empty()) return o;
  const auto& [a1, a2] = history_.back();
  const auto& [r1, r2] = payoffs_.back();
  o.opp_last = first ? a2 : a1;
  o.own_last = first ? a1 : a2;
  o.last_payoff = first ? r1 : r2;
  return o;
}

TickRecord MatchState::step() {
  const Observation o1 = observation(true);
  const Observation o2 = observation(false);
  const TickResult t1 = tick(vm1_, *p1_, o1, config_.k);
  const TickResult t2 = tick(vm2_, *p2_, o2, config_.k);

  const PayoffOutcome pay = payoff(t1.action, t2.action, table_, GameMode::FTPD);
  ++tick_;
  history_.emplace_back(t1.action, t2.action);
  payoffs_.emplace_back(pay.first, pay.second);
  total1_ += pay.first;
  total2_ += pay.second;

  TickRecord rec;
  rec.tick = tick_;
  rec.a1 = t1.action;
  rec.a2 = t2.action;
  rec.pay1 = pay.first;
  rec.pay2 = pay.second;
  rec.cost1 = t1.cost;
  rec.cost2 = t2.cost;
  rec.fault1 = t1.faulted;
  rec.fault2 = t2.faulted;
  rec.end1 = t1.reached_end;
  rec.end2 = t2.reached_end;
  return rec;
}

MatchTrace run_match(const StrategyProgram& p1, const StrategyProgram& p2,
                     const GameConfig& config, const PayoffTable& table) {
  if (config.mode != GameMode::FTPD) throw ConfigError("run_match requires FTPD mode");
  require_valid(config);
  require_valid(table, GameMode::FTPD);
  for (const auto* p : {&p1, &p2}) {
    for (const auto& ins : p->code) {
      if (ins.op == Opcode::Emit && !action_legal(ins.action, GameMode::FTPD)) {
        throw IllegalActionError("strategy '" + p->name + "' can play O in FTPD");
      }
    }
  }

  MatchState state(p1, p2, config, table);
  MatchTrace trace;
  trace.ticks.reserve(static_cast<std::size_t>(config.N));
  while (!state.done()) trace.ticks.push_back(state.step());
  trace.total1 = state.total1();
  trace.total2 = state.total2();
  return trace;
}

Payoff deviation_gain(const StrategyProgram& opponent, const StrategyProgram& candidate,
                      const StrategyProgram& baseline, const GameConfig& config,
                      const PayoffTable& table) {
  return run_match(candidate, opponent, config, table).total1 -
         run_match(baseline, opponent, config, table).total1;
}

std::string match_csv(const MatchTrace& trace, const std::string& header_comment) {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "tick,a1,a2,pay1,pay2,cost1,cost2\n";
  for (const auto& r : trace.ticks) {
    os << r.tick << ',' << to_char(r.a1) << ',' << to_char(r.a2) << ','
       << to_string(r.pay1) << ',' << to_string(r.pay2) << ',' << r.cost1 << ','
       << r.cost2 << '\n';
  }
  return os.str();
}

}  // namespace cbpd
