#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cbpd/game.hpp"
#include "cbpd/vm.hpp"

namespace cbpd {

struct TickRecord {
  int tick = 0;  // 1-based
  Action a1 = Action::W, a2 = Action::W;
  Payoff pay1{0}, pay2{0};
  int cost1 = 0, cost2 = 0;
  bool fault1 = false, fault2 = false;
  /// Execution ran past the last instruction this tick.
  bool end1 = false, end2 = false;
};

struct MatchTrace {
  std::vector<TickRecord> ticks;
  Payoff total1{0}, total2{0};
};

/// One pair mid-match. Both players see the same snapshot of the previous
/// tick before either moves.
class MatchState {
 public:
  MatchState(const StrategyProgram& p1, const StrategyProgram& p2,
             const GameConfig& config, const PayoffTable& table);

  bool done() const { return tick_ >= config_.N; }
  int tick_index() const { return tick_; }
  const std::vector<std::pair<Action, Action>>& history() const { return history_; }
  Payoff total1() const { return total1_; }
  Payoff total2() const { return total2_; }
  const VmState& vm1() const { return vm1_; }
  const VmState& vm2() const { return vm2_; }

  TickRecord step();

 private:
  Observation observation(bool first) const;

  const StrategyProgram* p1_;
  const StrategyProgram* p2_;
  GameConfig config_;
  PayoffTable table_;
  VmState vm1_, vm2_;
  int tick_ = 0;
  std::vector<std::pair<Action, Action>> history_;
  std::vector<std::pair<Payoff, Payoff>> payoffs_;
  Payoff total1_{0}, total2_{0};
};

/// Plays N ticks. Throws ConfigError for an invalid config/table or OPD mode.
MatchTrace run_match(const StrategyProgram& p1, const StrategyProgram& p2,
                     const GameConfig& config, const PayoffTable& table);

/// Player-1 payoff of `candidate` minus that of `baseline`, both against
/// `opponent`.
Payoff deviation_gain(const StrategyProgram& opponent, const StrategyProgram& candidate,
                      const StrategyProgram& baseline, const GameConfig& config,
                      const PayoffTable& table);

/// CSV with columns tick,a1,a2,pay1,pay2,cost1,cost2. `header_comment` (if
/// non-empty) is written first as a "# ..." line.
std::string match_csv(const MatchTrace& trace, const std::string& header_comment = {});

}  // namespace cbpd
