#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cbpd/game.hpp"
#include "cbpd/vm.hpp"

namespace cbpd {

/// mt19937_64 plus distribution helpers whose output does not depend on the
/// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [0, 1) with 53 bits.
  double unit();
  bool bernoulli(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Deterministic sub-seed for stream `stream` of a base seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct PopulationMember {
  StrategyProgram program;
  int count = 1;
};

enum class OpdEventKind { Play, Split, Rematch, Unpaired };

std::string_view to_string(OpdEventKind k);

struct OpdEvent {
  int tick = 0;  // 1-based
  OpdEventKind kind = OpdEventKind::Play;
  int player = 0;
  int partner = -1;
  std::optional<Action> action;
  Payoff payoff{0};
};

struct PlayerSummary {
  int id = 0;
  std::string strategy;
  Payoff payoff{0};
  int opt_outs = 0;
  int splits = 0;
  int unpaired_ticks = 0;
};

struct OpdTrace {
  std::vector<OpdEvent> events;
  std::vector<PlayerSummary> players;
  int splits = 0;
};

struct OpdOptions {
  bool record_events = true;
  /// Pairs for tick 1; players not listed start in the pool. Random when unset.
  std::optional<std::vector<std::pair<int, int>>> initial_pairing;
};

/// Runs N ticks of a 2K-player population. Player ids follow the member
/// order, `count` consecutive ids per member. Throws ConfigError unless the
/// config is OPD mode, valid, and the member counts add up to 2K.
OpdTrace run_population(const std::vector<PopulationMember>& members,
                        const GameConfig& config, const PayoffTable& table,
                        const OpdOptions& options = {});

/// Uniform random matching of `pool` (visited in ascending id order). An odd
/// pool leaves one uniformly chosen player behind in `pool`; everyone else is
/// removed and returned in pairs.
std::vector<std::pair<int, int>> rematch(std::vector<int>& pool, Rng& rng);

/// Whether the end of 0-based tick `tick` is a rematch event.
bool rematch_event_after(int tick, const GameConfig& config);

/// Mean ticks a freshly split player waits before its next partner, with
/// the split tick uniformly placed in the rematch period.
double expected_rematch_delay(const GameConfig& config);

std::string population_csv(const OpdTrace& trace, const std::string& header_comment = {});
std::string population_summary_csv(const OpdTrace& trace, const std::string& header_comment = {});

// A single focal player against an environment of fresh partners. Each new
// partner is the cooperative strategy with probability q and otherwise one of
// `others`, uniformly.
struct Environment {
  std::string name;
  double q = 0.5;
  StrategyProgram cooperative;
  std::vector<StrategyProgram> others;
};

enum class FirstPartner { Random, Cooperative, Other };

struct FocalResult {
  Payoff payoff{0};
  int partners = 0;
  int opt_outs = 0;
  int unpaired_ticks = 0;
  /// The focal program ran past its last instruction on some tick.
  bool reached_end = false;
};

/// Partner draws after the first come from one stream of `seed`, the first
/// partner from another, so runs that differ only in `first` stay paired.
FocalResult simulate_focal(const StrategyProgram& focal, const Environment& env,
                           const GameConfig& config, const PayoffTable& table,
                           std::uint64_t seed, FirstPartner first = FirstPartner::Random);

}  // namespace cbpd
