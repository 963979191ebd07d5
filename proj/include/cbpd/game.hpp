#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace cbpd {

/// Exact payoff units.
using Payoff = boost::rational<std::int64_t>;

enum class Action : std::uint8_t { C = 0, D = 1, W = 2, O = 3 };

inline constexpr std::array<Action, 4> kAllActions{Action::C, Action::D,
                                                   Action::W, Action::O};
/// Action codes are 2 bits wide.
inline constexpr int kActionWidth = 2;

char to_char(Action a);
std::optional<Action> action_from_char(char c);

enum class GameMode { FTPD, OPD };

std::string_view to_string(GameMode m);
std::optional<GameMode> mode_from_string(std::string_view s);

/// How a split pays out. Symmetric pays Q to both players; asymmetric pays
/// Q to whoever opted out and Q_hat to an abandoned partner.
enum class SplitRule { Symmetric, Asymmetric };

struct PayoffTable {
  Payoff T{2}, R{1}, P{-1}, S{-2};
  Payoff H{0};
  Payoff Q{0};
  Payoff Q_hat{0};

  /// (T,R,P,S) = (2,1,-1,-2), H = 0, Q = 0.
  static PayoffTable intro();
  /// intro() with H = Q_hat = -1/100.
  static PayoffTable epsilon();

  bool operator==(const PayoffTable&) const = default;
};

struct GameConfig {
  int N = 10;
  GameMode mode = GameMode::FTPD;
  int t = 1;
  int K = 1;
  int k = 2;
  bool instantaneous_rematch = false;
  std::uint64_t seed = 1;
  SplitRule split = SplitRule::Symmetric;
  /// Pay Q_hat (instead of 0) for every tick a player spends unpaired.
  bool unpaired_pays_q_hat = false;
  /// Require k < ceil(log2 N). Relaxing it is only meaningful for
  /// demonstrating what goes wrong without the bound.
  bool enforce_complexity_bound = true;

  bool operator==(const GameConfig&) const = default;
};

class IllegalActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PayoffOutcome {
  Payoff first;
  Payoff second;
  bool split = false;

  bool operator==(const PayoffOutcome&) const = default;
};

/// Stage payoff for one clock tick. Throws IllegalActionError for O in FTPD.
PayoffOutcome payoff(Action a, Action b, const PayoffTable& table,
                     GameMode mode, SplitRule split = SplitRule::Symmetric);

bool action_legal(Action a, GameMode mode);

/// Names of every violated ordering constraint, empty when the table is valid.
/// `opt_out_regime` additionally checks P >= Q >= 0 and Q_hat < 0.
std::vector<std::string> validate_table(const PayoffTable& table, GameMode mode,
                                        bool opt_out_regime = false);

std::vector<std::string> validate_config(const GameConfig& config);

/// Throws ConfigError listing every violation.
void require_valid(const GameConfig& config);
void require_valid(const PayoffTable& table, GameMode mode);

enum class Dominance { None, Weak, Strict };

struct DominanceEntry {
  Action dominated;
  Action by;
  Dominance kind;
};

struct DominanceReport {
  /// Every (dominated, dominating) row pair of the one-shot matrix.
  std::vector<DominanceEntry> entries;
  /// Actions left after iterated elimination of weakly dominated rows.
  std::vector<Action> surviving;

  Dominance relation(Action dominated, Action by) const;
  bool strictly_dominated(Action a) const;
  bool survives(Action a) const;
};

/// Row-player dominance over the mode's action set.
DominanceReport dominance_check(const PayoffTable& table, GameMode mode,
                                SplitRule split = SplitRule::Symmetric);

std::string to_string(const Payoff& p);
/// Accepts integers and "p/q" (either may be negative).
Payoff parse_payoff(std::string_view text);

/// Smallest number of bits holding `value` (at least 1).
int bit_width_of(std::uint64_t value);

}  // namespace cbpd
