#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbpd/dsl.hpp"
#include "cbpd/ftpd.hpp"
#include "cbpd/game.hpp"
#include "cbpd/opd.hpp"
#include "cbpd/vm.hpp"

namespace cbpd {

/// A sample mean with its standard error, or an exact value.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
  std::optional<Payoff> exact;

  static Estimate of_exact(Payoff p);
  static Estimate of_samples(const std::vector<double>& xs);

  double ci_low(double z = 1.96) const { return mean - z * std_error; }
  double ci_high(double z = 1.96) const { return mean + z * std_error; }
  /// "v" when exact, else "mean ± 1.96·se (n=...)".
  std::string describe() const;
};

/// One member of the adversary set: either a single fixed opponent met every
/// tick (deterministic), or a random environment sampled over `trials` seeds.
struct Population {
  std::string name;
  std::optional<StrategyProgram> fixed;
  std::optional<Environment> environment;
  int trials = 1000;

  static Population against(std::string name, StrategyProgram opponent);
  static Population sampled(Environment env, int trials);
};

/// q and r describe the environments in `gamma`; r = 0 means instantaneous
/// rematching, otherwise the rematch period is t = 2r + 1.
struct PopulationModel {
  double q = 0.5;
  int r = 0;
  std::vector<Population> gamma;
};

/// Applies r to an OPD config.
GameConfig with_rematch_delay(GameConfig config, int r);

/// Payoff of S in one population: exact for a fixed opponent, otherwise the
/// mean over seeds config.seed, config.seed+1, ...
Estimate evaluate(const StrategyProgram& S, const Population& population,
                  const GameConfig& config, const PayoffTable& table);

struct SecurityLevel {
  Estimate value;
  std::string argmin;
  std::vector<std::pair<std::string, Estimate>> per_population;
};

/// Minimum over `gamma` of S's expected payoff. Throws on an empty gamma.
SecurityLevel security_level(const StrategyProgram& S, const std::vector<Population>& gamma,
                             const GameConfig& config, const PayoffTable& table);

struct EnumerationBounds {
  int max_instructions = 8;
  int max_counters = 2;
  /// 0 means bit_width(N).
  int max_counter_width = 0;
  /// Counter compares against N, N-1 and N-2.
  bool horizon_terms = true;
  /// Refuse when the estimated number of programs exceeds this.
  double max_search = 1e18;
  /// Seeds per candidate for sampled populations.
  int trials = 200;
  /// Decision mode: only ask whether some program pays strictly more than
  /// this. Subtrees that cannot are skipped and the search stops at the
  /// first program that does.
  std::optional<Payoff> exceed;
};

class SearchTooLarge : public std::runtime_error {
 public:
  SearchTooLarge(double estimate, const std::string& what)
      : std::runtime_error(what), estimate_(estimate) {}
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

/// Upper bound on the number of syntactically distinct programs in the bound.
double search_size_estimate(const EnumerationBounds& bounds, const GameConfig& config);

struct BestResponse {
  dsl::StrategySource source;
  StrategyProgram program;
  Estimate payoff;
  std::uint64_t nodes = 0;       // partial programs visited
  std::uint64_t evaluated = 0;   // complete programs scored
  /// False in decision mode when no program exceeded the threshold: the
  /// returned program is then only the best one visited.
  bool complete = true;
};

/// Exhaustive search for the highest-paying program within `bounds`. Ties go
/// to the lexicographically smallest canonical source.
BestResponse best_response(const StrategyProgram& opponent, const GameConfig& config,
                           const PayoffTable& table, const EnumerationBounds& bounds = {});
BestResponse best_response(const Population& population, const GameConfig& config,
                           const PayoffTable& table, const EnumerationBounds& bounds = {});

struct EquilibriumVerdict {
  bool nash = false;
  bool cooperative = false;
  Payoff payoff1{0}, payoff2{0};
  /// Set when some player can gain; player is 1 or 2.
  int deviating_player = 0;
  std::optional<BestResponse> witness;
};

EquilibriumVerdict equilibrium_check(const StrategyProgram& sigma1, const StrategyProgram& sigma2,
                                     const GameConfig& config, const PayoffTable& table,
                                     const EnumerationBounds& bounds = {});

struct AnalysisReport {
  std::string strategy;
  int N = 0;
  Estimate SL;
  std::string sl_population;
  /// Mean over gamma, each population weighted equally.
  Estimate mu;
  Estimate h;
  std::optional<double> CR;
  double best_response_gap = 0.0;
  double beta_bound = 0.0;
};

/// SL over gamma, h as the best best-response payoff over the same gamma.
AnalysisReport competitive_ratio(const StrategyProgram& S, const std::vector<Population>& gamma,
                                 const GameConfig& config, const PayoffTable& table,
                                 const EnumerationBounds& bounds);

/// (1/q)[(r+1)R - S]. Throws std::domain_error unless 0 < q <= 1 and r >= 0.
double oft_constant(double q, double r, const PayoffTable& table);

/// N*R + (r+1)*T: a loose ceiling on what any strategy collects among
/// opting-out cooperators.
double deviation_cap(int N, double r, const PayoffTable& table);

/// True when `player` (1 or 2) plays something other than C only at ticks
/// strictly after the opponent's first non-C action.
bool reacts_only_to_deviation(const MatchTrace& trace, int player);

std::string report_csv(const std::vector<AnalysisReport>& rows, const std::string& header_comment = {});
std::string report_summary(const AnalysisReport& report);

}  // namespace cbpd
