// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <unistd.h>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbpd/analysis.hpp"
#include "cbpd/dsl.hpp"
#include "cbpd/ftpd.hpp"
#include "cbpd/library.hpp"
#include "cbpd/opd.hpp"
#include "random_program.hpp"

using namespace cbpd;

namespace {

// Pinned tolerances and sizes.
constexpr double kGrimMatchSeconds = 1.0;
constexpr int kDominanceTables = 100;
constexpr int kOftHorizon = 500;
constexpr int kOftTrials = 1000;
constexpr double kOftStandardErrors = 3.0;
constexpr double kCrFloor = 0.9;
constexpr int kCrTrials = 1000;
constexpr int kCrBestResponseTrials = 200;
constexpr int kCrMaxInstructions = 3;
constexpr int kPairedSeeds = 1000;
constexpr double kOneSided95 = 1.6448536269514722;
constexpr int kBudgetPrograms = 10000;
constexpr int kBudgetTicks = 20;
constexpr int kFuzzInputs = 10000;
constexpr int kDeterminismRuns = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

GameConfig ftpd(int N, int k) {
  GameConfig c;
  c.N = N;
  c.k = k;
  return c;
}

GameConfig opd_instant(int N) {
  GameConfig c;
  c.mode = GameMode::OPD;
  c.N = N;
  return with_rematch_delay(c, 0);
}

std::vector<Population> hostile_gamma(int N, double q, int trials) {
  GameConfig c = opd_instant(N);
  const auto grim = get("GRIM", c);
  return {Population::sampled({"env-AllD", q, grim, {get("AllD", c)}}, trials),
          Population::sampled({"env-AllW", q, grim, {get("AllW", c)}}, trials)};
}

Outcome grim_mutual_cooperation() {
  Outcome o{true, ""};
  const auto t = PayoffTable::intro();
  for (int N : {10, 100, 1000}) {
    const auto c = ftpd(N, 2);
    const auto grim = get("GRIM", c);
    const auto start = std::chrono::steady_clock::now();
    const auto trace = run_match(grim, grim, c, t);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const Payoff want = N * t.R;
    const bool ok = trace.total1 == want && trace.total2 == want && secs < kGrimMatchSeconds;
    o.pass = o.pass && ok;
    o.detail += "N=" + std::to_string(N) + " (" + to_string(trace.total1) + "," +
                to_string(trace.total2) + ") in " + fmt(secs) + "s; ";
  }
  return o;
}

Outcome counting_defector_bound() {
  Outcome o{true, ""};
  const auto t = PayoffTable::intro();
  for (int N : {8, 16, 32}) {
    const int k = static_cast<int>(std::ceil(std::log2(N))) - 1;
    const auto c = ftpd(N, k);
    const auto trace = run_match(get("CountingDefector", c), get("GRIM", c), c, t);
    const Payoff want = (N - 2) * t.R + t.P;
    const bool ok = trace.total1 == want && trace.total1 < N * t.R;
    o.pass = o.pass && ok;
    o.detail += "N=" + std::to_string(N) + " k=" + std::to_string(k) + " got " +
                to_string(trace.total1) + " want " + to_string(want) + "; ";
  }
  return o;
}

Outcome equilibrium_brute_force() {
  Outcome o{true, ""};
  const auto t = PayoffTable::intro();
  for (int N : {5, 4, 3, 2}) {
    auto c = ftpd(N, 2);
    // k = 2 only satisfies k < ceil(log2 N) from N = 5 up.
    c.enforce_complexity_bound = N >= 5;
    EnumerationBounds b;
    b.max_instructions = 8;
    b.max_counters = 2;
    b.exceed = N * t.R;
    const auto start = std::chrono::steady_clock::now();
    const auto br = best_response(get("GRIM", c), c, t, b);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool found = br.complete && br.payoff.exact && *br.payoff.exact > N * t.R;
    o.detail += "N=" + std::to_string(N) + (c.enforce_complexity_bound ? "" : " (bound relaxed)");
    if (found) {
      o.pass = false;
      std::string text = dsl::print(br.source);
      for (auto& ch : text) if (ch == '\n') ch = '|';
      o.detail += ": program paying " + to_string(*br.payoff.exact) + " > " + to_string(N * t.R) +
                  " [" + text + "] after " + std::to_string(br.nodes) + " nodes, " + fmt(secs) + "s; ";
    } else {
      o.detail += ": none in " + std::to_string(br.nodes) + " nodes; ";
    }
  }
  return o;
}

Outcome dominance_reduction() {
  std::mt19937_64 g(20240601);
  std::uniform_int_distribution<int> d(1, 12);
  int checked = 0, strict = 0;
  while (checked < kDominanceTables) {
    PayoffTable t;
    t.P = Payoff(d(g), d(g));
    t.S = t.P - Payoff(d(g), d(g));
    t.R = t.P + Payoff(d(g), d(g));
    t.T = t.R + Payoff(d(g), d(g));
    t.H = -Payoff(d(g), d(g));
    if (!validate_table(t, GameMode::FTPD).empty()) continue;
    ++checked;
    const auto rep = dominance_check(t, GameMode::FTPD);
    if (rep.relation(Action::W, Action::D) == Dominance::Strict) ++strict;
  }
  return {strict == checked, std::to_string(strict) + "/" + std::to_string(checked) +
                                 " tables report W strictly dominated by D"};
}

Outcome oft_security_level() {
  Outcome o{true, ""};
  const auto t = PayoffTable::intro();
  const double R = boost::rational_cast<double>(t.R);
  for (double q : {0.25, 0.5}) {
    auto c = opd_instant(kOftHorizon);
    const auto sl = security_level(get("OFT", c), hostile_gamma(kOftHorizon, q, kOftTrials), c, t);
    const double bound = kOftHorizon * R - oft_constant(q, 0, t);
    const bool ok = sl.value.mean >= bound - kOftStandardErrors * sl.value.std_error;
    o.pass = o.pass && ok;
    o.detail += "q=" + fmt(q) + ": SL " + fmt(sl.value.mean) + " (se " + fmt(sl.value.std_error) +
                ", " + sl.argmin + ") vs bound " + fmt(bound) + "; ";
  }
  return o;
}

Outcome competitive_ratio_trend() {
  const auto t = PayoffTable::intro();
  EnumerationBounds b;
  b.max_instructions = kCrMaxInstructions;
  b.max_counters = 0;
  b.trials = kCrBestResponseTrials;
  std::vector<double> crs;
  Outcome o{true, ""};
  for (int N : {50, 100, 200, 400}) {
    auto c = opd_instant(N);
    const auto rep = competitive_ratio(get("OFT", c), hostile_gamma(N, 0.5, kCrTrials), c, t, b);
    if (!rep.CR) {
      o.pass = false;
      o.detail += "N=" + std::to_string(N) + ": CR undefined; ";
      continue;
    }
    crs.push_back(*rep.CR);
    o.detail += "N=" + std::to_string(N) + ": " + fmt(*rep.CR) + "; ";
  }
  for (std::size_t i = 1; i < crs.size(); ++i) o.pass = o.pass && crs[i] >= crs[i - 1];
  o.pass = o.pass && crs.size() == 4 && crs.back() >= kCrFloor;
  return o;
}

Outcome cooperative_first_partner() {
  const auto t = PayoffTable::intro();
  Outcome o{true, ""};
  for (int r : {0, 1}) {
    GameConfig c;
    c.mode = GameMode::OPD;
    c.N = 100;
    c = with_rematch_delay(c, r);
    const auto oft = get("OFT", c);
    Environment env{"env-AllD", 0.5, get("GRIM", c), {get("AllD", c), get("AllW", c)}};
    std::vector<double> diffs;
    for (int s = 0; s < kPairedSeeds; ++s) {
      const auto seed = static_cast<std::uint64_t>(1000 + s);
      const auto coop = simulate_focal(oft, env, c, t, seed, FirstPartner::Cooperative);
      const auto rand = simulate_focal(oft, env, c, t, seed, FirstPartner::Random);
      diffs.push_back(boost::rational_cast<double>(coop.payoff - rand.payoff));
    }
    const auto e = Estimate::of_samples(diffs);
    const double lower = e.mean - kOneSided95 * e.std_error;
    o.pass = o.pass && lower >= 0.0;
    o.detail += "r=" + std::to_string(r) + ": mean diff " + fmt(e.mean) + " (se " + fmt(e.std_error) +
                ", lower " + fmt(lower) + "); ";
  }
  return o;
}

Outcome budget_law() {
  std::mt19937_64 g(8);
  long ticks = 0, suspended = 0, violations = 0;
  for (int i = 0; i < kBudgetPrograms; ++i) {
    const int N = std::uniform_int_distribution<int>(5, 2000)(g);
    const int k = std::uniform_int_distribution<int>(2, 8)(g);
    const auto p = gen::program(g, N);
    auto s = reset(p);
    for (int tk = 0; tk < kBudgetTicks; ++tk) {
      const auto r = tick(s, p, gen::observation(g, N, tk == 0), k);
      ++ticks;
      if (r.cost > k) ++violations;
      if (r.suspended) {
        ++suspended;
        if (r.action != Action::W || !s.pending) ++violations;
      }
      if ((r.faulted || r.reached_end) && r.action != Action::W) ++violations;
    }
  }
  // Whole matches between builtins, including the expensive counter.
  const auto t = PayoffTable::intro();
  for (int N : {8, 33, 200}) {
    const auto c = ftpd(N, 2);
    for (const char* a : {"GRIM", "CountingDefector", "TFT"}) {
      for (const char* b : {"GRIM", "CountingDefector", "AllD"}) {
        for (const auto& rec : run_match(get(a, c), get(b, c), c, t).ticks) {
          ++ticks;
          if (rec.cost1 > c.k || rec.cost2 > c.k) ++violations;
        }
      }
    }
  }
  return {violations == 0, std::to_string(ticks) + " ticks, " + std::to_string(suspended) +
                               " suspended, " + std::to_string(violations) + " violations"};
}

Outcome dsl_roundtrip_and_fuzz() {
  int fixpoints = 0, crashes = 0, diagnostics = 0;
  for (const auto& info : builtin_catalog()) {
    const auto src = dsl::parse(info.source);
    const auto text = dsl::print(src);
    if (dsl::parse(text) == src && dsl::print(dsl::parse(text)) == text) ++fixpoints;
  }
  std::mt19937_64 g(4242);
  std::uniform_int_distribution<int> len(0, 256), byte(0, 255);
  for (int i = 0; i < kFuzzInputs; ++i) {
    std::string s(static_cast<std::size_t>(len(g)), '\0');
    for (auto& ch : s) ch = static_cast<char>(byte(g));
    try {
      dsl::parse(s);
    } catch (const dsl::DslError&) {
      ++diagnostics;
    } catch (...) {
      ++crashes;
    }
  }
  const int builtins = static_cast<int>(builtin_catalog().size());
  return {fixpoints == builtins && crashes == 0,
          std::to_string(fixpoints) + "/" + std::to_string(builtins) + " builtins fixed, " +
              std::to_string(kFuzzInputs) + " fuzz inputs, " + std::to_string(diagnostics) +
              " diagnostics, " + std::to_string(crashes) + " other failures"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome population_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("cbpd_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);
  const fs::path spec = root / "population.txt";
  std::ofstream(spec) << "4 x OFT\n2 x GRIM\n2 x AllD\n1 x AllW\n1 x TFT\n";
  std::string first_events, first_summary;
  int identical = 0;
  for (int run = 0; run < kDeterminismRuns; ++run) {
    const fs::path out = root / ("run" + std::to_string(run));
    const std::string cmd = std::string("\"") + CBPD_CLI_PATH + "\" population \"" + spec.string() +
                            "\" --N 200 --t 3 --seed 77 --out \"" + out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      fs::remove_all(root);
      return {false, "population command failed on run " + std::to_string(run)};
    }
    const auto events = slurp(out / "population.csv");
    const auto summary = slurp(out / "population_summary.csv");
    if (run == 0) {
      first_events = events;
      first_summary = summary;
    }
    if (!events.empty() && events == first_events && summary == first_summary) ++identical;
  }
  fs::remove_all(root);
  return {identical == kDeterminismRuns,
          std::to_string(identical) + "/" + std::to_string(kDeterminismRuns) +
              " runs byte-identical (" + std::to_string(first_events.size()) + " bytes of events)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"GRIM mutual cooperation", grim_mutual_cooperation},
      {"counting defector bound", counting_defector_bound},
      {"equilibrium brute force", equilibrium_brute_force},
      {"dominance reduction", dominance_reduction},
      {"OFT security level", oft_security_level},
      {"competitive ratio trend", competitive_ratio_trend},
      {"cooperative first partner", cooperative_first_partner},
      {"budget law", budget_law},
      {"DSL round-trip and fuzz", dsl_roundtrip_and_fuzz},
      {"population determinism", population_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
