// Command-line front end: matches, populations and analyses.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbpd/analysis.hpp"
#include "cbpd/config.hpp"
#include "cbpd/ftpd.hpp"
#include "cbpd/library.hpp"
#include "cbpd/opd.hpp"

namespace fs = std::filesystem;
using namespace cbpd;

namespace {

constexpr int kExitUsage = 2;

/// Raised for anything the user can fix; printed as-is and exits 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GameFlags {
  std::string config_file;
  std::string table = "intro";
  std::optional<int> N, k, t, K;
  std::optional<std::uint64_t> seed;
  std::string mode;
  bool instantaneous = false;
  bool relax_bound = false;
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key=value config file");
    app->add_option("--table", table, "payoff table: preset (intro, epsilon) or config file")
        ->capture_default_str();
    app->add_option("--N", N, "horizon in clock ticks");
    app->add_option("--k", k, "XOR-units per tick");
    app->add_option("--t", t, "rematch period in ticks");
    app->add_option("--K", K, "number of pairs");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--mode", mode, "FTPD or OPD");
    app->add_flag("--instantaneous-rematch", instantaneous, "rematch in the same tick as a split");
    app->add_flag("--relax-bound", relax_bound, "allow k >= ceil(log2 N)");
    app->add_option("--out", out_dir, "directory for CSV output");
  }

  ConfigFile resolve(GameMode default_mode) const {
    ConfigFile f;
    f.config.mode = default_mode;
    if (!config_file.empty()) f = load_config(config_file, f);
    if (!config_file.empty() && table == "intro") {
      // The config file's own table wins over the default preset.
    } else {
      f.table = load_table(table);
    }
    if (N) f.config.N = *N;
    if (k) f.config.k = *k;
    if (t) f.config.t = *t;
    if (K) f.config.K = *K;
    if (seed) f.config.seed = *seed;
    if (!mode.empty()) {
      auto m = mode_from_string(mode);
      if (!m) throw UsageError("--mode must be FTPD or OPD");
      f.config.mode = *m;
    }
    if (instantaneous) f.config.instantaneous_rematch = true;
    if (relax_bound) f.config.enforce_complexity_bound = false;
    require_valid(f.config);
    require_valid(f.table, f.config.mode);
    return f;
  }
};

std::string header(const std::string& spec_bytes, std::uint64_t seed) {
  return "spec_hash=" + fnv1a64_hex(spec_bytes) + " seed=" + std::to_string(seed);
}

void write_output(const std::string& dir, const std::string& name, const std::string& text) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError(path.string() + ":1:1: cannot write file");
  out << text;
}

/// Source text a strategy argument refers to, for hashing.
std::string strategy_text(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return builtin(name_or_path).source;
  try {
    return read_file(name_or_path);
  } catch (const ConfigError&) {
    return name_or_path;
  }
}

int cmd_list() {
  for (const auto& b : builtin_catalog()) {
    std::cout << b.name << (b.opd_only ? " (OPD)" : "") << ": " << b.summary
              << "; worst case at N=1000: " << b.worst_case(1000) << " XOR-units\n";
  }
  return 0;
}

int cmd_match(const GameFlags& g, const std::string& s1, const std::string& s2) {
  const ConfigFile f = g.resolve(GameMode::FTPD);
  const dsl::CompileOptions opts{f.config.mode, f.config.N};
  const StrategyProgram p1 = load_strategy(s1, opts);
  const StrategyProgram p2 = load_strategy(s2, opts);
  const MatchTrace trace = run_match(p1, p2, f.config, f.table);
  std::cout << to_string(trace.total1) << ' ' << to_string(trace.total2) << '\n';
  const std::string spec = format_config(f) + strategy_text(s1) + strategy_text(s2);
  write_output(g.out_dir, "match.csv", match_csv(trace, header(spec, f.config.seed)));
  return 0;
}

int cmd_population(const GameFlags& g, const std::string& spec_path) {
  std::string spec_text;
  try {
    spec_text = read_file(spec_path);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  std::vector<PopulationLine> lines;
  try {
    lines = parse_population_spec(spec_text);
  } catch (const ConfigError& e) {
    throw UsageError(spec_path + ":" + e.what());
  }
  int players = 0;
  for (const auto& l : lines) players += l.count;
  if (players == 0 || players % 2 != 0) {
    throw UsageError(spec_path + ":1:1: population needs an even, nonzero player count (got " +
                     std::to_string(players) + ")");
  }

  GameFlags flags = g;
  if (!flags.K) flags.K = players / 2;
  const ConfigFile f = flags.resolve(GameMode::OPD);
  if (f.config.K * 2 != players) {
    throw UsageError(spec_path + ":1:1: spec lists " + std::to_string(players) +
                     " players but K=" + std::to_string(f.config.K));
  }
  const dsl::CompileOptions opts{f.config.mode, f.config.N};
  std::vector<PopulationMember> members;
  std::string hashed = format_config(f) + spec_text;
  for (const auto& l : lines) {
    try {
      members.push_back({load_strategy(l.strategy, opts), l.count});
    } catch (const std::exception& e) {
      if (is_builtin(l.strategy) || fs::exists(l.strategy)) throw;
      throw UsageError(spec_path + ":" + std::to_string(l.line) + ":1: unknown strategy '" +
                       l.strategy + "'");
    }
    hashed += strategy_text(l.strategy);
  }

  const OpdTrace trace = run_population(members, f.config, f.table);
  const std::string head = header(hashed, f.config.seed);
  std::cout << population_summary_csv(trace);
  write_output(g.out_dir, "population.csv", population_csv(trace, head));
  write_output(g.out_dir, "population_summary.csv", population_summary_csv(trace, head));
  return 0;
}

struct AnalyzeFlags {
  std::string strategy;
  std::optional<double> q;
  std::optional<int> r;
  std::vector<std::string> gamma;
  std::string sweep;
  bool oft_constant = false;
  int trials = 1000;
  int max_instructions = 3;
  int max_counters = 0;
};

std::vector<int> parse_sweep(const std::string& s) {
  int a = 0, b = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0 || a < 1 ||
      b < a) {
    throw UsageError("--sweep-N expects a:b:step with 1 <= a <= b and step > 0");
  }
  std::vector<int> out;
  for (int n = a; n <= b; n += step) out.push_back(n);
  return out;
}

int cmd_analyze(const GameFlags& g, const AnalyzeFlags& a) {
  if (a.oft_constant) {
    if (!a.q) throw UsageError("--oft-constant needs --q");
    ConfigFile f;
    f.table = load_table(g.table);
    try {
      std::cout << oft_constant(*a.q, a.r.value_or(0), f.table) << '\n';
    } catch (const std::domain_error& e) {
      throw UsageError(std::string("oft constant undefined: ") + e.what());
    }
    return 0;
  }
  if (a.strategy.empty()) throw UsageError("analyze needs a strategy (or --oft-constant)");

  // Fixed-opponent populations ("all-NAME") play FTPD matches unless an OPD
  // mode is asked for; sampled environments always run under OPD.
  const bool sampled = a.gamma.empty() || std::any_of(a.gamma.begin(), a.gamma.end(), [](const auto& s) {
                         return s.rfind("env-", 0) == 0;
                       });
  if (sampled && !a.q) throw UsageError("sampled populations need --q");
  if (a.q && !(*a.q > 0.0 && *a.q <= 1.0)) throw UsageError("--q must lie in (0, 1]");

  GameFlags flags = g;
  if (sampled && flags.mode.empty()) flags.mode = "OPD";
  ConfigFile base = flags.resolve(sampled ? GameMode::OPD : GameMode::FTPD);
  if (base.config.mode == GameMode::OPD && a.r) base.config = with_rematch_delay(base.config, *a.r);

  const std::vector<int> horizons = a.sweep.empty() ? std::vector<int>{base.config.N} : parse_sweep(a.sweep);
  EnumerationBounds bounds;
  bounds.max_instructions = a.max_instructions;
  bounds.max_counters = a.max_counters;
  bounds.trials = std::min(a.trials, 200);

  std::vector<AnalysisReport> rows;
  for (int N : horizons) {
    GameConfig config = base.config;
    config.N = N;
    require_valid(config);
    const dsl::CompileOptions opts{config.mode, N};
    const StrategyProgram S = load_strategy(a.strategy, opts);

    std::vector<Population> gamma;
    auto environment = [&](const std::string& name, std::vector<std::string> others) {
      Environment env;
      env.name = name;
      env.q = *a.q;
      env.cooperative = get("GRIM", opts);
      for (const auto& o : others) env.others.push_back(load_strategy(o, opts));
      return Population::sampled(std::move(env), a.trials);
    };
    if (a.gamma.empty()) {
      gamma.push_back(environment("env-AllD", {"AllD"}));
      gamma.push_back(environment("env-AllW", {"AllW"}));
    }
    for (const auto& spec : a.gamma) {
      if (spec.rfind("all-", 0) == 0) {
        gamma.push_back(Population::against(spec, load_strategy(spec.substr(4), opts)));
      } else if (spec.rfind("env-", 0) == 0) {
        gamma.push_back(environment(spec, {spec.substr(4)}));
      } else {
        throw UsageError("--gamma expects all-NAME or env-NAME, got '" + spec + "'");
      }
    }
    AnalysisReport rep = competitive_ratio(S, gamma, config, base.table, bounds);
    std::cout << report_summary(rep);
    rows.push_back(std::move(rep));
  }

  std::string hashed = format_config(base) + strategy_text(a.strategy);
  for (const auto& s : a.gamma) hashed += s + '\n';
  hashed += a.sweep;
  const std::string csv = report_csv(rows, header(hashed, base.config.seed));
  if (horizons.size() > 1) {
    std::cout << "N,CR\n";
    for (const auto& r : rows) {
      std::cout << r.N << ',' << (r.CR ? std::to_string(*r.CR) : std::string("undefined")) << '\n';
    }
  }
  write_output(g.out_dir, "analysis.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complexity-bounded repeated Prisoner's Dilemma toolkit"};
  app.require_subcommand(0, 1);
  bool list = false;
  app.add_flag("--list-strategies", list, "list builtin strategies");

  GameFlags match_flags, pop_flags, analyze_flags;
  std::string s1, s2, spec_path;
  AnalyzeFlags az;

  auto* match = app.add_subcommand("match", "play one FTPD match and print both payoffs");
  match->add_option("strategy1", s1, "builtin name or .pdstrat file")->required();
  match->add_option("strategy2", s2, "builtin name or .pdstrat file")->required();
  match_flags.attach(match);

  auto* pop = app.add_subcommand("population", "run an OPD population");
  pop->add_option("spec", spec_path, "population spec file (lines of 'count x strategy')")->required();
  pop_flags.attach(pop);

  auto* analyze = app.add_subcommand("analyze", "security level, competitive ratio, OFT constant");
  analyze->add_option("strategy", az.strategy, "builtin name or .pdstrat file");
  analyze->add_option("--q", az.q, "probability a new partner is cooperative");
  analyze->add_option("--r", az.r, "expected rematch delay (0 = instantaneous)");
  analyze->add_option("--gamma", az.gamma, "population: all-NAME (fixed opponent) or env-NAME");
  analyze->add_option("--sweep-N", az.sweep, "a:b:step horizons");
  analyze->add_flag("--oft-constant", az.oft_constant, "print (1/q)[(r+1)R - S]");
  analyze->add_option("--trials", az.trials, "seeds per sampled population")->capture_default_str();
  analyze->add_option("--max-instructions", az.max_instructions, "best-response program size")
      ->capture_default_str();
  analyze->add_option("--max-counters", az.max_counters, "best-response counters")->capture_default_str();
  analyze_flags.attach(analyze);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (list) return cmd_list();
    if (*match) return cmd_match(match_flags, s1, s2);
    if (*pop) return cmd_population(pop_flags, spec_path);
    if (*analyze) return cmd_analyze(analyze_flags, az);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const SearchTooLarge& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }
}
