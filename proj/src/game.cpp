#include "cbpd/game.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <sstream>

namespace cbpd {

char to_char(Action a) {
  switch (a) {
    case Action::C: return 'C';
    case Action::D: return 'D';
    case Action::W: return 'W';
    case Action::O: return 'O';
  }
  return '?';
}

std::optional<Action> action_from_char(char c) {
  switch (c) {
    case 'C': return Action::C;
    case 'D': return Action::D;
    case 'W': return Action::W;
    case 'O': return Action::O;
    default: return std::nullopt;
  }
}

std::string_view to_string(GameMode m) {
  return m == GameMode::FTPD ? "FTPD" : "OPD";
}

std::optional<GameMode> mode_from_string(std::string_view s) {
  if (s == "FTPD" || s == "ftpd") return GameMode::FTPD;
  if (s == "OPD" || s == "opd") return GameMode::OPD;
  return std::nullopt;
}

PayoffTable PayoffTable::intro() { return PayoffTable{}; }

PayoffTable PayoffTable::epsilon() {
  PayoffTable t;
  t.H = Payoff(-1, 100);
  t.Q_hat = Payoff(-1, 100);
  return t;
}

bool action_legal(Action a, GameMode mode) {
  return a != Action::O || mode == GameMode::OPD;
}

PayoffOutcome payoff(Action a, Action b, const PayoffTable& table,
                     GameMode mode, SplitRule split) {
  if (!action_legal(a, mode) || !action_legal(b, mode)) {
    throw IllegalActionError("opt-out (O) is not a legal action in FTPD");
  }
  if (a == Action::O || b == Action::O) {
    if (split == SplitRule::Symmetric || (a == Action::O && b == Action::O)) {
      return {table.Q, table.Q, true};
    }
    if (a == Action::O) return {table.Q, table.Q_hat, true};
    return {table.Q_hat, table.Q, true};
  }
  if (a == Action::W && b == Action::W) return {table.H, table.H, false};
  if (a == Action::W || b == Action::W) return {Payoff{0}, Payoff{0}, false};
  if (a == Action::C && b == Action::C) return {table.R, table.R, false};
  if (a == Action::C) return {table.S, table.T, false};
  if (b == Action::C) return {table.T, table.S, false};
  return {table.P, table.P, false};
}

std::vector<std::string> validate_table(const PayoffTable& t, GameMode mode,
                                        bool opt_out_regime) {
  std::vector<std::string> out;
  if (!(t.T > t.R)) out.emplace_back("T > R");
  if (!(t.R > t.P)) out.emplace_back("R > P");
  if (!(t.P > t.S)) out.emplace_back("P > S");
  if (!(2 * t.R > t.T + t.S)) out.emplace_back("2R > T + S");
  if (!(t.H <= 0)) out.emplace_back("H <= 0");
  if (mode == GameMode::OPD && opt_out_regime) {
    if (!(t.P >= t.Q)) out.emplace_back("P >= Q");
    if (!(t.Q >= 0)) out.emplace_back("Q >= 0");
    if (!(t.Q_hat < 0)) out.emplace_back("Q_hat < 0");
  }
  return out;
}

namespace {

int ceil_log2(int n) {
  if (n <= 1) return 0;
  return std::bit_width(static_cast<unsigned>(n - 1));
}

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) {
    if (!s.empty()) s += "; ";
    s += p;
  }
  return s;
}

}  // namespace

std::vector<std::string> validate_config(const GameConfig& c) {
  std::vector<std::string> out;
  if (c.N < 1) out.emplace_back("N >= 1");
  if (c.k < 2) out.emplace_back("k >= 2");
  if (c.enforce_complexity_bound && c.N >= 1 && !(c.k < ceil_log2(c.N))) {
    out.emplace_back("k < ceil(log2 N)");
  }
  if (c.mode == GameMode::OPD) {
    if (c.t < 1) out.emplace_back("t >= 1");
    if (c.K < 1) out.emplace_back("K >= 1");
  }
  return out;
}

void require_valid(const GameConfig& config) {
  if (auto v = validate_config(config); !v.empty()) {
    throw ConfigError("invalid game config: " + join(v));
  }
}

void require_valid(const PayoffTable& table, GameMode mode) {
  if (auto v = validate_table(table, mode); !v.empty()) {
    throw ConfigError("invalid payoff table: " + join(v));
  }
}

Dominance DominanceReport::relation(Action dominated, Action by) const {
  for (const auto& e : entries) {
    if (e.dominated == dominated && e.by == by) return e.kind;
  }
  return Dominance::None;
}

bool DominanceReport::strictly_dominated(Action a) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) {
    return e.dominated == a && e.kind == Dominance::Strict;
  });
}

bool DominanceReport::survives(Action a) const {
  return std::find(surviving.begin(), surviving.end(), a) != surviving.end();
}

namespace {

Dominance compare_rows(Action row, Action by, const std::vector<Action>& cols,
                       const PayoffTable& table, GameMode mode,
                       SplitRule split) {
  bool all_ge = true;
  bool all_gt = true;
  for (Action col : cols) {
    const Payoff mine = payoff(row, col, table, mode, split).first;
    const Payoff theirs = payoff(by, col, table, mode, split).first;
    if (theirs < mine) all_ge = false;
    if (!(theirs > mine)) all_gt = false;
  }
  if (all_gt) return Dominance::Strict;
  if (all_ge) return Dominance::Weak;
  return Dominance::None;
}

}  // namespace

DominanceReport dominance_check(const PayoffTable& table, GameMode mode,
                                SplitRule split) {
  std::vector<Action> actions;
  for (Action a : kAllActions) {
    if (action_legal(a, mode)) actions.push_back(a);
  }

  DominanceReport report;
  for (Action row : actions) {
    for (Action by : actions) {
      if (row == by) continue;
      const Dominance d = compare_rows(row, by, actions, table, mode, split);
      if (d != Dominance::None) report.entries.push_back({row, by, d});
    }
  }

  // Iterated elimination; the stage game is symmetric, so removing a row also
  // removes the matching column. Two rows that weakly dominate each other are
  // payoff-equivalent and only the later one is dropped.
  std::vector<Action> alive = actions;
  bool changed = true;
  while (changed && alive.size() > 1) {
    changed = false;
    for (std::size_t i = 0; i < alive.size() && !changed; ++i) {
      for (std::size_t j = 0; j < alive.size(); ++j) {
        if (i == j) continue;
        const Dominance d =
            compare_rows(alive[i], alive[j], alive, table, mode, split);
        if (d == Dominance::None) continue;
        const bool mutual = compare_rows(alive[j], alive[i], alive, table,
                                         mode, split) != Dominance::None;
        if (mutual && i < j) continue;
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  report.surviving = std::move(alive);
  return report;
}

std::string to_string(const Payoff& p) {
  std::ostringstream os;
  os << p.numerator();
  if (p.denominator() != 1) os << '/' << p.denominator();
  return os.str();
}

Payoff parse_payoff(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ConfigError("not an exact rational: '" + std::string(text) + "'");
    }
    return v;
  };
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Payoff(parse_int(text));
  const std::int64_t num = parse_int(text.substr(0, slash));
  const std::int64_t den = parse_int(text.substr(slash + 1));
  if (den == 0) throw ConfigError("zero denominator in '" + std::string(text) + "'");
  return Payoff(num, den);
}

int bit_width_of(std::uint64_t value) {
  return value == 0 ? 1 : static_cast<int>(std::bit_width(value));
}

}  // namespace cbpd
