#include "cbpd/opd.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace cbpd {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over (seed, stream).
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string_view to_string(OpdEventKind k) {
  switch (k) {
    case OpdEventKind::Play: return "play";
    case OpdEventKind::Split: return "split";
    case OpdEventKind::Rematch: return "rematch";
    case OpdEventKind::Unpaired: return "unpaired";
  }
  return "?";
}

namespace {

struct Seat {
  const StrategyProgram* program = nullptr;
  VmState vm;
  std::optional<Action> opp_last, own_last;
  Payoff last_payoff{0};

  Observation observation(int N) const {
    Observation o;
    o.opp_last = opp_last;
    o.own_last = own_last;
    o.last_payoff = last_payoff;
    o.horizon = N;
    return o;
  }

  /// New partner: observations are forgotten, memory is kept, and any
  /// half-finished compare about the old partner is dropped.
  void repair() {
    opp_last.reset();
    own_last.reset();
    last_payoff = 0;
    vm.pending.reset();
    vm.pc = 0;
    vm.emitted.reset();
  }
};

struct PairOutcome {
  Action a = Action::W, b = Action::W;
  PayoffOutcome pay;
  bool a_end = false, b_end = false;
};

PairOutcome play_pair(Seat& x, Seat& y, const GameConfig& config, const PayoffTable& table) {
  const Observation ox = x.observation(config.N);
  const Observation oy = y.observation(config.N);
  const VmState before_x = x.vm;
  const VmState before_y = y.vm;
  const TickResult tx = tick(x.vm, *x.program, ox, config.k);
  const TickResult ty = tick(y.vm, *y.program, oy, config.k);
  PairOutcome out;
  out.a = tx.action;
  out.b = ty.action;
  out.a_end = tx.reached_end;
  out.b_end = ty.reached_end;

  if (config.instantaneous_rematch) {
    // A player whose partner waits this tick may see the wait as it happens
    // and walk away in the same tick.
    auto react = [&](Seat& s, const VmState& before, Observation o, Action& mine, bool& end) {
      VmState trial = before;
      o.opp_last = Action::W;
      const TickResult t = tick(trial, *s.program, o, config.k);
      if (t.action == Action::O) {
        s.vm = std::move(trial);
        mine = Action::O;
      }
      end = end || t.reached_end;
    };
    const Action a0 = out.a, b0 = out.b;
    if (b0 == Action::W && a0 != Action::O) react(x, before_x, ox, out.a, out.a_end);
    if (a0 == Action::W && b0 != Action::O) react(y, before_y, oy, out.b, out.b_end);
  }

  out.pay = payoff(out.a, out.b, table, GameMode::OPD, config.split);
  if (!out.pay.split) {
    x.opp_last = out.b;
    x.own_last = out.a;
    x.last_payoff = out.pay.first;
    y.opp_last = out.a;
    y.own_last = out.b;
    y.last_payoff = out.pay.second;
  }
  return out;
}

void require_opd(const GameConfig& config, const PayoffTable& table) {
  if (config.mode != GameMode::OPD) throw ConfigError("population runs require OPD mode");
  require_valid(config);
  require_valid(table, GameMode::OPD);
}

}  // namespace

std::vector<std::pair<int, int>> rematch(std::vector<int>& pool, Rng& rng) {
  std::sort(pool.begin(), pool.end());
  for (std::size_t i = pool.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(pool[i - 1], pool[j]);
  }
  std::vector<std::pair<int, int>> pairs;
  std::size_t i = 0;
  for (; i + 1 < pool.size(); i += 2) {
    pairs.emplace_back(std::min(pool[i], pool[i + 1]), std::max(pool[i], pool[i + 1]));
  }
  std::vector<int> left(pool.begin() + static_cast<std::ptrdiff_t>(i), pool.end());
  pool = std::move(left);
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

bool rematch_event_after(int tick, const GameConfig& config) {
  return config.instantaneous_rematch || (tick + 1) % std::max(config.t, 1) == 0;
}

double expected_rematch_delay(const GameConfig& config) {
  if (config.instantaneous_rematch) return 0.0;
  return (std::max(config.t, 1) - 1) / 2.0;
}

OpdTrace run_population(const std::vector<PopulationMember>& members,
                        const GameConfig& config, const PayoffTable& table,
                        const OpdOptions& options) {
  require_opd(config, table);
  std::vector<Seat> seats;
  OpdTrace trace;
  for (const auto& m : members) {
    for (int c = 0; c < m.count; ++c) {
      Seat s;
      s.program = &m.program;
      s.vm = reset(m.program);
      seats.push_back(std::move(s));
      PlayerSummary p;
      p.id = static_cast<int>(trace.players.size());
      p.strategy = m.program.name;
      trace.players.push_back(p);
    }
  }
  const int n = static_cast<int>(seats.size());
  if (n != 2 * config.K) {
    throw ConfigError("population has " + std::to_string(n) + " players, expected 2K = " +
                      std::to_string(2 * config.K));
  }

  Rng rng(config.seed);
  std::vector<int> partner(static_cast<std::size_t>(n), -1);
  std::vector<int> pool;
  auto pair_up = [&](const std::vector<std::pair<int, int>>& pairs, int tick) {
    for (const auto& [a, b] : pairs) {
      partner[static_cast<std::size_t>(a)] = b;
      partner[static_cast<std::size_t>(b)] = a;
      seats[static_cast<std::size_t>(a)].repair();
      seats[static_cast<std::size_t>(b)].repair();
      if (options.record_events) {
        trace.events.push_back({tick, OpdEventKind::Rematch, a, b, std::nullopt, Payoff{0}});
        trace.events.push_back({tick, OpdEventKind::Rematch, b, a, std::nullopt, Payoff{0}});
      }
    }
  };

  if (options.initial_pairing) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& [a, b] : *options.initial_pairing) {
      if (a < 0 || b < 0 || a >= n || b >= n || a == b || seen[a] || seen[b]) {
        throw ConfigError("initial pairing is not a matching of player ids");
      }
      seen[a] = seen[b] = true;
    }
    for (int i = 0; i < n; ++i) {
      if (!seen[static_cast<std::size_t>(i)]) pool.push_back(i);
    }
    pair_up(*options.initial_pairing, 0);
  } else {
    pool.resize(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    pair_up(rematch(pool, rng), 0);
  }

  for (int tick = 0; tick < config.N; ++tick) {
    const int label = tick + 1;
    for (int a = 0; a < n; ++a) {
      const int b = partner[static_cast<std::size_t>(a)];
      if (b < a) continue;  // unpaired, or handled from the lower id
      auto& sa = seats[static_cast<std::size_t>(a)];
      auto& sb = seats[static_cast<std::size_t>(b)];
      const PairOutcome out = play_pair(sa, sb, config, table);
      auto& pa = trace.players[static_cast<std::size_t>(a)];
      auto& pb = trace.players[static_cast<std::size_t>(b)];
      pa.payoff += out.pay.first;
      pb.payoff += out.pay.second;
      if (out.a == Action::O) ++pa.opt_outs;
      if (out.b == Action::O) ++pb.opt_outs;
      if (options.record_events) {
        trace.events.push_back({label, OpdEventKind::Play, a, b, out.a, out.pay.first});
        trace.events.push_back({label, OpdEventKind::Play, b, a, out.b, out.pay.second});
      }
      if (out.pay.split) {
        ++trace.splits;
        ++pa.splits;
        ++pb.splits;
        partner[static_cast<std::size_t>(a)] = -1;
        partner[static_cast<std::size_t>(b)] = -1;
        if (options.record_events) {
          trace.events.push_back({label, OpdEventKind::Split, a, b, std::nullopt, Payoff{0}});
          trace.events.push_back({label, OpdEventKind::Split, b, a, std::nullopt, Payoff{0}});
        }
      }
    }
    // Players who were in the pool for this whole tick.
    for (int p : pool) {
      const Payoff pay = config.unpaired_pays_q_hat ? table.Q_hat : Payoff{0};
      auto& ps = trace.players[static_cast<std::size_t>(p)];
      ps.payoff += pay;
      ++ps.unpaired_ticks;
      if (options.record_events) {
        trace.events.push_back({label, OpdEventKind::Unpaired, p, -1, std::nullopt, pay});
      }
    }
    for (int i = 0; i < n; ++i) {
      if (partner[static_cast<std::size_t>(i)] < 0 &&
          std::find(pool.begin(), pool.end(), i) == pool.end()) {
        pool.push_back(i);
      }
    }
    if (tick + 1 < config.N && rematch_event_after(tick, config) && pool.size() >= 2) {
      pair_up(rematch(pool, rng), label);
    }
  }
  return trace;
}

namespace {

std::string payoff_field(const OpdEvent& e) {
  return e.kind == OpdEventKind::Play || e.kind == OpdEventKind::Unpaired ? to_string(e.payoff)
                                                                          : std::string{};
}

}  // namespace

std::string population_csv(const OpdTrace& trace, const std::string& header_comment) {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "tick,event,player,partner,action,payoff\n";
  for (const auto& e : trace.events) {
    os << e.tick << ',' << to_string(e.kind) << ',' << e.player << ',';
    if (e.partner >= 0) os << e.partner;
    os << ',';
    if (e.action) os << to_char(*e.action);
    os << ',' << payoff_field(e) << '\n';
  }
  return os.str();
}

std::string population_summary_csv(const OpdTrace& trace, const std::string& header_comment) {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "player,strategy,payoff,opt_outs,splits,unpaired_ticks\n";
  for (const auto& p : trace.players) {
    os << p.id << ',' << p.strategy << ',' << to_string(p.payoff) << ',' << p.opt_outs << ','
       << p.splits << ',' << p.unpaired_ticks << '\n';
  }
  return os.str();
}

FocalResult simulate_focal(const StrategyProgram& focal, const Environment& env,
                           const GameConfig& config, const PayoffTable& table,
                           std::uint64_t seed, FirstPartner first) {
  if (env.others.empty() && env.q < 1.0) {
    throw ConfigError("environment '" + env.name + "' needs at least one non-cooperative type");
  }
  Rng draws(derive_seed(seed, 0));
  Rng opening(derive_seed(seed, 1));
  auto draw = [&](Rng& rng) -> const StrategyProgram& {
    if (env.others.empty() || rng.bernoulli(env.q)) return env.cooperative;
    return env.others[static_cast<std::size_t>(rng.below(env.others.size()))];
  };

  FocalResult result;
  Seat me;
  me.program = &focal;
  me.vm = reset(focal);
  Seat them;
  auto meet = [&](const StrategyProgram& p) {
    them = Seat{};
    them.program = &p;
    them.vm = reset(p);
    me.repair();
    ++result.partners;
  };

  switch (first) {
    case FirstPartner::Random: meet(draw(opening)); break;
    case FirstPartner::Cooperative: meet(env.cooperative); break;
    case FirstPartner::Other:
      meet(env.others.empty() ? env.cooperative
                              : env.others[static_cast<std::size_t>(opening.below(env.others.size()))]);
      break;
  }

  bool paired = true;
  for (int tick = 0; tick < config.N; ++tick) {
    if (paired) {
      const PairOutcome out = play_pair(me, them, config, table);
      result.payoff += out.pay.first;
      result.reached_end = result.reached_end || out.a_end;
      if (out.a == Action::O) ++result.opt_outs;
      if (out.pay.split) paired = false;
    } else {
      ++result.unpaired_ticks;
      if (config.unpaired_pays_q_hat) result.payoff += table.Q_hat;
    }
    if (!paired && tick + 1 < config.N && rematch_event_after(tick, config)) {
      meet(draw(draws));
      paired = true;
    }
  }
  return result;
}

}  // namespace cbpd
