#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cbpd/library.hpp"
#include "cbpd/vm.hpp"
#include "random_program.hpp"

using namespace cbpd;

namespace {

Observation first_tick(int N) {
  Observation o;
  o.horizon = N;
  return o;
}

Observation after(Action opp, Action own, int N) {
  Observation o;
  o.horizon = N;
  o.opp_last = opp;
  o.own_last = own;
  return o;
}

StrategyProgram one_compare(Operand lhs, Operand rhs, CmpOp cmp, int widths = 0) {
  StrategyProgram p;
  p.name = "probe";
  if (widths > 0) {
    p.register_widths = {widths};
    p.register_names = {"x"};
  }
  p.code = {Instruction::compare(cmp, lhs, rhs, 1, 2), Instruction::emit(Action::D),
            Instruction::emit(Action::C)};
  return p;
}

}  // namespace

TEST_CASE("compare cost is the operand width") {
  CHECK(compare_cost(2) == 2);
  CHECK(compare_cost(bit_width_of(1000)) == 10);
  CHECK(compare_cost(1) == 1);
}

TEST_CASE("reset gives a fresh state") {
  const auto grim = get("GRIM");
  CHECK(reset(grim) == reset(grim));
  auto s = reset(grim);
  CHECK(s.pc == 0);
  CHECK_FALSE(s.pending.has_value());
  for (auto r : s.registers) CHECK(r == 0u);
}

TEST_CASE("GRIM opens with C, AllD with D") {
  auto grim = get("GRIM");
  auto s = reset(grim);
  CHECK(tick(s, grim, first_tick(10), 2).action == Action::C);
  auto alld = get("AllD");
  auto t = reset(alld);
  auto r = tick(t, alld, first_tick(10), 2);
  CHECK(r.action == Action::D);
  CHECK(r.cost == 0);
}

TEST_CASE("GRIM is sticky after a defection") {
  auto grim = get("GRIM");
  auto s = reset(grim);
  CHECK(tick(s, grim, first_tick(10), 2).action == Action::C);
  CHECK(tick(s, grim, after(Action::D, Action::C, 10), 2).action == Action::D);
  CHECK(tick(s, grim, after(Action::C, Action::D, 10), 2).action == Action::D);
  CHECK(tick(s, grim, after(Action::C, Action::D, 10), 2).action == Action::D);
}

TEST_CASE("a compare wider than the budget suspends, records W, then resumes") {
  // x (5 bits) == 0 holds, so it costs the full 5 units: 2 + 2 + 1 at k = 2.
  auto p = one_compare(Operand::reg(0), Operand::constant(0), CmpOp::Eq, 5);
  auto s = reset(p);
  auto a = tick(s, p, first_tick(64), 2);
  CHECK(a.suspended);
  CHECK(a.action == Action::W);
  CHECK(a.cost == 2);
  auto b = tick(s, p, first_tick(64), 2);
  CHECK(b.suspended);
  CHECK(b.action == Action::W);
  auto c = tick(s, p, first_tick(64), 2);
  CHECK_FALSE(c.suspended);
  CHECK(c.action == Action::D);
  CHECK(c.cost == 1);
}

TEST_CASE("equality refuted by one bit, ordering always full width") {
  auto ne = one_compare(Operand::reg(0), Operand::constant(9), CmpOp::Eq, 5);
  auto s = reset(ne);
  auto r = tick(s, ne, first_tick(64), 2);
  CHECK(r.action == Action::C);
  CHECK(r.cost == 1);

  auto lt = one_compare(Operand::reg(0), Operand::constant(9), CmpOp::Lt, 5);
  auto u = reset(lt);
  CHECK(tick(u, lt, first_tick(64), 8).cost == 5);
}

TEST_CASE("compare against the first-tick observation is false and cheap") {
  auto p = one_compare(Operand::field(ObsField::OppLast), Operand::action(Action::C), CmpOp::Ne);
  auto s = reset(p);
  auto r = tick(s, p, first_tick(10), 2);
  CHECK(r.action == Action::C);
  CHECK(r.cost == 1);
}

TEST_CASE("registers wrap at their width") {
  StrategyProgram p;
  p.register_widths = {2};
  p.register_names = {"c"};
  p.code = {Instruction::increment(0), Instruction::emit(Action::C)};
  auto s = reset(p);
  for (int i = 0; i < 5; ++i) tick(s, p, first_tick(10), 2);
  CHECK(s.registers[0] == 1u);
}

TEST_CASE("falling off the end and HALT record W") {
  StrategyProgram p;
  p.code = {Instruction::halt()};
  auto s = reset(p);
  auto r = tick(s, p, first_tick(10), 2);
  CHECK(r.action == Action::W);
  CHECK(r.reached_end);

  StrategyProgram empty;
  auto e = reset(empty);
  CHECK(tick(e, empty, first_tick(10), 2).action == Action::W);
}

TEST_CASE("a bookkeeping loop faults and the player waits forever") {
  StrategyProgram p;
  p.code = {Instruction::jump(0)};
  auto s = reset(p);
  auto r = tick(s, p, first_tick(10), 2);
  CHECK(r.faulted);
  CHECK(r.action == Action::W);
  CHECK(s.faulted);
  CHECK(tick(s, p, first_tick(10), 2).action == Action::W);
}

TEST_CASE("validate_program catches bad targets and registers") {
  StrategyProgram p;
  p.code = {Instruction::jump(7), Instruction::increment(0)};
  auto v = validate_program(p);
  CHECK(v.size() == 2);
  CHECK(validate_program(get("GRIM")).empty());
}

TEST_CASE("budget law and wait-by-default on random programs") {
  std::mt19937_64 g(2024);
  for (int prog = 0; prog < 3000; ++prog) {
    const int N = std::uniform_int_distribution<int>(2, 300)(g);
    const int k = std::uniform_int_distribution<int>(2, 6)(g);
    auto p = gen::program(g, N);
    auto s = reset(p);
    for (int t = 0; t < 12; ++t) {
      auto obs = gen::observation(g, N, t == 0);
      auto r = tick(s, p, obs, k);
      CHECK(r.cost <= k);
      CHECK(r.cost >= 0);
      if (r.suspended || r.faulted || r.reached_end) CHECK(r.action == Action::W);
      if (r.suspended) CHECK(s.pending.has_value());
    }
  }
}

TEST_CASE("ticks are deterministic") {
  std::mt19937_64 g(99);
  for (int prog = 0; prog < 500; ++prog) {
    auto p = gen::program(g, 40);
    std::vector<Observation> obs;
    for (int t = 0; t < 10; ++t) obs.push_back(gen::observation(g, 40, t == 0));
    auto a = reset(p), b = reset(p);
    for (const auto& o : obs) {
      auto ra = tick(a, p, o, 3);
      auto rb = tick(b, p, o, 3);
      CHECK(ra.action == rb.action);
      CHECK(ra.cost == rb.cost);
    }
    CHECK(a == b);
  }
}

TEST_CASE("GRIM against GRIM cooperates on every tick for any k >= 2") {
  for (int N : {2, 3, 10, 77, 500}) {
    for (int k : {2, 3, 5}) {
      auto grim = get("GRIM", GameConfig{.N = N});
      auto a = reset(grim), b = reset(grim);
      Observation oa = first_tick(N), ob = first_tick(N);
      for (int t = 0; t < N; ++t) {
        auto ra = tick(a, grim, oa, k);
        auto rb = tick(b, grim, ob, k);
        REQUIRE(ra.action == Action::C);
        REQUIRE(rb.action == Action::C);
        oa = after(rb.action, ra.action, N);
        ob = after(ra.action, rb.action, N);
      }
    }
  }
}

TEST_CASE("counting strategies must wait somewhere when k < log2 N") {
  for (const auto& info : builtin_catalog()) {
    for (int N : {8, 16, 33, 100, 1000}) {
      GameConfig c;
      c.N = N;
      c.mode = info.opd_only ? GameMode::OPD : GameMode::FTPD;
      auto p = get(info.name, c);
      if (p.register_widths.empty()) continue;
      // Only counters as wide as the horizon are counting strategies.
      bool counting = false;
      for (int w : p.register_widths) counting |= w >= bit_width_of(static_cast<std::uint64_t>(N - 1));
      if (!counting) continue;
      const int k = std::max(2, bit_width_of(static_cast<std::uint64_t>(N)) - 2);
      auto s = reset(p);
      bool waited = false;
      Observation o = first_tick(N);
      for (int t = 0; t < N; ++t) {
        auto r = tick(s, p, o, k);
        waited |= r.action == Action::W;
        o = after(Action::C, r.action, N);
      }
      CHECK_MESSAGE(waited, info.name << " N=" << N);
    }
  }
}

TEST_CASE("worst-case tick cost follows the longest compare path") {
  CHECK(worst_case_tick_cost(get("GRIM"), 10) == 2);
  CHECK(worst_case_tick_cost(get("AllC"), 10) == 0);
  GameConfig c;
  c.N = 1000;
  CHECK(worst_case_tick_cost(get("CountingDefector", c), 1000) == 10);
}

TEST_CASE("debug output") {
  CHECK_FALSE(disassemble(get("GRIM")).empty());
  TickResult r;
  r.pc = 3;
  r.cost = 2;
  r.action = Action::D;
  CHECK(format_trace_line(r).find('D') != std::string::npos);
}
