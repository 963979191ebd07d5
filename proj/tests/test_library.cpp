#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "cbpd/library.hpp"

using namespace cbpd;

namespace {

dsl::CompileOptions options_for(const BuiltinInfo& info, int N) {
  dsl::CompileOptions o;
  o.N = N;
  o.mode = info.opd_only ? GameMode::OPD : GameMode::FTPD;
  return o;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("catalog holds the standard strategies") {
  for (const char* name : {"GRIM", "OFT", "TFT", "AllC", "AllD", "AllW", "CountingDefector"}) {
    CHECK(is_builtin(name));
  }
  CHECK_FALSE(is_builtin("Pavlov"));
  CHECK(builtin_names().size() == builtin_catalog().size());
  CHECK(builtin("OFT").opd_only);
  CHECK_FALSE(builtin("GRIM").opd_only);
}

TEST_CASE("every entry compiles and its cost matches the documented one") {
  for (const auto& info : builtin_catalog()) {
    for (int N : {5, 10, 64, 1000}) {
      auto p = get(info.name, options_for(info, N));
      CHECK(validate_program(p).empty());
      CHECK_MESSAGE(p.worst_case_cost == info.worst_case(N), info.name << " N=" << N);
      CHECK(p.name == info.name);
    }
  }
}

TEST_CASE("documented behaviour") {
  Observation first;
  first.horizon = 10;
  auto grim = get("GRIM");
  auto s = reset(grim);
  CHECK(tick(s, grim, first, 2).action == Action::C);

  GameConfig c;
  c.mode = GameMode::OPD;
  auto oft = get("OFT", c);
  auto o = reset(oft);
  Observation saw_d = first;
  saw_d.opp_last = Action::D;
  saw_d.own_last = Action::C;
  CHECK(tick(o, oft, saw_d, 2).action == Action::O);
  auto o2 = reset(oft);
  Observation saw_c = saw_d;
  saw_c.opp_last = Action::C;
  CHECK(tick(o2, oft, saw_c, 2).action == Action::C);

  GameConfig big;
  big.N = 1000;
  CHECK(get("CountingDefector", big).worst_case_cost == 10);
}

TEST_CASE("OFT is refused in FTPD") {
  CHECK_THROWS_AS(get("OFT"), std::invalid_argument);
}

TEST_CASE("unknown names") {
  CHECK_THROWS_AS(get("nope"), UnknownStrategyError);
  CHECK_THROWS_AS(builtin("nope"), UnknownStrategyError);
}

TEST_CASE("load_strategy reads builtins and files") {
  dsl::CompileOptions o;
  CHECK(load_strategy("TFT", o) == get("TFT", o));
  auto path = temp_file("cbpd_test_ok.pdstrat", "strategy Mine\nalways play D\n");
  auto p = load_strategy(path.string(), o);
  CHECK(p.name == "Mine");
  CHECK(p.code.at(0).action == Action::D);
}

TEST_CASE("load_strategy diagnostics name the file and position") {
  dsl::CompileOptions o;
  auto path = temp_file("cbpd_test_bad.pdstrat", "strategy Bad\nalways play Q\n");
  try {
    load_strategy(path.string(), o);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).rfind(path.string() + ":2:", 0) == 0);
  }
  try {
    load_strategy("/no/such/file.pdstrat", o);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/no/such/file.pdstrat:1:1:") == 0);
  }
}
