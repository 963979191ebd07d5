#include "cbpd/library.hpp"

#include <algorithm>

#include "cbpd/config.hpp"
#include "strategy_assets.hpp"

namespace cbpd {

namespace {

std::string asset(std::string_view name) {
  for (const auto& [n, text] : kStrategyAssets) {
    if (n == name) return std::string(text);
  }
  throw std::logic_error("missing strategy asset " + std::string(name));
}

std::vector<BuiltinInfo> make_catalog() {
  auto fixed = [](int c) { return [c](int) { return c; }; };
  std::vector<BuiltinInfo> out;
  out.push_back({"GRIM", asset("GRIM"), "cooperate until the opponent deviates, then defect forever",
                 false, fixed(compare_cost(kActionWidth))});
  out.push_back({"OFT", asset("OFT"), "Opt-for-Tat: cooperate, opt out after any non-C",
                 true, fixed(compare_cost(kActionWidth))});
  out.push_back({"TFT", asset("TFT"), "Tit-for-Tat: answer D with D, otherwise C",
                 false, fixed(compare_cost(kActionWidth))});
  out.push_back({"AllC", asset("AllC"), "always cooperate", false, fixed(0)});
  out.push_back({"AllD", asset("AllD"), "always defect", false, fixed(0)});
  out.push_back({"AllW", asset("AllW"), "always wait", false, fixed(0)});
  out.push_back({"CountingDefector", asset("CountingDefector"),
                 "cooperate while counting, defect at tick N-1",
                 false, [](int N) {
                   return compare_cost(bit_width_of(static_cast<std::uint64_t>(std::max(N, 0))));
                 }});
  return out;
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_catalog() {
  static const std::vector<BuiltinInfo> catalog = make_catalog();
  return catalog;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& b : builtin_catalog()) out.push_back(b.name);
  return out;
}

bool is_builtin(std::string_view name) {
  const auto& c = builtin_catalog();
  return std::any_of(c.begin(), c.end(), [&](const auto& b) { return b.name == name; });
}

const BuiltinInfo& builtin(std::string_view name) {
  for (const auto& b : builtin_catalog()) {
    if (b.name == name) return b;
  }
  throw UnknownStrategyError("unknown strategy '" + std::string(name) + "'");
}

StrategyProgram get(std::string_view name, const dsl::CompileOptions& options) {
  const auto& info = builtin(name);
  return dsl::compile(dsl::parse(info.source), options);
}

StrategyProgram get(std::string_view name, const GameConfig& config) {
  return get(name, dsl::CompileOptions{config.mode, config.N});
}

StrategyProgram load_strategy(std::string_view name_or_path,
                              const dsl::CompileOptions& options) {
  if (is_builtin(name_or_path)) return get(name_or_path, options);
  const std::string path(name_or_path);
  std::string text;
  try {
    text = read_file(path);
  } catch (const ConfigError&) {
    throw std::runtime_error(path + ":1:1: no such builtin or file");
  }
  try {
    return dsl::compile(dsl::parse(text), options);
  } catch (const dsl::DslError& e) {
    throw std::runtime_error(path + ":" + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ":1:1: " + e.what());
  }
}

}  // namespace cbpd
