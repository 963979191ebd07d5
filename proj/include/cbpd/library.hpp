#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cbpd/dsl.hpp"
#include "cbpd/game.hpp"
#include "cbpd/vm.hpp"

namespace cbpd {

struct BuiltinInfo {
  std::string name;
  std::string source;  // .pdstrat text
  std::string summary;
  /// Modes the strategy is legal in.
  bool opd_only = false;
  /// Documented worst-case XOR-units per tick for horizon N.
  std::function<int(int N)> worst_case;
};

class UnknownStrategyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::vector<BuiltinInfo>& builtin_catalog();
std::vector<std::string> builtin_names();
const BuiltinInfo& builtin(std::string_view name);
bool is_builtin(std::string_view name);

/// Compiled builtin for the config's horizon and mode.
StrategyProgram get(std::string_view name, const GameConfig& config = {});
StrategyProgram get(std::string_view name, const dsl::CompileOptions& options);

/// A builtin name, or a path to a .pdstrat file. File diagnostics are thrown
/// as std::runtime_error carrying "file:line:col: message".
StrategyProgram load_strategy(std::string_view name_or_path,
                              const dsl::CompileOptions& options);

}  // namespace cbpd
