#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbpd/game.hpp"

namespace cbpd {

/// A key=value experiment file. Recognised keys: T R P S H Q Q_hat N mode t
/// K k seed instantaneous_rematch. Blank lines and "#" comments are ignored.
struct ConfigFile {
  GameConfig config;
  PayoffTable table;
};

/// Throws ConfigError with "line:col: message" on bad input. Keys that are
/// absent keep the values already in `base`.
ConfigFile parse_config(std::string_view text, const ConfigFile& base = {});
ConfigFile load_config(const std::filesystem::path& path, const ConfigFile& base = {});

/// key=value text that parse_config reads back to the same values.
std::string format_config(const ConfigFile& file);

/// "intro" or "epsilon".
std::optional<PayoffTable> table_preset(std::string_view name);

/// A preset name, or else a config file whose payoff keys are used.
PayoffTable load_table(std::string_view preset_or_path);

struct PopulationLine {
  int count = 0;
  std::string strategy;  // builtin name or .pdstrat path
  int line = 0;
};

/// Lines of `count x strategy`. Throws ConfigError on malformed lines.
std::vector<PopulationLine> parse_population_spec(std::string_view text);

/// FNV-1a 64-bit, as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace cbpd
