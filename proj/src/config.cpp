#include "cbpd/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cbpd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(int line, int col, const std::string& msg) {
  throw ConfigError(std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

template <typename Int>
Int parse_int(std::string_view v, int line, int col) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
    fail(line, col, "expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view v, int line, int col) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  fail(line, col, "expected a boolean, got '" + std::string(v) + "'");
}

}  // namespace

ConfigFile parse_config(std::string_view text, const ConfigFile& base) {
  ConfigFile out = base;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, 1, "expected key=value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const int col = static_cast<int>(eq) + 2;

    auto rational = [&](Payoff& slot) {
      try {
        slot = parse_payoff(value);
      } catch (const ConfigError& e) {
        fail(line_no, col, e.what());
      }
    };
    if (key == "T") rational(out.table.T);
    else if (key == "R") rational(out.table.R);
    else if (key == "P") rational(out.table.P);
    else if (key == "S") rational(out.table.S);
    else if (key == "H") rational(out.table.H);
    else if (key == "Q") rational(out.table.Q);
    else if (key == "Q_hat") rational(out.table.Q_hat);
    else if (key == "N") out.config.N = parse_int<int>(value, line_no, col);
    else if (key == "t") out.config.t = parse_int<int>(value, line_no, col);
    else if (key == "K") out.config.K = parse_int<int>(value, line_no, col);
    else if (key == "k") out.config.k = parse_int<int>(value, line_no, col);
    else if (key == "seed") out.config.seed = parse_int<std::uint64_t>(value, line_no, col);
    else if (key == "instantaneous_rematch") out.config.instantaneous_rematch = parse_bool(value, line_no, col);
    else if (key == "mode") {
      auto m = mode_from_string(value);
      if (!m) fail(line_no, col, "mode must be FTPD or OPD");
      out.config.mode = *m;
    } else {
      fail(line_no, 1, "unknown key '" + std::string(key) + "'");
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ":1:1: cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ConfigFile load_config(const std::filesystem::path& path, const ConfigFile& base) {
  try {
    return parse_config(read_file(path), base);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw ConfigError(path.string() + ":" + msg);
  }
}

std::string format_config(const ConfigFile& f) {
  std::ostringstream os;
  const auto& t = f.table;
  const auto& c = f.config;
  os << "T=" << to_string(t.T) << "\nR=" << to_string(t.R) << "\nP=" << to_string(t.P)
     << "\nS=" << to_string(t.S) << "\nH=" << to_string(t.H) << "\nQ=" << to_string(t.Q)
     << "\nQ_hat=" << to_string(t.Q_hat) << "\nN=" << c.N << "\nmode=" << to_string(c.mode)
     << "\nt=" << c.t << "\nK=" << c.K << "\nk=" << c.k << "\nseed=" << c.seed
     << "\ninstantaneous_rematch=" << (c.instantaneous_rematch ? "true" : "false") << '\n';
  return os.str();
}

std::optional<PayoffTable> table_preset(std::string_view name) {
  if (name == "intro") return PayoffTable::intro();
  if (name == "epsilon") return PayoffTable::epsilon();
  return std::nullopt;
}

PayoffTable load_table(std::string_view preset_or_path) {
  if (auto t = table_preset(preset_or_path)) return *t;
  return load_config(std::filesystem::path(std::string(preset_or_path))).table;
}

std::vector<PopulationLine> parse_population_spec(std::string_view text) {
  std::vector<PopulationLine> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream fields{std::string(line)};
    std::string count, times, strategy, extra;
    fields >> count >> times >> strategy;
    if (times != "x" || strategy.empty() || (fields >> extra)) {
      fail(line_no, 1, "expected 'count x strategy'");
    }
    PopulationLine p;
    p.count = parse_int<int>(count, line_no, 1);
    if (p.count < 0) fail(line_no, 1, "count must be non-negative");
    p.strategy = strategy;
    p.line = line_no;
    out.push_back(std::move(p));
  }
  return out;
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cbpd
