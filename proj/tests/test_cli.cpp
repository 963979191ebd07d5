#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CBPD_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cbpd_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("help and strategy list") {
  auto r = cli("--help");
  CHECK(r.code == 0);
  CHECK(r.out.find("population") != std::string::npos);
  r = cli("--list-strategies");
  CHECK(r.code == 0);
  for (const char* name : {"GRIM", "OFT", "TFT", "AllC", "AllD", "AllW", "CountingDefector"}) {
    CHECK(r.out.find(name) != std::string::npos);
  }
}

TEST_CASE("match prints both payoffs and writes a trace") {
  auto dir = scratch("match");
  auto r = cli("match CountingDefector GRIM --N 10 --out " + quoted(dir));
  CHECK(r.code == 0);
  CHECK(r.out == "7 7\n");
  const auto csv = slurp(dir / "match.csv");
  CHECK(csv.rfind("# spec_hash=", 0) == 0);
  CHECK(csv.find("seed=1\n") != std::string::npos);
  CHECK(csv.find("tick,a1,a2,pay1,pay2,cost1,cost2\n") != std::string::npos);
  CHECK(csv.find("\n9,W,C,0,0,2,2\n10,D,D,-1,-1,2,1\n") != std::string::npos);
}

TEST_CASE("strategy files are accepted") {
  auto dir = scratch("file");
  std::ofstream(dir / "mine.pdstrat") << "strategy Mine\nalways play D\n";
  auto r = cli("match " + quoted(dir / "mine.pdstrat") + " AllC --N 5 --out " + quoted(dir));
  CHECK(r.code == 0);
  CHECK(r.out == "10 -10\n");
}

TEST_CASE("usage and config errors exit with 2") {
  CHECK(cli("match GRIM").code == 2);
  CHECK(cli("match GRIM Nobody --N 10").code == 2);
  CHECK(cli("match GRIM GRIM --N 4").code == 2);
  CHECK(cli("match GRIM GRIM --N 4 --relax-bound").code == 0);
  CHECK(cli("match GRIM GRIM --table nowhere.conf").code == 2);
  CHECK(cli("match GRIM GRIM --mode XYZ").code == 2);
  CHECK(cli("frobnicate").code == 2);
  auto dir = scratch("bad");
  std::ofstream(dir / "bad.pdstrat") << "strategy Bad\nalways play Q\n";
  auto r = cli("match " + quoted(dir / "bad.pdstrat") + " GRIM");
  CHECK(r.code == 2);
  CHECK(r.out.find("bad.pdstrat:2:") != std::string::npos);
  std::ofstream(dir / "bad.conf") << "N=10\nwhat=1\n";
  r = cli("match GRIM GRIM --config " + quoted(dir / "bad.conf"));
  CHECK(r.code == 2);
  CHECK(r.out.find("bad.conf:2:1:") != std::string::npos);
}

TEST_CASE("config file and flags") {
  auto dir = scratch("config");
  std::ofstream(dir / "exp.conf") << "N=20\nT=3\nR=2\nP=1\nS=0\n";
  auto r = cli("match GRIM GRIM --config " + quoted(dir / "exp.conf") + " --out " + quoted(dir));
  CHECK(r.code == 0);
  CHECK(r.out == "40 40\n");
  r = cli("match GRIM GRIM --config " + quoted(dir / "exp.conf") + " --N 30 --out " + quoted(dir));
  CHECK(r.out == "60 60\n");
}

TEST_CASE("population runs are reproducible") {
  auto dir = scratch("population");
  std::ofstream(dir / "spec.txt") << "# mix\n2 x OFT\n1 x AllD\n1 x GRIM\n";
  auto a = cli("population " + quoted(dir / "spec.txt") + " --N 30 --seed 5 --out " + quoted(dir / "a"));
  auto b = cli("population " + quoted(dir / "spec.txt") + " --N 30 --seed 5 --out " + quoted(dir / "b"));
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(slurp(dir / "a" / "population.csv") == slurp(dir / "b" / "population.csv"));
  CHECK(slurp(dir / "a" / "population_summary.csv") == slurp(dir / "b" / "population_summary.csv"));
  CHECK(slurp(dir / "a" / "population.csv").find("seed=5") != std::string::npos);
  auto c = cli("population " + quoted(dir / "spec.txt") + " --N 30 --seed 6 --out " + quoted(dir / "c"));
  CHECK(slurp(dir / "c" / "population.csv") != slurp(dir / "a" / "population.csv"));
}

TEST_CASE("population spec errors") {
  auto dir = scratch("popbad");
  std::ofstream(dir / "odd.txt") << "3 x OFT\n";
  CHECK(cli("population " + quoted(dir / "odd.txt")).code == 2);
  std::ofstream(dir / "junk.txt") << "OFT OFT\n";
  CHECK(cli("population " + quoted(dir / "junk.txt")).code == 2);
  CHECK(cli("population " + quoted(dir / "missing.txt")).code == 2);
}

TEST_CASE("analyze prints the OFT constant") {
  auto r = cli("analyze --oft-constant --q 0.5 --r 0");
  CHECK(r.code == 0);
  CHECK(r.out == "6\n");
  CHECK(cli("analyze --oft-constant --q 0 --r 0").code == 2);
}

TEST_CASE("analyze sweep writes a table") {
  auto dir = scratch("analyze");
  auto r = cli("analyze OFT --sweep-N 20:30:10 --q 0.5 --trials 20 --max-instructions 2 --out " + quoted(dir));
  CHECK(r.code == 0);
  CHECK(r.out.find("N,CR") != std::string::npos);
  const auto csv = slurp(dir / "analysis.csv");
  CHECK(csv.rfind("# spec_hash=", 0) == 0);
  CHECK(csv.find("\nOFT,20,") != std::string::npos);
  CHECK(csv.find("\nOFT,30,") != std::string::npos);
  CHECK(cli("analyze OFT --sweep-N 30:20:10").code == 2);
}
