#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Case {
  std::string command;
  std::vector<std::string> overrides;
};

void PrintTo(const Case& c, std::ostream* os) { *os << c.command; }

const std::vector<Case>& cases() {
  static const std::vector<Case> c{
      {"tuning-curve", {"tuning.temperature_step_c=0.5", "tuning.wavelength_step_nm=0.05"}},
      {"gain", {}},
      {"spectrum", {}},
      {"g1", {"coherence.half_span_ghz=600", "coherence.max_delay_ps=1000"}},
      {"wavepacket", {}},
      {"g3-sweep", {"sweep.pulses_per_point=200000", "sweep.powers_mw=[5, 20, 65]"}},
      {"qd-scan", {}},
      {"match", {"match.target_lifetime_ps=1000"}},
  };
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spdclab_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

int run(const std::string& command, const fs::path& out, const std::vector<std::string>& overrides,
        const std::string& extra = "") {
  std::string cmd = std::string(SPDCLAB_CLI_PATH) + " " + command + " -c " + SPDCLAB_DEFAULT_CONFIG + " -o '" +
                    out.string() + "' " + extra;
  for (const auto& o : overrides) cmd += " --override '" + o + "'";
  cmd += " 2>'" + out.string() + ".stderr'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream f(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliCommand : public ::testing::TestWithParam<Case> {};

}  // namespace

TEST_P(CliCommand, OutputIsDeterministicAcrossRunsAndThreads) {
  const auto& c = GetParam();
  const auto a = scratch(c.command + "_a"), b = scratch(c.command + "_b"), t = scratch(c.command + "_t");
  ASSERT_EQ(run(c.command, a, c.overrides, "-j 1"), 0) << slurp(a.string() + ".stderr");
  ASSERT_EQ(run(c.command, b, c.overrides, "-j 1"), 0);
  ASSERT_EQ(run(c.command, t, c.overrides, "-j 3"), 0);
  const auto sa = snapshot(a);
  ASSERT_FALSE(sa.empty());
  EXPECT_TRUE(sa == snapshot(b));
  EXPECT_TRUE(sa == snapshot(t));
  for (const auto& [name, body] : sa) {
    EXPECT_EQ(body.rfind("# spdclab 0.3.1 config_hash=", 0), 0u) << name;
    EXPECT_NE(body.find("command=" + c.command + " seed=20231"), std::string::npos) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(All, CliCommand, ::testing::ValuesIn(cases()), [](const auto& info) {
  std::string n = info.param.command;
  for (char& ch : n) {
    if (ch == '-') ch = '_';
  }
  return n;
});

TEST(Cli, SeedChangesStochasticOutputAndHash) {
  const auto a = scratch("seed_a"), b = scratch("seed_b");
  ASSERT_EQ(run("wavepacket", a, {}), 0);
  ASSERT_EQ(run("wavepacket", b, {}, "--seed 5"), 0);
  EXPECT_NE(slurp(a / "wavepacket.csv"), slurp(b / "wavepacket.csv"));
  EXPECT_NE(slurp(b / "wavepacket.csv").find("seed=5"), std::string::npos);
}

TEST(Cli, InvalidConfigExitsWithTwo) {
  const auto o = scratch("bad_config");
  EXPECT_EQ(run("spectrum", o, {"cavity.mirror_reflectivity_high=1.2"}), 2);
  EXPECT_NE(slurp(o.string() + ".stderr").find("cavity.mirror_reflectivity_high"), std::string::npos);
  EXPECT_EQ(run("spectrum", o, {"cavity.no_such_key=1"}), 2);
}

TEST(Cli, MissingDataFileExitsWithTwo) {
  const auto o = scratch("no_data");
  EXPECT_EQ(run("gain", o, {"crystal.dispersion_file=missing.txt"}), 2);
  EXPECT_NE(slurp(o.string() + ".stderr").find("[crystal.dispersion_file]"), std::string::npos);
}

TEST(Cli, InfeasibleMatchExitsWithFour) {
  const auto o = scratch("infeasible");
  EXPECT_EQ(run("match", o, {}), 4);
  const auto txt = slurp(o / "match.txt");
  EXPECT_NE(txt.find("feasible = false"), std::string::npos) << txt;
  EXPECT_NE(slurp(o.string() + ".stderr").find("achievable"), std::string::npos);
}

TEST(Cli, UnresolvableGridExitsWithTwo) {
  const auto o = scratch("coarse");
  EXPECT_EQ(run("spectrum", o, {"spectrum.step_ghz=0.05"}), 2);
  EXPECT_NE(slurp(o.string() + ".stderr").find("[spectrum]"), std::string::npos);
}

TEST(Cli, UsageErrorExitsWithTwo) {
  const int status = std::system((std::string(SPDCLAB_CLI_PATH) + " gain 2>/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
