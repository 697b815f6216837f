#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "json.hpp"

using namespace maxdamp;
using nlohmann::json;

namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  int code = 0;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("maxdamp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config(const std::string &text)
  {
    const auto path = (dir_ / "run.ini").string();
    std::ofstream(path) << text;
    return path;
  }

  Outcome run(const std::string &command, const std::string &cfg, const std::string &sub = "out")
  {
    std::ostringstream out, err;
    Outcome r;
    r.code = cli::run_cli({command, "--config", cfg, "--out", (dir_ / sub).string()}, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  std::string read(const std::string &name, const std::string &sub = "out")
  {
    std::ifstream in(dir_ / sub / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

} // namespace

TEST_F(Cli, CheckFailsOnATrappingMedium)
{
  const auto r = run("check", config("[grid]\nn = 6\n[materials]\nmu = radial_decay\n[sigma]\nsigma0 = 1\n"));
  EXPECT_EQ(r.code, cli::exit_check_failed);
  const auto j = json::parse(read("check.json"));
  EXPECT_LE(j["nontrapping"]["eta_mu"].get<double>(), 0.0);
  EXPECT_EQ(j["nontrapping"]["worst_point"].size(), 3u);
}

TEST_F(Cli, CheckPassesOnTheDefaultMedium)
{
  EXPECT_EQ(run("check", config("[grid]\nn = 6\n[sigma]\nsigma0 = 1\n")).code, cli::exit_pass);
}

TEST_F(Cli, SimulateUndampedKeepsEnergy)
{
  const auto r = run("simulate", config("[grid]\nn = 6\n[time]\nT = 2\n"));
  ASSERT_EQ(r.code, cli::exit_pass) << r.err;
  std::istringstream csv(read("simulate.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, cli::series_header);
  double lo = 1e300, hi = -1e300;
  while (std::getline(csv, line))
  {
    const auto a = line.find(','), b = line.find(',', a + 1);
    const double E = std::stod(line.substr(a + 1, b - a - 1));
    lo = std::min(lo, E);
    hi = std::max(hi, E);
  }
  EXPECT_LE((hi - lo) / hi, 1e-10);
}

TEST_F(Cli, OutputIsDeterministic)
{
  const auto cfg = config("[grid]\nn = 5\n[sigma]\nsigma0 = 1\n[time]\nT = 1\n[run]\nseed = 7\n");
  ASSERT_EQ(run("simulate", cfg, "a").code, cli::exit_pass);
  ASSERT_EQ(run("simulate", cfg, "b").code, cli::exit_pass);
  EXPECT_EQ(read("simulate.csv", "a"), read("simulate.csv", "b"));
}

TEST_F(Cli, ConfigErrorsAreMachineReadable)
{
  const auto r = run("simulate", config("[grid]\nn = 4\nm = 3\n"));
  EXPECT_EQ(r.code, cli::exit_error);
  const auto j = json::parse(r.err);
  EXPECT_EQ(j["error"]["kind"], "config");
  EXPECT_EQ(j["error"]["key"], "grid.m");
  EXPECT_EQ(j["error"]["line"], 3);
}

TEST_F(Cli, UnknownSubcommandIsAnError)
{
  std::ostringstream out, err;
  EXPECT_EQ(cli::run_cli({"frobnicate"}, out, err), cli::exit_error);
  EXPECT_EQ(cli::run_cli({"simulate"}, out, err), cli::exit_error);
}

TEST_F(Cli, SnapshotsOnRequest)
{
  const auto r = run("simulate", config("[grid]\nn = 4\n[time]\nT = 0.5\n[output]\nformats = json, snapshots\n"));
  ASSERT_EQ(r.code, cli::exit_pass) << r.err;
  bool found = false;
  for (const auto &entry : fs::directory_iterator(dir_ / "out"))
    found = found || entry.path().extension() == ".bin";
  EXPECT_TRUE(found);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "simulate.csv"));
}

TEST_F(Cli, SeriesCsvWritesNan)
{
  TimeSeries s;
  s.t = {0.0};
  s.energy = {1.0};
  s.denergy = {2.0};
  s.dissipation_cum = {0.0};
  s.charge_upsilon = {0.0};
  s.charge_total = {0.0};
  s.split_residual = {std::numeric_limits<double>::quiet_NaN()};
  const auto text = cli::series_csv(s);
  EXPECT_EQ(text.substr(0, text.find('\n')), cli::series_header);
  EXPECT_NE(text.find("nan"), std::string::npos);
}
