#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bma/cli.hpp"
#include "bma/io/artifact.hpp"
#include "bma/io/config.hpp"
#include "bma/io/csv.hpp"
#include "bma/pipeline.hpp"

using namespace bma;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("bma_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bma");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string expect_data_error(const std::string& text) {
  try {
    io::parse_observations(text, "obs.csv");
  } catch (const DataError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no DataError for:\n" << text;
  return {};
}

const char* kTinyConfig = R"({
  "models": [
    {"model": "seir", "priors": {
      "sigma": {"kind": "trunc_normal", "lo": 0.2, "hi": 0.7, "mean": 0.5, "sd": 0.05},
      "gamma": {"kind": "trunc_normal", "lo": 0.0, "hi": 1.0, "mean": 0.16, "sd": 0.05},
      "nu2": 0.05,
      "phi2": {"kind": "uniform", "lo": 0.0, "hi": 0.1},
      "e0": {"kind": "uniform_discrete", "lo": 0, "hi": 5},
      "i0": {"kind": "uniform_discrete", "lo": 0, "hi": 15},
      "beta0": {"kind": "normal", "mean": 0.32, "sd": 0.01}}}
  ],
  "engine": {"n_theta": 8, "n_x": 8, "pmmh_moves": 1},
  "data": {"scenario": "A", "horizon": 12, "fit_steps": 10},
  "forecast": {"horizon": 2},
  "output": {"samples": 4}
})";

}  // namespace

TEST(Csv, ParsesIsoDatesAndMissingCounts) {
  const auto s = io::parse_observations("date,count\n2020-03-01,4\n2020-03-02,\n2020-03-03,7\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.counts[0], Observation{4});
  EXPECT_FALSE(s.counts[1].has_value());
  EXPECT_EQ(s.dates[2], "2020-03-03");
}

TEST(Csv, ParsesWeeklyAndIntegerCadence) {
  EXPECT_EQ(io::parse_observations("date,count\n2019-12-30,1\n2020-01-06,2\n2020-01-13,3\n").size(), 3u);
  EXPECT_EQ(io::parse_observations("date,count\n1,1\n2,2\n3,3\n").size(), 3u);
}

TEST(Csv, RejectsMalformedInputWithLineNumbers) {
  EXPECT_NE(expect_data_error("").find("empty file"), std::string::npos);
  EXPECT_NE(expect_data_error("day,count\n1,2\n").find("obs.csv:1:"), std::string::npos);
  EXPECT_NE(expect_data_error("date,count\n1,2\n2,x\n").find("obs.csv:3:"), std::string::npos);
  EXPECT_NE(expect_data_error("date,count\n1,2\n2,-1\n").find("negative"), std::string::npos);
  EXPECT_NE(expect_data_error("date,count\n2,2\n1,3\n").find("increasing"), std::string::npos);
  EXPECT_NE(expect_data_error("date,count\n1,2\n2,3\n4,3\n").find("cadence"), std::string::npos);
  EXPECT_NE(expect_data_error("date,count\n2020-02-30,1\n").find("malformed date"), std::string::npos);
  EXPECT_NE(expect_data_error("date,count\n1,2,3\n").find("fields"), std::string::npos);
  EXPECT_NE(expect_data_error("date,count\n").find("no data rows"), std::string::npos);
}

TEST(Csv, RoundTrip) {
  const std::string text = "date,count\n2021-01-01,3\n2021-01-02,\n2021-01-03,0\n";
  EXPECT_EQ(io::format_observations(io::parse_observations(text)), text);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(io::fmt(0.1), "0.1");
  EXPECT_EQ(io::fmt(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(io::fmt(std::nan("")), "nan");
}

TEST(Config, ParsesPriorsAndDefaults) {
  const auto cfg = io::parse_config(nlohmann::json::parse(kTinyConfig));
  ASSERT_EQ(cfg.models.size(), 1u);
  EXPECT_EQ(cfg.models[0].name, "seir");
  EXPECT_TRUE(cfg.models[0].priors.at("nu2").is_fixed());
  EXPECT_EQ(cfg.engine.seed, io::kDefaultSeed);
  EXPECT_EQ(cfg.engine.smc2.window, 1u);
  EXPECT_EQ(cfg.forecast.theta, ThetaMode::kEnsemble);
}

TEST(Config, RejectsBadDocuments) {
  using nlohmann::json;
  EXPECT_THROW(io::parse_config(json::parse(R"({"models": []})")), ConfigError);
  EXPECT_THROW(io::parse_config(json::parse(R"({"models": [{"model": "sir"}]})")), ConfigError);
  EXPECT_THROW(io::parse_config(json::parse(R"({"models": [{"model": "seir", "name": "ma"}]})")), ConfigError);
  EXPECT_THROW(io::parse_config(json::parse(R"({"models": [{"model": "seir", "priors": {"nu2": {"kind": "beta"}}}]})")),
               ConfigError);
  EXPECT_THROW(io::parse_config(json::parse(R"({"models": [{"model": "seir"}], "engine": {"window": 0}})")),
               ConfigError);
}

TEST(Config, PriorJsonRoundTrip) {
  const auto j = nlohmann::json::parse(R"({"kind": "trunc_normal", "lo": 0.05, "hi": 0.2, "mean": 0.1, "sd": 0.01})");
  EXPECT_EQ(io::prior_to_json(io::parse_prior(j, "x")), j);
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(cli({"simulate", "--scenario", "A", "--bogus"}).code, kExitConfig);
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"fit"}).code, kExitConfig);
  EXPECT_EQ(cli({"simulate", "--scenario", "Q"}).code, kExitConfig);
}

TEST(Cli, MissingPriorIsNamed) {
  TempDir dir;
  auto doc = nlohmann::json::parse(kTinyConfig);
  doc["models"][0]["priors"].erase("nu2");
  write(dir / "cfg.json", doc.dump());
  const auto r = cli({"fit", "--config", dir / "cfg.json", "--out", dir / "run"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("nu2"), std::string::npos) << r.err;
}

TEST(Cli, BadDataExitsWithTwo) {
  TempDir dir;
  write(dir / "cfg.json", kTinyConfig);
  write(dir / "bad.csv", "date,count\n1,4\n2,oops\n");
  const auto r = cli({"fit", "--config", dir / "cfg.json", "--data", dir / "bad.csv", "--out", dir / "run"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find(":3:"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"fit", "--config", dir / "cfg.json", "--data", dir / "absent.csv"}).code, kExitData);
}

TEST(Cli, SimulateIsByteIdenticalForASeed) {
  TempDir dir;
  ASSERT_EQ(cli({"simulate", "--scenario", "B", "--seed", "42", "--out", dir / "one"}).code, kExitOk);
  ASSERT_EQ(cli({"simulate", "--scenario", "B", "--seed", "42", "--out", dir / "two"}).code, kExitOk);
  for (const char* f : {"observations.csv", "truth.csv"}) {
    const auto a = slurp(dir / (std::string("one/") + f));
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / (std::string("two/") + f)));
  }
  const auto obs = io::ingest_csv(dir / "one/observations.csv");
  const auto sim = simulate_for_seed(ScenarioSpec::standard(ScenarioId::B), 42);
  ASSERT_EQ(obs.size(), sim.observations.size());
  for (std::size_t t = 0; t < obs.size(); ++t) EXPECT_EQ(obs.counts[t], Observation{sim.observations[t]});
  EXPECT_TRUE(fs::exists(dir.path() / "one" / "scenario.json"));
}

TEST(Cli, FitAndForecastWriteTheArtifact) {
  TempDir dir;
  write(dir / "cfg.json", kTinyConfig);
  const auto r = cli({"forecast", "--config", dir / "cfg.json", "--out", dir / "run", "--threads", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"estimates.csv", "parameters.csv", "diagnostics.csv", "samples.csv", "run.json",
                        "observations.csv", "truth.csv"})
    EXPECT_TRUE(fs::exists(dir.path() / "run" / f)) << f;
  const auto est = io::read_table(dir / "run/estimates.csv");
  EXPECT_EQ(est.rows.size(), 12u);  // 10 fitted steps and 2 forecast steps
  const auto ev = cli({"evaluate", "--run", dir / "run", "--truth", dir / "run/truth.csv"});
  ASSERT_EQ(ev.code, kExitOk) << ev.err;
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "scores.json"));
}

TEST(Cli, EvaluateScoresAnOracleRunPerfectly) {
  TempDir dir;
  fs::create_directories(dir.path() / "run");
  write(dir / "run/estimates.csv",
        "time,date,phase,observed,oracle_inc_mean,oracle_inc_q025,oracle_inc_q975\n"
        "1,1,fit,3,3,3,3\n2,2,fit,5,5,4,6\n3,3,forecast,,8,8,8\n");
  write(dir / "run/samples.csv",
        "time,phase,target,estimator,s0,s1\n"
        "1,fit,incidence,oracle,3,3\n2,fit,incidence,oracle,5,5\n3,forecast,incidence,oracle,8,8\n");
  write(dir / "truth.csv", "date,count\n1,3\n2,5\n3,8\n");
  const auto r = cli({"evaluate", "--run", dir / "run", "--truth", dir / "truth.csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto scores = io::read_table(dir / "run/scores.csv");
  ASSERT_EQ(scores.header, (std::vector<std::string>{"phase", "target", "metric", "oracle"}));
  ASSERT_EQ(scores.rows.size(), 6u);
  for (const auto& row : scores.rows) {
    const double expected = row[2] == "coverage" ? 1.0 : 0.0;
    EXPECT_EQ(std::stod(row[3]), expected) << row[0] << " " << row[2];
  }
}
