#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bayesw/cli.hpp"

using namespace bayesw;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bayesw_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bayesw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_small_panel(const fs::path& path) {
  std::ofstream f(path);
  f << "unit_id,time_id,y,x\n"
       "a,1,0.3,1.2\nb,1,-0.4,0.1\n"
       "a,2,1.1,-0.7\nb,2,0.2,0.5\n"
       "a,3,-0.9,0.4\nb,3,0.8,-1.3\n";
}

}  // namespace

TEST(Cli, EstimateSmoke) {
  const auto dir = scratch("estimate");
  write_small_panel(dir / "panel.csv");
  std::ofstream(dir / "config.json") << R"({"sampler": {"draws": 10, "burnin": 2, "seed": 4},
    "model": {"fixed_effects": false}, "io": {"panel": "panel.csv", "out": "res"}})";
  const auto r = cli({"--config", (dir / "config.json").string(), "estimate"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"summary.json", "trace.csv", "inclusion.csv", "omega_last.csv", "heatmap.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "res" / f)) << f;
  }
  const auto summary = Json::parse(slurp(dir / "res" / "summary.json"));
  EXPECT_EQ(summary["draw_count"], 10);
  EXPECT_EQ(summary["seed"], 4);
  EXPECT_EQ(summary["config"]["sampler"]["seed"], 4);
}

TEST(Cli, SameSeedSameBytes) {
  const auto dir = scratch("determinism");
  write_small_panel(dir / "panel.csv");
  std::ofstream(dir / "config.json") << R"({"sampler": {"draws": 25, "burnin": 5}})";
  for (const char* out : {"a", "b"}) {
    const auto r = cli({"--config", (dir / "config.json").string(), "--seed", "77", "--out", (dir / out).string(),
                        "estimate", "--panel", (dir / "panel.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"summary.json", "trace.csv", "inclusion.csv", "omega_last.csv", "heatmap.svg"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST(Cli, InvalidConfigExitsWithTwo) {
  const auto dir = scratch("invalid");
  std::ofstream(dir / "config.json") << R"({"sampler": {"burnin": -5}})";
  const auto r = cli({"--config", (dir / "config.json").string(), "estimate", "--panel", "x.csv"});
  EXPECT_EQ(r.code, 2);
  const auto j = Json::parse(r.err);
  EXPECT_EQ(j["exit_code"], 2);
  EXPECT_EQ(j["error"]["type"], "ValidationError");
  EXPECT_NE(j["error"]["message"].get<std::string>().find("sampler.burnin"), std::string::npos);
}

TEST(Cli, MissingFileExitsWithFour) {
  const auto dir = scratch("missing");
  const auto r = cli({"--out", dir.string(), "estimate", "--panel", (dir / "nope.csv").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(Json::parse(r.err)["error"]["kind"], "io");
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
}

TEST(Cli, SimulateWritesPanelAndTruth) {
  const auto dir = scratch("simulate");
  std::ofstream(dir / "config.json") << R"({"dgp": {"n": 20, "t": 10}})";
  const auto r = cli({"--config", (dir / "config.json").string(), "--seed", "5", "--out", dir.string(), "simulate"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string panel = slurp(dir / "panel.csv");
  EXPECT_EQ(std::count(panel.begin(), panel.end(), '\n'), 201);
  const auto truth = read_matrix_csv(dir / "omega_true.csv");
  EXPECT_EQ(truth.values.rows(), 20);
  EXPECT_EQ(truth.values, truth.values.transpose());
}

TEST(Cli, HeatmapFromInclusion) {
  const auto dir = scratch("heatmap");
  Matrix m(3, 3);
  m << 0, 0.9, 0.1, 0.6, 0, 0, 0, 1, 0;
  write_matrix_csv(dir / "inclusion.csv", m, {"x", "y", "z"});
  std::ofstream(dir / "order.txt") << "z\ny\nx\n";
  const auto r = cli({"--out", dir.string(), "heatmap", "--inclusion", (dir / "inclusion.csv").string(), "--ordering",
                      (dir / "order.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string svg = slurp(dir / "heatmap.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_LT(svg.find(">z<"), svg.find(">x<"));
  EXPECT_EQ(cli({"heatmap"}).code, 2);
}

TEST(Cli, ExecutableRuns) {
  const auto dir = scratch("exe");
  const std::string cmd = std::string(BAYESW_CLI_PATH) + " --out " + dir.string() + " simulate > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "panel.csv"));
  const std::string bad = std::string(BAYESW_CLI_PATH) + " estimate --panel " + (dir / "none.csv").string() +
                          " 2> /dev/null";
  const int status = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 4);
}
