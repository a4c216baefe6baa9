#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nacifs/cli.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nacifs::run_cli;
using nlohmann::json;

namespace {

std::string config(const std::string& name) { return std::string(NACIFS_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Cli, Sha256KnownAnswer) {
  const auto dir = oracle::tmp_dir("cli_sha");
  write(dir / "abc", "abc");
  EXPECT_EQ(nacifs::sha256_file(dir / "abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  write(dir / "empty", "");
  EXPECT_EQ(nacifs::sha256_file(dir / "empty"),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Cli, ValidateShippedConfigs) {
  for (const auto& entry : fs::directory_iterator(NACIFS_CONFIG_DIR)) {
    const auto dir = oracle::tmp_dir("cli_validate");
    EXPECT_EQ(run_cli({"--out-dir", dir.string(), "validate", entry.path().string(), "--horizon", "16"}), 0)
        << entry.path();
    EXPECT_TRUE(fs::exists(dir / "validation.csv"));
    const json m = load(dir / "validate_manifest.json");
    EXPECT_EQ(m["command"], "validate");
    EXPECT_EQ(m["version"], nacifs::kVersion);
  }
}

TEST(Cli, ExitCodes) {
  const auto dir = oracle::tmp_dir("cli_exit");
  // Overlapping first-level disks.
  write(dir / "overlap.json", R"({"domain": {"eta": 0.1}, "mode": "periodic", "horizon": 4,
    "period": [[{"kind": "similarity", "a": [0.3, 0], "b": [0.1, 0]},
                {"kind": "similarity", "a": [0.3, 0], "b": [-0.1, 0]}]]})");
  write(dir / "broken.json", "{ not json");
  testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"--out-dir", dir.string(), "validate", (dir / "overlap.json").string()}), 3);
  const json err = json::parse(testing::internal::GetCapturedStderr());
  EXPECT_EQ(err["error"], "InvalidSystem");
  EXPECT_TRUE(err.contains("message"));

  testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"--out-dir", dir.string(), "validate", (dir / "broken.json").string()}), 2);
  EXPECT_EQ(run_cli({"--out-dir", dir.string(), "validate", (dir / "missing.json").string()}), 2);
  EXPECT_EQ(run_cli({"--out-dir", dir.string(), "nonsense"}), 2);
  EXPECT_EQ(run_cli({"--out-dir", dir.string(), "measure", config("symmetric_two_disk.json"), "--assign", "9",
                     "--depth", "4"}),
            2);
  EXPECT_EQ(run_cli({"--out-dir", dir.string(), "perturb", config("symmetric_two_disk.json"), "--mode",
                     "scale_a", "--epsilons", "1000", "--walkers", "10"}),
            4);
  testing::internal::GetCapturedStderr();
}

TEST(Cli, MeasureIsThreadInvariant) {
  const auto a = oracle::tmp_dir("cli_measure_1");
  const auto b = oracle::tmp_dir("cli_measure_3");
  const std::vector<std::string> common{"measure", config("asymmetric_two_disk.json"), "--walkers", "2000",
                                        "--depth", "5", "--assign", "2", "--endpoints"};
  auto args = std::vector<std::string>{"--threads", "1", "--out-dir", a.string(), "--seed", "5"};
  args.insert(args.end(), common.begin(), common.end());
  ASSERT_EQ(run_cli(args), 0);
  args = {"--threads", "3", "--out-dir", b.string(), "--seed", "5"};
  args.insert(args.end(), common.begin(), common.end());
  ASSERT_EQ(run_cli(args), 0);
  EXPECT_EQ(slurp(a / "measure.csv"), slurp(b / "measure.csv"));
  EXPECT_EQ(slurp(a / "endpoints.csv"), slurp(b / "endpoints.csv"));

  const json m = load(a / "measure_manifest.json");
  EXPECT_EQ(m["seed"], 5);
  ASSERT_EQ(m["outputs"].size(), 2u);
  for (const auto& o : m["outputs"]) {
    EXPECT_EQ(o["sha256"], nacifs::sha256_file(a / o["file"].get<std::string>()));
  }
  std::ifstream in(a / "measure.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "offset,word,count,value,stderr");
  std::int64_t total = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    std::getline(ss, f, ',');
    std::getline(ss, f, ',');
    total += std::stoll(f);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(total, 2000);
}

TEST(Cli, DimsUniformMoran) {
  const auto dir = oracle::tmp_dir("cli_dims");
  ASSERT_EQ(run_cli({"--out-dir", dir.string(), "dims", config("moran_quarter.json"), "--measure", "uniform",
                     "--nmax", "8", "--window", "3"}),
            0);
  const json j = load(dir / "dims.json");
  EXPECT_NEAR(j["hd_estimate"].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(j["pd_estimate"].get<double>(), 0.5, 1e-12);
  ASSERT_EQ(run_cli({"--out-dir", dir.string(), "dims", config("asymmetric_two_disk.json"), "--measure",
                     "bernoulli:0.6,0.4", "--nmax", "6"}),
            0);
  const double h = oracle::bernoulli_entropy({0.6, 0.4});
  const double chi = 0.6 * std::log(4.0) + 0.4 * std::log(1 / 0.35);
  EXPECT_NEAR(load(dir / "dims.json")["hd_estimate"].get<double>(), h / chi, 1e-12);
  EXPECT_EQ(run_cli({"--out-dir", dir.string(), "dims", config("moran_quarter.json"), "--measure", "bernoulli:0.7"}),
            2);
}

TEST(Cli, DimsHarmonicSmall) {
  const auto dir = oracle::tmp_dir("cli_dims_h");
  ASSERT_EQ(run_cli({"--out-dir", dir.string(), "dims", config("symmetric_two_disk.json"), "--measure", "harmonic",
                     "--nmax", "3", "--window", "2", "--walkers", "2000", "--extra-depth", "2"}),
            0);
  const json j = load(dir / "dims.json");
  EXPECT_GT(j["hd_estimate"].get<double>(), 0.3);
  EXPECT_LT(j["hd_estimate"].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir / "dims.csv"));
}

TEST(Cli, AsiAndReport) {
  const auto dir = oracle::tmp_dir("cli_asi");
  ASSERT_EQ(run_cli({"--out-dir", dir.string(), "asi", config("quadratic_two_branch.json"), "--functional", "diam",
                     "--kmax", "3", "--budget", "500"}),
            0);
  const json j = load(dir / "asi.json");
  EXPECT_EQ(j["rows"].size(), 3u);
  testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"report", (dir / "asi_manifest.json").string()}), 0);
  const std::string out = testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("command:   asi"), std::string::npos);
  EXPECT_NE(out.find("asi.csv"), std::string::npos);
}

TEST(Cli, PerturbSmall) {
  const auto dir = oracle::tmp_dir("cli_perturb");
  ASSERT_EQ(run_cli({"--out-dir", dir.string(), "perturb", config("asymmetric_two_disk.json"), "--epsilons",
                     "0.02,0.01", "--walkers", "1000", "--depth", "5", "--assign", "3"}),
            0);
  std::ifstream in(dir / "continuity.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
  const json j = load(dir / "continuity.json");
  EXPECT_NEAR(j["alpha"].get<double>(), 0.043755, 1e-6);
}
