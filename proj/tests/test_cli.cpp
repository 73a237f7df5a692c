#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "lrising/acceptance.hpp"
#include "lrising/experiment.hpp"
#include "lrising/io.hpp"

using namespace lrising;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lrising_test_" + name);
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

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LRISING_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSumsScan = R"({"schema_version": 1, "kind": "sums_scan", "name": "scan", "dim": 1, "s": 1.5,
  "L_grid": [64, 256, 1024, 4096, 16384]})";

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(io::format_number(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(io::format_number(std::nan("")), "nan");
  EXPECT_EQ(io::format_number(-INFINITY), "-inf");
  for (double x : {M_PI, 1e22, 123456.789, 2.2250738585072014e-308}) {
    EXPECT_EQ(std::strtod(io::format_number(x).c_str(), nullptr), x);
  }
}

TEST(AtomicWrite, ReplacesWithoutLeavingTemporaries) {
  const fs::path dir = scratch("atomic");
  const fs::path target = dir / "sub" / "a.csv";
  io::atomic_write(target, "one\n");
  io::atomic_write(target, "two\n");
  EXPECT_EQ(slurp(target), "two\n");
  int files = 0;
  for (const auto& e : fs::directory_iterator(target.parent_path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
}

TEST(Config, ParsesAndEchoes) {
  const ExperimentConfig c = parse_config(kSumsScan);
  EXPECT_EQ(c.kind, ExperimentKind::sums_scan);
  EXPECT_EQ(c.params.d, 1);
  EXPECT_EQ(c.L_grid.size(), 5u);
  EXPECT_EQ(c.source["name"], "scan");
}

TEST(Config, RejectsSchemaProblems) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config("[1,2]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"kind": "sums_scan", "L_grid": [1]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 2, "kind": "sums_scan", "L_grid": [1]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "sums_scan", "L_grid": [1], "bogus": 3})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "teleport"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "sums_scan", "L_grid": "many"})"), ConfigError);
}

TEST(Config, AppliesDomainChecksUpFront) {
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "sums_scan", "dim": 2, "s": 2.0, "L_grid": [1]})"),
               DomainError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "fit", "dim": 1, "s": 1.5, "L_grid": [4, 8, 16]})"),
               DomainError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "exact_check", "dim": 2, "s": 3, "exact_L": 2})"),
               EnumerationCapExceeded);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "kind": "mc_run", "beta": -1})"), DomainError);
}

TEST(Run, SumsScanConvergesToContinuumConstant) {
  const fs::path dir = scratch("scan");
  const auto summary = run_experiment(parse_config(kSumsScan), dir);
  ASSERT_EQ(summary.artifacts.size(), 1u);
  std::istringstream in(slurp(summary.artifacts[0]));
  std::string line, last;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header) {
      EXPECT_EQ(line, "L,a,s,d,value,tail,scaled_value");
      header = true;
      continue;
    }
    last = line;
  }
  const double scaled = std::stod(last.substr(last.rfind(',') + 1));
  EXPECT_NEAR(scaled / (8.0 * std::sqrt(2.0)), 1.0, 0.01);
}

TEST(Run, ArtifactsEmbedConfigAndSeed) {
  const fs::path dir = scratch("echo");
  ExperimentConfig c = parse_config(kSumsScan);
  c.seed = 4242;
  const auto summary = run_experiment(c, dir);
  const std::string text = slurp(summary.artifacts[0]);
  EXPECT_NE(text.find("# config {\"schema_version\":1,\"kind\":\"sums_scan\""), std::string::npos);
  EXPECT_NE(text.find("# seed 4242"), std::string::npos);
}

TEST(Run, FitEmitsOrderedKeys) {
  const fs::path dir = scratch("fit");
  const auto summary = run_experiment(
      parse_config(R"({"schema_version": 1, "kind": "fit", "dim": 1, "s": 1.5, "L_grid": [256, 512, 1024, 2048]})"),
      dir);
  const auto j = nlohmann::ordered_json::parse(slurp(summary.artifacts[0]));
  std::vector<std::string> keys;
  for (const auto& [k, _] : j["fit"].items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"model", "amplitude", "subleading", "exponent", "residual"}));
  EXPECT_NEAR(j["fit"]["amplitude"].get<double>() / (8.0 * std::sqrt(2.0)), 1.0, 0.05);
}

TEST(Run, McRunIsByteIdenticalOnRerun) {
  const char* cfg = R"({"schema_version": 1, "kind": "mc_run", "name": "chain", "dim": 2, "s": 3.0, "J": 1.0,
    "kappa": 0.5, "beta": 0.6, "side": 8, "thermalization": 10, "sweeps": 40, "block_sizes": [1, 2],
    "t_obs_L": 1, "start": "random", "seed": 9})";
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const auto ra = run_experiment(parse_config(cfg), a);
  const auto rb = run_experiment(parse_config(cfg), b);
  ASSERT_EQ(ra.artifacts.size(), rb.artifacts.size());
  for (std::size_t k = 0; k < ra.artifacts.size(); ++k) {
    EXPECT_EQ(slurp(ra.artifacts[k]), slurp(rb.artifacts[k])) << ra.artifacts[k];
  }
  std::istringstream csv(slurp(ra.artifacts[0]));
  std::string line;
  while (std::getline(csv, line) && line[0] == '#') {
  }
  EXPECT_EQ(line, "sweep,beta,h,energy_total,energy_ferro,energy_af,m,m_abs,mL_1,mL_2,T_obs,S_peak_k,S_peak_val");
}

TEST(Run, ExactCheckReportsEveryRow) {
  const fs::path dir = scratch("exact");
  const auto s = run_experiment(parse_config(R"({"schema_version": 1, "kind": "exact_check", "dim": 1, "s": 2.0,
      "betas": [0.5, 1.0], "fractions": [0.5]})"),
                                dir);
  EXPECT_NE(s.line.find("4/4"), std::string::npos) << s.line;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const fs::path out = dir / "out";
  EXPECT_EQ(run_cli("run --config " + write_config(dir, kSumsScan).string() + " --out-dir " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "scan.csv"));

  const fs::path bad_out = dir / "bad";
  EXPECT_EQ(run_cli("run --config " + write_config(dir, "{oops").string() + " --out-dir " + bad_out.string()), 2);
  EXPECT_EQ(run_cli("run --config " +
                    write_config(dir, R"({"schema_version": 1, "kind": "sums_scan", "dim": 2, "s": 1.5,
                      "L_grid": [4]})")
                        .string() +
                    " --out-dir " + bad_out.string()),
            3);
  EXPECT_FALSE(fs::exists(bad_out));
  EXPECT_EQ(run_cli("run --config " +
                    write_config(dir, R"({"schema_version": 1, "kind": "sums_scan", "dim": 3, "s": 3.5,
                      "L_grid": [4], "tol": 1e-18})")
                        .string() +
                    " --out-dir " + bad_out.string()),
            4);
  EXPECT_EQ(run_cli("run --config " +
                    write_config(dir, R"({"schema_version": 1, "kind": "exact_check", "dim": 3, "s": 4,
                      "exact_L": 1})")
                        .string() +
                    " --out-dir " + bad_out.string()),
            5);
  EXPECT_FALSE(fs::exists(bad_out));
  EXPECT_EQ(run_cli("verify nonsense"), 2);
}

TEST(Cli, SeedFlagOverridesConfig) {
  const fs::path dir = scratch("seed");
  const fs::path cfg = write_config(dir, kSumsScan);
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --seed 77 --out-dir " + dir.string()), 0);
  EXPECT_NE(slurp(dir / "scan.csv").find("# seed 77"), std::string::npos);
}

// A sign error in the production sum must trip the oracle comparison.
TEST(Verify, MisSignedKernelFailsOracleEquivalence) {
  acceptance::Hooks hooks;
  hooks.t_sum = [](const BoxSpec& b, const ModelParams& p, double tol) {
    const TailBound t = t_sum(b, p, tol);
    return TailBound{-t.upper(), t.tail};
  };
  const auto r = acceptance::oracle_equivalence(hooks);
  EXPECT_FALSE(r.pass) << r.measured;
}

TEST(Verify, SuitesCoverEveryCriterionOnce) {
  std::vector<int> seen;
  for (const auto& s : acceptance::suite_names()) {
    if (s == "all") continue;
    for (int id : acceptance::suite_criteria(s)) seen.push_back(id);
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, acceptance::suite_criteria("all"));
  EXPECT_THROW(acceptance::suite_criteria("bogus"), ConfigError);
}
