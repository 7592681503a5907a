#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "spr/experiments.hpp"
#include "spr/io.hpp"

using namespace spr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(SPR_CLI) + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string config_message(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Format, Numbers) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(-2.0), "-2");
  EXPECT_EQ(format_number(kMinusInfDb), "-inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_THROW(format_number(std::nan("")), std::domain_error);
  EXPECT_THROW(format_number(std::numeric_limits<double>::infinity()), std::domain_error);
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Csv, HeaderAndRows) {
  CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  EXPECT_EQ(t.str(), "a,b\n1,2\n");
  EXPECT_THROW(t.add_row({"1"}), std::invalid_argument);
  CxVector c(3);
  c << 2.0, 0.0, Cx(0.0, 1.0);
  const auto s = spectrum_csv(c).str();
  EXPECT_EQ(s, "bin,magnitude,db\n0,2,0\n1,0,-inf\n2,1,-6.020599913279624\n");
}

TEST(Files, AtomicWriteReplaces) {
  const auto dir = scratch("atomic");
  const auto p = dir / "sub" / "x.csv";
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  EXPECT_EQ(slurp(p), "two");
  int n = 0;
  for (const auto& e : fs::directory_iterator(p.parent_path())) (void)e, ++n;
  EXPECT_EQ(n, 1);
}

TEST(Scene, LoadGridAndList) {
  const auto dir = scratch("scene");
  const auto p = dir / "s.yaml";
  write_file_atomic(p,
                    "grid: {ranges_m: [65, 95], angles_deg: [-7, 0, 7]}\n"
                    "scatterers:\n"
                    "  - {range_m: 70, angle_deg: 3, amp: [0.5, -0.5]}\n"
                    "  - {range_m: 80, angle_deg: -3}\n");
  const auto s = load_scene(p);
  ASSERT_EQ(s.size(), 8u);
  EXPECT_NEAR(std::abs(s[0].amplitude), 1.0, 1e-12);
  EXPECT_EQ(s[6].amplitude, Cx(0.5, -0.5));
  EXPECT_EQ(s[7].amplitude, Cx(1.0, 0.0));
  write_file_atomic(p, scene_yaml(s));
  const auto back = load_scene(p);
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_DOUBLE_EQ(back[i].range_m, s[i].range_m);
    EXPECT_NEAR(std::abs(back[i].amplitude - s[i].amplitude), 0.0, 1e-12);
  }
  write_file_atomic(p, "scatterers:\n  - {angle_deg: 3}\n");
  EXPECT_THROW(load_scene(p), std::invalid_argument);
}

TEST(Config, MissingExperimentNamesField) {
  EXPECT_NE(config_message("trials: 3\n").find("experiment"), std::string::npos);
  EXPECT_NE(config_message("experiment: bogus\n").find("experiment"), std::string::npos);
}

TEST(Config, UnknownAndMistypedFields) {
  EXPECT_NE(config_message("experiment: solve\nmodel: {arary: spa}\n").find("model.arary"),
            std::string::npos);
  EXPECT_NE(config_message("experiment: solve\nsolver: {max_iters: lots}\n").find("solver.max_iters"),
            std::string::npos);
  EXPECT_NE(config_message("experiment: sweep_k\nsweep: {axis: noise_sigma, values: [1]}\n")
                .find("sweep.axis"),
            std::string::npos);
  EXPECT_NE(config_message("experiment: solve\nmodel: {m: 300}\n").find("model.m"), std::string::npos);
}

TEST(Config, ParsesPresetAndRays) {
  const auto cfg = parse_config(
      "experiment: solve\n"
      "model: {array: cpa, rays: [{bin: 10, amp: 1}, {freq: 0.25, amp: 0.5, phase: 1}]}\n"
      "solver: {preset: cpa, methods: [blrc, omp], condition: estimate}\n");
  EXPECT_EQ(cfg.model.array, ArrayKind::CPA);
  ASSERT_EQ(cfg.model.explicit_rays.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.model.explicit_rays[0].freq, 10.0 / 256);
  EXPECT_EQ(cfg.methods, (std::vector<Method>{Method::BLRC, Method::OMP}));
  EXPECT_EQ(cfg.solver.init_gamma, 1.0);
  EXPECT_EQ(cfg.solver.condition, ConditionMode::Estimate);
}

TEST(Config, RadarKeepsCoprimeDefault) {
  const auto cfg = parse_config("experiment: radar\nmodel: {noise_sigma: 0.1}\n");
  EXPECT_EQ(cfg.model.array, ArrayKind::CPA);
  EXPECT_EQ(cfg.solver.init_gamma, 1.0);
}

TEST(Config, ShippedConfigsValidate) {
  for (const auto& e : fs::directory_iterator(fs::path(SPR_SOURCE_DIR) / "configs"))
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
}

TEST(Seeds, DistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (int t = 0; t < 100; ++t)
    for (int v = 0; v < 12; ++v) seen.insert(derive_seed(2024, t, v));
  EXPECT_EQ(seen.size(), 1200u);
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(substream(5, 0), substream(5, 1));
}

TEST(Threads, ParallelForCoversAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](int i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](int i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Sweep, ThreadCountInvariant) {
  auto cfg = parse_config(
      "experiment: sweep_noise\ntrials: 3\nseed: 9\n"
      "model: {array: spa, m: 40, n_grid: 128, array_seed: 7, rays: random, k_rays: 3}\n"
      "sweep: {axis: noise_sigma, values: [0.1, 0.5]}\n"
      "solver: {methods: [omp, blrc], max_iters: 8}\n");
  cfg.jobs = 1;
  const auto a = run_sweep(cfg);
  cfg.jobs = 3;
  const auto b = run_sweep(cfg);
  ASSERT_EQ(a.trials.size(), 12u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) EXPECT_EQ(a.trials[i].mse_db, b.trials[i].mse_db);
  EXPECT_EQ(a.at(0.5, Method::BLRC).mean_mse_db, b.at(0.5, Method::BLRC).mean_mse_db);
}

TEST(Resolution, PeaksAndCases) {
  const auto cases = resolution_cases(1000);
  ASSERT_EQ(cases.size(), 2u);
  EXPECT_DOUBLE_EQ(cases[1].rays[1].amp, 0.2);
  CxVector c = CxVector::Zero(1000);
  c(500) = 1.0;
  c(505) = 0.9;
  c(507) = 0.01;
  EXPECT_EQ(spectrum_peaks(c, 495, 510, 20.0), (std::vector<int>{500, 505}));
  EXPECT_EQ(spectrum_peaks(c, 495, 510, 60.0), (std::vector<int>{500, 505, 507}));
}

// --- command line ------------------------------------------------------------

TEST(Cli, MissingExperimentExitsTwo) {
  const auto dir = scratch("cli_bad");
  write_file_atomic(dir / "bad.yaml", "trials: 2\n");
  const auto r = run_cli("run " + (dir / "bad.yaml").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("experiment"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("check " + (dir / "bad.yaml").string(), dir).code, 2);
}

TEST(Cli, SolveFilesAndByteIdenticalReruns) {
  const auto dir = scratch("cli_solve");
  write_file_atomic(dir / "c.yaml",
                    "experiment: solve\nseed: 3\n"
                    "model: {array: spa, m: 80, array_seed: 7, rays: six_ray, noise_sigma: 0.1}\n"
                    "solver: {methods: [blrc]}\n");
  for (const char* out : {"a", "b"}) {
    const auto r = run_cli("run " + (dir / "c.yaml").string() + " -q --out " + (dir / out).string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"spectrum.csv", "trace.csv", "summary.csv"}) {
    const auto a = slurp(dir / "a" / f);
    ASSERT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(slurp(dir / "a" / "spectrum.csv").substr(0, 17), "bin,magnitude,db\n");
  EXPECT_EQ(slurp(dir / "a" / "trace.csv").substr(0, 36), "iter,residue_db,sigma_n,gamma,cond_H");
  const auto j = nlohmann::json::parse(slurp(dir / "a" / "result.json"));
  EXPECT_TRUE(j["metadata"].contains("git"));
  EXPECT_TRUE(j["metadata"].contains("wall_seconds"));
  // Every CSV cell is a finite number, a label or the -inf sentinel.
  std::istringstream body(slurp(dir / "a" / "trace.csv"));
  std::string line;
  std::getline(body, line);
  while (std::getline(body, line)) {
    EXPECT_EQ(line.find("nan"), std::string::npos);
    EXPECT_EQ(line.find(",inf"), std::string::npos);
  }
}
