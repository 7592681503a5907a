#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spr/analysis.hpp"
#include "spr/model.hpp"
#include "spr/radar.hpp"
#include "spr/solvers.hpp"

namespace spr {

/// Invalid or missing configuration; the message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Experiment { Synth, Solve, SweepNoise, SweepK, SweepM, Landscape, Resolution, Radar };

std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);

enum class RaySource { SixRay, Random, Explicit };

struct ModelSettings {
  ArrayKind array = ArrayKind::SPA;
  int n_grid = 256;
  int m = 80;
  std::optional<std::uint64_t> array_seed;  // absent: drawn per trial
  int cpa_p = 8;
  int cpa_q = 9;
  RaySource rays = RaySource::SixRay;
  std::vector<Ray> explicit_rays;
  int k_rays = 6;
  int min_separation = 3;
  double noise_sigma = 0.1;
};

struct SweepSettings {
  std::string axis;  // noise_sigma | k_rays | m_elements
  std::vector<double> values;
};

struct LandscapeSettings {
  double v_min = -3.0;
  double v_max = 3.0;
  int points = 601;
  PenaltySpec base;
};

struct ResolutionSettings {
  int n_grid = 1000;
  double noise_sigma = 0.01;
  double peak_floor_db = 20.0;  // peaks must be within this of the spectrum max
};

struct RadarSettings {
  std::optional<std::filesystem::path> scene_file;
  std::string builtin_scene = "corner_reflectors";
  double noise_sigma = 0.03;
  double threshold_db = 30.0;
  double dynamic_range_db = 70.0;
  double spurious_db = 30.0;
  int omp_max_atoms = 8;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Solve;
  ModelSettings model;
  std::vector<Method> methods{kAllMethods, kAllMethods + 4};
  SolverConfig solver = SolverConfig::spa_defaults();
  SweepSettings sweep;
  LandscapeSettings landscape;
  ResolutionSettings resolution;
  RadarSettings radar;
  int trials = 1;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> formats{"csv", "json"};
  int jobs = 0;  // 0: hardware concurrency

  bool wants(std::string_view format) const;
  /// Throws ConfigError.
  void validate() const;
};

/// Parses YAML text. Relative scene paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& yaml_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// base ⊕ mix(trial) ⊕ mix(value index); distinct index pairs give distinct streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t value_index);

/// Independent sub-stream of a trial seed (array, rays, noise, init).
std::uint64_t substream(std::uint64_t seed, std::uint64_t stream);

/// Runs body(i) for i in [0, count) on `jobs` threads. Exceptions propagate
/// (the first one thrown is rethrown after all workers stop).
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

int resolve_jobs(int jobs);

/// One synthetic problem: geometry, rays and noise drawn from sub-streams of
/// `seed`, solver init seeded from another.
struct Trial {
  ArrayGeometry geometry;
  Dictionary dict;
  std::vector<Ray> rays;
  Measurement meas;
  CxVector truth;
  SolverConfig solver;
};

Trial make_trial(const ModelSettings& model, const SolverConfig& solver, std::uint64_t seed);

// --- sweeps ------------------------------------------------------------------

struct TrialRecord {
  int value_index = 0;
  int trial = 0;
  Method method = Method::BLRC;
  double mse_db = 0.0;
  double sigma_est = 0.0;
  int iterations = 0;
  Termination termination = Termination::MaxIters;
};

struct SweepPoint {
  double value = 0.0;
  Method method = Method::BLRC;
  double mean_mse_db = 0.0;
  double stderr_mse_db = 0.0;
  double mean_sigma_est = 0.0;
  double stderr_sigma_est = 0.0;
};

struct SweepOutcome {
  std::string axis;
  std::vector<TrialRecord> trials;  // ordered by (value, trial, method)
  std::vector<SweepPoint> points;   // ordered by (value, method)

  const SweepPoint& at(double value, Method method) const;
};

/// Every value × trial regenerates the array, rays and noise from a derived
/// seed and runs each configured method.
SweepOutcome run_sweep(const ExperimentConfig& config, std::ostream* progress = nullptr);

// --- resolution --------------------------------------------------------------

struct ResolutionCase {
  std::string name;
  std::vector<Ray> rays;
};

/// Equal amplitudes at 500/N, 505/N and amplitudes (1, 0.2) at 500/N, 510/N.
std::vector<ResolutionCase> resolution_cases(int n_grid);

/// Local maxima of |c| inside [lo, hi] that are within floor_db of max|c|.
std::vector<int> spectrum_peaks(const CxVector& c, int lo, int hi, double floor_db);

// --- radar -------------------------------------------------------------------

struct RadarRun {
  std::vector<PointScatterer> scene;
  RadarParams params;
  ArrayGeometry geometry;
  std::vector<int> bins;
  std::vector<std::pair<Method, RangeAzimuthImage>> images;
  std::vector<std::pair<Method, PixelScore>> scores;
};

RadarRun run_radar(const ExperimentConfig& config, std::uint64_t seed, int jobs);

// --- driver ------------------------------------------------------------------

struct RunSummary {
  std::vector<std::filesystem::path> files;
};

/// Executes the configured experiment, writing outputs under
/// config.output_dir and one summary line per trial to `log`.
RunSummary run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace spr
