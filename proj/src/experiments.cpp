#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "spr/experiments.hpp"
#include "spr/io.hpp"

#ifndef SPR_GIT_HASH
#define SPR_GIT_HASH "unknown"
#endif

namespace spr {

namespace {

using nlohmann::json;

// --- YAML helpers ----------------------------------------------------------

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError((where.empty() ? key : where + "." + key) + ": unknown field");
  }
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& where, T& out) {
  const auto v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path_of(where, key) + ": wrong type");
  }
}

template <typename T>
void read_opt(const YAML::Node& node, const char* key, const std::string& where,
              std::optional<T>& out) {
  const auto v = node[key];
  if (!v) return;
  if (v.IsNull()) {
    out.reset();
    return;
  }
  T tmp{};
  read(node, key, where, tmp);
  out = tmp;
}

template <typename Enum, typename Fn>
void read_enum(const YAML::Node& node, const char* key, const std::string& where, Enum& out,
               Fn parse) {
  std::string name;
  read(node, key, where, name);
  if (name.empty()) return;
  try {
    out = parse(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path_of(where, key) + ": " + e.what());
  }
}

SolverConfig parse_solver(const YAML::Node& node, std::vector<Method>& methods) {
  const std::string w = "solver";
  check_keys(node,
             {"methods", "preset", "max_iters", "init_sigma_n", "init_gamma", "init_tau",
              "init_c_scale", "init_c_seed", "cg_fixed_sigma_n", "cg_fixed_gamma",
              "residue_tol_db", "cond_limit", "condition", "use_woodbury", "prune_threshold",
              "prune_start_iter", "omp_max_atoms", "omp_residue_stop_db",
              "support_dynamic_range_db"},
             w);
  std::string preset = "spa";
  read(node, "preset", w, preset);
  SolverConfig cfg;
  if (preset == "spa") cfg = SolverConfig::spa_defaults();
  else if (preset == "cpa") cfg = SolverConfig::cpa_defaults();
  else throw ConfigError("solver.preset: expected 'spa' or 'cpa'");

  if (node["methods"]) {
    std::vector<std::string> names;
    read(node, "methods", w, names);
    methods.clear();
    for (const auto& n : names) {
      try {
        methods.push_back(method_from_string(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("solver.methods: ") + e.what());
      }
    }
  }
  read(node, "max_iters", w, cfg.max_iters);
  read(node, "init_sigma_n", w, cfg.init_sigma_n);
  read(node, "init_gamma", w, cfg.init_gamma);
  read(node, "init_tau", w, cfg.init_tau);
  read(node, "init_c_scale", w, cfg.init_c_scale);
  read(node, "init_c_seed", w, cfg.init_c_seed);
  read(node, "cg_fixed_sigma_n", w, cfg.cg_fixed_sigma_n);
  read(node, "cg_fixed_gamma", w, cfg.cg_fixed_gamma);
  read(node, "residue_tol_db", w, cfg.residue_tol_db);
  read(node, "cond_limit", w, cfg.cond_limit);
  read_enum(node, "condition", w, cfg.condition, condition_mode_from_string);
  read(node, "use_woodbury", w, cfg.use_woodbury);
  read_opt(node, "prune_threshold", w, cfg.prune_threshold);
  read(node, "prune_start_iter", w, cfg.prune_start_iter);
  read(node, "omp_max_atoms", w, cfg.omp_max_atoms);
  read_opt(node, "omp_residue_stop_db", w, cfg.omp_residue_stop_db);
  read(node, "support_dynamic_range_db", w, cfg.support_dynamic_range_db);
  return cfg;
}

ModelSettings parse_model(const YAML::Node& node, ModelSettings m) {
  const std::string w = "model";
  check_keys(node,
             {"array", "n_grid", "m", "array_seed", "cpa", "rays", "k_rays", "min_separation",
              "noise_sigma"},
             w);
  read_enum(node, "array", w, m.array, array_kind_from_string);
  read(node, "n_grid", w, m.n_grid);
  read(node, "m", w, m.m);
  read_opt(node, "array_seed", w, m.array_seed);
  if (node["cpa"]) {
    std::vector<int> pq;
    read(node, "cpa", w, pq);
    if (pq.size() != 2) throw ConfigError("model.cpa: expected [p, q]");
    m.cpa_p = pq[0];
    m.cpa_q = pq[1];
  }
  if (const auto rays = node["rays"]) {
    if (rays.IsSequence()) {
      m.rays = RaySource::Explicit;
      for (std::size_t i = 0; i < rays.size(); ++i) {
        const std::string wi = "model.rays[" + std::to_string(i) + "]";
        check_keys(rays[i], {"freq", "bin", "amp", "phase"}, wi);
        Ray r;
        if (rays[i]["bin"]) {
          double bin = 0;
          read(rays[i], "bin", wi, bin);
          r.freq = bin / m.n_grid;
        } else if (rays[i]["freq"]) {
          read(rays[i], "freq", wi, r.freq);
        } else {
          throw ConfigError(wi + ".freq: missing (or give 'bin')");
        }
        read(rays[i], "amp", wi, r.amp);
        read(rays[i], "phase", wi, r.phase);
        m.explicit_rays.push_back(r);
      }
    } else {
      std::string name;
      read(node, "rays", w, name);
      if (name == "six_ray") m.rays = RaySource::SixRay;
      else if (name == "random") m.rays = RaySource::Random;
      else throw ConfigError("model.rays: expected 'six_ray', 'random' or a list");
    }
  }
  read(node, "k_rays", w, m.k_rays);
  read(node, "min_separation", w, m.min_separation);
  read(node, "noise_sigma", w, m.noise_sigma);
  return m;
}

}  // namespace

// --- enum names ----------------------------------------------------------------

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Synth: return "synth";
    case Experiment::Solve: return "solve";
    case Experiment::SweepNoise: return "sweep_noise";
    case Experiment::SweepK: return "sweep_k";
    case Experiment::SweepM: return "sweep_m";
    case Experiment::Landscape: return "landscape";
    case Experiment::Resolution: return "resolution";
    case Experiment::Radar: return "radar";
  }
  return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
  for (auto e : {Experiment::Synth, Experiment::Solve, Experiment::SweepNoise, Experiment::SweepK,
                 Experiment::SweepM, Experiment::Landscape, Experiment::Resolution,
                 Experiment::Radar})
    if (to_string(e) == name) return e;
  throw ConfigError("experiment: unknown experiment '" + std::string(name) + "'");
}

// --- config ------------------------------------------------------------------

bool ExperimentConfig::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials: must be >= 1");
  if (jobs < 0) throw ConfigError("jobs: must be >= 0");
  if (methods.empty()) throw ConfigError("solver.methods: empty");
  for (const auto& f : formats)
    if (f != "csv" && f != "json" && f != "pgm")
      throw ConfigError("formats: unknown format '" + f + "'");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver.") + e.what());
  }
  if (model.n_grid < 2) throw ConfigError("model.n_grid: must be >= 2");
  if (model.m < 1 || model.m > model.n_grid) throw ConfigError("model.m: must be in [1, n_grid]");
  if (model.noise_sigma < 0.0) throw ConfigError("model.noise_sigma: must be >= 0");
  if (model.k_rays < 0) throw ConfigError("model.k_rays: must be >= 0");
  if (model.rays == RaySource::Explicit && model.explicit_rays.empty())
    throw ConfigError("model.rays: empty list");

  const bool is_sweep = experiment == Experiment::SweepNoise || experiment == Experiment::SweepK ||
                        experiment == Experiment::SweepM;
  if (is_sweep) {
    if (sweep.values.empty()) throw ConfigError("sweep.values: empty");
    const char* expect = experiment == Experiment::SweepNoise ? "noise_sigma"
                         : experiment == Experiment::SweepK   ? "k_rays"
                                                              : "m_elements";
    if (sweep.axis != expect)
      throw ConfigError("sweep.axis: must be '" + std::string(expect) + "' for " +
                        std::string(to_string(experiment)));
    for (double v : sweep.values) {
      if (sweep.axis == "noise_sigma" && v < 0.0)
        throw ConfigError("sweep.values: noise_sigma must be >= 0");
      if (sweep.axis != "noise_sigma" && (v < 0 || v != std::floor(v)))
        throw ConfigError("sweep.values: " + sweep.axis + " needs nonnegative integers");
      if (sweep.axis == "m_elements" && (v < 1 || v > model.n_grid))
        throw ConfigError("sweep.values: m_elements must be in [1, n_grid]");
    }
  }
  if (experiment == Experiment::Landscape && landscape.points < 3)
    throw ConfigError("landscape.points: must be >= 3");
  if (experiment == Experiment::Resolution && resolution.n_grid < 16)
    throw ConfigError("resolution.n_grid: must be >= 16");
  if (experiment == Experiment::Radar) {
    if (radar.noise_sigma < 0.0) throw ConfigError("radar.noise_sigma: must be >= 0");
    if (radar.dynamic_range_db <= 0.0) throw ConfigError("radar.dynamic_range_db: must be > 0");
    if (!radar.scene_file && radar.builtin_scene != "corner_reflectors" &&
        radar.builtin_scene != "cars")
      throw ConfigError("radar.scene: unknown builtin scene '" + radar.builtin_scene + "'");
  }
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML parse error: ") + e.what());
  }
  if (!root || !root.IsMap()) throw ConfigError("experiment: config must be a mapping");
  check_keys(root,
             {"experiment", "model", "solver", "sweep", "landscape", "resolution", "radar",
              "trials", "seed", "output_dir", "formats", "jobs"},
             "");
  if (!root["experiment"]) throw ConfigError("experiment: missing required field");

  ExperimentConfig cfg;
  std::string name;
  read(root, "experiment", "", name);
  cfg.experiment = experiment_from_string(name);

  if (cfg.experiment == Experiment::Radar || cfg.experiment == Experiment::Resolution) {
    cfg.solver = SolverConfig::cpa_defaults();
    cfg.model.array = ArrayKind::CPA;
  }
  if (root["model"]) cfg.model = parse_model(root["model"], cfg.model);
  if (root["solver"]) cfg.solver = parse_solver(root["solver"], cfg.methods);

  if (const auto s = root["sweep"]) {
    check_keys(s, {"axis", "values"}, "sweep");
    read(s, "axis", "sweep", cfg.sweep.axis);
    read(s, "values", "sweep", cfg.sweep.values);
  }
  if (const auto l = root["landscape"]) {
    check_keys(l, {"v_min", "v_max", "points", "p", "cg_gamma", "sigma_n_sq", "max_inner"},
               "landscape");
    read(l, "v_min", "landscape", cfg.landscape.v_min);
    read(l, "v_max", "landscape", cfg.landscape.v_max);
    read(l, "points", "landscape", cfg.landscape.points);
    read(l, "p", "landscape", cfg.landscape.base.p);
    read(l, "cg_gamma", "landscape", cfg.landscape.base.gamma);
    read(l, "sigma_n_sq", "landscape", cfg.landscape.base.sigma_n_sq);
    read(l, "max_inner", "landscape", cfg.landscape.base.max_inner);
  }
  if (const auto r = root["resolution"]) {
    check_keys(r, {"n_grid", "noise_sigma", "peak_floor_db"}, "resolution");
    read(r, "n_grid", "resolution", cfg.resolution.n_grid);
    read(r, "noise_sigma", "resolution", cfg.resolution.noise_sigma);
    read(r, "peak_floor_db", "resolution", cfg.resolution.peak_floor_db);
  }
  if (const auto r = root["radar"]) {
    check_keys(r,
               {"scene", "noise_sigma", "threshold_db", "dynamic_range_db", "spurious_db",
                "omp_max_atoms"},
               "radar");
    std::string scene;
    read(r, "scene", "radar", scene);
    if (!scene.empty()) {
      if (scene == "corner_reflectors" || scene == "cars") {
        cfg.radar.builtin_scene = scene;
      } else {
        std::filesystem::path p(scene);
        cfg.radar.scene_file = p.is_absolute() ? p : base_dir / p;
      }
    }
    read(r, "noise_sigma", "radar", cfg.radar.noise_sigma);
    read(r, "threshold_db", "radar", cfg.radar.threshold_db);
    read(r, "dynamic_range_db", "radar", cfg.radar.dynamic_range_db);
    read(r, "spurious_db", "radar", cfg.radar.spurious_db);
    read(r, "omp_max_atoms", "radar", cfg.radar.omp_max_atoms);
  }
  read(root, "trials", "", cfg.trials);
  read(root, "seed", "", cfg.seed);
  std::string out;
  read(root, "output_dir", "", out);
  if (!out.empty()) cfg.output_dir = out;
  read(root, "formats", "", cfg.formats);
  read(root, "jobs", "", cfg.jobs);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// --- seeds and threads ---------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t value_index) {
  return base ^ splitmix64(trial) ^ splitmix64(value_index ^ 0x5bd1e9955bd1e995ULL);
}

std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (count <= 0) return;
  const int workers = std::min(resolve_jobs(jobs), count);
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex err_mutex;
  auto run = [&] {
    for (int i = next++; i < count && !stop; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// --- scene construction --------------------------------------------------------

namespace {

ArrayGeometry make_geometry(const ModelSettings& m, std::uint64_t seed) {
  switch (m.array) {
    case ArrayKind::Full: return ArrayGeometry::full(m.n_grid);
    case ArrayKind::CPA: return make_coprime_array(m.cpa_p, m.cpa_q, m.n_grid);
    case ArrayKind::SPA:
    case ArrayKind::Custom: return make_sparse_array(m.n_grid, m.m, m.array_seed.value_or(seed));
  }
  throw ConfigError("model.array: unsupported");
}

std::vector<Ray> make_rays(const ModelSettings& m, std::uint64_t seed) {
  switch (m.rays) {
    case RaySource::SixRay: return snap_to_grid(six_ray_rays(), m.n_grid);
    case RaySource::Random: return random_rays(m.k_rays, m.n_grid, m.min_separation, seed);
    case RaySource::Explicit: return m.explicit_rays;
  }
  return {};
}

// Normalized MSE that tolerates an all-zero estimate (scored against zero).
double mse_db(const CxVector& truth, const CxVector& est) {
  if (est.cwiseAbs().maxCoeff() > 0.0) return normalized_mse(truth, est);
  const double pt = truth.cwiseAbs().maxCoeff();
  return to_db_power((truth / pt).squaredNorm() / static_cast<double>(truth.size()));
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

Trial make_trial(const ModelSettings& model, const SolverConfig& solver, std::uint64_t seed) {
  ArrayGeometry geo = make_geometry(model, substream(seed, 0));
  Dictionary dict = build_fourier_dictionary(geo);
  std::vector<Ray> rays = make_rays(model, substream(seed, 1));
  Measurement meas = synth_ray_signal(rays, geo, model.noise_sigma, substream(seed, 2));
  CxVector truth = rays_to_coefficients(rays, model.n_grid);
  SolverConfig cfg = solver;
  cfg.init_c_seed = substream(seed, 3);
  return {std::move(geo), std::move(dict), std::move(rays), std::move(meas), std::move(truth),
          cfg};
}

// --- sweeps ------------------------------------------------------------------

const SweepPoint& SweepOutcome::at(double value, Method method) const {
  for (const auto& p : points)
    if (p.value == value && p.method == method) return p;
  throw std::out_of_range("SweepOutcome::at: no such point");
}

SweepOutcome run_sweep(const ExperimentConfig& config, std::ostream* progress) {
  const auto& values = config.sweep.values;
  const int nv = static_cast<int>(values.size());
  const int nt = config.trials;
  const int nm = static_cast<int>(config.methods.size());
  std::vector<TrialRecord> records(static_cast<std::size_t>(nv) * nt * nm);

  parallel_for(nv * nt, config.jobs, [&](int job) {
    const int vi = job / nt;
    const int trial = job % nt;
    ModelSettings model = config.model;
    const double v = values[static_cast<std::size_t>(vi)];
    if (config.sweep.axis == "noise_sigma") {
      model.noise_sigma = v;
    } else if (config.sweep.axis == "k_rays") {
      model.k_rays = static_cast<int>(v);
      model.rays = RaySource::Random;
    } else {
      model.m = static_cast<int>(v);
    }
    const Trial t = make_trial(model, config.solver,
                               derive_seed(config.seed, static_cast<std::uint64_t>(trial),
                                           static_cast<std::uint64_t>(vi)));
    for (int mi = 0; mi < nm; ++mi) {
      const Method method = config.methods[static_cast<std::size_t>(mi)];
      const SolveResult r = solve(method, t.meas, t.dict, t.solver);
      auto& rec = records[(static_cast<std::size_t>(vi) * nt + trial) * nm + mi];
      rec = {vi, trial, method, t.truth.size() && t.truth.cwiseAbs().maxCoeff() > 0.0
                                    ? mse_db(t.truth, r.c_hat)
                                    : 0.0,
             r.sigma_n, r.iterations(), r.termination};
    }
  });

  SweepOutcome out;
  out.axis = config.sweep.axis;
  out.trials = records;
  for (int vi = 0; vi < nv; ++vi)
    for (int mi = 0; mi < nm; ++mi) {
      std::vector<double> mse, sig;
      for (int trial = 0; trial < nt; ++trial) {
        const auto& rec = records[(static_cast<std::size_t>(vi) * nt + trial) * nm + mi];
        mse.push_back(rec.mse_db);
        sig.push_back(rec.sigma_est);
      }
      out.points.push_back({values[static_cast<std::size_t>(vi)],
                            config.methods[static_cast<std::size_t>(mi)], mean(mse),
                            std_error(mse), mean(sig), std_error(sig)});
    }

  if (progress) {
    for (int vi = 0; vi < nv; ++vi)
      for (int trial = 0; trial < nt; ++trial) {
        *progress << "trial " << trial << " " << out.axis << "=" << format_number(values[vi]);
        for (int mi = 0; mi < nm; ++mi) {
          const auto& rec = records[(static_cast<std::size_t>(vi) * nt + trial) * nm + mi];
          *progress << "  " << to_string(rec.method) << " " << format_number(rec.mse_db) << " dB";
        }
        *progress << '\n';
      }
  }
  return out;
}

// --- resolution --------------------------------------------------------------

std::vector<ResolutionCase> resolution_cases(int n_grid) {
  const double n = n_grid;
  return {{"equal", {{500.0 / n, 1.0, 0.0}, {505.0 / n, 1.0, 0.0}}},
          {"unequal", {{500.0 / n, 1.0, 0.0}, {510.0 / n, 0.2, 0.0}}}};
}

std::vector<int> spectrum_peaks(const CxVector& c, int lo, int hi, double floor_db) {
  std::vector<int> peaks;
  const int n = static_cast<int>(c.size());
  if (n == 0) return peaks;
  const RealVector mag = c.cwiseAbs();
  const double floor = mag.maxCoeff() * std::pow(10.0, -floor_db / 20.0);
  if (!(floor > 0.0)) return peaks;
  for (int k = std::max(lo, 0); k <= std::min(hi, n - 1); ++k) {
    const double left = mag((k - 1 + n) % n);
    const double right = mag((k + 1) % n);
    if (mag(k) >= floor && mag(k) > left && mag(k) >= right) peaks.push_back(k);
  }
  return peaks;
}

// --- radar -------------------------------------------------------------------

RadarRun run_radar(const ExperimentConfig& config, std::uint64_t seed, int jobs) {
  const RadarParams params = RadarParams::table_four();
  RadarRun run{{}, params, make_coprime_array(config.model.cpa_p, config.model.cpa_q, params.n_grid),
               {}, {}, {}};
  if (config.radar.scene_file) run.scene = load_scene(*config.radar.scene_file);
  else if (config.radar.builtin_scene == "cars") run.scene = car_cluster_scene();
  else run.scene = corner_reflector_scene();

  const Dictionary dict = build_fourier_dictionary(run.geometry);
  const CxMatrix spectrum = range_transform(
      simulate_adc(run.scene, run.params, run.geometry, config.radar.noise_sigma, seed));
  run.bins = select_range_bins(spectrum, config.radar.threshold_db);

  AngleRecoverOptions opts;
  opts.dynamic_range_db = config.radar.dynamic_range_db;
  opts.jobs = jobs;
  for (Method m : config.methods) {
    SolverConfig cfg = config.solver;
    if (m == Method::OMP) cfg.omp_max_atoms = config.radar.omp_max_atoms;
    auto image = angle_recover(spectrum, run.bins, m, dict, cfg, run.params, opts);
    run.scores.emplace_back(m, score_image(image, run.scene, run.params,
                                           config.radar.spurious_db, 1));
    run.images.emplace_back(m, std::move(image));
  }
  return run;
}

// --- driver ------------------------------------------------------------------

namespace {

class Writer {
 public:
  explicit Writer(const ExperimentConfig& cfg) : cfg_(cfg) {}

  void csv(const std::string& name, const CsvTable& table) {
    if (cfg_.wants("csv")) put(name, table.str());
  }
  void json_file(const std::string& name, json j) {
    if (!cfg_.wants("json")) return;
    put(name, j.dump(2) + "\n");
  }
  void pgm(const std::string& name, const std::string& bytes) {
    if (cfg_.wants("pgm")) put(name, bytes);
  }
  RunSummary summary() const { return summary_; }

 private:
  void put(const std::string& name, const std::string& content) {
    const auto path = cfg_.output_dir / name;
    write_file_atomic(path, content);
    summary_.files.push_back(path);
  }

  const ExperimentConfig& cfg_;
  RunSummary summary_;
};

json metadata(const ExperimentConfig& cfg, double wall_seconds) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(std::string(to_string(m)));
  const auto& s = cfg.solver;
  return {{"experiment", std::string(to_string(cfg.experiment))},
          {"seed", cfg.seed},
          {"trials", cfg.trials},
          {"methods", methods},
          {"model",
           {{"array", std::string(to_string(cfg.model.array))},
            {"n_grid", cfg.model.n_grid},
            {"m", cfg.model.m},
            {"noise_sigma", cfg.model.noise_sigma},
            {"k_rays", cfg.model.k_rays}}},
          {"solver",
           {{"max_iters", s.max_iters},
            {"init_sigma_n", s.init_sigma_n},
            {"init_gamma", s.init_gamma},
            {"init_tau", s.init_tau},
            {"cg_fixed_sigma_n", s.cg_fixed_sigma_n},
            {"cg_fixed_gamma", s.cg_fixed_gamma},
            {"residue_tol_db", s.residue_tol_db},
            {"cond_limit", s.cond_limit},
            {"condition", std::string(to_string(s.condition))},
            {"use_woodbury", s.use_woodbury},
            {"omp_max_atoms", s.omp_max_atoms}}},
          {"git", SPR_GIT_HASH},
          {"timestamp", stamp},
          {"wall_seconds", wall_seconds}};
}

std::string method_suffix(const ExperimentConfig& cfg, Method m) {
  return cfg.methods.size() == 1 ? "" : "_" + std::string(to_string(m));
}

const char* axis_column(const std::string& axis) {
  if (axis == "noise_sigma") return "sigma";
  if (axis == "k_rays") return "k";
  return "m";
}

void run_synth(const ExperimentConfig& cfg, Writer& w, std::ostream& log, json& result) {
  json trials = json::array();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const Trial t = make_trial(cfg.model, cfg.solver, derive_seed(cfg.seed, trial, 0));
    const std::string suffix = cfg.trials == 1 ? "" : "_" + std::to_string(trial);
    CsvTable meas({"element", "index", "re", "im"});
    for (int i = 0; i < t.geometry.size(); ++i)
      meas.add_row({std::to_string(i), std::to_string(t.geometry.indices()[i]),
                    format_number(t.meas.y(i).real()), format_number(t.meas.y(i).imag())});
    CsvTable rays({"bin", "freq", "amp", "phase"});
    for (const auto& r : t.rays)
      rays.add_row({std::to_string(nearest_bin(r.freq, cfg.model.n_grid)), format_number(r.freq),
                    format_number(r.amp), format_number(r.phase)});
    w.csv("measurement" + suffix + ".csv", meas);
    w.csv("rays" + suffix + ".csv", rays);
    trials.push_back({{"trial", trial}, {"geometry", t.geometry.indices()}, {"rays", t.rays.size()}});
    log << "trial " << trial << ": M=" << t.geometry.size() << " rays=" << t.rays.size()
        << " |y|=" << format_number(t.meas.y.norm()) << '\n';
  }
  result["trials"] = trials;
}

void run_solve(const ExperimentConfig& cfg, Writer& w, std::ostream& log, json& result) {
  CsvTable summary({"trial", "method", "residue_db", "mse_db", "sigma_n", "iterations",
                    "termination"});
  json trials = json::array();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const Trial t = make_trial(cfg.model, cfg.solver, derive_seed(cfg.seed, trial, 0));
    log << "trial " << trial << ":";
    for (Method m : cfg.methods) {
      const SolveResult r = solve(m, t.meas, t.dict, t.solver);
      const double res = residue_db(t.meas.y, t.dict.atoms, r.c_hat);
      const double mse = mse_db(t.truth, r.c_hat);
      summary.add_row({std::to_string(trial), std::string(to_string(m)), format_number(res),
                       format_number(mse), format_number(r.sigma_n),
                       std::to_string(r.iterations()), std::string(to_string(r.termination))});
      log << "  " << to_string(m) << " res " << format_number(res) << " dB mse "
          << format_number(mse) << " dB (" << to_string(r.termination) << ")";
      if (trial == 0) {
        const auto sfx = method_suffix(cfg, m);
        w.csv("spectrum" + sfx + ".csv", spectrum_csv(r.c_hat));
        w.csv("trace" + sfx + ".csv", trace_csv(r.trace));
        trials.push_back(to_json(r));
      }
    }
    log << '\n';
  }
  w.csv("summary.csv", summary);
  result["results"] = trials;
}

void run_sweep_experiment(const ExperimentConfig& cfg, Writer& w, std::ostream& log,
                          json& result) {
  const SweepOutcome s = run_sweep(cfg, &log);
  const std::string col = axis_column(s.axis);
  CsvTable mse({col, "method", "mean_mse_db", "stderr"});
  CsvTable sig({col, "method", "mean_sigma_est", "stderr"});
  for (const auto& p : s.points) {
    mse.add_row({format_number(p.value), std::string(to_string(p.method)),
                 format_number(p.mean_mse_db), format_number(p.stderr_mse_db)});
    if (p.method == Method::SBL || p.method == Method::BLRC)
      sig.add_row({format_number(p.value), std::string(to_string(p.method)),
                   format_number(p.mean_sigma_est), format_number(p.stderr_sigma_est)});
  }
  CsvTable raw({col, "trial", "method", "mse_db", "sigma_est", "iterations", "termination"});
  for (const auto& r : s.trials)
    raw.add_row({format_number(cfg.sweep.values[static_cast<std::size_t>(r.value_index)]),
                 std::to_string(r.trial), std::string(to_string(r.method)),
                 format_number(r.mse_db), format_number(r.sigma_est),
                 std::to_string(r.iterations), std::string(to_string(r.termination))});
  w.csv("mse_vs_" + col + ".csv", mse);
  w.csv("sigma_est_vs_" + col + ".csv", sig);
  w.csv("trials.csv", raw);
  json pts = json::array();
  for (const auto& p : s.points)
    pts.push_back({{col, p.value},
                   {"method", std::string(to_string(p.method))},
                   {"mean_mse_db", p.mean_mse_db},
                   {"stderr", p.stderr_mse_db},
                   {"mean_sigma_est", p.mean_sigma_est}});
  result["points"] = pts;
}

void run_landscape(const ExperimentConfig& cfg, Writer& w, std::ostream& log, json& result) {
  const LandscapeInstance inst = reference_landscape_instance();
  const RealVector grid = linspace(cfg.landscape.v_min, cfg.landscape.v_max, cfg.landscape.points);
  const PenaltyKind kinds[] = {PenaltyKind::Lp, PenaltyKind::CG, PenaltyKind::SBL,
                               PenaltyKind::BLRC};
  std::vector<LandscapeCurve> curves;
  for (auto k : kinds) {
    PenaltySpec spec = cfg.landscape.base;
    spec.kind = k;
    curves.push_back(landscape_scan(inst.atoms, inst.c_op, grid, spec));
  }
  CsvTable t({"v", "lp", "cg", "sbl", "blrc"});
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    t.add_row({format_number(grid(i)), format_number(curves[0].penalty(i)),
               format_number(curves[1].penalty(i)), format_number(curves[2].penalty(i)),
               format_number(curves[3].penalty(i))});
  w.csv("landscape.csv", t);
  json minima = json::object();
  for (const auto& c : curves) {
    const auto mins = local_minima(c.penalty);
    std::vector<double> at;
    for (int i : mins) at.push_back(grid(i));
    minima[c.method.label()] = {{"count", mins.size()}, {"v", at}};
    log << c.method.label() << ": " << mins.size() << " local minima\n";
  }
  result["local_minima"] = minima;
}

void run_resolution(const ExperimentConfig& cfg, Writer& w, std::ostream& log, json& result) {
  const int n = cfg.resolution.n_grid;
  const ArrayGeometry geo = make_coprime_array(cfg.model.cpa_p, cfg.model.cpa_q, n);
  const Dictionary dict = build_fourier_dictionary(geo);
  json cases = json::array();
  for (const auto& rc : resolution_cases(n)) {
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const auto seed = derive_seed(cfg.seed, trial, 0);
      const Measurement meas = synth_ray_signal(rc.rays, geo, cfg.resolution.noise_sigma,
                                                substream(seed, 2));
      std::vector<std::string> header{"bin"};
      std::vector<CxVector> spectra;
      json per_method = json::object();
      log << "trial " << trial << " " << rc.name << ":";
      for (Method m : cfg.methods) {
        SolverConfig sc = cfg.solver;
        sc.init_c_seed = substream(seed, 3);
        const SolveResult r = solve(m, meas, dict, sc);
        const auto peaks = spectrum_peaks(r.c_hat, 495, 515, cfg.resolution.peak_floor_db);
        per_method[std::string(to_string(m))] = {{"peaks", peaks},
                                                 {"termination", std::string(to_string(r.termination))},
                                                 {"iterations", r.iterations()}};
        log << "  " << to_string(m) << " peaks=" << peaks.size();
        header.emplace_back(to_string(m));
        spectra.push_back(r.c_hat);
      }
      log << '\n';
      if (trial == 0) {
        CsvTable t(header);
        for (int k = 0; k < n; ++k) {
          std::vector<std::string> row{std::to_string(k)};
          for (const auto& c : spectra) {
            const double peak = c.cwiseAbs().maxCoeff();
            row.push_back(format_number(peak > 0 ? to_db_amplitude(std::abs(c(k)) / peak)
                                                 : kMinusInfDb));
          }
          t.add_row(std::move(row));
        }
        w.csv("resolution_" + rc.name + ".csv", t);
      }
      cases.push_back({{"case", rc.name}, {"trial", trial}, {"methods", per_method}});
    }
  }
  result["cases"] = cases;
}

void run_radar_experiment(const ExperimentConfig& cfg, Writer& w, std::ostream& log,
                          json& result) {
  CsvTable scores({"trial", "method", "detected", "missed", "spurious"});
  json runs = json::array();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const RadarRun run = run_radar(cfg, derive_seed(cfg.seed, trial, 0), cfg.jobs);
    log << "trial " << trial << ": " << run.bins.size() << " range bins";
    for (const auto& [m, sc] : run.scores) {
      scores.add_row({std::to_string(trial), std::string(to_string(m)),
                      std::to_string(sc.detected), std::to_string(sc.missed),
                      std::to_string(sc.spurious)});
      log << "  " << to_string(m) << " " << sc.detected << "/" << run.scene.size() << " spur "
          << sc.spurious;
    }
    log << '\n';
    if (trial == 0) {
      for (const auto& [m, img] : run.images) {
        const std::string base = "image_" + std::string(to_string(m));
        w.csv(base + ".csv", image_csv(img));
        w.json_file(base + ".json", image_axes_json(img));
        w.pgm(base + ".pgm", image_pgm(img));
      }
      w.csv("scene.csv", [&] {
        CsvTable t({"range_m", "angle_deg", "amp_re", "amp_im", "range_bin", "angle_bin"});
        for (const auto& s : run.scene)
          t.add_row({format_number(s.range_m), format_number(s.angle_deg),
                     format_number(s.amplitude.real()), format_number(s.amplitude.imag()),
                     std::to_string(std::lround(run.params.range_bin(s.range_m))),
                     std::to_string(angle_to_grid(s.angle_deg, run.params))});
        return t;
      }());
    }
    json r = {{"trial", trial}, {"bins", run.bins}};
    for (const auto& [m, sc] : run.scores)
      r[std::string(to_string(m))] = {
          {"detected", sc.detected}, {"missed", sc.missed}, {"spurious", sc.spurious}};
    runs.push_back(r);
  }
  w.csv("scores.csv", scores);
  result["runs"] = runs;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Writer w(config);
  json result;
  switch (config.experiment) {
    case Experiment::Synth: run_synth(config, w, log, result); break;
    case Experiment::Solve: run_solve(config, w, log, result); break;
    case Experiment::SweepNoise:
    case Experiment::SweepK:
    case Experiment::SweepM: run_sweep_experiment(config, w, log, result); break;
    case Experiment::Landscape: run_landscape(config, w, log, result); break;
    case Experiment::Resolution: run_resolution(config, w, log, result); break;
    case Experiment::Radar: run_radar_experiment(config, w, log, result); break;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result["metadata"] = metadata(config, wall);
  w.json_file("result.json", result);
  return w.summary();
}

}  // namespace spr
