#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include <fftw3.h>
#include <spdlog/spdlog.h>

#include "spr/radar.hpp"

namespace spr {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double deg) { return deg * kPi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Signed grid index in [−N/2, N/2) for dictionary column k.
int wrapped(int k, int n) { return k >= (n + 1) / 2 ? k - n : k; }

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RadarParams RadarParams::table_four() { return from_carrier(79e9, 10e6 / 1e-6, 20e6, 1024, 256); }

RadarParams RadarParams::from_carrier(double fc, double alpha, double fs, int ns, int n_grid) {
  RadarParams p;
  p.fc = fc;
  p.alpha = alpha;
  p.fs = fs;
  p.ns = ns;
  p.n_grid = n_grid;
  p.c_light = kSpeedOfLight;
  p.wavelength = p.c_light / fc;
  p.d = p.wavelength / 2.0;
  return p;
}

void RadarParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("RadarParams: ") + name + " must be positive");
  };
  positive(fc, "fc");
  positive(alpha, "alpha");
  positive(fs, "fs");
  positive(wavelength, "wavelength");
  positive(d, "d");
  positive(c_light, "c_light");
  if (ns < 2) throw std::invalid_argument("RadarParams: ns must be at least 2");
  if (n_grid < 2) throw std::invalid_argument("RadarParams: n_grid must be at least 2");
  if (std::abs(wavelength * fc / c_light - 1.0) > 1e-6)
    throw std::invalid_argument("RadarParams: wavelength inconsistent with fc");
}

std::vector<PointScatterer> reflector_grid(const std::vector<double>& ranges_m,
                                           const std::vector<double>& angles_deg, double a0) {
  std::vector<PointScatterer> out;
  for (double r : ranges_m)
    for (double a : angles_deg) out.push_back({r, a, Cx(a0 / r, 0.0)});
  return out;
}

std::vector<PointScatterer> corner_reflector_scene(double a0) {
  return reflector_grid({65.0, 95.0, 105.0}, {-21.0, -14.0, -7.0, 0.0, 7.0, 14.0, 21.0}, a0);
}

std::vector<PointScatterer> car_cluster_scene(double a0) {
  auto scene = corner_reflector_scene(a0);
  // Car centres as [x, y] with y along boresight; angle positive towards +x.
  const double cars[5][2] = {{12.0, 70.0}, {-4.1, 75.0}, {-0.1, 80.1}, {4.21, 86.0}, {4.15, 74.0}};
  const double offsets[3][2] = {{0.0, -2.0}, {-0.8, 0.0}, {0.8, 1.5}};
  for (const auto& car : cars)
    for (const auto& off : offsets) {
      const double x = car[0] + off[0];
      const double y = car[1] + off[1];
      const double r = std::hypot(x, y);
      scene.push_back({r, rad2deg(std::atan2(x, y)), Cx(a0 / r, 0.0)});
    }
  return scene;
}

CxMatrix simulate_adc(const std::vector<PointScatterer>& scene, const RadarParams& params,
                      const ArrayGeometry& geometry, double noise_sigma, std::uint64_t seed) {
  params.validate();
  if (noise_sigma < 0.0) throw std::invalid_argument("simulate_adc: noise_sigma must be >= 0");
  for (std::size_t l = 0; l < scene.size(); ++l) {
    const auto& s = scene[l];
    if (!(s.range_m > 0.0) || params.beat_frequency(s.range_m) >= params.fs / 2.0)
      throw std::invalid_argument("simulate_adc: scatterer " + std::to_string(l) + " at range " +
                                  std::to_string(s.range_m) + " m aliases (beat >= fs/2)");
    if (!(std::abs(s.angle_deg) < 90.0))
      throw std::invalid_argument("simulate_adc: scatterer " + std::to_string(l) +
                                  " angle outside (-90, 90)");
  }

  const int ns = params.ns;
  const int m = geometry.size();
  const double dt = params.sample_interval();
  CxMatrix adc = CxMatrix::Zero(ns, m);
  for (const auto& s : scene) {
    const double f_beat = params.beat_frequency(s.range_m) * dt;
    const double f_space = params.d * std::sin(deg2rad(s.angle_deg)) / params.wavelength;
    const double carrier = 2.0 * s.range_m / params.wavelength;
    for (int i = 0; i < m; ++i) {
      const double base = carrier - f_space * geometry.indices()[i];
      for (int n = 0; n < ns; ++n) {
        // Reduce the cycle count before scaling by 2π to keep the phase exact.
        double cycles = f_beat * n + base;
        cycles -= std::floor(cycles);
        adc(n, i) += s.amplitude * std::polar(1.0, 2.0 * kPi * cycles);
      }
    }
  }

  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise_sigma / std::numbers::sqrt2);
    for (int i = 0; i < m; ++i)
      for (int n = 0; n < ns; ++n) {
        const double re = g(rng);
        const double im = g(rng);
        adc(n, i) += Cx(re, im);
      }
  }
  return adc;
}

CxMatrix range_transform(const CxMatrix& adc) {
  const int ns = static_cast<int>(adc.rows());
  const int m = static_cast<int>(adc.cols());
  CxMatrix out(ns, m);
  if (ns == 0 || m == 0) return out;
  CxMatrix in = adc;  // FFTW may scribble on the input while planning
  auto* ip = reinterpret_cast<fftw_complex*>(in.data());
  auto* op = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_many_dft(1, &ns, m, ip, nullptr, 1, ns, op, nullptr, 1, ns, FFTW_FORWARD,
                              FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("range_transform: FFTW planning failed");
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<int> select_range_bins(const CxMatrix& range_spectrum, double threshold_db) {
  const RealVector e = range_spectrum.cwiseAbs2().rowwise().sum();
  std::vector<int> bins;
  if (e.size() == 0) return bins;
  const double floor = e.maxCoeff() * std::pow(10.0, -threshold_db / 10.0);
  const Eigen::Index n = e.size();
  for (Eigen::Index p = 0; p < n; ++p) {
    if (e(p) < floor) continue;
    const bool left = p == 0 || e(p) > e(p - 1);
    const bool right = p + 1 == n || e(p) >= e(p + 1);
    if (left && right) bins.push_back(static_cast<int>(p));
  }
  return bins;
}

PhysicalCoord to_physical(int p, int k, const RadarParams& params) {
  PhysicalCoord out;
  out.range_m = p * params.range_cell();
  // Column k holds spatial frequency k/N cycles per element; the full aperture
  // is L = d·N, so sinθ = −λ·k/(d·N) with k taken in [−N/2, N/2).
  const double s =
      -params.wavelength * wrapped(k, params.n_grid) / (params.d * params.n_grid);
  if (std::abs(s) > 1.0) {
    out.visible = false;
    out.angle_deg = s > 0 ? 90.0 : -90.0;
    return out;
  }
  out.angle_deg = rad2deg(std::asin(s));
  return out;
}

int angle_to_grid(double angle_deg, const RadarParams& params) {
  const double f = -params.d * std::sin(deg2rad(angle_deg)) / params.wavelength;
  return nearest_bin(f, params.n_grid);
}

int RangeAzimuthImage::column_of(int k) const {
  const auto it = std::find(column_bin.begin(), column_bin.end(), k);
  return it == column_bin.end() ? -1 : static_cast<int>(it - column_bin.begin());
}

RangeAzimuthImage angle_recover(const CxMatrix& range_spectrum, const std::vector<int>& bins,
                                Method solver, const Dictionary& dict, const SolverConfig& config,
                                const RadarParams& params, const AngleRecoverOptions& options) {
  const int ns = static_cast<int>(range_spectrum.rows());
  const int n = dict.cols();
  if (range_spectrum.cols() != dict.rows())
    throw std::invalid_argument("angle_recover: spectrum width differs from the array size");
  if (n != params.n_grid)
    throw std::invalid_argument("angle_recover: dictionary grid differs from params.n_grid");
  for (int p : bins)
    if (p < 0 || p >= ns) throw std::invalid_argument("angle_recover: bin out of range");
  config.validate();

  RangeAzimuthImage img;
  img.solver_used = std::string(to_string(solver));
  img.dynamic_range_db = options.dynamic_range_db;
  img.selected_bins = bins;

  // Columns in ascending azimuth, invisible ones left out.
  std::vector<std::pair<double, int>> cols;
  for (int k = 0; k < n; ++k) {
    const PhysicalCoord pc = to_physical(0, k, params);
    if (pc.visible) cols.emplace_back(pc.angle_deg, k);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end(),
                         [](const auto& a, const auto& b) { return a.first == b.first; }),
             cols.end());
  img.angle_axis_deg.resize(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    img.angle_axis_deg(static_cast<Eigen::Index>(j)) = cols[j].first;
    img.column_bin.push_back(cols[j].second);
  }
  img.range_axis_m.resize(ns);
  for (int p = 0; p < ns; ++p) img.range_axis_m(p) = to_physical(p, 0, params).range_m;

  RealMatrix lin = RealMatrix::Zero(ns, n);
  std::vector<char> failed(bins.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < bins.size(); b = next++) {
      const int p = bins[b];
      const Measurement meas{range_spectrum.row(p).transpose(), dict.geometry, std::nullopt,
                             std::nullopt};
      try {
        const SolveResult res = solve(solver, meas, dict, config);
        lin.row(p) = res.c_hat.cwiseAbs().transpose();
      } catch (const std::exception& e) {
        spdlog::warn("angle_recover: range bin {} failed: {}", p, e.what());
        failed[b] = 1;
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(bins.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t b = 0; b < bins.size(); ++b)
    if (failed[b]) img.failed_bins.push_back(bins[b]);

  const double peak = lin.maxCoeff();
  img.magnitudes_db = RealMatrix::Constant(ns, static_cast<Eigen::Index>(cols.size()),
                                           -options.dynamic_range_db);
  if (peak > 0.0)
    for (int p = 0; p < ns; ++p)
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const double v = lin(p, cols[j].second);
        if (v > 0.0)
          img.magnitudes_db(p, static_cast<Eigen::Index>(j)) =
              std::max(20.0 * std::log10(v / peak), -options.dynamic_range_db);
      }
  return img;
}

PixelScore score_image(const RangeAzimuthImage& image, const std::vector<PointScatterer>& scene,
                       const RadarParams& params, double threshold_db, int tol_cells) {
  const int n = params.n_grid;
  struct Target {
    int p;
    int k;
  };
  std::vector<Target> targets;
  for (const auto& s : scene)
    targets.push_back({static_cast<int>(std::lround(params.range_bin(s.range_m))),
                       angle_to_grid(s.angle_deg, params)});

  auto near = [&](int p, int k, const Target& t) {
    int dk = std::abs(k - t.k);
    dk = std::min(dk, n - dk);
    return std::abs(p - t.p) <= tol_cells && dk <= tol_cells;
  };

  PixelScore score;
  std::vector<char> hit(targets.size(), 0);
  for (Eigen::Index p = 0; p < image.magnitudes_db.rows(); ++p)
    for (Eigen::Index j = 0; j < image.magnitudes_db.cols(); ++j) {
      if (image.magnitudes_db(p, j) <= -threshold_db) continue;
      const int k = image.column_bin[static_cast<std::size_t>(j)];
      bool matched = false;
      for (std::size_t t = 0; t < targets.size(); ++t)
        if (near(static_cast<int>(p), k, targets[t])) {
          hit[t] = 1;
          matched = true;
        }
      if (!matched) ++score.spurious;
    }
  for (char h : hit) (h ? score.detected : score.missed)++;
  return score;
}

}  // namespace spr
