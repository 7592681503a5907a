#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spr/linalg.hpp"
#include "spr/model.hpp"
#include "spr/solvers.hpp"

namespace spr {

inline constexpr double kSpeedOfLight = 2.99792458e8;

struct RadarParams {
  double fc = 79e9;
  double alpha = 10e6 / 1e-6;  // Hz/s
  double fs = 20e6;
  int ns = 1024;
  double wavelength = kSpeedOfLight / 79e9;
  double d = kSpeedOfLight / 79e9 / 2.0;
  int n_grid = 256;
  double c_light = kSpeedOfLight;

  /// 79 GHz, 10 MHz/µs, 20 MHz ADC, 1024 samples, half-wavelength spacing.
  static RadarParams table_four();
  /// Recomputes wavelength and d = λ/2 from fc and c_light.
  static RadarParams from_carrier(double fc, double alpha, double fs, int ns, int n_grid);

  void validate() const;

  double sample_interval() const { return 1.0 / fs; }
  double beat_frequency(double range_m) const { return 2.0 * range_m * alpha / c_light; }
  /// Fractional FFT bin of a target at range_m.
  double range_bin(double range_m) const { return beat_frequency(range_m) / fs * ns; }
  /// Metres per range bin.
  double range_cell() const { return c_light * fs / (2.0 * alpha * ns); }
  double max_range() const { return c_light * fs / (4.0 * alpha); }
};

struct PointScatterer {
  double range_m = 0.0;
  double angle_deg = 0.0;
  Cx amplitude{1.0, 0.0};
};

/// Fixed reflectors at every (range, angle) pair with |a| = a0 / range.
std::vector<PointScatterer> reflector_grid(const std::vector<double>& ranges_m,
                                           const std::vector<double>& angles_deg, double a0);

/// The 21 corner reflectors: {65, 95, 105} m × {−21, …, 21}° in 7° steps.
std::vector<PointScatterer> corner_reflector_scene(double a0 = 65.0);

/// Corner reflectors plus five 3-point clusters standing in for the cars.
std::vector<PointScatterer> car_cluster_scene(double a0 = 65.0);

/// ADC cube for one chirp, Ns rows by one column per array element.
/// Noise is circular complex Gaussian with E|ε|² = noise_sigma².
CxMatrix simulate_adc(const std::vector<PointScatterer>& scene, const RadarParams& params,
                      const ArrayGeometry& geometry, double noise_sigma, std::uint64_t seed);

/// Unnormalized forward DFT of every column (FFTW).
CxMatrix range_transform(const CxMatrix& adc);

/// Local maxima of Σ_i|y(p,i)|² within threshold_db of the strongest bin.
std::vector<int> select_range_bins(const CxMatrix& range_spectrum, double threshold_db);

struct PhysicalCoord {
  double range_m = 0.0;
  double angle_deg = 0.0;
  bool visible = true;
};

/// Range of FFT bin p and azimuth of dictionary column k.
PhysicalCoord to_physical(int p, int k, const RadarParams& params);

/// Dictionary column whose azimuth is nearest angle_deg.
int angle_to_grid(double angle_deg, const RadarParams& params);

struct RangeAzimuthImage {
  /// Rows are range bins 0..Ns−1, columns ascending azimuth. dB relative to
  /// the image maximum, floored at −dynamic_range_db.
  RealMatrix magnitudes_db;
  RealVector range_axis_m;
  RealVector angle_axis_deg;
  /// Dictionary column shown in each image column.
  std::vector<int> column_bin;
  std::vector<int> selected_bins;
  std::vector<int> failed_bins;
  std::string solver_used;
  double dynamic_range_db = 70.0;

  /// Image column holding dictionary column k.
  int column_of(int k) const;
};

struct AngleRecoverOptions {
  double dynamic_range_db = 70.0;
  int jobs = 1;
};

RangeAzimuthImage angle_recover(const CxMatrix& range_spectrum, const std::vector<int>& bins,
                                Method solver, const Dictionary& dict, const SolverConfig& config,
                                const RadarParams& params, const AngleRecoverOptions& options = {});

struct PixelScore {
  int detected = 0;  // true targets with a pixel above threshold within tolerance
  int missed = 0;
  int spurious = 0;  // pixels above threshold not near any true target
};

/// Scores an image against the scene: a target is hit when some pixel above
/// −threshold_db lies within ±tol_cells of its (range bin, angle bin).
PixelScore score_image(const RangeAzimuthImage& image, const std::vector<PointScatterer>& scene,
                       const RadarParams& params, double threshold_db = 30.0, int tol_cells = 1);

}  // namespace spr
