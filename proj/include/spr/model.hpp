#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "spr/linalg.hpp"

namespace spr {

/// One complex exponential component of a synthetic measurement.
///
/// `freq` is in cycles per element, so an element at position i sees phase
/// 2π·freq·i. The grid frequency of dictionary column k is k/N.
struct Ray {
  double freq = 0.0;
  double amp = 0.0;
  double phase = 0.0;
};

enum class ArrayKind { Full, SPA, CPA, Custom };

std::string_view to_string(ArrayKind kind);
ArrayKind array_kind_from_string(std::string_view name);

/// Element positions of a (possibly thinned) uniform linear array, in units
/// of the minimum spacing, on a grid of `n_grid` slots.
class ArrayGeometry {
 public:
  ArrayGeometry(int n_grid, std::vector<int> indices, ArrayKind kind = ArrayKind::Custom);

  static ArrayGeometry full(int n_grid);

  int n_grid() const { return n_grid_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& indices() const { return indices_; }
  ArrayKind kind() const { return kind_; }

  bool operator==(const ArrayGeometry&) const = default;

 private:
  int n_grid_;
  std::vector<int> indices_;
  ArrayKind kind_;
};

/// Fourier dictionary: atoms(r, k) = exp(j·2π·k·indices[r]/N).
struct Dictionary {
  CxMatrix atoms;
  ArrayGeometry geometry;
  RealVector grid_freqs;

  int rows() const { return static_cast<int>(atoms.rows()); }
  int cols() const { return static_cast<int>(atoms.cols()); }
};

struct Measurement {
  CxVector y;
  ArrayGeometry geometry;
  std::optional<std::vector<Ray>> truth;
  std::optional<double> noise_sigma_true;
};

Dictionary build_fourier_dictionary(const ArrayGeometry& geometry);

/// Random thinning of a length-n_grid ULA to m elements. Index 0 is always
/// kept as the aperture reference.
ArrayGeometry make_sparse_array(int n_grid, int m, std::uint64_t seed);

/// Union of {0, q, .., (p-1)q} and {0, p, .., (q-1)p}; p+q-1 elements.
ArrayGeometry make_coprime_array(int p, int q, int n_grid);

/// Sum of rays sampled at the geometry's element positions plus circular
/// complex Gaussian noise with E|ε|² = noise_sigma².
Measurement synth_ray_signal(const std::vector<Ray>& rays, const ArrayGeometry& geometry,
                             double noise_sigma, std::uint64_t seed);

/// The six rays used throughout the benchmark studies.
std::vector<Ray> six_ray_rays();

/// Nearest grid bin for a normalized frequency, wrapped into [0, N).
int nearest_bin(double freq, int n_grid);

/// Copies `rays` with every frequency moved onto the nearest k/N.
std::vector<Ray> snap_to_grid(std::vector<Ray> rays, int n_grid);

/// Length-N coefficient vector for on-grid rays (amp·e^{jφ} at each bin).
CxVector rays_to_coefficients(const std::vector<Ray>& rays, int n_grid);

/// Random ray set: distinct grid frequencies at least `min_separation` bins
/// apart (circularly), amplitudes U[0.5, 1], phases U[0, 2π).
std::vector<Ray> random_rays(int k, int n_grid, int min_separation, std::uint64_t seed);

}  // namespace spr
