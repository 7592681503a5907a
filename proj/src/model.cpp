#include "spr/model.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace spr {

std::string_view to_string(ArrayKind kind) {
  switch (kind) {
    case ArrayKind::Full: return "full";
    case ArrayKind::SPA: return "spa";
    case ArrayKind::CPA: return "cpa";
    case ArrayKind::Custom: return "custom";
  }
  return "custom";
}

ArrayKind array_kind_from_string(std::string_view name) {
  if (name == "full") return ArrayKind::Full;
  if (name == "spa") return ArrayKind::SPA;
  if (name == "cpa") return ArrayKind::CPA;
  if (name == "custom") return ArrayKind::Custom;
  throw std::invalid_argument("unknown array kind '" + std::string(name) + "'");
}

ArrayGeometry::ArrayGeometry(int n_grid, std::vector<int> indices, ArrayKind kind)
    : n_grid_(n_grid), indices_(std::move(indices)), kind_(kind) {
  if (n_grid_ < 1) throw std::invalid_argument("geometry: n_grid must be positive");
  if (indices_.empty()) throw std::invalid_argument("geometry: at least one element required");
  for (std::size_t r = 0; r < indices_.size(); ++r) {
    if (indices_[r] < 0 || indices_[r] >= n_grid_)
      throw std::invalid_argument("geometry: index " + std::to_string(indices_[r]) +
                                  " outside [0, " + std::to_string(n_grid_ - 1) + "]");
    if (r > 0 && indices_[r] <= indices_[r - 1])
      throw std::invalid_argument("geometry: indices must be strictly increasing");
  }
}

ArrayGeometry ArrayGeometry::full(int n_grid) {
  std::vector<int> idx(static_cast<std::size_t>(std::max(n_grid, 0)));
  std::iota(idx.begin(), idx.end(), 0);
  return ArrayGeometry(n_grid, std::move(idx), ArrayKind::Full);
}

Dictionary build_fourier_dictionary(const ArrayGeometry& geometry) {
  const int m = geometry.size();
  const int n = geometry.n_grid();
  Dictionary dict{CxMatrix(m, n), geometry, RealVector(n)};
  for (int k = 0; k < n; ++k) dict.grid_freqs(k) = static_cast<double>(k) / n;
  for (int r = 0; r < m; ++r) {
    // Reduce k·i mod N before scaling so large grids keep full phase accuracy.
    const long long pos = geometry.indices()[static_cast<std::size_t>(r)];
    for (int k = 0; k < n; ++k) {
      const long long cycles = (pos * k) % n;
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(cycles) / n;
      dict.atoms(r, k) = Cx(std::cos(theta), std::sin(theta));
    }
  }
  return dict;
}

ArrayGeometry make_sparse_array(int n_grid, int m, std::uint64_t seed) {
  if (n_grid < 1) throw std::invalid_argument("make_sparse_array: n_grid must be positive");
  if (m < 1 || m > n_grid)
    throw std::invalid_argument("make_sparse_array: need 1 <= m <= n_grid, got m=" +
                                std::to_string(m));
  if (m == n_grid) {
    auto full = ArrayGeometry::full(n_grid);
    return ArrayGeometry(n_grid, full.indices(), ArrayKind::SPA);
  }
  std::vector<int> pool(static_cast<std::size_t>(n_grid - 1));
  std::iota(pool.begin(), pool.end(), 1);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates over {1..N-1}; index 0 is the anchor.
  for (int i = 0; i < m - 1; ++i) {
    std::uniform_int_distribution<int> pick(i, n_grid - 2);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<int> idx{0};
  idx.insert(idx.end(), pool.begin(), pool.begin() + (m - 1));
  std::sort(idx.begin(), idx.end());
  return ArrayGeometry(n_grid, std::move(idx), ArrayKind::SPA);
}

ArrayGeometry make_coprime_array(int p, int q, int n_grid) {
  if (p < 1 || q < 1) throw std::invalid_argument("make_coprime_array: p, q must be positive");
  if (std::gcd(p, q) != 1)
    throw std::invalid_argument("make_coprime_array: p=" + std::to_string(p) +
                                " and q=" + std::to_string(q) + " are not coprime");
  std::vector<int> idx;
  for (int i = 0; i < p; ++i) idx.push_back(i * q);
  for (int i = 0; i < q; ++i) idx.push_back(i * p);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  if (idx.back() >= n_grid)
    throw std::invalid_argument("make_coprime_array: element " + std::to_string(idx.back()) +
                                " does not fit in grid of " + std::to_string(n_grid));
  return ArrayGeometry(n_grid, std::move(idx), ArrayKind::CPA);
}

Measurement synth_ray_signal(const std::vector<Ray>& rays, const ArrayGeometry& geometry,
                             double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synth_ray_signal: noise_sigma < 0");
  const int m = geometry.size();
  CxVector y = CxVector::Zero(m);
  for (const auto& ray : rays) {
    for (int r = 0; r < m; ++r) {
      const double i = geometry.indices()[static_cast<std::size_t>(r)];
      y(r) += std::polar(ray.amp, 2.0 * std::numbers::pi * ray.freq * i + ray.phase);
    }
  }
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma / std::numbers::sqrt2);
    for (int r = 0; r < m; ++r) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      y(r) += Cx(re, im);
    }
  }
  return Measurement{std::move(y), geometry, rays, noise_sigma};
}

std::vector<Ray> six_ray_rays() {
  return {
      {0.1212, 1.0, 5.1191},   {0.1413, 0.9254, 5.6913}, {0.3132, 0.7331, 0.7979},
      {0.331, 0.5678, 5.7389}, {0.41, 0.6, 3.9732},      {0.465, 0.8, 0.6129},
  };
}

int nearest_bin(double freq, int n_grid) {
  const long long k = std::llround(freq * n_grid);
  const long long wrapped = ((k % n_grid) + n_grid) % n_grid;
  return static_cast<int>(wrapped);
}

std::vector<Ray> snap_to_grid(std::vector<Ray> rays, int n_grid) {
  for (auto& ray : rays) ray.freq = static_cast<double>(nearest_bin(ray.freq, n_grid)) / n_grid;
  return rays;
}

CxVector rays_to_coefficients(const std::vector<Ray>& rays, int n_grid) {
  CxVector c = CxVector::Zero(n_grid);
  for (const auto& ray : rays) c(nearest_bin(ray.freq, n_grid)) += std::polar(ray.amp, ray.phase);
  return c;
}

std::vector<Ray> random_rays(int k, int n_grid, int min_separation, std::uint64_t seed) {
  if (k < 0) throw std::invalid_argument("random_rays: k must be nonnegative");
  if (static_cast<long long>(k) * std::max(min_separation, 1) > n_grid)
    throw std::invalid_argument("random_rays: cannot place " + std::to_string(k) +
                                " rays with separation " + std::to_string(min_separation));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bin_dist(0, n_grid - 1);
  std::uniform_real_distribution<double> amp_dist(0.5, 1.0);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

  auto circular_gap = [n_grid](int a, int b) {
    const int d = std::abs(a - b);
    return std::min(d, n_grid - d);
  };
  std::vector<int> bins;
  int attempts = 0;
  while (static_cast<int>(bins.size()) < k) {
    if (++attempts > 100000) throw std::runtime_error("random_rays: placement did not terminate");
    const int candidate = bin_dist(rng);
    const bool ok = std::all_of(bins.begin(), bins.end(), [&](int b) {
      return circular_gap(b, candidate) >= min_separation;
    });
    if (ok) bins.push_back(candidate);
  }
  std::vector<Ray> rays;
  rays.reserve(bins.size());
  for (int b : bins) {
    const double amp = amp_dist(rng);
    const double phase = phase_dist(rng);
    rays.push_back({static_cast<double>(b) / n_grid, amp, phase});
  }
  return rays;
}

}  // namespace spr
