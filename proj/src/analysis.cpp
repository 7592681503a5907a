#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gsl/gsl_integration.h>

#include "spr/analysis.hpp"

namespace spr {

double residue_db(const CxVector& y, const CxMatrix& atoms, const CxVector& c) {
  if (atoms.rows() != y.size() || atoms.cols() != c.size())
    throw std::invalid_argument("residue_db: inconsistent shapes");
  return to_db_amplitude((y - atoms * c).norm());
}

double normalized_mse(const CxVector& c_true, const CxVector& c_est) {
  if (c_true.size() != c_est.size() || c_true.size() == 0)
    throw std::invalid_argument("normalized_mse: vectors must be nonempty and equal length");
  const double pt = c_true.cwiseAbs().maxCoeff();
  const double pe = c_est.cwiseAbs().maxCoeff();
  if (!(pt > 0.0)) throw std::invalid_argument("normalized_mse: reference spectrum is all zeros");
  if (!(pe > 0.0)) throw std::invalid_argument("normalized_mse: estimated spectrum is all zeros");
  const double err = (c_true / pt - c_est / pe).squaredNorm() / static_cast<double>(c_true.size());
  return to_db_power(err);
}

std::pair<double, double> support_precision_recall(const std::vector<int>& truth,
                                                   const std::vector<int>& estimated,
                                                   int n_grid, int tolerance) {
  auto near = [&](int a, int b) {
    int d = std::abs(a - b);
    if (n_grid > 0) d = std::min(d, n_grid - d);
    return d <= tolerance;
  };
  auto hits = [&](const std::vector<int>& from, const std::vector<int>& to) {
    int count = 0;
    for (int a : from)
      for (int b : to)
        if (near(a, b)) {
          ++count;
          break;
        }
    return count;
  };
  const double precision =
      estimated.empty() ? (truth.empty() ? 1.0 : 0.0)
                        : static_cast<double>(hits(estimated, truth)) / estimated.size();
  const double recall =
      truth.empty() ? 1.0 : static_cast<double>(hits(truth, estimated)) / truth.size();
  return {precision, recall};
}

double expectation_identity_check(const CxMatrix& atoms, const CxVector& mean, const CxMatrix& cov,
                                  const CxVector& y, int n_samples, std::uint64_t seed) {
  const Eigen::Index n = mean.size();
  if (atoms.cols() != n || cov.rows() != n || cov.cols() != n || atoms.rows() != y.size())
    throw std::invalid_argument("expectation_identity_check: inconsistent shapes");
  if (n_samples < 1) throw std::invalid_argument("expectation_identity_check: n_samples < 1");

  const double closed =
      (y - atoms * mean).squaredNorm() + (atoms * cov * atoms.adjoint()).trace().real();

  // Square root through the eigen-decomposition so semidefinite covariances work.
  Eigen::SelfAdjointEigenSolver<CxMatrix> eig(cov);
  const RealVector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CxMatrix b = atoms * eig.eigenvectors() * root.cast<Cx>().asDiagonal();
  const CxVector r0 = y - atoms * mean;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::numbers::sqrt2 / 2.0);
  CxVector z(n);
  double acc = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      z(i) = Cx(re, im);
    }
    acc += (r0 - b * z).squaredNorm();
  }
  const double mc = acc / n_samples;
  if (!(closed > 0.0)) return std::abs(mc);
  return std::abs(mc - closed) / closed;
}

double quadratic_min_identity_check(const CxMatrix& atoms, const CxVector& y,
                                    const RealVector& sigma_diag, double sigma_n_sq) {
  const Eigen::Index m = atoms.rows();
  const Eigen::Index n = atoms.cols();
  if (y.size() != m || sigma_diag.size() != n)
    throw std::invalid_argument("quadratic_min_identity_check: inconsistent shapes");
  if (!(sigma_diag.array() > 0.0).all() || !(sigma_n_sq > 0.0))
    throw std::invalid_argument("quadratic_min_identity_check: Sigma and sigma_n_sq must be > 0");

  CxMatrix outer = atoms * sigma_diag.cwiseInverse().cast<Cx>().asDiagonal() * atoms.adjoint();
  outer.diagonal().array() += sigma_n_sq;
  const Eigen::LLT<CxMatrix> lo(outer);
  if (lo.info() != Eigen::Success)
    throw IllConditionedError("quadratic_min_identity_check: outer matrix not positive definite",
                              std::numeric_limits<double>::infinity());
  const double lhs = y.dot(lo.solve(y)).real();

  CxMatrix inner = atoms.adjoint() * atoms;
  inner.diagonal() += (sigma_n_sq * sigma_diag).cast<Cx>();
  const Eigen::LLT<CxMatrix> li(inner);
  if (li.info() != Eigen::Success)
    throw IllConditionedError("quadratic_min_identity_check: inner matrix not positive definite",
                              std::numeric_limits<double>::infinity());
  const CxVector c_o = li.solve(atoms.adjoint() * y);
  const double rhs = (y - atoms * c_o).squaredNorm() / sigma_n_sq +
                     (c_o.cwiseAbs2().array() * sigma_diag.array()).sum();
  if (lhs == 0.0) return std::abs(rhs);
  return std::abs(lhs - rhs) / std::abs(lhs);
}

double gauss_hermite_log_expectation(double tau, double mean, double var, int n_points) {
  if (!(var >= 0.0)) throw std::invalid_argument("gauss_hermite: var must be nonnegative");
  if (n_points < 1) throw std::invalid_argument("gauss_hermite: n_points must be positive");
  if (var == 0.0) return std::log1p(tau * mean * mean);

  // Weight exp(-b(x-a)²) with b = 1/(2·var) turns the quadrature into a
  // Gaussian expectation after dividing by √(2π·var).
  gsl_integration_fixed_workspace* ws = gsl_integration_fixed_alloc(
      gsl_integration_fixed_hermite, static_cast<std::size_t>(n_points), mean, 0.5 / var, 0.0, 0.0);
  if (ws == nullptr) throw std::runtime_error("gauss_hermite: workspace allocation failed");
  const double* x = gsl_integration_fixed_nodes(ws);
  const double* w = gsl_integration_fixed_weights(ws);
  double sum = 0.0;
  for (int i = 0; i < n_points; ++i) sum += w[i] * std::log1p(tau * x[i] * x[i]);
  gsl_integration_fixed_free(ws);
  return sum / std::sqrt(2.0 * std::numbers::pi * var);
}

double taylor_expectation_check(double eta_hat, double xi_hat, double tau, double mean, double var,
                                int n_points) {
  if (!(var >= 0.0)) throw std::invalid_argument("taylor_expectation_check: var must be >= 0");
  if (eta_hat < 0.0) eta_hat = mean * mean + var;
  if (xi_hat < 0.0) xi_hat = 4.0 * mean * mean * var + 2.0 * var * var;
  const double d = 1.0 + tau * eta_hat;
  const double approx = std::log(d) - tau * tau * xi_hat / (2.0 * d * d);
  return std::abs(approx - gauss_hermite_log_expectation(tau, mean, var, n_points));
}

RealVector linspace(double lo, double hi, int count) {
  if (count < 2) throw std::invalid_argument("linspace: count must be >= 2");
  RealVector v(count);
  for (int i = 0; i < count; ++i) v(i) = lo + (hi - lo) * i / (count - 1);
  return v;
}

}  // namespace spr
