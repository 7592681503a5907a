#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <spdlog/fmt/fmt.h>

#include "spr/analysis.hpp"
#include "spr/solvers.hpp"

namespace spr {

namespace {

// ln|I + A·diag(1/prec)·Aᴴ/σ²|; the term M·ln σ² is dropped so that every
// penalty stays positive.
double log_det_data(const CxMatrix& a, const RealVector& prec, double s2) {
  CxMatrix s = a * prec.cwiseInverse().cast<Cx>().asDiagonal() * a.adjoint() / s2;
  s.diagonal().array() += 1.0;
  const Eigen::LLT<CxMatrix> llt(s);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const CxMatrix& l = llt.matrixL();
  return 2.0 * l.diagonal().real().array().log().sum();
}

double sbl_objective(const CxMatrix& a, const CxVector& c, const RealVector& tau, double s2) {
  const double quad = (c.cwiseAbs2().array() * tau.array()).sum();
  return s2 * (quad + log_det_data(a, tau, s2));
}

RealVector blrc_xi(const CxVector& c, double g2) {
  return (2.0 / (c.array().abs2() + g2)).matrix();
}

double blrc_objective(const CxMatrix& a, const CxVector& c, double g2, double s2) {
  const RealVector xi = blrc_xi(c, g2);
  const double gamma = std::sqrt(g2);
  double neg_log_phi = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    // φ(ξ, γ) = γ·e·√(ξ/2π)·exp(−ξγ²/2)
    neg_log_phi -= std::log(gamma) + 1.0 + 0.5 * std::log(xi(i) / (2.0 * std::numbers::pi)) -
                   0.5 * xi(i) * g2;
  }
  const double quad = (c.cwiseAbs2().array() * xi.array()).sum();
  return s2 * (neg_log_phi + quad + log_det_data(a, xi, s2));
}

double sbl_penalty(const CxMatrix& a, const CxVector& c, const PenaltySpec& spec) {
  const double s2 = spec.sigma_n_sq;
  const CxVector zero = CxVector::Zero(a.rows());
  const GaussianPosterior post(a, zero);  // keeps references
  RealVector tau = RealVector::Constant(c.size(), 1.0);
  double best = sbl_objective(a, c, tau, s2);
  double prev = best;
  for (int it = 0; it < spec.max_inner; ++it) {
    const PosteriorState st = post.update(tau, s2, true);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double c2 = std::norm(c(i));
      double t = c2 < kSblCoefFloor ? kSblTauCap : st.explained(i) / c2;
      tau(i) = std::clamp(t, 1.0 / kSblTauCap, kSblTauCap);
    }
    const double val = sbl_objective(a, c, tau, s2);
    best = std::min(best, val);
    if (std::abs(prev - val) <= spec.inner_rel_tol * std::abs(prev)) break;
    prev = val;
  }
  return best;
}

double blrc_penalty(const CxMatrix& a, const CxVector& c, const PenaltySpec& spec) {
  const CxVector zero = CxVector::Zero(a.rows());
  const GaussianPosterior post(a, zero);  // keeps references
  double s2 = spec.sigma_n_sq;
  double g2 = spec.blrc_init_gamma * spec.blrc_init_gamma;
  double best = blrc_objective(a, c, g2, s2);
  double prev = best;
  const RealVector c2 = c.cwiseAbs2();
  for (int it = 0; it < spec.max_inner; ++it) {
    const PosteriorState st = post.update(blrc_xi(c, g2), s2, true);
    const RealVector eta = st.gamma_diag + c2;
    const RealVector xi =
        (4.0 * c2.array() * st.gamma_diag.array() + 2.0 * st.gamma_diag.array().square()).matrix();
    g2 = blrc_gamma_update(eta, xi, g2);
    s2 = std::max(st.trace_gram_gamma / static_cast<double>(a.rows()), 1e-300);
    const double val = blrc_objective(a, c, g2, s2);
    best = std::min(best, val);
    if (std::abs(prev - val) <= spec.inner_rel_tol * std::abs(prev)) break;
    prev = val;
  }
  return best;
}

}  // namespace

std::string PenaltySpec::label() const {
  switch (kind) {
    case PenaltyKind::Lp: return fmt::format("lp(p={:g})", p);
    case PenaltyKind::CG: return fmt::format("cg(gamma={:g})", gamma);
    case PenaltyKind::SBL: return "sbl";
    case PenaltyKind::BLRC: return "blrc";
  }
  return "unknown";
}

CxVector null_vector(const CxMatrix& atoms) {
  if (atoms.cols() != atoms.rows() + 1)
    throw std::invalid_argument("null_vector: need N = M + 1 columns");
  const Eigen::JacobiSVD<CxMatrix> svd(atoms, Eigen::ComputeFullV);
  const RealVector& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0)))
    throw std::invalid_argument("null_vector: matrix is rank deficient");
  CxVector v = svd.matrixV().col(atoms.cols() - 1);
  // Fix the arbitrary phase: largest entry real and positive.
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  v *= std::conj(v(big)) / std::abs(v(big));
  return v / v.norm();
}

double penalty_value(const CxMatrix& atoms, const CxVector& c, const PenaltySpec& spec) {
  switch (spec.kind) {
    case PenaltyKind::Lp: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double mag = std::abs(c(i));
        if (mag > 0.0) s += std::pow(mag, spec.p);
      }
      return s;
    }
    case PenaltyKind::CG: {
      const double g2 = spec.gamma * spec.gamma;
      return 2.0 * (c.array().abs2() / g2).log1p().sum();
    }
    case PenaltyKind::SBL: return sbl_penalty(atoms, c, spec);
    case PenaltyKind::BLRC: return blrc_penalty(atoms, c, spec);
  }
  throw std::invalid_argument("penalty_value: unknown penalty");
}

LandscapeCurve landscape_scan(const CxMatrix& atoms, const CxVector& c_op, const RealVector& v_grid,
                              const PenaltySpec& spec) {
  return landscape_scan(atoms, c_op, null_vector(atoms), v_grid, spec);
}

LandscapeCurve landscape_scan(const CxMatrix& atoms, const CxVector& c_op, const CxVector& a_null,
                              const RealVector& v_grid, const PenaltySpec& spec) {
  if (c_op.size() != atoms.cols() || a_null.size() != atoms.cols())
    throw std::invalid_argument("landscape_scan: vector lengths differ from dictionary width");
  if (v_grid.size() < 1) throw std::invalid_argument("landscape_scan: empty grid");
  if ((atoms * a_null).norm() > 1e-8 * atoms.norm() * a_null.norm())
    throw std::invalid_argument("landscape_scan: direction is not in the null space");
  if (spec.kind != PenaltyKind::Lp && spec.kind != PenaltyKind::CG) null_vector(atoms);

  LandscapeCurve out{v_grid, RealVector(v_grid.size()), spec};
  for (Eigen::Index i = 0; i < v_grid.size(); ++i)
    out.penalty(i) = penalty_value(atoms, c_op + v_grid(i) * a_null, spec);

  Eigen::Index origin = 0;
  v_grid.cwiseAbs().minCoeff(&origin);
  const double ref = out.penalty(origin);
  if (!(ref > 0.0) || !std::isfinite(ref))
    throw std::domain_error("landscape_scan: penalty at v = 0 is not positive");
  out.penalty /= ref;
  return out;
}

std::vector<int> local_minima(const RealVector& values) {
  std::vector<int> out;
  for (Eigen::Index i = 1; i + 1 < values.size(); ++i)
    if (values(i) < values(i - 1) && values(i) < values(i + 1)) out.push_back(static_cast<int>(i));
  return out;
}

LandscapeInstance reference_landscape_instance() {
  constexpr int kM = 4;
  constexpr int kN = 5;
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> g(0.0, 1.0);
  LandscapeInstance inst{CxMatrix(kM, kN), CxVector::Zero(kN)};
  for (int c = 0; c < kN; ++c)
    for (int r = 0; r < kM; ++r) inst.atoms(r, c) = Cx(g(rng), 0.0);
  // Two nonzero entries placed so that each vanishes along the null line at
  // v = -2 and v = 0.71; the three zero entries all vanish at v = 0.
  const CxVector a = null_vector(inst.atoms);
  inst.c_op(1) = 2.0 * a(1);
  inst.c_op(2) = -0.71 * a(2);
  return inst;
}

}  // namespace spr
