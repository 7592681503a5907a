#include <cmath>
#include <limits>
#include <string>

#include "spr/solvers.hpp"

namespace spr {

namespace {

void check_weights(const RealVector& w, Eigen::Index n, double sigma_n_sq) {
  if (w.size() != n)
    throw std::invalid_argument("posterior: expected " + std::to_string(n) + " weights, got " +
                                std::to_string(w.size()));
  if (!(sigma_n_sq > 0.0) || !std::isfinite(sigma_n_sq))
    throw std::invalid_argument("posterior: sigma_n_sq must be positive and finite");
  if (!(w.array() > 0.0).all() || !w.allFinite())
    throw std::invalid_argument("posterior: weights must be positive and finite");
}

}  // namespace

GaussianPosterior::GaussianPosterior(const CxMatrix& atoms, const CxVector& y)
    : atoms_(atoms), y_(y), aty_(atoms.adjoint() * y) {
  if (atoms.rows() != y.size())
    throw std::invalid_argument("posterior: y has " + std::to_string(y.size()) +
                                " entries but the dictionary has " +
                                std::to_string(atoms.rows()) + " rows");
}

const CxMatrix& GaussianPosterior::gram() const {
  if (!gram_) {
    CxMatrix g(atoms_.cols(), atoms_.cols());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(atoms_.adjoint());
    gram_ = g.selfadjointView<Eigen::Lower>();
  }
  return *gram_;
}

PosteriorState GaussianPosterior::update(const RealVector& weights, double sigma_n_sq,
                                         bool use_woodbury, bool need_full_gamma) const {
  check_weights(weights, atoms_.cols(), sigma_n_sq);
  return use_woodbury ? woodbury(weights, sigma_n_sq, need_full_gamma)
                      : direct(weights, sigma_n_sq, need_full_gamma);
}

PosteriorState GaussianPosterior::direct(const RealVector& w, double s2, bool full) const {
  const Eigen::Index n = atoms_.cols();
  CxMatrix h = gram() / s2;
  h.diagonal() += w.cast<Cx>();
  Eigen::LLT<CxMatrix> llt(h);
  if (llt.info() != Eigen::Success)
    throw IllConditionedError("posterior: precision matrix is not positive definite",
                              std::numeric_limits<double>::infinity());

  CxMatrix gamma = llt.solve(CxMatrix::Identity(n, n));
  PosteriorState st;
  st.c = llt.solve(aty_) / s2;
  st.gamma_diag = gamma.diagonal().real();
  st.weights = w;
  st.explained = (1.0 - w.array() * st.gamma_diag.array()).max(0.0).matrix();
  st.trace_gram_gamma = gram().cwiseProduct(gamma.transpose()).sum().real();
  if (full) st.gamma_full = std::move(gamma);
  return st;
}

// Γ = D − D·Aᴴ·S⁻¹·A·D with D = diag(1/w) and S = σ²I + A·D·Aᴴ (M×M).
PosteriorState GaussianPosterior::woodbury(const RealVector& w, double s2, bool full) const {
  const RealVector d = w.cwiseInverse();
  const CxMatrix ad = atoms_ * d.cast<Cx>().asDiagonal();
  CxMatrix s = ad * atoms_.adjoint();
  s.diagonal().array() += s2;
  Eigen::LLT<CxMatrix> llt(s);
  if (llt.info() != Eigen::Success)
    throw IllConditionedError("posterior: data-space matrix is not positive definite",
                              std::numeric_limits<double>::infinity());

  const CxMatrix sinv_a = llt.solve(atoms_);
  const RealVector q = atoms_.conjugate().cwiseProduct(sinv_a).colwise().sum().real().transpose();

  PosteriorState st;
  st.weights = w;
  st.explained = d.cwiseProduct(q).cwiseMax(0.0);
  st.gamma_diag = d.cwiseProduct((1.0 - st.explained.array()).matrix());
  // Components fully determined by data lose the subtraction above; fall
  // back on the Schur-complement lower bound d/(1 + d·‖a‖²/σ²) > 0.
  for (Eigen::Index i = 0; i < st.gamma_diag.size(); ++i) {
    if (!(st.gamma_diag(i) > 0.0)) {
      const double a2 = atoms_.col(i).squaredNorm();
      st.gamma_diag(i) = d(i) / (1.0 + d(i) * a2 / s2);
    }
  }
  st.c = d.cast<Cx>().asDiagonal() * (atoms_.adjoint() * llt.solve(y_));
  st.trace_gram_gamma = s2 * st.explained.sum();
  if (full) {
    CxMatrix gamma = -(ad.adjoint() * (sinv_a * d.cast<Cx>().asDiagonal()));
    gamma.diagonal() += d.cast<Cx>();
    st.gamma_full = std::move(gamma);
  }
  return st;
}

double GaussianPosterior::condition(const RealVector& weights, double sigma_n_sq,
                                    ConditionMode mode) const {
  if (mode == ConditionMode::Off) return std::numeric_limits<double>::quiet_NaN();
  check_weights(weights, atoms_.cols(), sigma_n_sq);
  CxMatrix h = gram() / sigma_n_sq;
  h.diagonal() += weights.cast<Cx>();
  const bool exact =
      mode == ConditionMode::Exact || (mode == ConditionMode::Auto && h.rows() <= 512);
  if (exact) {
    Eigen::SelfAdjointEigenSolver<CxMatrix> eig(h, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
  }
  Eigen::LLT<CxMatrix> llt(h);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double rc = llt.rcond();
  return rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

PosteriorState posterior_update(const Dictionary& dict, const CxVector& y,
                                const RealVector& weights, double sigma_n_sq,
                                bool use_woodbury, bool need_full_gamma) {
  const GaussianPosterior post(dict.atoms, y);
  return post.update(weights, sigma_n_sq, use_woodbury, need_full_gamma);
}

}  // namespace spr
