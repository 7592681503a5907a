#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spr/solvers.hpp"

namespace spr {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::OMP: return "omp";
    case Method::CG: return "cg";
    case Method::SBL: return "sbl";
    case Method::BLRC: return "blrc";
  }
  return "blrc";
}

Method method_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "omp") return Method::OMP;
  if (lower == "cg") return Method::CG;
  if (lower == "sbl") return Method::SBL;
  if (lower == "blrc") return Method::BLRC;
  throw std::invalid_argument("unknown solver '" + std::string(name) + "'");
}

std::string_view to_string(ConditionMode mode) {
  switch (mode) {
    case ConditionMode::Auto: return "auto";
    case ConditionMode::Exact: return "exact";
    case ConditionMode::Estimate: return "estimate";
    case ConditionMode::Off: return "off";
  }
  return "auto";
}

ConditionMode condition_mode_from_string(std::string_view name) {
  if (name == "auto") return ConditionMode::Auto;
  if (name == "exact") return ConditionMode::Exact;
  if (name == "estimate") return ConditionMode::Estimate;
  if (name == "off") return ConditionMode::Off;
  throw std::invalid_argument("unknown condition mode '" + std::string(name) + "'");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIters: return "max_iters";
    case Termination::IllConditioned: return "ill_conditioned";
    case Termination::ResidueFloor: return "residue_floor";
  }
  return "max_iters";
}

void SolverConfig::validate() const {
  auto require_positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("solver config: ") + field + " must be positive");
  };
  if (max_iters < 1) throw std::invalid_argument("solver config: max_iters must be >= 1");
  require_positive(init_sigma_n, "init_sigma_n");
  require_positive(init_gamma, "init_gamma");
  require_positive(init_tau, "init_tau");
  require_positive(init_c_scale, "init_c_scale");
  require_positive(cg_fixed_sigma_n, "cg_fixed_sigma_n");
  require_positive(cg_fixed_gamma, "cg_fixed_gamma");
  require_positive(cond_limit, "cond_limit");
  require_positive(support_dynamic_range_db, "support_dynamic_range_db");
  if (!(residue_tol_db >= 0.0))
    throw std::invalid_argument("solver config: residue_tol_db must be nonnegative");
  if (prune_threshold && !(*prune_threshold >= 0.0))
    throw std::invalid_argument("solver config: prune_threshold must be nonnegative");
  if (prune_start_iter < 1)
    throw std::invalid_argument("solver config: prune_start_iter must be >= 1");
  if (omp_max_atoms < 1) throw std::invalid_argument("solver config: omp_max_atoms must be >= 1");
}

SolverConfig SolverConfig::spa_defaults() { return SolverConfig{}; }

SolverConfig SolverConfig::cpa_defaults() {
  SolverConfig cfg;
  cfg.init_gamma = 1.0;
  cfg.omp_max_atoms = 15;
  return cfg;
}

double blrc_gamma_update(const RealVector& eta, const RealVector& xi, double gamma_prev_sq,
                         bool* clamped) {
  if (eta.size() != xi.size() || eta.size() == 0)
    throw std::invalid_argument("blrc_gamma_update: eta and xi must be nonempty and equal length");
  if (!(gamma_prev_sq > 0.0))
    throw std::invalid_argument("blrc_gamma_update: gamma_prev_sq must be positive");
  const double tau = 1.0 / gamma_prev_sq;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double denom = 1.0 + tau * eta(i);
    sum += eta(i) / denom - tau * xi(i) / (denom * denom * denom);
  }
  const double out = 2.0 * sum / static_cast<double>(eta.size());
  const bool clamp = !(out > kGammaSqFloor);
  if (clamped) *clamped = clamp;
  return clamp ? kGammaSqFloor : out;
}

SblHyperUpdate sbl_hyper_update_explained(const CxVector& c, const RealVector& explained,
                                          const CxVector& y, const CxMatrix& atoms) {
  const Eigen::Index n = c.size();
  if (explained.size() != n || atoms.cols() != n || atoms.rows() != y.size())
    throw std::invalid_argument("sbl_hyper_update: inconsistent dimensions");
  SblHyperUpdate out;
  out.tau.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c2 = std::norm(c(i));
    double tau = c2 < kSblCoefFloor ? kSblTauCap : explained(i) / c2;
    if (!(tau < kSblTauCap)) {
      tau = kSblTauCap;
      ++out.tau_capped;
    }
    // A numerator of exactly zero would make the prior precision vanish.
    if (!(tau > 0.0)) {
      tau = 1.0 / kSblTauCap;
      ++out.tau_capped;
    }
    out.tau(i) = tau;
  }
  const double m = static_cast<double>(y.size());
  double denom = m - explained.sum();  // M − Tr(I − ΓΣ)
  if (!(denom > 1e-12 * m)) {
    denom = 1e-12 * m;
    out.denominator_guarded = true;
  }
  out.sigma_n_sq = (y - atoms * c).squaredNorm() / denom;
  return out;
}

SblHyperUpdate sbl_hyper_update(const CxVector& c, const RealVector& gamma_diag,
                                const RealVector& tau_prev, const CxVector& y,
                                const CxMatrix& atoms) {
  if (gamma_diag.size() != c.size() || tau_prev.size() != c.size())
    throw std::invalid_argument("sbl_hyper_update: inconsistent dimensions");
  const RealVector explained = (1.0 - tau_prev.array() * gamma_diag.array()).matrix();
  return sbl_hyper_update_explained(c, explained, y, atoms);
}

PruneResult prune(const PosteriorState& state, const Dictionary& dict, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("prune: threshold must be nonnegative");
  if (state.c.size() != dict.cols())
    throw std::invalid_argument("prune: state and dictionary sizes differ");
  std::vector<int> kept;
  for (int i = 0; i < dict.cols(); ++i)
    if (!(std::abs(state.c(i)) < threshold)) kept.push_back(i);
  if (kept.empty()) throw std::domain_error("prune: every column fell below the threshold");

  const auto cols = static_cast<Eigen::Index>(kept.size());
  Dictionary reduced{CxMatrix(dict.rows(), cols), dict.geometry, RealVector(cols)};
  for (Eigen::Index j = 0; j < cols; ++j) {
    reduced.atoms.col(j) = dict.atoms.col(kept[static_cast<std::size_t>(j)]);
    reduced.grid_freqs(j) = dict.grid_freqs(kept[static_cast<std::size_t>(j)]);
  }
  return {std::move(reduced), std::move(kept)};
}

CxVector embed(const CxVector& reduced, const std::vector<int>& kept, int n) {
  if (reduced.size() != static_cast<Eigen::Index>(kept.size()))
    throw std::invalid_argument("embed: reduced vector and index map differ in length");
  CxVector out = CxVector::Zero(n);
  for (std::size_t j = 0; j < kept.size(); ++j) out(kept[j]) = reduced(static_cast<Eigen::Index>(j));
  return out;
}

std::vector<int> support_of(const CxVector& c, double dynamic_range_db) {
  std::vector<int> s;
  if (c.size() == 0) return s;
  const double peak = c.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) return s;
  const double floor = peak * std::pow(10.0, -dynamic_range_db / 20.0);
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (std::abs(c(i)) >= floor) s.push_back(static_cast<int>(i));
  return s;
}

}  // namespace spr
