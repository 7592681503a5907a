#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "spr/analysis.hpp"
#include "spr/solvers.hpp"

namespace spr {

namespace {

void check_inputs(const Measurement& meas, const Dictionary& dict, const SolverConfig& cfg) {
  cfg.validate();
  if (meas.y.size() != dict.atoms.rows())
    throw std::invalid_argument("solve: measurement has " + std::to_string(meas.y.size()) +
                                " samples but dictionary has " + std::to_string(dict.rows()) +
                                " rows");
}

CxVector random_start(const SolverConfig& cfg, int n) {
  std::mt19937_64 rng(cfg.init_c_seed);
  std::uniform_real_distribution<double> u(0.0, cfg.init_c_scale);
  CxVector c(n);
  for (int i = 0; i < n; ++i) {
    const double re = u(rng);
    const double im = u(rng);
    c(i) = Cx(re, im);
  }
  return c;
}

std::vector<double> sorted_copy(const RealVector& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end());
  return out;
}


// Posterior over a shrinking set of active columns. Inactive columns keep
// c = 0, Γ_ii = 1/w_i (the prior) and contribute nothing to the data fit.
class ActiveModel {
 public:
  ActiveModel(const CxMatrix& atoms, const CxVector& y)
      : full_(atoms), y_(y), post_(std::make_unique<GaussianPosterior>(atoms, y)) {
    kept_.resize(static_cast<std::size_t>(atoms.cols()));
    for (std::size_t i = 0; i < kept_.size(); ++i) kept_[i] = static_cast<int>(i);
  }

  int n() const { return static_cast<int>(full_.cols()); }
  int active() const { return static_cast<int>(kept_.size()); }

  // Returns the number of columns dropped.
  int restrict_to(const CxVector& c_full, double threshold) {
    std::vector<int> next;
    for (int idx : kept_)
      if (!(std::abs(c_full(idx)) < threshold)) next.push_back(idx);
    if (next.size() == kept_.size()) return 0;
    if (next.empty()) throw std::domain_error("prune: every column fell below the threshold");
    const int dropped = static_cast<int>(kept_.size() - next.size());
    kept_ = std::move(next);
    reduced_ = CxMatrix(full_.rows(), active());
    for (int j = 0; j < active(); ++j) reduced_->col(j) = full_.col(kept_[static_cast<std::size_t>(j)]);
    post_ = std::make_unique<GaussianPosterior>(*reduced_, y_);
    return dropped;
  }

  RealVector gather(const RealVector& full) const {
    RealVector out(active());
    for (int j = 0; j < active(); ++j) out(j) = full(kept_[static_cast<std::size_t>(j)]);
    return out;
  }

  PosteriorState update(const RealVector& w_full, double s2, bool woodbury) const {
    PosteriorState red = post_->update(gather(w_full), s2, woodbury);
    if (active() == n()) return red;
    PosteriorState st;
    st.weights = w_full;
    st.c = embed(red.c, kept_, n());
    st.gamma_diag = w_full.cwiseInverse();
    st.explained = RealVector::Zero(n());
    for (int j = 0; j < active(); ++j) {
      const int i = kept_[static_cast<std::size_t>(j)];
      st.gamma_diag(i) = red.gamma_diag(j);
      st.explained(i) = red.explained(j);
    }
    st.trace_gram_gamma = red.trace_gram_gamma;
    return st;
  }

  double condition(const RealVector& w_full, double s2, ConditionMode mode) const {
    return post_->condition(gather(w_full), s2, mode);
  }

 private:
  const CxMatrix& full_;
  const CxVector& y_;
  std::vector<int> kept_;
  std::optional<CxMatrix> reduced_;
  std::unique_ptr<GaussianPosterior> post_;
};

void maybe_prune(ActiveModel& model, const SolverConfig& cfg, int k, const CxVector& c_prev,
                 SolveResult& res) {
  if (!cfg.prune_threshold || k < cfg.prune_start_iter) return;
  const int dropped = model.restrict_to(c_prev, *cfg.prune_threshold);
  if (dropped > 0)
    res.events.push_back("iter " + std::to_string(k) + ": pruned " + std::to_string(dropped) +
                         " columns, " + std::to_string(model.active()) + " remain");
}

void finish(SolveResult& res, const SolverConfig& cfg) {
  res.support = support_of(res.c_hat, cfg.support_dynamic_range_db);
  spdlog::debug("{}: {} after {} iterations, |support|={}", to_string(res.method),
                to_string(res.termination), res.iterations(), res.support.size());
}

void mark_ill(SolveResult& res, int k, double cond) {
  res.termination = Termination::IllConditioned;
  res.ill_conditioned_at = k;
  res.ill_conditioned_cond = cond;
  res.events.push_back("iter " + std::to_string(k) + ": ill-conditioned (cond " +
                       std::to_string(cond) + ")");
}

bool residue_settled(const IterTrace& tr, double tol) {
  const auto n = tr.residue_db.size();
  return n >= 2 && std::abs(tr.residue_db[n - 1] - tr.residue_db[n - 2]) < tol;
}

}  // namespace

SolveResult solve_omp(const Measurement& meas, const Dictionary& dict, const SolverConfig& cfg) {
  check_inputs(meas, dict, cfg);
  const CxMatrix& a = dict.atoms;
  const CxVector& y = meas.y;
  const int m = dict.rows();
  const int n = dict.cols();

  SolveResult res;
  res.method = Method::OMP;
  res.c_hat = CxVector::Zero(n);
  int cap = std::min({cfg.omp_max_atoms, m, n});
  if (cap < cfg.omp_max_atoms)
    res.events.push_back("omp_max_atoms " + std::to_string(cfg.omp_max_atoms) + " reduced to " +
                         std::to_string(cap));

  const RealVector col_norm = a.colwise().norm().transpose();
  std::vector<int> chosen;
  CxVector r = y;
  const double y_norm = y.norm();
  res.termination = Termination::MaxIters;
  if (!(y_norm > 0.0)) {
    res.termination = Termination::ResidueFloor;
    finish(res, cfg);
    return res;
  }

  for (int k = 1; k <= cap; ++k) {
    const CxVector corr = a.adjoint() * r;
    int best = -1;
    double best_val = -1.0;
    for (int i = 0; i < n; ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      const double v = col_norm(i) > 0.0 ? std::abs(corr(i)) / col_norm(i) : 0.0;
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    chosen.push_back(best);

    CxMatrix sub(m, static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t j = 0; j < chosen.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = a.col(chosen[j]);
    const Eigen::ColPivHouseholderQR<CxMatrix> qr(sub);
    const CxVector coef = qr.solve(y);
    r = y - sub * coef;

    res.c_hat = embed(coef, chosen, n);
    const double res_db = to_db_amplitude(r.norm());
    res.trace.residue_db.push_back(res_db);
    res.trace.sigma_n_est.push_back(r.norm() / std::sqrt(static_cast<double>(m)));
    res.trace.gamma_est.push_back(0.0);
    res.trace.tau_min.push_back(0.0);
    res.trace.tau_max.push_back(0.0);
    double cond = std::numeric_limits<double>::quiet_NaN();
    if (cfg.condition != ConditionMode::Off) {
      const Eigen::JacobiSVD<CxMatrix> svd(sub);
      const auto& sv = svd.singularValues();
      const double lo = sv(sv.size() - 1);
      cond = lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
    }
    res.trace.cond_H.push_back(cond);

    if (r.norm() <= 1e-13 * y_norm) {
      res.termination = Termination::ResidueFloor;
      break;
    }
    if (cfg.omp_residue_stop_db && res_db < *cfg.omp_residue_stop_db) {
      res.termination = Termination::Converged;
      break;
    }
  }
  res.sigma_n = r.norm() / std::sqrt(static_cast<double>(m));
  finish(res, cfg);
  return res;
}

SolveResult solve_cg(const Measurement& meas, const Dictionary& dict, const SolverConfig& cfg) {
  check_inputs(meas, dict, cfg);
  const int n = dict.cols();
  const double s2 = cfg.cg_fixed_sigma_n * cfg.cg_fixed_sigma_n;
  const double g2 = cfg.cg_fixed_gamma * cfg.cg_fixed_gamma;

  SolveResult res;
  res.method = Method::CG;
  res.sigma_n = cfg.cg_fixed_sigma_n;
  res.gamma = cfg.cg_fixed_gamma;
  ActiveModel model(dict.atoms, meas.y);
  CxVector c = random_start(cfg, n);
  res.c_hat = c;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    maybe_prune(model, cfg, k, c, res);
    // 2σ²/γ²·Q with Q_ii = 1/(1 + |c_i|²/γ²), divided through by σ².
    const RealVector w = (2.0 / (g2 + c.array().abs2())).matrix();
    double cond = std::numeric_limits<double>::quiet_NaN();
    PosteriorState st;
    try {
      cond = model.condition(w, s2, cfg.condition);
      st = model.update(w, s2, cfg.use_woodbury);
    } catch (const IllConditionedError& e) {
      mark_ill(res, k, e.condition());
      break;
    }
    c = st.c;
    res.c_hat = c;
    res.trace.residue_db.push_back(residue_db(meas.y, dict.atoms, c));
    res.trace.sigma_n_est.push_back(cfg.cg_fixed_sigma_n);
    res.trace.gamma_est.push_back(cfg.cg_fixed_gamma);
    res.trace.tau_min.push_back(0.0);
    res.trace.tau_max.push_back(0.0);
    res.trace.cond_H.push_back(cond);
    if (cfg.record_weights) res.trace.weights_sorted.push_back(sorted_copy(w));

    if (residue_settled(res.trace, cfg.residue_tol_db)) {
      res.termination = Termination::Converged;
      break;
    }
    if (k == cfg.max_iters) res.termination = Termination::MaxIters;
  }
  finish(res, cfg);
  return res;
}

SolveResult solve_blrc(const Measurement& meas, const Dictionary& dict, const SolverConfig& cfg) {
  check_inputs(meas, dict, cfg);
  const int n = dict.cols();
  const double m = static_cast<double>(dict.rows());
  const double y2 = meas.y.squaredNorm();
  // σ² may legitimately collapse for exact data; keep it representable.
  const double s2_floor = std::max(1e-30 * y2 / m, 1e-300);

  SolveResult res;
  res.method = Method::BLRC;
  ActiveModel model(dict.atoms, meas.y);
  CxVector c = random_start(cfg, n);
  res.c_hat = c;
  double s2 = cfg.init_sigma_n * cfg.init_sigma_n;
  double g2 = cfg.init_gamma * cfg.init_gamma;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    maybe_prune(model, cfg, k, c, res);
    const RealVector w = (2.0 / (g2 + c.array().abs2())).matrix();
    double cond = std::numeric_limits<double>::quiet_NaN();
    PosteriorState st;
    try {
      cond = model.condition(w, s2, cfg.condition);
      st = model.update(w, s2, cfg.use_woodbury);
    } catch (const IllConditionedError& e) {
      mark_ill(res, k, e.condition());
      break;
    }
    c = st.c;
    const RealVector c2 = c.cwiseAbs2();
    const RealVector eta = st.gamma_diag + c2;
    const RealVector xi =
        (4.0 * c2.array() * st.gamma_diag.array() + 2.0 * st.gamma_diag.array().square()).matrix();
    bool clamped = false;
    g2 = blrc_gamma_update(eta, xi, g2, &clamped);
    if (clamped) res.events.push_back("iter " + std::to_string(k) + ": gamma^2 clamped at floor");

    const double fit = (meas.y - dict.atoms * c).squaredNorm();
    double s2_next = (fit + st.trace_gram_gamma) / m;
    if (!(s2_next > s2_floor)) {
      s2_next = s2_floor;
      res.events.push_back("iter " + std::to_string(k) + ": sigma_n^2 held at floor");
    }
    s2 = s2_next;

    res.c_hat = c;
    res.trace.residue_db.push_back(to_db_power(fit));
    res.trace.sigma_n_est.push_back(std::sqrt(s2));
    res.trace.gamma_est.push_back(std::sqrt(g2));
    res.trace.tau_min.push_back(0.0);
    res.trace.tau_max.push_back(0.0);
    res.trace.cond_H.push_back(cond);
    if (cfg.record_weights) res.trace.weights_sorted.push_back(sorted_copy(w));

    if (residue_settled(res.trace, cfg.residue_tol_db)) {
      res.termination = Termination::Converged;
      break;
    }
    if (!(c2.maxCoeff() > 0.0) && k >= 2) {
      res.termination = Termination::Converged;
      break;
    }
    if (k == cfg.max_iters) res.termination = Termination::MaxIters;
  }
  res.sigma_n = std::sqrt(s2);
  res.gamma = std::sqrt(g2);
  finish(res, cfg);
  return res;
}

SolveResult solve_sbl(const Measurement& meas, const Dictionary& dict, const SolverConfig& cfg) {
  check_inputs(meas, dict, cfg);
  const int n = dict.cols();
  const double m = static_cast<double>(dict.rows());
  const double y2 = meas.y.squaredNorm();
  const double s2_floor = std::max(1e-30 * y2 / m, 1e-300);

  SolveResult res;
  res.method = Method::SBL;
  ActiveModel model(dict.atoms, meas.y);
  RealVector tau = RealVector::Constant(n, cfg.init_tau);
  double s2 = cfg.init_sigma_n * cfg.init_sigma_n;
  CxVector c = CxVector::Zero(n);
  res.c_hat = c;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    if (k > 1) maybe_prune(model, cfg, k, c, res);
    double cond = std::numeric_limits<double>::quiet_NaN();
    PosteriorState st;
    try {
      cond = model.condition(tau, s2, cfg.condition);
      if (cond > cfg.cond_limit) {
        mark_ill(res, k, cond);
        break;
      }
      st = model.update(tau, s2, cfg.use_woodbury);
    } catch (const IllConditionedError& e) {
      mark_ill(res, k, e.condition());
      break;
    }
    c = st.c;
    const SblHyperUpdate hu = sbl_hyper_update_explained(c, st.explained, meas.y, dict.atoms);
    const RealVector w_used = tau;
    tau = hu.tau;
    s2 = std::max(hu.sigma_n_sq, s2_floor);
    if (hu.denominator_guarded)
      res.events.push_back("iter " + std::to_string(k) + ": sigma_n^2 denominator guarded");

    res.c_hat = c;
    res.trace.residue_db.push_back(residue_db(meas.y, dict.atoms, c));
    res.trace.sigma_n_est.push_back(std::sqrt(s2));
    res.trace.gamma_est.push_back(0.0);
    res.trace.tau_min.push_back(tau.minCoeff());
    res.trace.tau_max.push_back(tau.maxCoeff());
    res.trace.cond_H.push_back(cond);
    if (cfg.record_weights) res.trace.weights_sorted.push_back(sorted_copy(w_used));

    if (!(c.cwiseAbs2().maxCoeff() >= kSblCoefFloor)) {
      res.events.push_back("iter " + std::to_string(k) + ": all coefficients vanished, tau capped");
      res.termination = Termination::Converged;
      break;
    }
    if (k == cfg.max_iters) res.termination = Termination::MaxIters;
  }
  res.sigma_n = std::sqrt(s2);
  finish(res, cfg);
  return res;
}

SolveResult solve(Method method, const Measurement& meas, const Dictionary& dict,
                  const SolverConfig& cfg) {
  switch (method) {
    case Method::OMP: return solve_omp(meas, dict, cfg);
    case Method::CG: return solve_cg(meas, dict, cfg);
    case Method::SBL: return solve_sbl(meas, dict, cfg);
    case Method::BLRC: return solve_blrc(meas, dict, cfg);
  }
  throw std::invalid_argument("solve: unknown method");
}

}  // namespace spr
