#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spr/linalg.hpp"
#include "spr/model.hpp"

namespace spr {

enum class Method { OMP, CG, SBL, BLRC };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::OMP, Method::CG, Method::SBL, Method::BLRC};

/// How the condition number of the N×N posterior precision matrix is
/// obtained each iteration. Auto is exact (Hermitian eigenvalues) up to
/// N = 512 and a 1-norm estimate from a Cholesky factor beyond that.
enum class ConditionMode { Auto, Exact, Estimate, Off };

std::string_view to_string(ConditionMode mode);
ConditionMode condition_mode_from_string(std::string_view name);

struct SolverConfig {
  int max_iters = 25;

  double init_sigma_n = 1.0;   // SBL and BLRC
  double init_gamma = 0.1;     // BLRC
  double init_tau = 100.0;     // SBL, broadcast to every coefficient
  double init_c_scale = 1.0;   // CG/BLRC start: real and imaginary parts U[0, scale]
  std::uint64_t init_c_seed = 1;

  double cg_fixed_sigma_n = 0.1;
  double cg_fixed_gamma = 0.01;

  double residue_tol_db = 1e-3;
  double cond_limit = 1e12;
  ConditionMode condition = ConditionMode::Auto;

  bool use_woodbury = true;
  std::optional<double> prune_threshold;
  int prune_start_iter = 1;

  int omp_max_atoms = 20;
  std::optional<double> omp_residue_stop_db;

  double support_dynamic_range_db = 40.0;
  bool record_weights = false;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;

  /// Experiment defaults for the 80-element sparse array.
  static SolverConfig spa_defaults();
  /// Experiment defaults for the 16-element coprime array (larger initial γ).
  static SolverConfig cpa_defaults();
};

/// Per-iteration history. Every vector has one entry per completed
/// iteration; quantities a method does not have are stored as 0.
struct IterTrace {
  std::vector<double> residue_db;
  std::vector<double> sigma_n_est;
  std::vector<double> gamma_est;
  std::vector<double> tau_min;
  std::vector<double> tau_max;
  std::vector<double> cond_H;
  std::vector<std::vector<double>> weights_sorted;

  std::size_t size() const { return residue_db.size(); }
};

enum class Termination { Converged, MaxIters, IllConditioned, ResidueFloor };

std::string_view to_string(Termination t);

struct SolveResult {
  Method method = Method::BLRC;
  CxVector c_hat;
  IterTrace trace;
  Termination termination = Termination::MaxIters;
  std::vector<int> support;

  /// Iteration whose precision matrix exceeded cond_limit (not completed).
  std::optional<int> ill_conditioned_at;
  double ill_conditioned_cond = 0.0;

  /// Last hyper-parameter estimates (0 where not applicable).
  double sigma_n = 0.0;
  double gamma = 0.0;

  /// Guard activations such as γ² clamping, one line each.
  std::vector<std::string> events;

  int iterations() const { return static_cast<int>(trace.size()); }
};

/// Gaussian posterior N(c, Γ) with Γ = [AᴴA/σ² + diag(w)]⁻¹.
struct PosteriorState {
  CxVector c;
  RealVector gamma_diag;
  std::optional<CxMatrix> gamma_full;
  RealVector weights;
  /// 1 − w_i·Γ_ii, the fraction of coefficient i determined by the data.
  RealVector explained;
  /// Tr(AᴴAΓ).
  double trace_gram_gamma = 0.0;
};

/// Reusable per-problem data for repeated posterior solves. Not thread-safe:
/// the Gram matrix is built lazily.
class GaussianPosterior {
 public:
  GaussianPosterior(const CxMatrix& atoms, const CxVector& y);

  PosteriorState update(const RealVector& weights, double sigma_n_sq, bool use_woodbury,
                        bool need_full_gamma = false) const;

  /// Condition number of AᴴA/σ² + diag(w). +inf when not positive definite,
  /// NaN when mode is Off.
  double condition(const RealVector& weights, double sigma_n_sq, ConditionMode mode) const;

  const CxMatrix& gram() const;
  const CxMatrix& atoms() const { return atoms_; }
  const CxVector& y() const { return y_; }
  const CxVector& aty() const { return aty_; }

 private:
  PosteriorState direct(const RealVector& w, double s2, bool full) const;
  PosteriorState woodbury(const RealVector& w, double s2, bool full) const;

  const CxMatrix& atoms_;
  const CxVector& y_;
  CxVector aty_;
  mutable std::optional<CxMatrix> gram_;
};

PosteriorState posterior_update(const Dictionary& dict, const CxVector& y,
                                const RealVector& weights, double sigma_n_sq,
                                bool use_woodbury, bool need_full_gamma);

/// One fixed-point step of the BLRC scale update, returns γ².
/// Clamped at kGammaSqFloor; `clamped` reports when that happened.
inline constexpr double kGammaSqFloor = 1e-12;
double blrc_gamma_update(const RealVector& eta, const RealVector& xi, double gamma_prev_sq,
                         bool* clamped = nullptr);

struct SblHyperUpdate {
  RealVector tau;
  double sigma_n_sq = 0.0;
  int tau_capped = 0;
  bool denominator_guarded = false;
};

inline constexpr double kSblCoefFloor = 1e-30;
inline constexpr double kSblTauCap = 1e30;

/// τ_i = (1 − τ_prev,i·Γ_ii)/|c_i|² and
/// σ² = ‖y − Ac‖² / (M − Tr(I − ΓΣ)).
SblHyperUpdate sbl_hyper_update(const CxVector& c, const RealVector& gamma_diag,
                                const RealVector& tau_prev, const CxVector& y,
                                const CxMatrix& atoms);

/// Same update when 1 − τ_prev,i·Γ_ii is already known accurately.
SblHyperUpdate sbl_hyper_update_explained(const CxVector& c, const RealVector& explained,
                                          const CxVector& y, const CxMatrix& atoms);

struct PruneResult {
  Dictionary reduced;
  std::vector<int> kept;  // reduced column j came from original column kept[j]
};

/// Drops columns with |c_i| < threshold. Throws std::domain_error when
/// nothing would remain.
PruneResult prune(const PosteriorState& state, const Dictionary& dict, double threshold);

/// Scatters a reduced-model vector back to length n with zeros elsewhere.
CxVector embed(const CxVector& reduced, const std::vector<int>& kept, int n);

std::vector<int> support_of(const CxVector& c, double dynamic_range_db);

SolveResult solve_omp(const Measurement& measurement, const Dictionary& dict,
                      const SolverConfig& config);
SolveResult solve_cg(const Measurement& measurement, const Dictionary& dict,
                     const SolverConfig& config);
SolveResult solve_sbl(const Measurement& measurement, const Dictionary& dict,
                      const SolverConfig& config);
SolveResult solve_blrc(const Measurement& measurement, const Dictionary& dict,
                       const SolverConfig& config);

SolveResult solve(Method method, const Measurement& measurement, const Dictionary& dict,
                  const SolverConfig& config);

}  // namespace spr
