#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spr/linalg.hpp"

namespace spr {

/// 20·log10‖y − Ac‖, floored at kMinusInfDb.
double residue_db(const CxVector& y, const CxMatrix& atoms, const CxVector& c);

/// 10·log10[(1/N)·‖c_true/max|c_true| − c_est/max|c_est|‖²]. Throws
/// std::invalid_argument when either vector is all zeros.
double normalized_mse(const CxVector& c_true, const CxVector& c_est);

struct MetricReport {
  double mse_db = 0.0;
  double residue_db = 0.0;
  double support_precision = 0.0;
  double support_recall = 0.0;
  double sigma_n_est = 0.0;
};

/// Precision/recall of `estimated` against `truth`, allowing a match when
/// bins differ by at most `tolerance` (circularly on a grid of n_grid).
std::pair<double, double> support_precision_recall(const std::vector<int>& truth,
                                                   const std::vector<int>& estimated,
                                                   int n_grid, int tolerance = 0);

// --- penalty landscape along a one-dimensional null space ------------------

enum class PenaltyKind { Lp, CG, SBL, BLRC };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::Lp;
  double p = 0.01;              // Lp exponent
  double gamma = 0.2;           // CG scale
  double sigma_n_sq = 1e-2;     // fixed for SBL, starting value for BLRC
  double blrc_init_gamma = 1.0;
  int max_inner = 200;
  double inner_rel_tol = 1e-9;

  std::string label() const;
};

struct LandscapeCurve {
  RealVector v_grid;
  RealVector penalty;  // normalized to 1 at the grid point nearest v = 0
  PenaltySpec method;
};

/// Unit-norm basis vector of the null space of a full-row-rank M×(M+1)
/// matrix. Throws std::invalid_argument otherwise.
CxVector null_vector(const CxMatrix& atoms);

/// Raw (unnormalized) penalty of `c` under `spec`; y = A·c is implied.
double penalty_value(const CxMatrix& atoms, const CxVector& c, const PenaltySpec& spec);

LandscapeCurve landscape_scan(const CxMatrix& atoms, const CxVector& c_op, const RealVector& v_grid,
                              const PenaltySpec& spec);

/// Same scan with an explicit null-space direction (any nonzero scaling).
LandscapeCurve landscape_scan(const CxMatrix& atoms, const CxVector& c_op, const CxVector& a_null,
                              const RealVector& v_grid, const PenaltySpec& spec);

/// Grid indices of strict interior local minima.
std::vector<int> local_minima(const RealVector& values);

struct LandscapeInstance {
  CxMatrix atoms;
  CxVector c_op;
};

/// Fixed 4×5 real Gaussian instance with a 2-sparse generating vector whose
/// entries cross zero along the null line at v = −2 and v = 0.71.
LandscapeInstance reference_landscape_instance();

RealVector linspace(double lo, double hi, int count);

// --- executable identity checks -------------------------------------------

/// |MC − closed| / closed for E‖y − Ac‖² with c ~ CN(mean, cov).
double expectation_identity_check(const CxMatrix& atoms, const CxVector& mean,
                                  const CxMatrix& cov, const CxVector& y, int n_samples,
                                  std::uint64_t seed);

/// |LHS − RHS| / |LHS| for yᴴ(σ²I + AΣ⁻¹Aᴴ)⁻¹y = ‖y − Ac_o‖²/σ² + c_oᴴΣc_o.
double quadratic_min_identity_check(const CxMatrix& atoms, const CxVector& y,
                                    const RealVector& sigma_diag, double sigma_n_sq);

/// |approx − quadrature| for E[ln(1 + τc²)] with real c ~ N(mean, var), where
/// approx = ln(1 + τη̂) − τ²ξ̂ / (2(1 + τη̂)²). `eta_hat`/`xi_hat` below zero
/// are replaced by the exact moments mean² + var and 4·mean²·var + 2·var².
double taylor_expectation_check(double eta_hat, double xi_hat, double tau, double mean,
                                double var, int n_points);

/// E[ln(1 + τc²)] by Gauss–Hermite quadrature with n_points nodes.
double gauss_hermite_log_expectation(double tau, double mean, double var, int n_points);

}  // namespace spr
