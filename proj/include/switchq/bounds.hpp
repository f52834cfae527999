#pragma once

#include <utility>
#include <vector>

#include "switchq/mdp.hpp"

namespace switchq {

/// Exponential decay rate rho = 1 - alpha d_min (1 - gamma); the infinity-norm
/// contraction factor shared by every realized system matrix.
double decay_rate(const CompactMatrices& cm, double alpha);

/// Positive-definite solution of A^T M A = (rho+eps)^2 (M - I) together with
/// its eigenvalue range and equation residual.
struct LyapunovCertificate {
  Eigen::MatrixXd M;
  double epsilon = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double residual = 0.0;
};

/// Closed-form eigenvalue-range bound |S||A| / (1 - (rho/(rho+eps))^2),
/// evaluated without cancellation.
double lyapunov_lambda_max_bound(int num_pairs, double rho, double epsilon);

/// Geometric-series evaluation of M = sum_k (rho+eps)^{-2k} (A^k)^T A^k,
/// accumulated by repeated squaring until the added term drops below
/// `term_cutoff` in the infinity norm.
Eigen::MatrixXd lyapunov_series(const Eigen::MatrixXd& a, double decay, double term_cutoff = 1e-14);

/// Certifies Schur stability of A (realized at Q*): solves the fixed-point
/// equation directly for |S||A| <= 64 and by the truncated series otherwise.
/// Throws CertificateFailure if the residual exceeds 1e-8, which signals an
/// epsilon too small for double precision.
LyapunovCertificate lyapunov_certificate(const Eigen::MatrixXd& a_star, double rho, double epsilon);

/// (4/(1-gamma), 16 |S||A|/(1-gamma)^2): per-sample noise infinity-norm bound
/// and the conditional second-moment bound W under unit rewards and
/// initialization.
std::pair<double, double> noise_bounds(int num_states, int num_actions, double discount);

/// Right-hand side of the averaged lower-system error bound at horizon N;
/// e0_sq is E ||Q_0 - Q*||_inf^2.
double theorem1_bound(const CompactMatrices& cm, double alpha, double num_steps, double e0_sq);

/// Right-hand side of the averaged-iterate error bound at horizon N.
double theorem2_bound(const CompactMatrices& cm, double alpha, double num_steps);

/// Step-size and sample-count budget for a target accuracy/confidence pair,
/// with the two tail terms phi1, phi2 evaluated at the chosen point.
/// n_star stores ceil of the sample bound as a double; the bound routinely
/// exceeds the 64-bit integer range.
struct ComplexityBudget {
  double accuracy = 0.0;
  double confidence = 0.0;
  double alpha_star = 0.0;
  double n_star = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
};

ComplexityBudget sample_complexity(int num_states, int num_actions, double visit_min,
                                   double visit_max, double discount, double accuracy,
                                   double confidence);
ComplexityBudget sample_complexity(const CompactMatrices& cm, double accuracy, double confidence);

/// Closed-form constants and bound evaluators for one (model, stepsize) pair.
struct BoundReport {
  double rho = 0.0;
  double noise_infnorm_bound = 0.0;
  double noise_var_bound = 0.0;
  double qmax = 0.0;
  double alpha = 0.0;
  double e0_sq = 0.0;
  CompactMatrices cm;

  double thm1_rhs(double num_steps) const { return theorem1_bound(cm, alpha, num_steps, e0_sq); }
  double thm2_rhs(double num_steps) const { return theorem2_bound(cm, alpha, num_steps); }
};

BoundReport make_bound_report(const Mdp& mdp, double alpha, double e0_sq);

/// Checks the mean-dynamics decay of the lower comparison system against
/// rho^k ||Q_0 - Q*||_inf with three-standard-error slack per checkpoint.
struct MeanDecayReport {
  bool pass = true;
  double worst_margin = 0.0;  // min over checkpoints of bound + slack - value
  long long worst_k = 0;
};

MeanDecayReport mean_decay_check(const std::vector<long long>& ks,
                                 const std::vector<Eigen::VectorXd>& lower_delta_mean,
                                 const std::vector<Eigen::VectorXd>& lower_delta_se,
                                 double initial_delta_infnorm, double rho);

}  // namespace switchq
