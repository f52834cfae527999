#include "switchq/bounds.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace switchq {

namespace {

double induced_infnorm(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

double decay_rate(const CompactMatrices& cm, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("stepsize must lie in (0,1)");
  }
  const double rho = 1.0 - alpha * cm.visit_min * (1.0 - cm.discount);
  if (!(rho > 0.0 && rho < 1.0)) {
    throw ValidationError("decay rate fell outside (0,1); the model is degenerate");
  }
  return rho;
}

double lyapunov_lambda_max_bound(int num_pairs, double rho, double epsilon) {
  // 1 - (rho/(rho+eps))^2 = eps (2 rho + eps) / (rho+eps)^2, free of
  // cancellation for small eps.
  const double c = rho + epsilon;
  return static_cast<double>(num_pairs) * c * c / (epsilon * (2.0 * rho + epsilon));
}

Eigen::MatrixXd lyapunov_series(const Eigen::MatrixXd& a, double decay, double term_cutoff) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd power = a / decay;  // (A/c)^{2^j} across doublings
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::MatrixXd term = power.transpose() * m * power;
    if (induced_infnorm(term) <= term_cutoff) {
      break;
    }
    m += term;
    power = (power * power).eval();
  }
  return 0.5 * (m + m.transpose());
}

LyapunovCertificate lyapunov_certificate(const Eigen::MatrixXd& a_star, double rho, double epsilon) {
  const Eigen::Index n = a_star.rows();
  const double c = rho + epsilon;
  if (!(epsilon > 0.0) || !(c > 0.0 && c < 1.0)) {
    throw ValidationError("lyapunov margin must satisfy rho + epsilon in (0,1)");
  }
  const double c2 = c * c;

  LyapunovCertificate cert;
  cert.epsilon = epsilon;
  if (n <= 64) {
    // Vectorized linear solve of A^T M A - c^2 M = -c^2 I, one refinement pass.
    const Eigen::MatrixXd at = a_star.transpose();
    const Eigen::Index nn = n * n;
    Eigen::MatrixXd sys(nn, nn);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        sys.block(i * n, j * n, n, n) = at(i, j) * at;
      }
    }
    sys -= c2 * Eigen::MatrixXd::Identity(nn, nn);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nn);
    for (Eigen::Index i = 0; i < n; ++i) {
      rhs[i * n + i] = -c2;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
    Eigen::VectorXd mv = lu.solve(rhs);
    mv += lu.solve(rhs - sys * mv);
    Eigen::MatrixXd m = Eigen::Map<Eigen::MatrixXd>(mv.data(), n, n);
    cert.M = 0.5 * (m + m.transpose());
  } else {
    cert.M = lyapunov_series(a_star, c);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cert.M, Eigen::EigenvaluesOnly);
  cert.lambda_min = eig.eigenvalues().minCoeff();
  cert.lambda_max = eig.eigenvalues().maxCoeff();
  cert.residual = induced_infnorm(a_star.transpose() * cert.M * a_star -
                                  c2 * (cert.M - Eigen::MatrixXd::Identity(n, n)));
  if (!(cert.residual <= 1e-8)) {
    throw CertificateFailure("lyapunov equation residual " + std::to_string(cert.residual) +
                             " exceeds 1e-8; epsilon is too small for double precision");
  }
  return cert;
}

std::pair<double, double> noise_bounds(int num_states, int num_actions, double discount) {
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw ValidationError("discount must lie in [0,1)");
  }
  const double inf_bound = 4.0 / (1.0 - discount);
  const double var_bound = 16.0 * num_states * num_actions / ((1.0 - discount) * (1.0 - discount));
  return {inf_bound, var_bound};
}

double theorem1_bound(const CompactMatrices& cm, double alpha, double num_steps, double e0_sq) {
  const double sa = static_cast<double>(cm.num_states) * cm.num_actions;
  const double g = 1.0 - cm.discount;
  const double lead = 32.0 * alpha * sa * sa / (cm.visit_min * g * g * g);
  const double tail = (1.0 / num_steps) * 2.0 * sa * sa * e0_sq / (alpha * cm.visit_min * g);
  return std::sqrt(lead + tail);
}

double theorem2_bound(const CompactMatrices& cm, double alpha, double num_steps) {
  const double sa = static_cast<double>(cm.num_states) * cm.num_actions;
  const double g = 1.0 - cm.discount;
  const double prefactor = (4.0 * cm.discount * cm.visit_max + cm.visit_min * g) /
                           (std::pow(cm.visit_min, 1.5) * std::pow(g, 2.5)) * sa;
  return prefactor * std::sqrt(32.0 * alpha + 4.0 / (num_steps * alpha));
}

ComplexityBudget sample_complexity(int num_states, int num_actions, double visit_min,
                                   double visit_max, double discount, double accuracy,
                                   double confidence) {
  if (!(accuracy > 0.0)) {
    throw ValidationError("accuracy target must be positive");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ValidationError("confidence level must lie in (0,1)");
  }
  const double sa = static_cast<double>(num_states) * num_actions;
  const double g = 1.0 - discount;
  const double d3g5 = visit_min * visit_min * visit_min * g * g * g * g * g;
  const double dmax_sa_sq = visit_max * visit_max * sa * sa;

  ComplexityBudget out;
  out.accuracy = accuracy;
  out.confidence = confidence;
  out.alpha_star = (confidence * confidence * accuracy * accuracy / 8.0) * d3g5 / (400.0 * dmax_sa_sq);
  if (!(out.alpha_star > 0.0 && out.alpha_star < 1.0)) {
    throw ValidationError(
        "derived step-size " + std::to_string(out.alpha_star) +
        " falls outside (0,1); the accuracy/confidence target is unattainable "
        "under a constant step-size (the alpha-side tail constraint binds)");
  }
  out.n_star = std::ceil(3200.0 * dmax_sa_sq /
                         (out.alpha_star * accuracy * accuracy * confidence * confidence * d3g5));

  const double prefactor = 20.0 * visit_max * sa / (accuracy * visit_min * g * g);
  out.phi1 = prefactor * std::sqrt(2.0 * out.alpha_star / (visit_min * g));
  out.phi2 = prefactor * std::sqrt((1.0 / out.n_star) * 2.0 / (out.alpha_star * visit_min * g));
  return out;
}

ComplexityBudget sample_complexity(const CompactMatrices& cm, double accuracy, double confidence) {
  return sample_complexity(cm.num_states, cm.num_actions, cm.visit_min, cm.visit_max,
                           cm.discount, accuracy, confidence);
}

BoundReport make_bound_report(const Mdp& mdp, double alpha, double e0_sq) {
  BoundReport rep;
  rep.cm = build_matrices(mdp);
  rep.rho = decay_rate(rep.cm, alpha);
  std::tie(rep.noise_infnorm_bound, rep.noise_var_bound) =
      noise_bounds(mdp.num_states(), mdp.num_actions(), mdp.discount());
  rep.qmax = std::max(mdp.reward_bound(), 1.0) / (1.0 - mdp.discount());
  rep.alpha = alpha;
  rep.e0_sq = e0_sq;
  return rep;
}

MeanDecayReport mean_decay_check(const std::vector<long long>& ks,
                                 const std::vector<Eigen::VectorXd>& lower_delta_mean,
                                 const std::vector<Eigen::VectorXd>& lower_delta_se,
                                 double initial_delta_infnorm, double rho) {
  MeanDecayReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  // Rounding allowance beyond the Monte Carlo slack; the trial fold sums many
  // near-identical vectors, which matters when the standard error is zero.
  const double fp_slack = 1e-9 * (1.0 + initial_delta_infnorm);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double value = lower_delta_mean[i].lpNorm<Eigen::Infinity>();
    const double slack = 3.0 * lower_delta_se[i].maxCoeff() + fp_slack;
    const double bound = std::pow(rho, static_cast<double>(ks[i])) * initial_delta_infnorm;
    const double margin = bound + slack - value;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_k = ks[i];
    }
    if (margin < 0.0) {
      rep.pass = false;
    }
  }
  return rep;
}

}  // namespace switchq
