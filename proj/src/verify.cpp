#include <algorithm>
#include <cmath>

#include "switchq/harness.hpp"

namespace switchq {

namespace {

QVector random_q(RngStream& rng, Eigen::Index n, double scale) {
  QVector q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q[i] = scale * rng.uniform_symmetric();
  }
  return q;
}

Policy random_deterministic_policy(RngStream& rng, int ns, int na) {
  Policy pol(ns);
  for (int s = 0; s < ns; ++s) {
    pol[s] = static_cast<int>(rng.uniform01() * na) % na;
  }
  return pol;
}

Sample random_sample(RngStream& rng, const Mdp& mdp) {
  Sample smp;
  smp.s = static_cast<int>(rng.uniform01() * mdp.num_states()) % mdp.num_states();
  smp.a = static_cast<int>(rng.uniform01() * mdp.num_actions()) % mdp.num_actions();
  smp.s_next = static_cast<int>(rng.uniform01() * mdp.num_states()) % mdp.num_states();
  smp.r = mdp.reward()(pair_index(smp.s, smp.a, mdp.num_states()), smp.s_next);
  return smp;
}

}  // namespace

VerificationReport verify_all(const Mdp& mdp, double alpha, int probe_count, std::uint64_t seed) {
  VerificationReport rep;
  auto add = [&rep](const std::string& name, bool pass, double margin,
                    const std::string& detail = "") {
    rep.items.push_back({name, pass, margin, detail});
  };

  const CompactMatrices cm = build_matrices(mdp);
  const QVector q_star = solve_qstar(cm);
  const double gamma = mdp.discount();
  const double rho = decay_rate(cm, alpha);
  const int ns = mdp.num_states();
  const int na = mdp.num_actions();
  const Eigen::Index np = mdp.num_pairs();
  RngStream rng(seed);

  // --- model identities -----------------------------------------------------
  {
    const double dev = (cm.P.rowwise().sum().array() - 1.0).abs().maxCoeff();
    add("mdp.p-row-stochastic", dev <= 1e-12, 1e-12 - dev);
  }
  {
    double worst = 0.0;
    for (int probe = 0; probe < 20; ++probe) {
      Eigen::MatrixXd pi;
      if (probe % 2 == 0) {
        pi = action_transition_matrix(random_deterministic_policy(rng, ns, na), ns, na);
      } else {
        Eigen::MatrixXd stoch(ns, na);
        for (int s = 0; s < ns; ++s) {
          Eigen::VectorXd row(na);
          double sum = 0.0;
          for (int a = 0; a < na; ++a) {
            row[a] = rng.uniform01() + 1e-3;
            sum += row[a];
          }
          stoch.row(s) = row.transpose() / sum;
        }
        pi = action_transition_matrix(stoch);
      }
      const Eigen::MatrixXd ppi = cm.P * pi;
      worst = std::max(worst, (ppi.rowwise().sum().array() - 1.0).abs().maxCoeff());
      worst = std::max(worst, std::max(0.0, -ppi.minCoeff()));
    }
    add("mdp.ppi-row-stochastic", worst <= 1e-12, 1e-12 - worst);
  }
  {
    const double dev =
        (bellman_optimality_apply(q_star, cm) - q_star).lpNorm<Eigen::Infinity>();
    add("mdp.qstar-fixed-point", dev <= 1e-11, 1e-11 - dev);
  }
  {
    bool ok = true;
    for (int probe = 0; probe < 200 && ok; ++probe) {
      const QVector q = random_q(rng, np, 10.0);
      const int s = static_cast<int>(rng.uniform01() * ns) % ns;
      const double c = 10.0 * rng.uniform_symmetric();
      QVector shifted = q;
      for (int a = 0; a < na; ++a) {
        shifted[pair_index(s, a, ns)] += c;
      }
      ok = greedy_policy(q, ns, na)[s] == greedy_policy(shifted, ns, na)[s];
    }
    add("mdp.greedy-shift-invariance", ok, ok ? 0.0 : -1.0);
  }
  {
    double worst = -1.0;
    for (int probe = 0; probe < 200; ++probe) {
      const QVector q1 = random_q(rng, np, 10.0);
      const QVector q2 = random_q(rng, np, 10.0);
      const double lhs =
          (bellman_optimality_apply(q1, cm) - bellman_optimality_apply(q2, cm))
              .lpNorm<Eigen::Infinity>();
      const double rhs = gamma * (q1 - q2).lpNorm<Eigen::Infinity>() + 1e-12;
      worst = std::max(worst, lhs - rhs);
    }
    add("mdp.bellman-contraction", worst <= 0.0, -worst);
  }

  // --- update decomposition and noise ---------------------------------------
  {
    double worst = 0.0;
    for (int probe = 0; probe < probe_count; ++probe) {
      const QVector q = random_q(rng, np, 10.0);
      const Sample smp = random_sample(rng, mdp);
      LearnerState st = make_learner(q, alpha);
      qlearning_step(st, smp, cm);
      const QVector recon =
          alpha * (expected_update(q, cm) + noise_vector(q, smp, cm));
      worst = std::max(worst, (st.q - q - recon).lpNorm<Eigen::Infinity>());
    }
    add("sampler.update-decomposition", worst <= 1e-12, 1e-12 - worst);
  }
  {
    double worst = 0.0;
    for (int probe = 0; probe < std::min(probe_count, 50); ++probe) {
      const QVector q = random_q(rng, np, 10.0);
      worst = std::max(worst,
                       noise_mean_exhaustive(mdp, cm, q).lpNorm<Eigen::Infinity>());
    }
    add("sampler.noise-zero-mean", worst <= 1e-12, 1e-12 - worst);
  }
  {
    // Averaged iterate equals the batch mean of the recorded iterates.
    const QVector q0 = random_q(rng, np, 1.0);
    const CoupledTrajectory traj = co_simulate(mdp, alpha, 1000, seed + 17, q0, 1);
    QVector batch = QVector::Zero(np);
    for (std::size_t i = 0; i + 1 < traj.records.size(); ++i) {
      batch += traj.records[i].q;
    }
    batch /= static_cast<double>(traj.records.size() - 1);
    const double dev = (batch - traj.records.back().q_avg).lpNorm<Eigen::Infinity>();
    add("sampler.averaged-iterate", dev <= 1e-10, 1e-10 - dev);
  }

  // --- switching-system structure --------------------------------------------
  {
    double min_entry = 0.0;
    double worst_norm = 0.0;
    double worst_rowsum = 0.0;
    for (int probe = 0; probe < probe_count; ++probe) {
      const QVector q = random_q(rng, np, 10.0);
      const SwitchingMatrices sw = realize_matrices(q, q_star, cm, alpha);
      min_entry = std::min(min_entry, sw.A.minCoeff());
      const Eigen::VectorXd rowsums = sw.A.cwiseAbs().rowwise().sum();
      worst_norm = std::max(worst_norm, rowsums.maxCoeff() - rho);
      const Eigen::VectorXd expected =
          (1.0 + alpha * (gamma - 1.0) * cm.visit.array()).matrix();
      worst_rowsum =
          std::max(worst_rowsum, (sw.A.rowwise().sum() - expected).cwiseAbs().maxCoeff());
    }
    add("switching.A-nonnegative", min_entry >= 0.0, min_entry);
    add("switching.lemma2-infnorm", worst_norm <= 1e-12, 1e-12 - worst_norm);
    add("switching.lemma2-rowsum", worst_rowsum <= 1e-12, 1e-12 - worst_rowsum);
  }
  {
    double worst = 0.0;
    const SwitchingMatrices at_star = realize_matrices(q_star, q_star, cm, alpha);
    for (int probe = 0; probe < 200; ++probe) {
      const QVector q = random_q(rng, np, 10.0);
      const QVector q_lower = random_q(rng, np, 10.0);
      const QVector err = random_q(rng, np, 5.0).cwiseAbs();
      const QVector w = random_q(rng, np, 5.0);
      const SwitchingMatrices sw = realize_matrices(q, q_star, cm, alpha);
      const QVector by_error = step_error(err, q_lower, sw, q_star);
      const QVector upper = step_upper(q_lower + err, q, w, cm, alpha, q_star);
      const QVector lower = step_lower(q_lower, w, at_star, alpha, q_star);
      worst = std::max(worst, (by_error - (upper - lower)).lpNorm<Eigen::Infinity>());
    }
    add("switching.error-system-identity", worst <= 1e-12, 1e-12 - worst);
  }
  {
    double worst = 0.0;
    for (int seq = 0; seq < 10; ++seq) {
      std::vector<Policy> switching(200);
      for (auto& pol : switching) {
        pol = random_deterministic_policy(rng, ns, na);
      }
      const QVector q0 = q_star + random_q(rng, np, 5.0);
      const auto norms = simulate_deterministic_switched(mdp, alpha, 200, switching, q0);
      for (std::size_t k = 0; k < norms.size(); ++k) {
        const double bound =
            std::pow(rho, static_cast<double>(k)) * norms[0] + 1e-10;
        worst = std::max(worst, norms[k] - bound);
      }
    }
    add("switching.prop1-decay", worst <= 0.0, -worst);
  }

  // --- Lyapunov certificate --------------------------------------------------
  {
    const double epsilon = (1.0 - rho) / 2.0;
    try {
      const SwitchingMatrices at_star = realize_matrices(q_star, q_star, cm, alpha);
      const LyapunovCertificate cert = lyapunov_certificate(at_star.A, rho, epsilon);
      add("bounds.lyapunov-lambda-min", cert.lambda_min >= 1.0 - 1e-9,
          cert.lambda_min - (1.0 - 1e-9));
      const double lmax_bound =
          lyapunov_lambda_max_bound(static_cast<int>(np), rho, epsilon) + 1e-6;
      add("bounds.lyapunov-lambda-max", cert.lambda_max <= lmax_bound,
          lmax_bound - cert.lambda_max);
      add("bounds.lyapunov-residual", cert.residual <= 1e-8, 1e-8 - cert.residual);
    } catch (const CertificateFailure& e) {
      add("bounds.lyapunov-residual", false, -1.0, e.what());
    }
  }

  // --- Monte Carlo: sandwich, boundedness, bound inequalities ----------------
  const double scale_bound = std::max(mdp.reward_bound(), 1.0);
  {
    ExperimentConfig cfg;
    cfg.alpha = alpha;
    cfg.num_steps = 10000;
    cfg.num_trials = 500;
    cfg.base_seed = seed;
    cfg.q0_mode = Q0Mode::kUniform;
    cfg.record_stride = 100;
    cfg.eval_steps = {100, 1000, 10000};
    try {
      const EnsembleStats stats = run_ensemble(mdp, cfg);
      add("switching.sandwich", stats.violation_count == 0,
          1e-12 - stats.max_violation);
      add("switching.gap-signs",
          stats.min_gap_pump >= 0.0 && stats.max_affine_term <= 0.0,
          std::min(stats.min_gap_pump, -stats.max_affine_term));
      const double qcap = std::max(scale_bound, stats.q0_infnorm_max) / (1.0 - gamma);
      add("sampler.lemma1-bound", stats.max_q_infnorm <= qcap + 1e-12,
          qcap + 1e-12 - stats.max_q_infnorm);
      const double wcap = 4.0 * std::max(scale_bound, stats.q0_infnorm_max) / (1.0 - gamma);
      add("sampler.noise-infnorm-bound", stats.max_noise_infnorm <= wcap + 1e-12,
          wcap + 1e-12 - stats.max_noise_infnorm);
      for (std::size_t j = 0; j < stats.eval_steps.size(); ++j) {
        const double n = static_cast<double>(stats.eval_steps[j]);
        const double rhs1 = theorem1_bound(cm, alpha, n, stats.e0_sq_mean) +
                            3.0 * stats.prefix_lower_se[j];
        add("bounds.thm1-empirical-N" + std::to_string(stats.eval_steps[j]),
            stats.prefix_lower_mean[j] <= rhs1, rhs1 - stats.prefix_lower_mean[j]);
        const double rhs2 =
            theorem2_bound(cm, alpha, n) + 3.0 * stats.avg_iter_se[j];
        add("bounds.thm2-empirical-N" + std::to_string(stats.eval_steps[j]),
            stats.avg_iter_mean[j] <= rhs2, rhs2 - stats.avg_iter_mean[j]);
      }
    } catch (const InvariantViolation& e) {
      add("switching.sandwich", false, -1.0, e.what());
    }
  }
  {
    // Mean decay of the lower comparison system from a shared start.
    ExperimentConfig cfg;
    cfg.alpha = alpha;
    cfg.num_steps = 2000;
    cfg.num_trials = 2000;
    cfg.base_seed = seed + 1;
    cfg.q0_mode = Q0Mode::kFixed;
    cfg.q0_fixed.resize(np);
    for (Eigen::Index i = 0; i < np; ++i) {
      cfg.q0_fixed[i] = (i % 2 == 0) ? 0.5 : -0.5;
    }
    cfg.record_stride = 50;
    cfg.track_coords = true;
    try {
      const EnsembleStats stats = run_ensemble(mdp, cfg);
      std::vector<Eigen::VectorXd> means, ses;
      for (std::size_t r = 0; r < stats.ks.size(); ++r) {
        means.push_back(stats.coord_lower_mean.row(static_cast<Eigen::Index>(r)));
        ses.push_back(stats.coord_lower_se.row(static_cast<Eigen::Index>(r)));
      }
      const double x0 = (cfg.q0_fixed - q_star).lpNorm<Eigen::Infinity>();
      const MeanDecayReport decay = mean_decay_check(stats.ks, means, ses, x0, rho);
      add("bounds.mean-decay", decay.pass, decay.worst_margin,
          "worst at k=" + std::to_string(decay.worst_k));
    } catch (const InvariantViolation& e) {
      add("bounds.mean-decay", false, -1.0, e.what());
    }
  }
  {
    // Overestimation: zero-mean initialization around Q* keeps the lower
    // system unbiased and the iterate biased upward.
    ExperimentConfig cfg;
    cfg.alpha = alpha;
    cfg.num_steps = 1000;
    cfg.num_trials = 2000;
    cfg.base_seed = seed + 2;
    cfg.q0_mode = Q0Mode::kQStarPlusUniform;
    cfg.record_stride = 1000;
    cfg.eval_steps = {100, 1000};
    try {
      const EnsembleStats stats = run_ensemble(mdp, cfg);
      double lower_margin = std::numeric_limits<double>::infinity();
      double orig_margin = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < stats.eval_coord_lower_mean.rows(); ++r) {
        for (Eigen::Index i = 0; i < np; ++i) {
          const double slack = 3.0 * stats.eval_coord_lower_se(r, i) + 1e-12;
          lower_margin =
              std::min(lower_margin, slack - std::abs(stats.eval_coord_lower_mean(r, i)));
          const double oslack = 3.0 * stats.eval_coord_orig_se(r, i) + 1e-12;
          orig_margin =
              std::min(orig_margin, stats.eval_coord_orig_mean(r, i) + oslack);
        }
      }
      add("bounds.overestimation-lower-unbiased", lower_margin >= 0.0, lower_margin);
      add("bounds.overestimation-orig-nonneg", orig_margin >= 0.0, orig_margin);
    } catch (const InvariantViolation& e) {
      add("bounds.overestimation-lower-unbiased", false, -1.0, e.what());
    }
  }

  // --- bound-formula monotonicity ---------------------------------------------
  {
    bool ok = true;
    for (double a : {0.001, 0.01, 0.1}) {
      double prev1 = std::numeric_limits<double>::infinity();
      double prev2 = std::numeric_limits<double>::infinity();
      for (double n : {1e2, 1e3, 1e4, 1e6}) {
        const double v1 = theorem1_bound(cm, a, n, 100.0);
        const double v2 = theorem2_bound(cm, a, n);
        ok = ok && v1 <= prev1 && v2 <= prev2 && v1 > 0.0 && v2 > 0.0;
        prev1 = v1;
        prev2 = v2;
      }
    }
    // The per-step radicand term grows with alpha once the tail is negligible.
    double lead1 = 0.0, lead2 = 0.0;
    for (double a : {1e-4, 1e-3, 1e-2}) {
      const double v1 = theorem1_bound(cm, a, 1e15, 100.0);
      const double v2 = theorem2_bound(cm, a, 1e15);
      ok = ok && v1 > lead1 && v2 > lead2;
      lead1 = v1;
      lead2 = v2;
    }
    add("bounds.thm-monotonicity", ok, ok ? 0.0 : -1.0);
  }

  // --- sample complexity ------------------------------------------------------
  {
    double worst = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (double eps : {0.5, 1.0}) {
      for (double delta : {0.1, 0.25}) {
        const ComplexityBudget budget = sample_complexity(cm, eps, delta);
        worst = std::min(worst, delta + 1e-12 - (budget.phi1 + budget.phi2));
        const ComplexityBudget half = sample_complexity(cm, eps / 2.0, delta);
        const double ratio = half.n_star / budget.n_star;
        ok = ok && std::abs(ratio / 16.0 - 1.0) <= 0.01;
      }
    }
    add("bounds.complexity-backsubstitution", worst >= 0.0, worst);
    add("bounds.complexity-eps-scaling", ok, ok ? 0.0 : -1.0);
  }

  return rep;
}

}  // namespace switchq
