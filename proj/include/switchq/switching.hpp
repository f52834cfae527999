#pragma once

#include <optional>
#include <vector>

#include "switchq/sampler.hpp"

namespace switchq {

/// Matrices of the affine switching form of the update around Q*:
///   A = I + alpha (gamma D P Pi_q - D)
///   b = alpha gamma D P (Pi_q - Pi_q*) Q*
///   B = A_q - A_q* = alpha gamma D P (Pi_q - Pi_q*)
/// A is elementwise nonnegative with ||A||_inf <= rho; b is elementwise <= 0.
struct SwitchingMatrices {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd B;
};

SwitchingMatrices realize_matrices(const QVector& q, const QVector& q_star,
                                   const CompactMatrices& cm, double alpha);

/// Lower comparison system: Q* + A_q* (q_lower - Q*) + alpha w, with w taken
/// from the original system's current iterate.
QVector step_lower(const QVector& q_lower, const QVector& w,
                   const SwitchingMatrices& at_qstar, double alpha, const QVector& q_star);

/// Upper comparison system: Q* + A_{q_current} (q_upper - Q*) + alpha w. The
/// system matrix is realized at the original iterate, not at q_upper.
QVector step_upper(const QVector& q_upper, const QVector& q_current, const QVector& w,
                   const CompactMatrices& cm, double alpha, const QVector& q_star);

/// Error system for the gap q_upper - q_lower: A_{q_current} err +
/// B_{q_current} (q_lower - Q*). The shared noise cancels, so no w enters.
QVector step_error(const QVector& err, const QVector& q_lower,
                   const SwitchingMatrices& at_q_current, const QVector& q_star);

/// Per-step record of the coupled run. `sample` and `noise_infnorm` describe
/// the transition consumed at step k; the final record carries no sample.
struct StepRecord {
  long long k = 0;
  QVector q;
  QVector q_lower;
  QVector q_upper;
  QVector q_avg;
  QVector gap;  // q_upper - q_lower, elementwise >= 0
  std::optional<Sample> sample;
  double noise_infnorm = 0.0;
};

struct CoupledTrajectory {
  int num_states = 0;
  int num_actions = 0;
  std::vector<StepRecord> records;
  QVector q_star;
  long long violation_count = 0;  // sandwich violations beyond 1e-12
  double max_violation = 0.0;
  double max_q_infnorm = 0.0;
  double max_noise_infnorm = 0.0;
  double min_gap_pump = 0.0;       // min coordinate of h over visited iterates
  double max_affine_term = 0.0;    // max coordinate of b over realizations
};

/// Drives the original iterate together with the lower and upper comparison
/// systems and the averaged iterate on one shared sample stream. Each step
/// draws one sample, computes the noise w from the original system's current
/// iterate, and injects the same alpha*w into all three systems; the system
/// matrix is re-realized only when the greedy policy of the iterate changes.
class CoSimulator {
 public:
  CoSimulator(const CompactMatrices& cm, const TransitionSampler& sampler,
              QVector q_star, double alpha, RngStream rng, QVector q0);

  void step();

  long long step_count() const { return k_; }
  /// Deviations from Q* of the three systems.
  const QVector& delta() const { return x_; }
  const QVector& delta_lower() const { return xl_; }
  const QVector& delta_upper() const { return xu_; }
  QVector gap() const { return xu_ - xl_; }
  const QVector& q() const { return q_abs_; }
  const QVector& q_avg() const { return q_avg_; }
  const QVector& q_star() const { return q_star_; }
  const Sample& last_sample() const { return last_sample_; }
  double last_noise_infnorm() const { return last_noise_inf_; }

  long long violation_count() const { return violation_count_; }
  double max_violation() const { return max_violation_; }
  double max_q_infnorm() const { return max_q_inf_; }
  double max_noise_infnorm() const { return max_noise_inf_; }
  double min_gap_pump() const { return min_gap_pump_; }
  double max_affine_term() const { return max_affine_term_; }

 private:
  void realize_at_current();

  const CompactMatrices& cm_;
  const TransitionSampler& sampler_;
  QVector q_star_;
  double alpha_;
  RngStream rng_;

  Policy policy_star_;
  Policy policy_;
  bool policy_matches_star_ = false;
  Eigen::MatrixXd a_star_;
  Eigen::MatrixXd a_;      // realized at the current iterate
  Eigen::VectorXd b_;

  long long k_ = 0;
  QVector x_, xl_, xu_;
  QVector q_abs_, q_avg_;
  Sample last_sample_;
  double last_noise_inf_ = 0.0;

  long long violation_count_ = 0;
  double max_violation_ = 0.0;
  double max_q_inf_ = 0.0;
  double max_noise_inf_ = 0.0;
  double min_gap_pump_ = 0.0;
  double max_affine_term_ = 0.0;

  // preallocated step buffers
  Eigen::VectorXd value_, pv_, drift_, w_, aw_, xn_, xln_, xun_, hbuf_, vdiff_;
};

/// Convenience wrapper: runs CoSimulator for `num_steps` steps from q0,
/// recording every `record_stride`-th step (plus step 0). Q* is solved
/// internally to 1e-12.
CoupledTrajectory co_simulate(const Mdp& mdp, double alpha, long long num_steps,
                              std::uint64_t seed, const QVector& q0,
                              long long record_stride = 1);

/// Noise-free switched recursion delta' = A_pi delta under an externally
/// supplied switching sequence (used cyclically); returns ||delta_k||_inf for
/// k = 0..num_steps.
std::vector<double> simulate_deterministic_switched(const Mdp& mdp, double alpha,
                                                    long long num_steps,
                                                    const std::vector<Policy>& switching,
                                                    const QVector& q0);

}  // namespace switchq
