#pragma once

#include <cstdint>
#include <random>

#include "switchq/mdp.hpp"

namespace switchq {

/// One experience tuple drawn under the behavior policy (0-based indices).
struct Sample {
  int s = 0;
  int a = 0;
  int s_next = 0;
  double r = 0.0;
};

/// Deterministic seeded stream of uniform variates. Doubles are derived from
/// the raw 64-bit output directly so sequences are reproducible across
/// standard library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0,1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  /// Uniform on [-1,1).
  double uniform_symmetric() { return 2.0 * uniform01() - 1.0; }
  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// Inverse-transform sampler over the model's distributions; cumulative rows
/// are precomputed once per model. Immutable after construction, safe to
/// share across concurrently running trials.
class TransitionSampler {
 public:
  explicit TransitionSampler(const Mdp& mdp);

  /// Draws s ~ p, a ~ beta(.|s), s' ~ P(.|s,a) and looks up r(s,a,s').
  Sample draw(RngStream& rng) const;

 private:
  int num_states_;
  int num_actions_;
  Eigen::VectorXd state_cdf_;   // |S|
  Eigen::MatrixXd action_cdf_;  // |S| x |A|
  Eigen::MatrixXd next_cdf_;    // (|S||A|) x |S|
  Eigen::MatrixXd reward_;      // (|S||A|) x |S|
};

inline Sample sample_transition(const TransitionSampler& sampler, RngStream& rng) {
  return sampler.draw(rng);
}

/// Q-learning iterate, averaged iterate and step count under a constant
/// step-size.
struct LearnerState {
  QVector q;
  QVector q_avg;
  long long step_count = 0;
  double stepsize = 0.0;
};

LearnerState make_learner(QVector q0, double stepsize);

/// One asynchronous update: only entry (s,a) of q changes, by
/// stepsize * (r + gamma max_u q(s',u) - q(s,a)); the averaged iterate folds
/// in the pre-update q, and the step count increments.
void qlearning_step(LearnerState& state, const Sample& sample, const CompactMatrices& cm);

/// Expected one-step drift D R + gamma D P Pi_q q - D q.
QVector expected_update(const QVector& q, const CompactMatrices& cm);

/// Sampling noise w of the vector-form update: the one-hot TD contribution of
/// the sample minus the expected drift. Conditioned on q it has zero mean.
QVector noise_vector(const QVector& q, const Sample& sample, const CompactMatrices& cm);

/// Exact conditional mean of noise_vector: the sum over all (s,a,s') weighted
/// by d(s,a) P(s'|s,a). Zero up to rounding, for any q.
QVector noise_mean_exhaustive(const Mdp& mdp, const CompactMatrices& cm, const QVector& q);

}  // namespace switchq
