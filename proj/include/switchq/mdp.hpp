#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "switchq/errors.hpp"

namespace switchq {

/// A Q-function flattened to a length |S||A| vector, stacked action-major:
/// entry of (s,a) sits at index a*|S| + s (0-based), i.e. Q(.,1), Q(.,2), ...
using QVector = Eigen::VectorXd;

/// Deterministic policy: action index per state (0-based).
using Policy = std::vector<int>;

inline Eigen::Index pair_index(Eigen::Index s, Eigen::Index a, Eigen::Index num_states) {
  return a * num_states + s;
}

/// Raw model description prior to validation. The transition and reward
/// tables use one row per (s,a) pair in the same action-major order as
/// QVector; row (s,a) holds the |S| values over the successor state.
struct MdpData {
  int num_states = 0;
  int num_actions = 0;
  double discount = 0.0;
  Eigen::MatrixXd transition;       // (|S||A|) x |S|, row (s,a) = P(.|s,a)
  Eigen::MatrixXd reward;           // (|S||A|) x |S|, row (s,a) = r(s,a,.)
  Eigen::MatrixXd behavior_policy;  // |S| x |A|, row s = beta(.|s)
  Eigen::VectorXd state_dist;       // |S|
};

/// Validated finite MDP with a fixed behavior policy and state distribution.
///
/// Construction enforces: stochastic rows (to 1e-12), discount in [0,1),
/// finite rewards, and a strictly positive visit distribution
/// d(s,a) = p(s) beta(a|s). When `require_unit_rewards` is set, also rejects
/// max |r| > 1 (the bound the boundedness lemma and noise constants assume;
/// the two-state benchmark model intentionally exceeds it, so the check is
/// opt-in).
class Mdp {
 public:
  explicit Mdp(MdpData data, bool require_unit_rewards = false);

  int num_states() const { return data_.num_states; }
  int num_actions() const { return data_.num_actions; }
  int num_pairs() const { return data_.num_states * data_.num_actions; }
  double discount() const { return data_.discount; }
  const Eigen::MatrixXd& transition() const { return data_.transition; }
  const Eigen::MatrixXd& reward() const { return data_.reward; }
  const Eigen::MatrixXd& behavior_policy() const { return data_.behavior_policy; }
  const Eigen::VectorXd& state_dist() const { return data_.state_dist; }

  /// Visit distribution d(s,a) = p(s) beta(a|s), pair-indexed.
  const Eigen::VectorXd& visit_dist() const { return visit_; }
  double visit_min() const { return visit_min_; }
  double visit_max() const { return visit_max_; }
  /// Largest reward magnitude max |r(s,a,s')|.
  double reward_bound() const { return reward_bound_; }

 private:
  MdpData data_;
  Eigen::VectorXd visit_;
  double visit_min_ = 0.0;
  double visit_max_ = 0.0;
  double reward_bound_ = 0.0;
};

/// Compact dynamical-system matrices: P stacks the per-action transition
/// blocks ((|S||A|) x |S|), R is the expected one-step reward per pair, and
/// visit holds the diagonal of D.
struct CompactMatrices {
  int num_states = 0;
  int num_actions = 0;
  double discount = 0.0;
  Eigen::MatrixXd P;      // (|S||A|) x |S|
  Eigen::VectorXd R;      // |S||A|
  Eigen::VectorXd visit;  // diag(D), |S||A|
  double visit_min = 0.0;
  double visit_max = 0.0;

  int num_pairs() const { return num_states * num_actions; }
};

CompactMatrices build_matrices(const Mdp& mdp);

/// Greedy policy of q; ties broken toward the lowest action index.
Policy greedy_policy(const QVector& q, int num_states, int num_actions);

/// Action transition matrix of a deterministic policy: row s is the one-hot
/// selector of (s, pi(s)), so P * Pi is the state-action transition matrix.
Eigen::MatrixXd action_transition_matrix(const Policy& policy, int num_states, int num_actions);

/// Stochastic-policy overload; `policy` is |S| x |A| with rows on the simplex.
Eigen::MatrixXd action_transition_matrix(const Eigen::MatrixXd& policy);

/// One application of the Bellman optimality operator,
/// (TQ)(s,a) = R(s,a) + gamma * sum_s' P(s'|s,a) max_u q(s',u).
QVector bellman_optimality_apply(const QVector& q, const CompactMatrices& cm);

/// Value iteration to within `tol` of the optimal Q-function in the max norm.
QVector solve_qstar(const CompactMatrices& cm, double tol = 1e-12);
QVector solve_qstar(const Mdp& mdp, double tol = 1e-12);

}  // namespace switchq
