#include "switchq/mdp.hpp"

#include <cmath>
#include <limits>

namespace switchq {

namespace {

constexpr double kRowSumTol = 1e-12;

void check_distribution_rows(const Eigen::MatrixXd& m, const std::string& what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError(what + " row " + std::to_string(i) +
                              " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      throw ValidationError(what + " row " + std::to_string(i) +
                            " sums to " + std::to_string(sum) + ", expected 1");
    }
  }
}

}  // namespace

Mdp::Mdp(MdpData data, bool require_unit_rewards) : data_(std::move(data)) {
  const int ns = data_.num_states;
  const int na = data_.num_actions;
  if (ns <= 0 || na <= 0) {
    throw ValidationError("num_states and num_actions must be positive");
  }
  const Eigen::Index np = static_cast<Eigen::Index>(ns) * na;
  if (data_.transition.rows() != np || data_.transition.cols() != ns) {
    throw ValidationError("transition must be (|S||A|) x |S|");
  }
  if (data_.reward.rows() != np || data_.reward.cols() != ns) {
    throw ValidationError("reward must be (|S||A|) x |S|");
  }
  if (data_.behavior_policy.rows() != ns || data_.behavior_policy.cols() != na) {
    throw ValidationError("behavior_policy must be |S| x |A|");
  }
  if (data_.state_dist.size() != ns) {
    throw ValidationError("state_dist must have |S| entries");
  }
  if (!(data_.discount >= 0.0 && data_.discount < 1.0)) {
    throw ValidationError("discount must lie in [0,1)");
  }

  check_distribution_rows(data_.transition, "transition");
  check_distribution_rows(data_.behavior_policy, "behavior_policy");
  check_distribution_rows(data_.state_dist.transpose(), "state_dist");

  reward_bound_ = 0.0;
  for (Eigen::Index i = 0; i < np; ++i) {
    for (Eigen::Index j = 0; j < ns; ++j) {
      const double r = data_.reward(i, j);
      if (!std::isfinite(r)) {
        throw ValidationError("reward table has a non-finite entry");
      }
      reward_bound_ = std::max(reward_bound_, std::abs(r));
    }
  }
  if (require_unit_rewards && reward_bound_ > 1.0 + kRowSumTol) {
    throw ValidationError("reward bound exceeds 1 (max |r| = " +
                          std::to_string(reward_bound_) + ")");
  }

  visit_.resize(np);
  for (int a = 0; a < na; ++a) {
    for (int s = 0; s < ns; ++s) {
      visit_[pair_index(s, a, ns)] = data_.state_dist[s] * data_.behavior_policy(s, a);
    }
  }
  visit_min_ = visit_.minCoeff();
  visit_max_ = visit_.maxCoeff();
  if (visit_min_ <= 0.0) {
    for (int a = 0; a < na; ++a) {
      for (int s = 0; s < ns; ++s) {
        if (visit_[pair_index(s, a, ns)] <= 0.0) {
          throw ValidationError("state-action pair (s=" + std::to_string(s + 1) +
                                ", a=" + std::to_string(a + 1) +
                                ") is never visited: p(s)beta(a|s) = 0");
        }
      }
    }
  }
}

CompactMatrices build_matrices(const Mdp& mdp) {
  CompactMatrices cm;
  cm.num_states = mdp.num_states();
  cm.num_actions = mdp.num_actions();
  cm.discount = mdp.discount();
  cm.P = mdp.transition();
  cm.visit = mdp.visit_dist();
  cm.visit_min = mdp.visit_min();
  cm.visit_max = mdp.visit_max();
  const Eigen::Index np = mdp.num_pairs();
  cm.R.resize(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    cm.R[i] = mdp.transition().row(i).dot(mdp.reward().row(i));
  }
  return cm;
}

Policy greedy_policy(const QVector& q, int num_states, int num_actions) {
  Policy policy(num_states, 0);
  for (int s = 0; s < num_states; ++s) {
    double best = q[pair_index(s, 0, num_states)];
    int best_a = 0;
    for (int a = 1; a < num_actions; ++a) {
      const double v = q[pair_index(s, a, num_states)];
      if (v > best) {
        best = v;
        best_a = a;
      }
    }
    policy[s] = best_a;
  }
  return policy;
}

Eigen::MatrixXd action_transition_matrix(const Policy& policy, int num_states, int num_actions) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(num_states, static_cast<Eigen::Index>(num_states) * num_actions);
  for (int s = 0; s < num_states; ++s) {
    pi(s, pair_index(s, policy[s], num_states)) = 1.0;
  }
  return pi;
}

Eigen::MatrixXd action_transition_matrix(const Eigen::MatrixXd& policy) {
  const Eigen::Index ns = policy.rows();
  const Eigen::Index na = policy.cols();
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(ns, ns * na);
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index a = 0; a < na; ++a) {
      pi(s, pair_index(s, a, ns)) = policy(s, a);
    }
  }
  return pi;
}

QVector bellman_optimality_apply(const QVector& q, const CompactMatrices& cm) {
  const int ns = cm.num_states;
  const int na = cm.num_actions;
  Eigen::VectorXd v(ns);
  for (int s = 0; s < ns; ++s) {
    double best = q[pair_index(s, 0, ns)];
    for (int a = 1; a < na; ++a) {
      best = std::max(best, q[pair_index(s, a, ns)]);
    }
    v[s] = best;
  }
  return cm.R + cm.discount * (cm.P * v);
}

QVector solve_qstar(const CompactMatrices& cm, double tol) {
  if (!(tol > 0.0)) {
    throw ValidationError("solve_qstar tolerance must be positive");
  }
  const double gamma = cm.discount;
  QVector q = QVector::Zero(cm.num_pairs());
  if (gamma == 0.0) {
    return bellman_optimality_apply(q, cm);
  }
  // ||T q - q|| <= tol (1-gamma)/gamma guarantees ||T q - Q*|| <= tol.
  const double threshold = tol * (1.0 - gamma) / gamma;
  double best_diff = std::numeric_limits<double>::infinity();
  int stalled = 0;
  while (true) {
    QVector next = bellman_optimality_apply(q, cm);
    const double diff = (next - q).lpNorm<Eigen::Infinity>();
    q = std::move(next);
    if (diff <= threshold) {
      break;
    }
    // Guard against a tolerance below the floating-point noise floor.
    if (diff < best_diff) {
      best_diff = diff;
      stalled = 0;
    } else if (++stalled > 100) {
      break;
    }
  }
  return q;
}

QVector solve_qstar(const Mdp& mdp, double tol) {
  return solve_qstar(build_matrices(mdp), tol);
}

}  // namespace switchq
