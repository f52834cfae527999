#include <doctest.h>

#include "switchq/harness.hpp"

using namespace switchq;

namespace {

// Independent fixed-point oracle for the two-state model: solve the 2x2
// linear system for V under the candidate policy pi(1)=2, pi(2)=1, expand to
// Q, and confirm the off-policy actions are suboptimal.
QVector paper2state_qstar_oracle() {
  const Mdp mdp = builtin_mdp("paper2state");
  const double g = mdp.discount();
  Eigen::Matrix2d p_pi;
  p_pi.row(0) = mdp.transition().row(pair_index(0, 1, 2));  // state 1, action 2
  p_pi.row(1) = mdp.transition().row(pair_index(1, 0, 2));  // state 2, action 1
  Eigen::Vector2d r_pi(2.0, 1.0);
  const Eigen::Vector2d v =
      (Eigen::Matrix2d::Identity() - g * p_pi).partialPivLu().solve(r_pi);
  QVector q(4);
  const CompactMatrices cm = build_matrices(mdp);
  for (int a = 0; a < 2; ++a) {
    for (int s = 0; s < 2; ++s) {
      const Eigen::Index i = pair_index(s, a, 2);
      q[i] = cm.R[i] + g * mdp.transition().row(i).dot(v);
    }
  }
  // Greedy consistency of the candidate policy.
  REQUIRE(q[pair_index(0, 1, 2)] > q[pair_index(0, 0, 2)]);
  REQUIRE(q[pair_index(1, 0, 2)] > q[pair_index(1, 1, 2)]);
  return q;
}

}  // namespace

TEST_CASE("validation accepts the builtins and computes the visit distribution") {
  const Mdp mdp = builtin_mdp("paper2state");
  CHECK(mdp.visit_dist()[pair_index(0, 0, 2)] == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(mdp.visit_dist()[pair_index(0, 1, 2)] == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(mdp.visit_dist()[pair_index(1, 0, 2)] == doctest::Approx(0.56).epsilon(1e-12));
  CHECK(mdp.visit_dist()[pair_index(1, 1, 2)] == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(mdp.visit_min() == doctest::Approx(0.04));
  CHECK(mdp.reward_bound() == doctest::Approx(3.0));

  const Mdp one = builtin_mdp("example1");
  CHECK(one.visit_dist()[0] == 1.0);
}

TEST_CASE("validation rejects broken models") {
  MdpData d;
  d.num_states = 1;
  d.num_actions = 2;
  d.discount = 0.9;
  d.transition = Eigen::MatrixXd::Ones(2, 1);
  d.reward = Eigen::MatrixXd::Zero(2, 1);
  d.behavior_policy.resize(1, 2);
  d.behavior_policy << 1.0, 0.0;  // action 2 never visited
  d.state_dist = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(Mdp{d}, ValidationError);

  d.behavior_policy << 0.5, 0.5;
  d.discount = 1.0;
  CHECK_THROWS_AS(Mdp{d}, ValidationError);

  d.discount = 0.9;
  d.transition(0, 0) = 0.7;  // non-stochastic row
  CHECK_THROWS_AS(Mdp{d}, ValidationError);

  d.transition(0, 0) = 1.0;
  d.reward(0, 0) = 1.5;
  CHECK_NOTHROW(Mdp{d});
  CHECK_THROWS_AS(Mdp(d, /*require_unit_rewards=*/true), ValidationError);
}

TEST_CASE("compact matrices match the closed-form blocks") {
  const CompactMatrices three = build_matrices(builtin_mdp("example3"));
  CHECK(three.visit[0] == 0.5);
  CHECK(three.visit[1] == 0.5);
  CHECK(three.P(0, 0) == 1.0);
  CHECK(three.P(1, 0) == 1.0);
  CHECK(three.R[0] == 1.0);
  CHECK(three.R[1] == 0.0);

  const CompactMatrices one = build_matrices(builtin_mdp("example1"));
  CHECK(one.P(0, 0) == 1.0);
  CHECK(one.visit[0] == 1.0);
  CHECK(one.R[0] == 1.0);

  // Zero rewards map to a zero expected-reward vector.
  MdpData d;
  d.num_states = 2;
  d.num_actions = 1;
  d.discount = 0.5;
  d.transition.resize(2, 2);
  d.transition << 0.5, 0.5, 0.25, 0.75;
  d.reward = Eigen::MatrixXd::Zero(2, 2);
  d.behavior_policy = Eigen::MatrixXd::Ones(2, 1);
  d.state_dist = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(build_matrices(Mdp(d)).R.norm() == 0.0);
}

TEST_CASE("greedy policy and its selector matrix") {
  QVector q(2);
  q << 10.0, 9.0;
  CHECK(greedy_policy(q, 1, 2) == Policy{0});
  CHECK(greedy_policy(QVector::Zero(2), 1, 2) == Policy{0});  // tie -> lowest index

  const Eigen::MatrixXd pi_a = action_transition_matrix(Policy{0}, 1, 2);
  CHECK(pi_a(0, 0) == 1.0);
  CHECK(pi_a(0, 1) == 0.0);
  const Eigen::MatrixXd pi_b = action_transition_matrix(Policy{1}, 1, 2);
  CHECK(pi_b(0, 0) == 0.0);
  CHECK(pi_b(0, 1) == 1.0);

  // Rows of the selector are probability rows for any stochastic policy.
  RngStream rng(3);
  Eigen::MatrixXd stoch(3, 4);
  for (int s = 0; s < 3; ++s) {
    double sum = 0.0;
    for (int a = 0; a < 4; ++a) {
      stoch(s, a) = rng.uniform01() + 0.01;
      sum += stoch(s, a);
    }
    stoch.row(s) /= sum;
  }
  const Eigen::MatrixXd pi = action_transition_matrix(stoch);
  CHECK((pi.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(pi.minCoeff() >= 0.0);
}

TEST_CASE("bellman operator fixed points and contraction") {
  const CompactMatrices one = build_matrices(builtin_mdp("example1"));
  QVector q1(1);
  q1 << 10.0;
  CHECK(bellman_optimality_apply(q1, one)[0] == doctest::Approx(10.0).epsilon(1e-14));

  const CompactMatrices three = build_matrices(builtin_mdp("example3"));
  QVector q3(2);
  q3 << 10.0, 9.0;
  const QVector t3 = bellman_optimality_apply(q3, three);
  CHECK(t3[0] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(t3[1] == doctest::Approx(9.0).epsilon(1e-14));

  // gamma = 0 collapses to the expected reward for any argument.
  const Mdp rnd0 = random_mdp(11);
  MdpData d;
  d.num_states = rnd0.num_states();
  d.num_actions = rnd0.num_actions();
  d.discount = 0.0;
  d.transition = rnd0.transition();
  d.reward = rnd0.reward();
  d.behavior_policy = rnd0.behavior_policy();
  d.state_dist = rnd0.state_dist();
  const CompactMatrices cm0 = build_matrices(Mdp(d));
  RngStream rng(5);
  QVector anyq(cm0.num_pairs());
  for (Eigen::Index i = 0; i < anyq.size(); ++i) {
    anyq[i] = 10.0 * rng.uniform_symmetric();
  }
  CHECK((bellman_optimality_apply(anyq, cm0) - cm0.R).lpNorm<Eigen::Infinity>() == 0.0);

  // gamma-contraction in the max norm on random pairs.
  const Mdp rnd = random_mdp(12);
  const CompactMatrices cm = build_matrices(rnd);
  for (int probe = 0; probe < 200; ++probe) {
    QVector a(cm.num_pairs()), b(cm.num_pairs());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a[i] = 10.0 * rng.uniform_symmetric();
      b[i] = 10.0 * rng.uniform_symmetric();
    }
    const double lhs = (bellman_optimality_apply(a, cm) - bellman_optimality_apply(b, cm))
                           .lpNorm<Eigen::Infinity>();
    CHECK(lhs <= cm.discount * (a - b).lpNorm<Eigen::Infinity>() + 1e-12);
  }
}

TEST_CASE("greedy argmax is invariant under per-state constant shifts") {
  RngStream rng(7);
  const Mdp mdp = random_mdp(21);
  const int ns = mdp.num_states();
  const int na = mdp.num_actions();
  for (int probe = 0; probe < 200; ++probe) {
    QVector q(ns * na);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      q[i] = 10.0 * rng.uniform_symmetric();
    }
    const int s = static_cast<int>(rng.uniform01() * ns) % ns;
    const double c = 10.0 * rng.uniform_symmetric();
    QVector shifted = q;
    for (int a = 0; a < na; ++a) {
      shifted[pair_index(s, a, ns)] += c;
    }
    CHECK(greedy_policy(q, ns, na)[s] == greedy_policy(shifted, ns, na)[s]);
  }
}

TEST_CASE("solve_qstar reaches the known optima") {
  const QVector q1 = solve_qstar(builtin_mdp("example1"), 1e-12);
  CHECK(q1[0] == doctest::Approx(10.0).epsilon(1e-10));

  const QVector q3 = solve_qstar(builtin_mdp("example3"), 1e-12);
  CHECK(q3[0] == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(q3[1] == doctest::Approx(9.0).epsilon(1e-10));

  const Mdp mdp = builtin_mdp("paper2state");
  const QVector qp = solve_qstar(mdp, 1e-12);
  const QVector oracle = paper2state_qstar_oracle();
  CHECK((qp - oracle).lpNorm<Eigen::Infinity>() <= 1e-9);
  // Pinned from the first oracle run.
  CHECK(qp[pair_index(0, 0, 2)] == doctest::Approx(11.974051385205255).epsilon(1e-9));
  CHECK(qp[pair_index(1, 0, 2)] == doctest::Approx(15.931425436590462).epsilon(1e-9));
  CHECK(qp[pair_index(0, 1, 2)] == doctest::Approx(17.760080460820141).epsilon(1e-9));
  CHECK(qp[pair_index(1, 1, 2)] == doctest::Approx(14.650141720763457).epsilon(1e-9));
  CHECK(greedy_policy(qp, 2, 2) == Policy{1, 0});

  // Fixed-point residual within 10x the tolerance.
  const CompactMatrices cm = build_matrices(mdp);
  CHECK((bellman_optimality_apply(qp, cm) - qp).lpNorm<Eigen::Infinity>() <= 1e-11);
}
