#include "switchq/switching.hpp"

#include <cmath>

namespace switchq {

namespace {

constexpr double kSandwichTol = 1e-12;

// A_pi = I - alpha D + alpha gamma D P Pi, built by scattering the columns of
// alpha gamma D P into the (s', pi(s')) slots.
Eigen::MatrixXd system_matrix(const Policy& policy, const CompactMatrices& cm, double alpha) {
  const int ns = cm.num_states;
  const Eigen::Index np = cm.num_pairs();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(np, np);
  const double ag = alpha * cm.discount;
  for (int sn = 0; sn < ns; ++sn) {
    a.col(pair_index(sn, policy[sn], ns)) = ag * (cm.visit.array() * cm.P.col(sn).array()).matrix();
  }
  a.diagonal() += (1.0 - alpha * cm.visit.array()).matrix();
  return a;
}

// alpha gamma D P (Pi_a - Pi_b) v, evaluated through per-state gathers so the
// sign of the selector difference survives rounding exactly.
Eigen::VectorXd selector_gap(const Policy& pol_a, const Policy& pol_b, const Eigen::VectorXd& v,
                             const CompactMatrices& cm, double alpha, Eigen::VectorXd& scratch) {
  const int ns = cm.num_states;
  scratch.resize(ns);
  for (int sn = 0; sn < ns; ++sn) {
    scratch[sn] = v[pair_index(sn, pol_a[sn], ns)] - v[pair_index(sn, pol_b[sn], ns)];
  }
  return (alpha * cm.discount) * (cm.visit.array() * (cm.P * scratch).array()).matrix();
}

}  // namespace

SwitchingMatrices realize_matrices(const QVector& q, const QVector& q_star,
                                   const CompactMatrices& cm, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("stepsize must lie in (0,1)");
  }
  const Policy pol = greedy_policy(q, cm.num_states, cm.num_actions);
  const Policy pol_star = greedy_policy(q_star, cm.num_states, cm.num_actions);
  SwitchingMatrices out;
  out.A = system_matrix(pol, cm, alpha);
  Eigen::VectorXd scratch;
  out.b = selector_gap(pol, pol_star, q_star, cm, alpha, scratch);
  out.B = out.A - system_matrix(pol_star, cm, alpha);
  return out;
}

QVector step_lower(const QVector& q_lower, const QVector& w,
                   const SwitchingMatrices& at_qstar, double alpha, const QVector& q_star) {
  return q_star + (at_qstar.A * (q_lower - q_star) + alpha * w);
}

QVector step_upper(const QVector& q_upper, const QVector& q_current, const QVector& w,
                   const CompactMatrices& cm, double alpha, const QVector& q_star) {
  const Policy pol = greedy_policy(q_current, cm.num_states, cm.num_actions);
  const Eigen::MatrixXd a = system_matrix(pol, cm, alpha);
  return q_star + (a * (q_upper - q_star) + alpha * w);
}

QVector step_error(const QVector& err, const QVector& q_lower,
                   const SwitchingMatrices& at_q_current, const QVector& q_star) {
  return at_q_current.A * err + at_q_current.B * (q_lower - q_star);
}

CoSimulator::CoSimulator(const CompactMatrices& cm, const TransitionSampler& sampler,
                         QVector q_star, double alpha, RngStream rng, QVector q0)
    : cm_(cm),
      sampler_(sampler),
      q_star_(std::move(q_star)),
      alpha_(alpha),
      rng_(std::move(rng)) {
  if (!(alpha_ > 0.0 && alpha_ < 1.0)) {
    throw ValidationError("stepsize must lie in (0,1)");
  }
  const Eigen::Index np = cm_.num_pairs();
  policy_star_ = greedy_policy(q_star_, cm_.num_states, cm_.num_actions);
  a_star_ = system_matrix(policy_star_, cm_, alpha_);

  x_ = q0 - q_star_;
  xl_ = x_;
  xu_ = x_;
  // Keep the absolute iterate in the same Q* + delta form the comparison
  // systems are reconstructed from, so shared starts agree bit-for-bit.
  q_abs_ = q_star_ + x_;
  q_avg_ = q_abs_;
  max_q_inf_ = q_abs_.lpNorm<Eigen::Infinity>();

  value_.resize(cm_.num_states);
  pv_.resize(np);
  drift_.resize(np);
  w_.resize(np);
  aw_.resize(np);
  xn_.resize(np);
  xln_.resize(np);
  xun_.resize(np);

  policy_ = greedy_policy(q_abs_, cm_.num_states, cm_.num_actions);
  realize_at_current();
}

void CoSimulator::realize_at_current() {
  policy_matches_star_ = (policy_ == policy_star_);
  if (policy_matches_star_) {
    // Same mode as the optimal realization: reuse its matrix bit-for-bit.
    a_ = a_star_;
    b_ = Eigen::VectorXd::Zero(cm_.num_pairs());
  } else {
    a_ = system_matrix(policy_, cm_, alpha_);
    b_ = selector_gap(policy_, policy_star_, q_star_, cm_, alpha_, vdiff_);
    max_affine_term_ = std::max(max_affine_term_, b_.maxCoeff());
  }
}

void CoSimulator::step() {
  const int ns = cm_.num_states;
  const int na = cm_.num_actions;

  // Greedy policy of the current iterate; re-realize the mode on change.
  bool changed = false;
  for (int s = 0; s < ns; ++s) {
    double best = q_abs_[pair_index(s, 0, ns)];
    int best_a = 0;
    for (int a = 1; a < na; ++a) {
      const double v = q_abs_[pair_index(s, a, ns)];
      if (v > best) {
        best = v;
        best_a = a;
      }
    }
    value_[s] = best;
    if (policy_[s] != best_a) {
      policy_[s] = best_a;
      changed = true;
    }
  }
  if (changed) {
    realize_at_current();
  }
  if (!policy_matches_star_) {
    // Single-step gap h = alpha gamma D P (Pi_q - Pi_q*) q, nonnegative.
    hbuf_ = selector_gap(policy_, policy_star_, q_abs_, cm_, alpha_, vdiff_);
    min_gap_pump_ = std::min(min_gap_pump_, hbuf_.minCoeff());
  }

  last_sample_ = sampler_.draw(rng_);
  const Eigen::Index idx = pair_index(last_sample_.s, last_sample_.a, ns);

  // Noise of the vector-form update, from the original iterate.
  pv_.noalias() = cm_.P * value_;
  drift_ = cm_.visit.array() * ((cm_.R.array() + cm_.discount * pv_.array()) - q_abs_.array());
  const double td = (last_sample_.r + cm_.discount * value_[last_sample_.s_next]) - q_abs_[idx];
  w_ = -drift_;
  w_[idx] += td;
  last_noise_inf_ = w_.lpNorm<Eigen::Infinity>();
  max_noise_inf_ = std::max(max_noise_inf_, last_noise_inf_);

  // Shared noise term, computed once and injected into all three systems.
  aw_ = alpha_ * w_;
  xn_.noalias() = a_ * x_;
  xn_ += b_;
  xn_ += aw_;
  xln_.noalias() = a_star_ * xl_;
  xln_ += aw_;
  xun_.noalias() = a_ * xu_;
  xun_ += aw_;

  // Averaged iterate folds in the pre-update Q.
  q_avg_ += (q_abs_ - q_avg_) / static_cast<double>(k_ + 1);

  x_.swap(xn_);
  xl_.swap(xln_);
  xu_.swap(xun_);
  q_abs_ = q_star_ + x_;
  ++k_;

  double viol = 0.0;
  for (Eigen::Index i = 0; i < x_.size(); ++i) {
    viol = std::max(viol, xl_[i] - x_[i]);
    viol = std::max(viol, x_[i] - xu_[i]);
  }
  max_violation_ = std::max(max_violation_, viol);
  if (viol > kSandwichTol) {
    ++violation_count_;
  }
  max_q_inf_ = std::max(max_q_inf_, q_abs_.lpNorm<Eigen::Infinity>());
}

CoupledTrajectory co_simulate(const Mdp& mdp, double alpha, long long num_steps,
                              std::uint64_t seed, const QVector& q0,
                              long long record_stride) {
  if (num_steps < 0 || record_stride < 1) {
    throw ValidationError("num_steps must be >= 0 and record_stride >= 1");
  }
  if (q0.size() != mdp.num_pairs()) {
    throw ValidationError("q0 must have |S||A| entries");
  }
  const CompactMatrices cm = build_matrices(mdp);
  const TransitionSampler sampler(mdp);
  const QVector q_star = solve_qstar(cm);
  CoSimulator sim(cm, sampler, q_star, alpha, RngStream(seed), q0);

  CoupledTrajectory traj;
  traj.num_states = mdp.num_states();
  traj.num_actions = mdp.num_actions();
  traj.q_star = q_star;
  traj.records.reserve(static_cast<std::size_t>(num_steps / record_stride) + 2);

  for (long long k = 0; k <= num_steps; ++k) {
    const bool record = (k % record_stride == 0) || k == num_steps;
    if (record) {
      StepRecord rec;
      rec.k = k;
      rec.q = sim.q();
      rec.q_lower = sim.q_star() + sim.delta_lower();
      rec.q_upper = sim.q_star() + sim.delta_upper();
      rec.q_avg = sim.q_avg();
      rec.gap = sim.gap();
      traj.records.push_back(std::move(rec));
    }
    if (k < num_steps) {
      sim.step();
      if (record) {
        traj.records.back().sample = sim.last_sample();
        traj.records.back().noise_infnorm = sim.last_noise_infnorm();
      }
    }
  }

  traj.violation_count = sim.violation_count();
  traj.max_violation = sim.max_violation();
  traj.max_q_infnorm = sim.max_q_infnorm();
  traj.max_noise_infnorm = sim.max_noise_infnorm();
  traj.min_gap_pump = sim.min_gap_pump();
  traj.max_affine_term = sim.max_affine_term();
  return traj;
}

std::vector<double> simulate_deterministic_switched(const Mdp& mdp, double alpha,
                                                    long long num_steps,
                                                    const std::vector<Policy>& switching,
                                                    const QVector& q0) {
  if (switching.empty()) {
    throw ValidationError("switching sequence must be nonempty");
  }
  const CompactMatrices cm = build_matrices(mdp);
  const QVector q_star = solve_qstar(cm);
  Eigen::VectorXd delta = q0 - q_star;
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(num_steps) + 1);
  norms.push_back(delta.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd next(delta.size());
  for (long long k = 0; k < num_steps; ++k) {
    const Policy& pol = switching[static_cast<std::size_t>(k % switching.size())];
    const Eigen::MatrixXd a = system_matrix(pol, cm, alpha);
    next.noalias() = a * delta;
    delta.swap(next);
    norms.push_back(delta.lpNorm<Eigen::Infinity>());
  }
  return norms;
}

}  // namespace switchq
