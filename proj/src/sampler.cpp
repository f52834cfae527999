#include "switchq/sampler.hpp"

namespace switchq {

namespace {

// Index of the first cdf entry >= u; the final bucket absorbs rounding in the
// cumulative sums.
template <typename Row>
int draw_index(const Row& cdf, double u) {
  const int n = static_cast<int>(cdf.size());
  for (int i = 0; i < n - 1; ++i) {
    if (u < cdf[i]) {
      return i;
    }
  }
  return n - 1;
}

Eigen::VectorXd cumulative(const Eigen::VectorXd& p) {
  Eigen::VectorXd cdf(p.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  return cdf;
}

}  // namespace

TransitionSampler::TransitionSampler(const Mdp& mdp)
    : num_states_(mdp.num_states()),
      num_actions_(mdp.num_actions()),
      reward_(mdp.reward()) {
  state_cdf_ = cumulative(mdp.state_dist());
  action_cdf_.resize(num_states_, num_actions_);
  for (int s = 0; s < num_states_; ++s) {
    action_cdf_.row(s) = cumulative(mdp.behavior_policy().row(s).transpose()).transpose();
  }
  next_cdf_.resize(mdp.num_pairs(), num_states_);
  for (Eigen::Index i = 0; i < next_cdf_.rows(); ++i) {
    next_cdf_.row(i) = cumulative(mdp.transition().row(i).transpose()).transpose();
  }
}

Sample TransitionSampler::draw(RngStream& rng) const {
  Sample out;
  out.s = draw_index(state_cdf_, rng.uniform01());
  out.a = draw_index(action_cdf_.row(out.s), rng.uniform01());
  const Eigen::Index row = pair_index(out.s, out.a, num_states_);
  out.s_next = draw_index(next_cdf_.row(row), rng.uniform01());
  out.r = reward_(row, out.s_next);
  return out;
}

LearnerState make_learner(QVector q0, double stepsize) {
  if (!(stepsize > 0.0 && stepsize < 1.0)) {
    throw ValidationError("stepsize must lie in (0,1)");
  }
  LearnerState st;
  st.q = std::move(q0);
  st.q_avg = st.q;
  st.step_count = 0;
  st.stepsize = stepsize;
  return st;
}

void qlearning_step(LearnerState& state, const Sample& sample, const CompactMatrices& cm) {
  const int ns = cm.num_states;
  double best = state.q[pair_index(sample.s_next, 0, ns)];
  for (int a = 1; a < cm.num_actions; ++a) {
    best = std::max(best, state.q[pair_index(sample.s_next, a, ns)]);
  }
  const Eigen::Index idx = pair_index(sample.s, sample.a, ns);
  const double td = (sample.r + cm.discount * best) - state.q[idx];
  state.q_avg += (state.q - state.q_avg) / static_cast<double>(state.step_count + 1);
  state.q[idx] += state.stepsize * td;
  ++state.step_count;
}

QVector expected_update(const QVector& q, const CompactMatrices& cm) {
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
  const Eigen::VectorXd pv = cm.P * v;
  // Factored as d .* ((R + gamma P Pi_q q) - q) so the per-entry arithmetic
  // matches the sample TD term exactly on degenerate models.
  return cm.visit.array() * ((cm.R.array() + cm.discount * pv.array()) - q.array());
}

QVector noise_vector(const QVector& q, const Sample& sample, const CompactMatrices& cm) {
  const int ns = cm.num_states;
  double best = q[pair_index(sample.s_next, 0, ns)];
  for (int a = 1; a < cm.num_actions; ++a) {
    best = std::max(best, q[pair_index(sample.s_next, a, ns)]);
  }
  const Eigen::Index idx = pair_index(sample.s, sample.a, ns);
  const double td = (sample.r + cm.discount * best) - q[idx];
  QVector w = -expected_update(q, cm);
  w[idx] += td;
  return w;
}

QVector noise_mean_exhaustive(const Mdp& mdp, const CompactMatrices& cm, const QVector& q) {
  QVector mean = QVector::Zero(cm.num_pairs());
  Sample sample;
  for (int s = 0; s < cm.num_states; ++s) {
    for (int a = 0; a < cm.num_actions; ++a) {
      const Eigen::Index row = pair_index(s, a, cm.num_states);
      const double d = mdp.visit_dist()[row];
      for (int sn = 0; sn < cm.num_states; ++sn) {
        const double p = mdp.transition()(row, sn);
        if (p == 0.0) {
          continue;
        }
        sample.s = s;
        sample.a = a;
        sample.s_next = sn;
        sample.r = mdp.reward()(row, sn);
        mean += (d * p) * noise_vector(q, sample, cm);
      }
    }
  }
  return mean;
}

}  // namespace switchq
