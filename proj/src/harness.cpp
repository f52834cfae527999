#include "switchq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "switchq/io.hpp"

namespace switchq {

namespace {

Mdp make_example1() {
  MdpData d;
  d.num_states = 1;
  d.num_actions = 1;
  d.discount = 0.9;
  d.transition = Eigen::MatrixXd::Ones(1, 1);
  d.reward = Eigen::MatrixXd::Ones(1, 1);
  d.behavior_policy = Eigen::MatrixXd::Ones(1, 1);
  d.state_dist = Eigen::VectorXd::Ones(1);
  return Mdp(std::move(d));
}

Mdp make_example3() {
  MdpData d;
  d.num_states = 1;
  d.num_actions = 2;
  d.discount = 0.9;
  d.transition = Eigen::MatrixXd::Ones(2, 1);
  d.reward.resize(2, 1);
  d.reward << 1.0, 0.0;  // reward 1 under the first action, 0 otherwise
  d.behavior_policy.resize(1, 2);
  d.behavior_policy << 0.5, 0.5;
  d.state_dist = Eigen::VectorXd::Ones(1);
  return Mdp(std::move(d));
}

Mdp make_paper2state() {
  MdpData d;
  d.num_states = 2;
  d.num_actions = 2;
  d.discount = 0.9;
  d.transition.resize(4, 2);
  // rows in pair order (s1,a1), (s2,a1), (s1,a2), (s2,a2)
  d.transition << 0.3863, 0.6137,
                  0.3604, 0.6396,
                  0.8639, 0.1361,
                  0.7971, 0.2029;
  d.reward.resize(4, 2);
  d.reward << -3.0, -3.0,
               1.0,  1.0,
               2.0,  2.0,
              -1.0, -1.0;
  d.behavior_policy.resize(2, 2);
  d.behavior_policy << 0.2, 0.8,
                       0.7, 0.3;
  d.state_dist.resize(2);
  d.state_dist << 0.2, 0.8;
  return Mdp(std::move(d));
}

Eigen::VectorXd dirichlet_row(RngStream& rng, int n) {
  Eigen::VectorXd g(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    g[i] = -std::log(1.0 - rng.uniform01());
    sum += g[i];
  }
  if (sum <= 0.0) {
    return Eigen::VectorXd::Constant(n, 1.0 / n);
  }
  return g / sum;
}

Eigen::VectorXd blended_row(RngStream& rng, int n) {
  return 0.8 * dirichlet_row(rng, n) + Eigen::VectorXd::Constant(n, 0.2 / n);
}

void run_parallel(int count, const std::function<void(int)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < count; i += workers) {
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) {
          first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

struct TrialSummary {
  std::vector<double> err_orig, err_lower, err_upper, gap, err_avg;
  Eigen::MatrixXd coord_orig, coord_lower;
  std::vector<double> prefix_lower, avg_iter;
  Eigen::MatrixXd eval_coord_orig, eval_coord_lower;
  long long violations = 0;
  double max_violation = 0.0;
  double max_q_inf = 0.0;
  double max_noise_inf = 0.0;
  double min_gap_pump = 0.0;
  double max_affine = 0.0;
  double e0_inf = 0.0;
  double q0_inf = 0.0;
  double gap_var_last_decile = 0.0;
};

QVector draw_q0(const ExperimentConfig& config, const QVector& q_star, RngStream& rng) {
  const Eigen::Index np = q_star.size();
  switch (config.q0_mode) {
    case Q0Mode::kFixed:
      if (config.q0_fixed.size() != np) {
        throw ValidationError("q0_fixed must have |S||A| entries");
      }
      return config.q0_fixed;
    case Q0Mode::kUniform: {
      QVector q0(np);
      for (Eigen::Index i = 0; i < np; ++i) {
        q0[i] = rng.uniform_symmetric();
      }
      return q0;
    }
    case Q0Mode::kQStarPlusUniform: {
      QVector q0 = q_star;
      for (Eigen::Index i = 0; i < np; ++i) {
        q0[i] += rng.uniform_symmetric();
      }
      return q0;
    }
  }
  throw ValidationError("unknown q0 mode");
}

TrialSummary run_trial(const CompactMatrices& cm, const TransitionSampler& sampler,
                       const QVector& q_star, const ExperimentConfig& config,
                       const std::vector<long long>& ks, const std::vector<long long>& evals,
                       int trial_index) {
  RngStream rng(config.base_seed + static_cast<std::uint64_t>(trial_index));
  QVector q0 = draw_q0(config, q_star, rng);

  TrialSummary out;
  out.q0_inf = q0.lpNorm<Eigen::Infinity>();
  out.e0_inf = (q0 - q_star).lpNorm<Eigen::Infinity>();

  CoSimulator sim(cm, sampler, q_star, config.alpha, std::move(rng), std::move(q0));

  const std::size_t nrec = ks.size();
  out.err_orig.reserve(nrec);
  out.err_lower.reserve(nrec);
  out.err_upper.reserve(nrec);
  out.gap.reserve(nrec);
  out.err_avg.reserve(nrec);
  if (config.track_coords) {
    out.coord_orig.resize(nrec, cm.num_pairs());
    out.coord_lower.resize(nrec, cm.num_pairs());
  }
  if (!evals.empty()) {
    out.eval_coord_orig.resize(evals.size(), cm.num_pairs());
    out.eval_coord_lower.resize(evals.size(), cm.num_pairs());
  }

  double prefix_sum = 0.0;
  std::size_t rec = 0;
  std::size_t ev = 0;
  const long long decile_start = config.num_steps - config.num_steps / 10;
  double gap_sum = 0.0, gap_sq = 0.0;
  long long gap_n = 0;

  for (long long k = 0; k <= config.num_steps; ++k) {
    if (rec < nrec && ks[rec] == k) {
      const QVector gap_vec = sim.gap();
      out.err_orig.push_back(sim.delta().lpNorm<Eigen::Infinity>());
      out.err_lower.push_back(sim.delta_lower().lpNorm<Eigen::Infinity>());
      out.err_upper.push_back(sim.delta_upper().lpNorm<Eigen::Infinity>());
      out.gap.push_back(gap_vec.lpNorm<Eigen::Infinity>());
      out.err_avg.push_back((sim.q_avg() - q_star).lpNorm<Eigen::Infinity>());
      if (config.track_coords) {
        out.coord_orig.row(rec) = sim.delta().transpose();
        out.coord_lower.row(rec) = sim.delta_lower().transpose();
      }
      if (k >= decile_start) {
        const double g = out.gap.back();
        gap_sum += g;
        gap_sq += g * g;
        ++gap_n;
      }
      ++rec;
    }
    if (k == config.num_steps) {
      break;
    }
    prefix_sum += sim.delta_lower().lpNorm<Eigen::Infinity>();
    sim.step();
    if (ev < evals.size() && evals[ev] == k + 1) {
      out.prefix_lower.push_back(prefix_sum / static_cast<double>(k + 1));
      out.avg_iter.push_back((sim.q_avg() - q_star).lpNorm<Eigen::Infinity>());
      out.eval_coord_orig.row(ev) = sim.delta().transpose();
      out.eval_coord_lower.row(ev) = sim.delta_lower().transpose();
      ++ev;
    }
  }

  if (gap_n > 1) {
    const double mean = gap_sum / gap_n;
    out.gap_var_last_decile = std::max(0.0, gap_sq / gap_n - mean * mean) *
                              (static_cast<double>(gap_n) / (gap_n - 1));
  }

  out.violations = sim.violation_count();
  out.max_violation = sim.max_violation();
  out.max_q_inf = sim.max_q_infnorm();
  out.max_noise_inf = sim.max_noise_infnorm();
  out.min_gap_pump = sim.min_gap_pump();
  out.max_affine = sim.max_affine_term();
  return out;
}

EnsembleStats::Channel fold_channel(const std::vector<TrialSummary>& trials,
                                    std::vector<double> TrialSummary::* member) {
  EnsembleStats::Channel ch;
  if (trials.empty()) {
    return ch;
  }
  const std::size_t n = (trials.front().*member).size();
  const double t = static_cast<double>(trials.size());
  ch.mean.assign(n, 0.0);
  ch.se.assign(n, 0.0);
  for (const auto& tr : trials) {
    for (std::size_t r = 0; r < n; ++r) {
      ch.mean[r] += (tr.*member)[r];
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    ch.mean[r] /= t;
  }
  if (trials.size() > 1) {
    for (const auto& tr : trials) {
      for (std::size_t r = 0; r < n; ++r) {
        const double dev = (tr.*member)[r] - ch.mean[r];
        ch.se[r] += dev * dev;
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      ch.se[r] = std::sqrt(ch.se[r] / (t - 1.0)) / std::sqrt(t);
    }
  }
  return ch;
}

void fold_coords(const std::vector<TrialSummary>& trials,
                 Eigen::MatrixXd TrialSummary::* member,
                 Eigen::MatrixXd& mean, Eigen::MatrixXd& se) {
  const Eigen::MatrixXd& probe = trials.front().*member;
  const double t = static_cast<double>(trials.size());
  mean = Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
  se = Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
  for (const auto& tr : trials) {
    mean += tr.*member;
  }
  mean /= t;
  if (trials.size() > 1) {
    for (const auto& tr : trials) {
      se += (tr.*member - mean).cwiseAbs2();
    }
    se = (se / (t - 1.0)).cwiseSqrt() / std::sqrt(t);
  }
}

}  // namespace

Mdp builtin_mdp(const std::string& name) {
  if (name == "example1") {
    return make_example1();
  }
  if (name == "example3") {
    return make_example3();
  }
  if (name == "paper2state") {
    return make_paper2state();
  }
  throw ValidationError("unknown builtin model '" + name +
                        "' (available: example1, example3, paper2state)");
}

Mdp random_mdp(std::uint64_t seed, int max_states, int max_actions) {
  RngStream rng(seed ^ 0x9e3779b97f4a7c15ull);
  const int ns = 1 + static_cast<int>(rng.uniform01() * max_states) % max_states;
  const int na = 1 + static_cast<int>(rng.uniform01() * max_actions) % max_actions;
  MdpData d;
  d.num_states = ns;
  d.num_actions = na;
  d.discount = 0.1 + 0.8 * rng.uniform01();
  d.transition.resize(ns * na, ns);
  d.reward.resize(ns * na, ns);
  for (Eigen::Index i = 0; i < d.transition.rows(); ++i) {
    d.transition.row(i) = dirichlet_row(rng, ns).transpose();
    for (int j = 0; j < ns; ++j) {
      d.reward(i, j) = rng.uniform_symmetric();
    }
  }
  d.behavior_policy.resize(ns, na);
  for (int s = 0; s < ns; ++s) {
    d.behavior_policy.row(s) = blended_row(rng, na).transpose();
  }
  d.state_dist = blended_row(rng, ns);
  return Mdp(std::move(d));
}

void ExperimentConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha must lie in (0,1)");
  }
  if (num_steps < 1 || num_trials < 1 || record_stride < 1) {
    throw ValidationError("num_steps, num_trials and record_stride must be >= 1");
  }
  for (long long n : eval_steps) {
    if (n < 1 || n > num_steps) {
      throw ValidationError("eval steps must lie in [1, num_steps]");
    }
  }
}

EnsembleStats run_ensemble(const Mdp& mdp, const ExperimentConfig& config) {
  config.validate();
  const CompactMatrices cm = build_matrices(mdp);
  const TransitionSampler sampler(mdp);
  const QVector q_star = solve_qstar(cm);

  std::vector<long long> ks;
  for (long long k = 0; k <= config.num_steps; k += config.record_stride) {
    ks.push_back(k);
  }
  if (ks.back() != config.num_steps) {
    ks.push_back(config.num_steps);
  }
  std::vector<long long> evals = config.eval_steps;
  std::sort(evals.begin(), evals.end());
  evals.erase(std::unique(evals.begin(), evals.end()), evals.end());

  std::vector<TrialSummary> trials(config.num_trials);
  run_parallel(config.num_trials, [&](int i) {
    trials[static_cast<std::size_t>(i)] = run_trial(cm, sampler, q_star, config, ks, evals, i);
  });

  EnsembleStats stats;
  stats.ks = ks;
  stats.eval_steps = evals;
  stats.num_states = mdp.num_states();
  stats.num_actions = mdp.num_actions();
  stats.discount = mdp.discount();
  stats.q_star = q_star;

  stats.err_orig = fold_channel(trials, &TrialSummary::err_orig);
  stats.err_lower = fold_channel(trials, &TrialSummary::err_lower);
  stats.err_upper = fold_channel(trials, &TrialSummary::err_upper);
  stats.gap = fold_channel(trials, &TrialSummary::gap);
  stats.err_avg = fold_channel(trials, &TrialSummary::err_avg);
  if (config.track_coords) {
    fold_coords(trials, &TrialSummary::coord_orig, stats.coord_orig_mean, stats.coord_orig_se);
    fold_coords(trials, &TrialSummary::coord_lower, stats.coord_lower_mean, stats.coord_lower_se);
  }
  if (!evals.empty()) {
    const auto prefix = fold_channel(trials, &TrialSummary::prefix_lower);
    stats.prefix_lower_mean = prefix.mean;
    stats.prefix_lower_se = prefix.se;
    const auto avg = fold_channel(trials, &TrialSummary::avg_iter);
    stats.avg_iter_mean = avg.mean;
    stats.avg_iter_se = avg.se;
    fold_coords(trials, &TrialSummary::eval_coord_orig, stats.eval_coord_orig_mean,
                stats.eval_coord_orig_se);
    fold_coords(trials, &TrialSummary::eval_coord_lower, stats.eval_coord_lower_mean,
                stats.eval_coord_lower_se);
  }

  for (const auto& tr : trials) {
    stats.violation_count += tr.violations;
    stats.max_violation = std::max(stats.max_violation, tr.max_violation);
    stats.max_q_infnorm = std::max(stats.max_q_infnorm, tr.max_q_inf);
    stats.max_noise_infnorm = std::max(stats.max_noise_infnorm, tr.max_noise_inf);
    stats.min_gap_pump = std::min(stats.min_gap_pump, tr.min_gap_pump);
    stats.max_affine_term = std::max(stats.max_affine_term, tr.max_affine);
    stats.e0_sq_mean += tr.e0_inf * tr.e0_inf;
    stats.q0_infnorm_max = std::max(stats.q0_infnorm_max, tr.q0_inf);
    stats.gap_var_last_decile_mean += tr.gap_var_last_decile;
  }
  stats.e0_sq_mean /= static_cast<double>(config.num_trials);
  stats.gap_var_last_decile_mean /= static_cast<double>(config.num_trials);

  if (stats.violation_count > 0) {
    throw InvariantViolation(
        "sandwich ordering violated beyond 1e-12 (worst " +
        std::to_string(stats.max_violation) + "); this indicates an implementation bug");
  }
  return stats;
}

EnsembleStats run_ensemble(const ExperimentConfig& config) {
  return run_ensemble(resolve_mdp_source(config.mdp_source, config.base_seed), config);
}

Mdp resolve_mdp_source(const std::string& source, std::uint64_t base_seed) {
  if (source == "example1" || source == "example3" || source == "paper2state") {
    return builtin_mdp(source);
  }
  if (source == "random") {
    return random_mdp(base_seed);
  }
  return load_mdp(source);
}

bool VerificationReport::all_pass() const {
  for (const auto& item : items) {
    if (!item.pass) {
      return false;
    }
  }
  return true;
}

std::vector<StepSizeRow> step_size_contrast(const Mdp& mdp, std::vector<double> alphas,
                                            const ExperimentConfig& config) {
  if (alphas.empty()) {
    throw ValidationError("at least one step-size is required");
  }
  std::sort(alphas.begin(), alphas.end());
  std::vector<StepSizeRow> rows;
  rows.reserve(alphas.size());
  for (double a : alphas) {
    ExperimentConfig c = config;
    c.alpha = a;
    const EnsembleStats stats = run_ensemble(mdp, c);
    StepSizeRow row;
    row.alpha = a;
    row.initial_mean_err = stats.err_orig.mean.front();
    row.terminal_mean_err = stats.err_orig.mean.back();
    row.gap_variance_last_decile = stats.gap_var_last_decile_mean;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace switchq
