#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "switchq/bounds.hpp"
#include "switchq/switching.hpp"

namespace switchq {

/// Builtin benchmark models: "example1" (single state/action), "example3"
/// (one state, two actions) and "paper2state" (the two-state model used in
/// the trajectory studies).
Mdp builtin_mdp(const std::string& name);

/// Seeded random model for property probes: Dirichlet transition and policy
/// rows blended with 20% uniform mass (keeps every visit probability bounded
/// away from zero), discount in [0.1, 0.9], rewards uniform on [-1, 1].
Mdp random_mdp(std::uint64_t seed, int max_states = 5, int max_actions = 5);

enum class Q0Mode {
  kFixed,             // q0_fixed, shared by every trial
  kUniform,           // elementwise uniform on [-1,1), fresh per trial
  kQStarPlusUniform,  // Q* plus an elementwise uniform [-1,1) offset per trial
};

struct ExperimentConfig {
  std::string mdp_source = "paper2state";  // builtin name, "random", or a file path
  double alpha = 0.002;
  long long num_steps = 10000;
  int num_trials = 100;
  std::uint64_t base_seed = 0;
  Q0Mode q0_mode = Q0Mode::kUniform;
  Eigen::VectorXd q0_fixed;
  long long record_stride = 10;
  std::vector<long long> eval_steps;  // horizons N for prefix/averaged metrics
  bool track_coords = false;          // coordinatewise stats at recorded steps

  void validate() const;
};

/// Trial-aggregated statistics. Channels hold the mean and standard error of
/// an infinity norm at each recorded step across trials.
struct EnsembleStats {
  struct Channel {
    std::vector<double> mean;
    std::vector<double> se;
  };

  std::vector<long long> ks;
  Channel err_orig;    // ||Q_k - Q*||
  Channel err_lower;   // ||Q^L_k - Q*||
  Channel err_upper;   // ||Q^U_k - Q*||
  Channel gap;         // ||Q^U_k - Q^L_k||
  Channel err_avg;     // ||Qtilde_k - Q*||

  // Coordinatewise trial means/standard errors of Q_k - Q* and Q^L_k - Q*
  // (rows follow `ks`), populated when track_coords is set.
  Eigen::MatrixXd coord_orig_mean, coord_orig_se;
  Eigen::MatrixXd coord_lower_mean, coord_lower_se;

  // Per requested horizon N: mean/se of (1/N) sum_{k<N} ||Q^L_k - Q*|| and of
  // ||Qtilde_N - Q*||, plus coordinatewise stats at N.
  std::vector<long long> eval_steps;
  std::vector<double> prefix_lower_mean, prefix_lower_se;
  std::vector<double> avg_iter_mean, avg_iter_se;
  Eigen::MatrixXd eval_coord_orig_mean, eval_coord_orig_se;
  Eigen::MatrixXd eval_coord_lower_mean, eval_coord_lower_se;

  long long violation_count = 0;
  double max_violation = 0.0;
  double max_q_infnorm = 0.0;
  double max_noise_infnorm = 0.0;
  double min_gap_pump = 0.0;
  double max_affine_term = 0.0;
  double e0_sq_mean = 0.0;  // mean ||Q_0 - Q*||_inf^2 across trials
  double q0_infnorm_max = 0.0;
  // Trial-mean of the per-trial variance of ||Q^U - Q^L||_inf over recorded
  // steps in the last decile of the horizon.
  double gap_var_last_decile_mean = 0.0;

  int num_states = 0;
  int num_actions = 0;
  double discount = 0.0;
  QVector q_star;
};

/// Runs num_trials independent coupled simulations with seeds base_seed + i,
/// concurrently when hardware allows; the aggregation is a fold over trials
/// in index order, so results are independent of the thread count. Throws if
/// any trial breaks the sandwich ordering beyond 1e-12.
EnsembleStats run_ensemble(const Mdp& mdp, const ExperimentConfig& config);
EnsembleStats run_ensemble(const ExperimentConfig& config);

/// Maps a --mdp argument to a model: builtin name, "random" (seeded from
/// base_seed), or a description file path.
Mdp resolve_mdp_source(const std::string& source, std::uint64_t base_seed);

struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // signed distance to the threshold; >= 0 passes
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> items;
  bool all_pass() const;
};

/// Runs the full invariant checklist (model identities, noise properties,
/// sandwich ordering, contraction and certificate checks, and the Monte Carlo
/// bound inequalities) against one model.
VerificationReport verify_all(const Mdp& mdp, double alpha, int probe_count, std::uint64_t seed);

struct StepSizeRow {
  double alpha = 0.0;
  double terminal_mean_err = 0.0;
  double initial_mean_err = 0.0;
  double gap_variance_last_decile = 0.0;
};

/// Terminal error and late-trajectory gap variance per step-size, ordered by
/// step-size.
std::vector<StepSizeRow> step_size_contrast(const Mdp& mdp, std::vector<double> alphas,
                                            const ExperimentConfig& config);

}  // namespace switchq
