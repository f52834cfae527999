#include "switchq/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "switchq/io.hpp"

namespace switchq {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitVerification = 2;
constexpr int kExitIo = 3;

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  return out;
}

int cmd_solve(const std::string& mdp_source, double tol, const std::string& out_path) {
  const Mdp mdp = resolve_mdp_source(mdp_source, 0);
  const QVector q_star = solve_qstar(mdp, tol);
  const Policy pol = greedy_policy(q_star, mdp.num_states(), mdp.num_actions());
  const CompactMatrices cm = build_matrices(mdp);

  std::cout << "model: |S| = " << mdp.num_states() << ", |A| = " << mdp.num_actions()
            << ", discount = " << format_double(mdp.discount()) << "\n";
  std::cout << "visit distribution: d_min = " << format_double(cm.visit_min)
            << ", d_max = " << format_double(cm.visit_max) << "\n";
  std::cout << "reward bound: max |r| = " << format_double(mdp.reward_bound()) << "\n";
  for (int a = 0; a < mdp.num_actions(); ++a) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      std::cout << "Q*(" << (s + 1) << "," << (a + 1) << ") = "
                << format_double(q_star[pair_index(s, a, mdp.num_states())]) << "\n";
    }
  }
  for (int s = 0; s < mdp.num_states(); ++s) {
    std::cout << "pi*(" << (s + 1) << ") = " << (pol[s] + 1) << "\n";
  }
  if (!out_path.empty()) {
    auto out = open_output(out_path);
    for (int a = 0; a < mdp.num_actions(); ++a) {
      for (int s = 0; s < mdp.num_states(); ++s) {
        out << (s + 1) << " " << (a + 1) << " "
            << format_double(q_star[pair_index(s, a, mdp.num_states())]) << "\n";
      }
    }
  }
  return kExitOk;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_path) {
  cfg.validate();
  const Mdp mdp = resolve_mdp_source(cfg.mdp_source, cfg.base_seed);
  if (cfg.num_trials > 1) {
    // Monte Carlo pass over all trials first; the CSV below holds the lead
    // trial so its format stays per-step.
    const EnsembleStats stats = run_ensemble(mdp, cfg);
    std::cout << "trials=" << cfg.num_trials
              << " mean final |Q-Q*| = " << format_double(stats.err_orig.mean.back())
              << ", mean final gap = " << format_double(stats.gap.mean.back())
              << ", violations = " << stats.violation_count << "\n";
  }
  // q0 comes from a derived stream so the trajectory's sample draws stay
  // uncorrelated with the initialization.
  RngStream rng(cfg.base_seed ^ 0xd1b54a32d192ed03ull);
  QVector q0;
  const QVector q_star = solve_qstar(mdp);
  switch (cfg.q0_mode) {
    case Q0Mode::kFixed:
      q0 = cfg.q0_fixed;
      break;
    case Q0Mode::kUniform:
      q0.resize(mdp.num_pairs());
      for (Eigen::Index i = 0; i < q0.size(); ++i) {
        q0[i] = rng.uniform_symmetric();
      }
      break;
    case Q0Mode::kQStarPlusUniform:
      q0 = q_star;
      for (Eigen::Index i = 0; i < q0.size(); ++i) {
        q0[i] += rng.uniform_symmetric();
      }
      break;
  }
  const CoupledTrajectory traj =
      co_simulate(mdp, cfg.alpha, cfg.num_steps, cfg.base_seed, q0, cfg.record_stride);
  auto out = open_output(out_path);
  write_trajectory_csv(out, traj);
  std::cout << "wrote " << traj.records.size() << " rows to " << out_path
            << " (sandwich violations: " << traj.violation_count << ")\n";
  return traj.violation_count == 0 ? kExitOk : kExitVerification;
}

int cmd_analyze(const std::string& mdp_source, double alpha, long long num_steps,
                double accuracy, double confidence, double e0_sq_flag) {
  const Mdp mdp = resolve_mdp_source(mdp_source, 0);
  const CompactMatrices cm = build_matrices(mdp);
  const QVector q_star = solve_qstar(cm);
  const double e0_sq = e0_sq_flag >= 0.0
                           ? e0_sq_flag
                           : std::pow(1.0 + q_star.lpNorm<Eigen::Infinity>(), 2.0);
  const BoundReport rep = make_bound_report(mdp, alpha, e0_sq);

  std::cout << "rho = " << format_double(rep.rho) << "\n";
  std::cout << "qmax = " << format_double(rep.qmax) << "\n";
  std::cout << "noise bounds: |w| <= " << format_double(rep.noise_infnorm_bound)
            << ", E[w'w] <= " << format_double(rep.noise_var_bound) << "\n";

  const double epsilon = (1.0 - rep.rho) / 2.0;
  const SwitchingMatrices at_star = realize_matrices(q_star, q_star, cm, alpha);
  const LyapunovCertificate cert = lyapunov_certificate(at_star.A, rep.rho, epsilon);
  std::cout << "lyapunov: epsilon = " << format_double(epsilon)
            << ", lambda_min = " << format_double(cert.lambda_min)
            << ", lambda_max = " << format_double(cert.lambda_max)
            << " (bound " << format_double(lyapunov_lambda_max_bound(
                                  mdp.num_pairs(), rep.rho, epsilon))
            << "), residual = " << format_double(cert.residual) << "\n";

  std::cout << "bound rhs at N = " << num_steps << " (e0_sq = " << format_double(e0_sq)
            << "): lower-system " << format_double(rep.thm1_rhs(static_cast<double>(num_steps)))
            << ", averaged-iterate " << format_double(rep.thm2_rhs(static_cast<double>(num_steps)))
            << "\n";

  const ComplexityBudget budget = sample_complexity(cm, accuracy, confidence);
  std::cout << "complexity(eps = " << format_double(accuracy)
            << ", delta = " << format_double(confidence)
            << "): alpha* = " << format_double(budget.alpha_star)
            << ", N* = " << format_double(budget.n_star)
            << ", phi1 = " << format_double(budget.phi1)
            << ", phi2 = " << format_double(budget.phi2) << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& mdp_source, double alpha, int probes, std::uint64_t seed) {
  const Mdp mdp = resolve_mdp_source(mdp_source, seed);
  const VerificationReport rep = verify_all(mdp, alpha, probes, seed);
  for (const CheckResult& item : rep.items) {
    std::cout << (item.pass ? "PASS " : "FAIL ") << item.name
              << " margin=" << format_double(item.margin);
    if (!item.detail.empty()) {
      std::cout << " (" << item.detail << ")";
    }
    std::cout << "\n";
  }
  const std::size_t passed =
      static_cast<std::size_t>(std::count_if(rep.items.begin(), rep.items.end(),
                                             [](const CheckResult& c) { return c.pass; }));
  std::cout << passed << "/" << rep.items.size() << " checks passed\n";
  return rep.all_pass() ? kExitOk : kExitVerification;
}

}  // namespace

std::vector<std::string> write_paper_example_datasets(const std::string& out_dir,
                                                      std::uint64_t seed,
                                                      long long num_steps,
                                                      long long record_stride) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create directory '" + out_dir + "': " + ec.message());
  }
  const Mdp mdp = builtin_mdp("paper2state");
  RngStream rng(seed ^ 0xd1b54a32d192ed03ull);
  QVector q0(mdp.num_pairs());
  for (Eigen::Index i = 0; i < q0.size(); ++i) {
    q0[i] = rng.uniform_symmetric();
  }
  std::vector<std::string> written;
  for (double alpha : {0.002, 0.9}) {
    const CoupledTrajectory traj = co_simulate(mdp, alpha, num_steps, seed, q0, record_stride);
    std::ostringstream tag;
    tag << alpha;
    const std::string traj_path =
        (std::filesystem::path(out_dir) / ("trajectory_alpha_" + tag.str() + ".csv")).string();
    const std::string gap_path =
        (std::filesystem::path(out_dir) / ("error_alpha_" + tag.str() + ".csv")).string();
    {
      std::ofstream out(traj_path);
      if (!out) {
        throw IoError("cannot open '" + traj_path + "' for writing");
      }
      write_trajectory_csv(out, traj);
    }
    {
      std::ofstream out(gap_path);
      if (!out) {
        throw IoError("cannot open '" + gap_path + "' for writing");
      }
      write_gap_csv(out, traj);
    }
    written.push_back(traj_path);
    written.push_back(gap_path);
  }
  return written;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Constant step-size tabular Q-learning as a stochastic affine switching system: "
               "co-simulation, stability certificates and finite-time error bounds"};
  app.require_subcommand(1);

  std::string mdp_source = "paper2state";
  std::string out_path;
  std::string config_path;
  double alpha = 0.002;
  double tol = 1e-12;
  double accuracy = 0.5;
  double confidence = 0.1;
  double e0_sq = -1.0;
  long long steps = 10000;
  long long stride = 10;
  int trials = 100;
  int probes = 1000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string q0_mode = "uniform";

  auto* solve = app.add_subcommand("solve", "Solve the optimal Q-function");
  solve->add_option("--mdp", mdp_source, "model file or builtin name");
  solve->add_option("--tol", tol, "max-norm tolerance on Q*");
  solve->add_option("--out", out_path, "optional output file for Q*");

  auto* simulate = app.add_subcommand(
      "simulate", "Co-simulate the iterate with its lower/upper comparison systems");
  simulate->add_option("--config", config_path, "experiment config file");
  simulate->add_option("--mdp", mdp_source, "model file or builtin name");
  simulate->add_option("--alpha", alpha, "constant step-size in (0,1)");
  simulate->add_option("--steps", steps, "number of steps");
  simulate->add_option("--seed", seed, "rng seed")->each([&](const std::string&) {
    seed_given = true;
  });
  simulate->add_option("--stride", stride, "record every k-th step");
  simulate->add_option("--trials", trials,
                       "when > 1, run a Monte Carlo ensemble before writing the lead trial");
  simulate->add_option("--q0", q0_mode, "uniform | qstar+uniform");
  simulate->add_option("--out", out_path, "output CSV path")->required();

  auto* analyze = app.add_subcommand("analyze", "Print decay rate, certificates and bounds");
  analyze->add_option("--mdp", mdp_source, "model file or builtin name");
  analyze->add_option("--alpha", alpha, "constant step-size in (0,1)");
  analyze->add_option("--steps", steps, "horizon N for the bound right-hand sides");
  analyze->add_option("--eps", accuracy, "accuracy target for the sample budget");
  analyze->add_option("--delta", confidence, "failure probability for the sample budget");
  analyze->add_option("--e0sq", e0_sq, "E||Q_0 - Q*||^2 (default (1+||Q*||)^2)");

  auto* verify = app.add_subcommand("verify", "Run the full invariant checklist");
  verify->add_option("--mdp", mdp_source, "model file or builtin name");
  verify->add_option("--alpha", alpha, "constant step-size in (0,1)")->default_val(0.01);
  verify->add_option("--probes", probes, "random probes per structural check");
  verify->add_option("--seed", seed, "rng seed")->required();

  auto* paper = app.add_subcommand(
      "paper-example", "Emit the two-state benchmark datasets at alpha in {0.002, 0.9}");
  paper->add_option("--out", out_path, "output directory")->required();
  paper->add_option("--seed", seed, "rng seed")->required();
  paper->add_option("--steps", steps, "number of steps")->default_val(500000);
  paper->add_option("--stride", stride, "record every k-th step")->default_val(100);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (solve->parsed()) {
      return cmd_solve(mdp_source, tol, out_path);
    }
    if (simulate->parsed()) {
      ExperimentConfig cfg;
      if (!config_path.empty()) {
        cfg = read_config_file(config_path);
      }
      if (simulate->count("--mdp")) cfg.mdp_source = mdp_source;
      if (simulate->count("--alpha")) cfg.alpha = alpha;
      if (simulate->count("--steps")) cfg.num_steps = steps;
      if (simulate->count("--stride")) cfg.record_stride = stride;
      if (simulate->count("--trials")) cfg.num_trials = trials;
      if (seed_given) cfg.base_seed = seed;
      if (simulate->count("--q0")) {
        if (q0_mode == "uniform") {
          cfg.q0_mode = Q0Mode::kUniform;
        } else if (q0_mode == "qstar+uniform") {
          cfg.q0_mode = Q0Mode::kQStarPlusUniform;
        } else {
          throw ValidationError("--q0 must be uniform or qstar+uniform");
        }
      }
      if (config_path.empty() && !seed_given) {
        throw ValidationError("simulate requires --seed (or a config file with one)");
      }
      return cmd_simulate(cfg, out_path);
    }
    if (analyze->parsed()) {
      return cmd_analyze(mdp_source, alpha, steps, accuracy, confidence, e0_sq);
    }
    if (verify->parsed()) {
      return cmd_verify(mdp_source, alpha, probes, seed);
    }
    if (paper->parsed()) {
      const auto files = write_paper_example_datasets(out_path, seed, steps, stride);
      for (const auto& f : files) {
        std::cout << "wrote " << f << "\n";
      }
      return kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InvariantViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerification;
  } catch (const CertificateFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerification;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace switchq
