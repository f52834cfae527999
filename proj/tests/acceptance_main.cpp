// Acceptance suite: runs every contract-level criterion end to end and
// prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "switchq/cli.hpp"
#include "switchq/io.hpp"

using namespace switchq;

namespace {

struct Gate {
  int failures = 0;

  void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %02d %-28s %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) {
      ++failures;
    }
  }
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct CorpusEntry {
  std::string name;
  Mdp mdp;
  EnsembleStats stats;  // filled by the sandwich criterion
  bool stats_ok = false;
};

QVector random_probe(RngStream& rng, Eigen::Index n, double scale) {
  QVector q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q[i] = scale * rng.uniform_symmetric();
  }
  return q;
}

// Reads the `k` and trailing `err_inf` columns of a gap CSV.
std::vector<std::pair<long long, double>> read_gap_channel(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::pair<long long, double>> rows;
  while (std::getline(in, line)) {
    const auto first_comma = line.find(',');
    const auto last_comma = line.rfind(',');
    rows.emplace_back(std::stoll(line.substr(0, first_comma)),
                      std::stod(line.substr(last_comma + 1)));
  }
  return rows;
}

}  // namespace

int main() {
  Gate gate;
  std::vector<CorpusEntry> corpus;
  corpus.push_back({"example1", builtin_mdp("example1"), {}, false});
  corpus.push_back({"example3", builtin_mdp("example3"), {}, false});
  corpus.push_back({"paper2state", builtin_mdp("paper2state"), {}, false});
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
    corpus.push_back({"random" + std::to_string(seed), random_mdp(seed), {}, false});
  }

  // 1. Elementwise sandwich ordering across the corpus, 100 trials x 1e4 steps.
  {
    const auto t0 = std::chrono::steady_clock::now();
    long long violations = 0;
    double worst = 0.0;
    std::string err;
    for (CorpusEntry& entry : corpus) {
      ExperimentConfig cfg;
      cfg.alpha = 0.002;
      cfg.num_steps = 10000;
      cfg.num_trials = 100;
      cfg.base_seed = 500;
      cfg.q0_mode = Q0Mode::kUniform;
      cfg.record_stride = 100;
      try {
        entry.stats = run_ensemble(entry.mdp, cfg);
        entry.stats_ok = true;
        violations += entry.stats.violation_count;
        worst = std::max(worst, entry.stats.max_violation);
      } catch (const InvariantViolation& e) {
        violations += 1;
        err = std::string(" [") + entry.name + ": " + e.what() + "]";
      }
    }
    const double elapsed = seconds_since(t0);
    gate.report(1, "sandwich-ordering", violations == 0 && elapsed <= 120.0,
                "violations=" + std::to_string(violations) + " worst=" + fmt(worst) +
                    " elapsed=" + fmt(elapsed) + "s (budget 120s)" + err);
  }

  // 2. Infinity-norm contraction of every realized system matrix plus the
  //    exact row-sum identity.
  {
    RngStream rng(2);
    double worst_norm = -1e300;
    double worst_rowsum = -1e300;
    for (const CorpusEntry& entry : corpus) {
      const CompactMatrices cm = build_matrices(entry.mdp);
      const QVector qstar = solve_qstar(cm);
      for (double alpha : {0.002, 0.9}) {
        const double rho = decay_rate(cm, alpha);
        const Eigen::VectorXd expected_rowsum =
            (1.0 + alpha * (cm.discount - 1.0) * cm.visit.array()).matrix();
        for (int probe = 0; probe < 1000; ++probe) {
          const QVector q = random_probe(rng, cm.num_pairs(), 10.0);
          const SwitchingMatrices sw = realize_matrices(q, qstar, cm, alpha);
          worst_norm = std::max(worst_norm,
                                sw.A.cwiseAbs().rowwise().sum().maxCoeff() - (rho + 1e-12));
          worst_rowsum = std::max(
              worst_rowsum,
              (sw.A.rowwise().sum() - expected_rowsum).cwiseAbs().maxCoeff() - 1e-12);
        }
      }
    }
    gate.report(2, "contraction-lemma", worst_norm <= 0.0 && worst_rowsum <= 0.0,
                "norm-slack=" + fmt(-worst_norm) + " rowsum-slack=" + fmt(-worst_rowsum));
  }

  // 3. Exponential decay under arbitrary switching, 10 sequences x 200 steps.
  {
    RngStream rng(3);
    double worst = -1e300;
    const double alpha = 0.1;
    for (const CorpusEntry& entry : corpus) {
      const CompactMatrices cm = build_matrices(entry.mdp);
      const QVector qstar = solve_qstar(cm);
      const double rho = decay_rate(cm, alpha);
      for (int seq = 0; seq < 10; ++seq) {
        std::vector<Policy> switching(200);
        for (auto& pol : switching) {
          pol.resize(entry.mdp.num_states());
          for (int s = 0; s < entry.mdp.num_states(); ++s) {
            pol[s] = static_cast<int>(rng.uniform01() * entry.mdp.num_actions()) %
                     entry.mdp.num_actions();
          }
        }
        const QVector q0 = qstar + random_probe(rng, cm.num_pairs(), 5.0);
        const auto norms = simulate_deterministic_switched(entry.mdp, alpha, 200, switching, q0);
        for (std::size_t k = 0; k < norms.size(); ++k) {
          worst = std::max(worst, norms[k] - (std::pow(rho, static_cast<double>(k)) * norms[0] +
                                              1e-10));
        }
      }
    }
    gate.report(3, "switched-decay", worst <= 0.0, "slack=" + fmt(-worst));
  }

  // 4. Lyapunov certificate at epsilon = (1-rho)/2 for every corpus model.
  {
    const double alpha = 0.5;
    bool pass = true;
    double worst_residual = 0.0;
    double worst_lmin = 1e300;
    double worst_lmax_margin = 1e300;
    std::string err;
    for (const CorpusEntry& entry : corpus) {
      const CompactMatrices cm = build_matrices(entry.mdp);
      const QVector qstar = solve_qstar(cm);
      const double rho = decay_rate(cm, alpha);
      const double eps = (1.0 - rho) / 2.0;
      try {
        const SwitchingMatrices sw = realize_matrices(qstar, qstar, cm, alpha);
        const LyapunovCertificate cert = lyapunov_certificate(sw.A, rho, eps);
        worst_residual = std::max(worst_residual, cert.residual);
        worst_lmin = std::min(worst_lmin, cert.lambda_min);
        const double bound = lyapunov_lambda_max_bound(cm.num_pairs(), rho, eps);
        worst_lmax_margin = std::min(worst_lmax_margin, bound + 1e-6 - cert.lambda_max);
        pass = pass && cert.lambda_min >= 1.0 - 1e-9 && cert.lambda_max <= bound + 1e-6;
      } catch (const CertificateFailure& e) {
        pass = false;
        err = std::string(" [") + entry.name + ": " + e.what() + "]";
      }
    }
    gate.report(4, "lyapunov-certificate", pass,
                "max-residual=" + fmt(worst_residual) + " min-lambda_min=" + fmt(worst_lmin) +
                    " lambda_max-margin=" + fmt(worst_lmax_margin) + err);
  }

  // 5. Iterate and noise boundedness along every simulated trajectory, using
  //    the unit-bound caps where max |r| <= 1 and the general caps otherwise.
  {
    bool pass = true;
    double worst_q = -1e300, worst_w = -1e300;
    for (const CorpusEntry& entry : corpus) {
      if (!entry.stats_ok) {
        pass = false;
        continue;
      }
      const double g = 1.0 - entry.mdp.discount();
      const double scale =
          std::max(std::max(entry.mdp.reward_bound(), 1.0), entry.stats.q0_infnorm_max);
      const double qcap = scale / g + 1e-12;
      const double wcap = 4.0 * scale / g + 1e-12;
      worst_q = std::max(worst_q, entry.stats.max_q_infnorm - qcap);
      worst_w = std::max(worst_w, entry.stats.max_noise_infnorm - wcap);
    }
    pass = pass && worst_q <= 0.0 && worst_w <= 0.0;
    gate.report(5, "boundedness-lemma", pass,
                "q-slack=" + fmt(-worst_q) + " w-slack=" + fmt(-worst_w));
  }

  // 6. Exhaustive zero-mean of the update noise on 50 random (model, Q) pairs.
  {
    RngStream rng(6);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Mdp mdp = random_mdp(2000 + static_cast<std::uint64_t>(i), 3, 3);
      const CompactMatrices cm = build_matrices(mdp);
      const QVector q = random_probe(rng, cm.num_pairs(), 10.0);
      worst = std::max(worst, noise_mean_exhaustive(mdp, cm, q).lpNorm<Eigen::Infinity>());
    }
    gate.report(6, "noise-zero-mean", worst <= 1e-12, "worst=" + fmt(worst));
  }

  // 7. Tightness on the degenerate model: all three systems coincide exactly.
  {
    bool pass = true;
    const Mdp mdp = builtin_mdp("example1");
    RngStream rng(7);
    for (double alpha : {0.1, 0.5}) {
      QVector q0(1);
      q0[0] = rng.uniform_symmetric();
      const CoupledTrajectory traj = co_simulate(mdp, alpha, 1000, 700, q0, 1);
      for (const StepRecord& rec : traj.records) {
        pass = pass && (rec.q[0] - rec.q_lower[0] == 0.0) && (rec.q[0] - rec.q_upper[0] == 0.0);
      }
    }
    gate.report(7, "tightness-degenerate", pass, pass ? "bitwise equal" : "trajectories split");
  }

  // 8. Monte Carlo estimates sit below the closed-form error bounds.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Mdp mdp = builtin_mdp("paper2state");
    const CompactMatrices cm = build_matrices(mdp);
    bool pass = true;
    double min_margin1 = 1e300, min_margin2 = 1e300;
    for (double alpha : {0.002, 0.01}) {
      ExperimentConfig cfg;
      cfg.alpha = alpha;
      cfg.num_steps = 10000;
      cfg.num_trials = 500;
      cfg.base_seed = 800;
      cfg.q0_mode = Q0Mode::kUniform;
      cfg.record_stride = 1000;
      cfg.eval_steps = {100, 1000, 10000};
      const EnsembleStats stats = run_ensemble(mdp, cfg);
      for (std::size_t j = 0; j < stats.eval_steps.size(); ++j) {
        const double n = static_cast<double>(stats.eval_steps[j]);
        const double rhs1 = theorem1_bound(cm, alpha, n, stats.e0_sq_mean) +
                            3.0 * stats.prefix_lower_se[j];
        min_margin1 = std::min(min_margin1, rhs1 - stats.prefix_lower_mean[j]);
        pass = pass && stats.prefix_lower_mean[j] <= rhs1;
        const double rhs2 = theorem2_bound(cm, alpha, n) + 3.0 * stats.avg_iter_se[j];
        min_margin2 = std::min(min_margin2, rhs2 - stats.avg_iter_mean[j]);
        pass = pass && stats.avg_iter_mean[j] <= rhs2;
      }
    }
    const double elapsed = seconds_since(t0);
    pass = pass && elapsed <= 300.0;
    gate.report(8, "finite-time-bounds", pass,
                "margin(lower)=" + fmt(min_margin1) + " margin(avg)=" + fmt(min_margin2) +
                    " elapsed=" + fmt(elapsed) + "s (budget 300s)");
  }

  // 9. Overestimation: zero-mean starts keep the lower system unbiased while
  //    the iterate mean never dips below zero, at k in {100, 1000}.
  {
    const Mdp mdp = builtin_mdp("paper2state");
    ExperimentConfig cfg;
    cfg.alpha = 0.01;
    cfg.num_steps = 1000;
    cfg.num_trials = 2000;
    cfg.base_seed = 900;
    cfg.q0_mode = Q0Mode::kQStarPlusUniform;
    cfg.record_stride = 1000;
    cfg.eval_steps = {100, 1000};
    const EnsembleStats stats = run_ensemble(mdp, cfg);
    double lower_margin = 1e300, orig_margin = 1e300;
    for (Eigen::Index r = 0; r < stats.eval_coord_lower_mean.rows(); ++r) {
      for (Eigen::Index i = 0; i < stats.eval_coord_lower_mean.cols(); ++i) {
        lower_margin = std::min(lower_margin,
                                3.0 * stats.eval_coord_lower_se(r, i) + 1e-12 -
                                    std::abs(stats.eval_coord_lower_mean(r, i)));
        orig_margin = std::min(orig_margin, stats.eval_coord_orig_mean(r, i) +
                                                3.0 * stats.eval_coord_orig_se(r, i) + 1e-12);
      }
    }
    gate.report(9, "overestimation-bias", lower_margin >= 0.0 && orig_margin >= 0.0,
                "lower-margin=" + fmt(lower_margin) + " orig-margin=" + fmt(orig_margin));
  }

  // 10. Sample budget: tail back-substitution and the accuracy^-4 scaling.
  {
    const CompactMatrices cm = build_matrices(builtin_mdp("paper2state"));
    bool pass = true;
    double worst_slack = 1e300, worst_ratio_err = 0.0;
    for (double eps : {0.5, 1.0}) {
      for (double delta : {0.1, 0.2, 0.5}) {
        const ComplexityBudget b = sample_complexity(cm, eps, delta);
        worst_slack = std::min(worst_slack, delta + 1e-12 - (b.phi1 + b.phi2));
        pass = pass && b.phi1 + b.phi2 <= delta + 1e-12;
        const ComplexityBudget half = sample_complexity(cm, eps / 2.0, delta);
        const double ratio_err = std::abs(half.n_star / b.n_star / 16.0 - 1.0);
        worst_ratio_err = std::max(worst_ratio_err, ratio_err);
        pass = pass && ratio_err <= 0.01;
      }
    }
    gate.report(10, "sample-complexity", pass,
                "tail-slack=" + fmt(worst_slack) + " ratio-err=" + fmt(worst_ratio_err));
  }

  // 11. Benchmark datasets: byte-stable reruns, a decaying gap channel at the
  //     small step-size, and >= 10x more late-run gap variance at the large one.
  {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "switchq_acceptance_datasets";
    fs::remove_all(base);
    const std::string dir_a = (base / "a").string();
    const std::string dir_b = (base / "b").string();
    const long long steps = 500000;
    const long long stride = 100;
    const auto files_a = write_paper_example_datasets(dir_a, 2024, steps, stride);
    const auto files_b = write_paper_example_datasets(dir_b, 2024, steps, stride);

    bool stable = files_a.size() == 4 && files_b.size() == 4;
    for (std::size_t i = 0; i < files_a.size() && stable; ++i) {
      std::ifstream fa(files_a[i], std::ios::binary), fb(files_b[i], std::ios::binary);
      std::stringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      stable = stable && sa.str() == sb.str() && !sa.str().empty();
    }

    const auto small_gap = read_gap_channel((fs::path(dir_a) / "error_alpha_0.002.csv").string());
    const auto large_gap = read_gap_channel((fs::path(dir_a) / "error_alpha_0.9.csv").string());
    // The gap starts at exactly zero (shared initialization), so the decay
    // check references the first recorded step after the start.
    const double initial = small_gap.at(1).second;
    const double terminal = small_gap.back().second;

    auto last_decile_var = [](const std::vector<std::pair<long long, double>>& rows) {
      const std::size_t begin = rows.size() - rows.size() / 10;
      double sum = 0.0, sq = 0.0;
      double n = 0.0;
      for (std::size_t i = begin; i < rows.size(); ++i) {
        sum += rows[i].second;
        sq += rows[i].second * rows[i].second;
        n += 1.0;
      }
      const double mean = sum / n;
      return std::max(0.0, sq / n - mean * mean) * (n / (n - 1.0));
    };
    const double var_small = last_decile_var(small_gap);
    const double var_large = last_decile_var(large_gap);
    const double ratio = var_large / var_small;

    const bool pass = stable && terminal < initial && ratio >= 10.0;
    gate.report(11, "benchmark-reproduction", pass,
                std::string(stable ? "byte-stable" : "NOT byte-stable") +
                    " gap-initial=" + fmt(initial) + " gap-terminal=" + fmt(terminal) +
                    " late-variance-ratio=" + fmt(ratio));
    fs::remove_all(base);
  }

  std::printf("%s: %d criterion(s) failed\n", gate.failures == 0 ? "OK" : "FAILURES",
              gate.failures);
  return gate.failures == 0 ? 0 : 1;
}
