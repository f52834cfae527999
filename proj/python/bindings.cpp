#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "switchq/cli.hpp"
#include "switchq/io.hpp"

namespace py = pybind11;
using namespace switchq;

namespace {

Mdp mdp_from_arrays(int num_states, int num_actions, double discount,
                    const Eigen::MatrixXd& transition, const Eigen::MatrixXd& reward,
                    const Eigen::MatrixXd& behavior_policy, const Eigen::VectorXd& state_dist,
                    bool require_unit_rewards) {
  MdpData d;
  d.num_states = num_states;
  d.num_actions = num_actions;
  d.discount = discount;
  d.transition = transition;
  d.reward = reward;
  d.behavior_policy = behavior_policy;
  d.state_dist = state_dist;
  return Mdp(std::move(d), require_unit_rewards);
}

py::dict trajectory_to_dict(const CoupledTrajectory& traj) {
  const Eigen::Index n = traj.q_star.size();
  const Eigen::Index rows = static_cast<Eigen::Index>(traj.records.size());
  Eigen::VectorXd ks(rows);
  Eigen::MatrixXd q(rows, n), ql(rows, n), qu(rows, n), qavg(rows, n), gap(rows, n);
  Eigen::VectorXd w_inf(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const StepRecord& rec = traj.records[static_cast<std::size_t>(i)];
    ks[i] = static_cast<double>(rec.k);
    q.row(i) = rec.q.transpose();
    ql.row(i) = rec.q_lower.transpose();
    qu.row(i) = rec.q_upper.transpose();
    qavg.row(i) = rec.q_avg.transpose();
    gap.row(i) = rec.gap.transpose();
    w_inf[i] = rec.noise_infnorm;
  }
  py::dict out;
  out["k"] = ks;
  out["q"] = q;
  out["q_lower"] = ql;
  out["q_upper"] = qu;
  out["q_avg"] = qavg;
  out["gap"] = gap;
  out["noise_infnorm"] = w_inf;
  out["q_star"] = traj.q_star;
  out["violation_count"] = traj.violation_count;
  out["max_violation"] = traj.max_violation;
  out["max_q_infnorm"] = traj.max_q_infnorm;
  out["max_noise_infnorm"] = traj.max_noise_infnorm;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constant step-size tabular Q-learning viewed as a stochastic affine "
            "switching system: co-simulation, certificates and finite-time bounds.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseFailure", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
  py::register_exception<CertificateFailure>(m, "CertificateFailure", PyExc_RuntimeError);

  py::class_<Mdp>(m, "Mdp")
      .def(py::init(&mdp_from_arrays), py::arg("num_states"), py::arg("num_actions"),
           py::arg("discount"), py::arg("transition"), py::arg("reward"),
           py::arg("behavior_policy"), py::arg("state_dist"),
           py::arg("require_unit_rewards") = false)
      .def_property_readonly("num_states", &Mdp::num_states)
      .def_property_readonly("num_actions", &Mdp::num_actions)
      .def_property_readonly("discount", &Mdp::discount)
      .def_property_readonly("transition", &Mdp::transition)
      .def_property_readonly("reward", &Mdp::reward)
      .def_property_readonly("behavior_policy", &Mdp::behavior_policy)
      .def_property_readonly("state_dist", &Mdp::state_dist)
      .def_property_readonly("visit_dist", &Mdp::visit_dist)
      .def_property_readonly("visit_min", &Mdp::visit_min)
      .def_property_readonly("visit_max", &Mdp::visit_max)
      .def_property_readonly("reward_bound", &Mdp::reward_bound);

  m.def("builtin_mdp", &builtin_mdp, py::arg("name"));
  m.def("random_mdp", &random_mdp, py::arg("seed"), py::arg("max_states") = 5,
        py::arg("max_actions") = 5);
  m.def("load_mdp", &load_mdp, py::arg("path"));

  m.def(
      "solve_qstar",
      [](const Mdp& mdp, double tol) { return solve_qstar(mdp, tol); },
      py::arg("mdp"), py::arg("tol") = 1e-12);
  m.def(
      "greedy_policy",
      [](const Eigen::VectorXd& q, int ns, int na) { return greedy_policy(q, ns, na); },
      py::arg("q"), py::arg("num_states"), py::arg("num_actions"));
  m.def(
      "decay_rate",
      [](const Mdp& mdp, double alpha) { return decay_rate(build_matrices(mdp), alpha); },
      py::arg("mdp"), py::arg("alpha"));
  m.def(
      "noise_bounds",
      [](const Mdp& mdp) {
        return noise_bounds(mdp.num_states(), mdp.num_actions(), mdp.discount());
      },
      py::arg("mdp"));
  m.def(
      "theorem1_bound",
      [](const Mdp& mdp, double alpha, double n, double e0_sq) {
        return theorem1_bound(build_matrices(mdp), alpha, n, e0_sq);
      },
      py::arg("mdp"), py::arg("alpha"), py::arg("num_steps"), py::arg("e0_sq"));
  m.def(
      "theorem2_bound",
      [](const Mdp& mdp, double alpha, double n) {
        return theorem2_bound(build_matrices(mdp), alpha, n);
      },
      py::arg("mdp"), py::arg("alpha"), py::arg("num_steps"));

  m.def(
      "lyapunov_certificate",
      [](const Mdp& mdp, double alpha, double epsilon) {
        const CompactMatrices cm = build_matrices(mdp);
        const QVector qstar = solve_qstar(cm);
        const double rho = decay_rate(cm, alpha);
        const double eps = epsilon > 0.0 ? epsilon : (1.0 - rho) / 2.0;
        const SwitchingMatrices sw = realize_matrices(qstar, qstar, cm, alpha);
        const LyapunovCertificate cert = lyapunov_certificate(sw.A, rho, eps);
        py::dict out;
        out["M"] = cert.M;
        out["epsilon"] = cert.epsilon;
        out["lambda_min"] = cert.lambda_min;
        out["lambda_max"] = cert.lambda_max;
        out["lambda_max_bound"] =
            lyapunov_lambda_max_bound(mdp.num_pairs(), rho, eps);
        out["residual"] = cert.residual;
        out["rho"] = rho;
        return out;
      },
      py::arg("mdp"), py::arg("alpha"), py::arg("epsilon") = -1.0,
      "Lyapunov certificate for the system matrix realized at Q*; epsilon "
      "defaults to (1-rho)/2.");

  m.def(
      "sample_complexity",
      [](const Mdp& mdp, double accuracy, double confidence) {
        const ComplexityBudget b =
            sample_complexity(build_matrices(mdp), accuracy, confidence);
        py::dict out;
        out["accuracy"] = b.accuracy;
        out["confidence"] = b.confidence;
        out["alpha_star"] = b.alpha_star;
        out["n_star"] = b.n_star;
        out["phi1"] = b.phi1;
        out["phi2"] = b.phi2;
        return out;
      },
      py::arg("mdp"), py::arg("accuracy"), py::arg("confidence"));

  m.def(
      "co_simulate",
      [](const Mdp& mdp, double alpha, long long num_steps, std::uint64_t seed,
         const Eigen::VectorXd& q0, long long record_stride) {
        return trajectory_to_dict(co_simulate(mdp, alpha, num_steps, seed, q0, record_stride));
      },
      py::arg("mdp"), py::arg("alpha"), py::arg("num_steps"), py::arg("seed"), py::arg("q0"),
      py::arg("record_stride") = 1,
      "Couples the iterate with its lower/upper comparison systems on one "
      "sample stream and records every stride-th step.");

  m.def(
      "run_ensemble",
      [](const Mdp& mdp, double alpha, long long num_steps, int num_trials,
         std::uint64_t base_seed, long long record_stride,
         const std::vector<long long>& eval_steps, const std::string& q0_mode) {
        ExperimentConfig cfg;
        cfg.alpha = alpha;
        cfg.num_steps = num_steps;
        cfg.num_trials = num_trials;
        cfg.base_seed = base_seed;
        cfg.record_stride = record_stride;
        cfg.eval_steps = eval_steps;
        if (q0_mode == "uniform") {
          cfg.q0_mode = Q0Mode::kUniform;
        } else if (q0_mode == "qstar+uniform") {
          cfg.q0_mode = Q0Mode::kQStarPlusUniform;
        } else {
          throw ValidationError("q0_mode must be 'uniform' or 'qstar+uniform'");
        }
        const EnsembleStats stats = run_ensemble(mdp, cfg);
        py::dict out;
        out["k"] = stats.ks;
        out["err_orig_mean"] = stats.err_orig.mean;
        out["err_lower_mean"] = stats.err_lower.mean;
        out["err_upper_mean"] = stats.err_upper.mean;
        out["gap_mean"] = stats.gap.mean;
        out["err_avg_mean"] = stats.err_avg.mean;
        out["violation_count"] = stats.violation_count;
        out["max_violation"] = stats.max_violation;
        out["eval_steps"] = stats.eval_steps;
        out["prefix_lower_mean"] = stats.prefix_lower_mean;
        out["avg_iter_mean"] = stats.avg_iter_mean;
        out["e0_sq_mean"] = stats.e0_sq_mean;
        return out;
      },
      py::arg("mdp"), py::arg("alpha"), py::arg("num_steps"), py::arg("num_trials"),
      py::arg("base_seed"), py::arg("record_stride") = 10,
      py::arg("eval_steps") = std::vector<long long>{}, py::arg("q0_mode") = "uniform");

  m.def(
      "verify_all",
      [](const Mdp& mdp, double alpha, int probe_count, std::uint64_t seed) {
        const VerificationReport rep = verify_all(mdp, alpha, probe_count, seed);
        py::list out;
        for (const CheckResult& item : rep.items) {
          py::dict entry;
          entry["name"] = item.name;
          entry["pass"] = item.pass;
          entry["margin"] = item.margin;
          entry["detail"] = item.detail;
          out.append(entry);
        }
        return out;
      },
      py::arg("mdp"), py::arg("alpha") = 0.01, py::arg("probe_count") = 500,
      py::arg("seed") = 0);

  m.def("write_paper_example_datasets", &write_paper_example_datasets, py::arg("out_dir"),
        py::arg("seed"), py::arg("num_steps") = 500000, py::arg("record_stride") = 100);

  m.attr("__version__") = "0.1.0";
}
