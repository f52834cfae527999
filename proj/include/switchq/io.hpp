#pragma once

#include <iosfwd>
#include <string>

#include "switchq/harness.hpp"

namespace switchq {

/// Parses the key-value model description format. Keys introduce fields
/// (`num_states`, `num_actions`, `discount`, `transition`, `reward`,
/// `behavior_policy`, `state_dist`); numbers fill the active field in
/// row-major (s, a, s') order; `#` starts a comment. Diagnostics name the
/// offending field and line.
MdpData read_mdp_data(std::istream& in, const std::string& origin = "<stream>");
MdpData read_mdp_file(const std::string& path);
Mdp load_mdp(const std::string& path);

/// Writes the same format back out (17 significant digits).
void write_mdp_data(std::ostream& out, const MdpData& data);

/// Experiment config in the same key-value style: `mdp`, `alpha`, `steps`,
/// `trials`, `seed`, `stride`, `q0` (uniform | qstar+uniform | fixed v...),
/// `eval_steps`, `track_coords`.
ExperimentConfig read_config_file(const std::string& path);
ExperimentConfig read_config(std::istream& in, const std::string& origin = "<stream>");

/// Trajectory CSV: header `k`, `q_<s>_<a>`, `ql_<s>_<a>`, `qu_<s>_<a>`,
/// `qavg_<s>_<a>`, `w_inf`, `smp_s`, `smp_a`, `smp_snext`, `smp_r`, with the
/// (s,a) columns in vector index order and numbers printed to 17 significant
/// digits (doubles round-trip exactly). The final row has no sample; its
/// sample columns hold zeros.
void write_trajectory_csv(std::ostream& out, const CoupledTrajectory& traj);
CoupledTrajectory read_trajectory_csv(std::istream& in, const std::string& origin = "<stream>");

/// Gap CSV: header `k`, `err_<s>_<a>` ..., `err_inf` for the channel
/// q_upper - q_lower.
void write_gap_csv(std::ostream& out, const CoupledTrajectory& traj);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace switchq
