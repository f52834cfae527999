#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace switchq {

/// Writes the four benchmark datasets for the two-state model: coupled
/// trajectories and the gap channel, once per step-size in {0.002, 0.9}.
/// Deterministic for a fixed seed. Returns the four file paths written.
std::vector<std::string> write_paper_example_datasets(const std::string& out_dir,
                                                      std::uint64_t seed,
                                                      long long num_steps,
                                                      long long record_stride);

/// Command-line entry point. Exit codes: 0 success, 1 validation/parse error,
/// 2 verification failure, 3 I/O error.
int run_cli(int argc, const char* const* argv);

}  // namespace switchq
