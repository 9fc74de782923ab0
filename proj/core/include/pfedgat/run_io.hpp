#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pfedgat/orchestrator.hpp"

// Experiment execution with file export. A run writes, atomically (staged in
// a temp directory, renamed into place when complete):
//   metrics.csv            round,client_id,train_loss,test_loss,test_acc
//   summary.csv            per-round aggregates including the summed upload loss
//   comms.csv              per-round upload byte ledger
//   alloc/round_<t>.csv    the allocation matrix R (matrix strategies only)
//   resolved.cfg           the fully resolved config; reloading it reproduces the run
//   manifest.json          flat run manifest (version, paths, duration, config echo)

namespace pfedgat {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> rounds;
    int threads = 1;
};

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOverrides& ov);

// Loads config_path, runs it and exports into out_dir (which must not exist).
void run_to_dir(const std::string& config_path, const std::string& out_dir,
                const RunOverrides& ov);

// Runs every config and writes out_dir/comparison.csv with one row per
// config: final mean/std accuracy, best row(s) marked.
void compare_to_dir(const std::vector<std::string>& config_paths, const std::string& out_dir,
                    const RunOverrides& ov);

// 17-significant-digit decimal, enough to round-trip a 64-bit real.
std::string format_real(double v);

}  // namespace pfedgat
