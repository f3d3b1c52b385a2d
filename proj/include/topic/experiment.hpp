#pragma once

#include "topic/config.hpp"
#include "topic/neural_gas.hpp"
#include "topic/protocol.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace topic {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDivergence = 2;

/// Outcome of one (method, seed) pipeline.
struct RunResult {
    Method method = Method::ft;
    std::uint64_t seed = 0;
    std::vector<SessionMetrics> metrics;
    std::vector<NGGraph> graphs;  // one per session when checkpoints are kept

    struct Failure {
        int session = 0;
        bool divergence = true;
        std::string message;
    };
    std::optional<Failure> failure;
};

/// Runs every (method, seed) pair, fanned out over config.threads workers.
/// Results come back sorted by (method order in the config, seed order).
std::vector<RunResult> run_all(const ExperimentConfig& config);

/// results.csv: method,seed,session,joint_acc,old_acc,new_acc. Rows are sorted
/// by method tag, then seed, then session.
void write_results_csv(const std::vector<RunResult>& runs, std::ostream& out);

/// summary.csv: per method and session, accuracies averaged over seeds.
void write_summary_csv(const std::vector<RunResult>& runs, std::ostream& out);

void write_confusion(const RunResult& run, const SessionMetrics& metrics, std::ostream& out);

/// Runs the experiment and writes its files under config.out_dir. Returns the
/// process exit status; diagnostics go to `log`. summary.csv is only written
/// when every run finished.
int run_experiment(const ExperimentConfig& config, std::ostream& log, bool quiet = false);

}  // namespace topic
