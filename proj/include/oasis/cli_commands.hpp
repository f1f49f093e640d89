#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace oasis {

struct RunCmdOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;  // overrides [run] seed
    std::string out_prefix;             // <prefix>.summary.json / <prefix>.steps.jsonl
};

/// Executes one experiment from a config file and writes the summary and the
/// step log. Returns 0 on success, nonzero after printing a message to err.
int cmd_run(const RunCmdOptions& opts, std::ostream& out, std::ostream& err);

struct SweepCmdOptions {
    std::string config_path;
    std::vector<std::string> selectors;  // empty: config's selector
    std::vector<std::string> ratios;     // literal tokens; empty: config's ratio
    std::vector<std::uint64_t> seeds;    // empty: config's seed
    std::string out_dir;
    int jobs = 1;
};

/// Runs the selector x ratio x seed grid, one pair of output files per run,
/// then writes and prints an aggregated summary table.
int cmd_sweep(const SweepCmdOptions& opts, std::ostream& out, std::ostream& err);

/// Aggregates all run summaries found in a directory into a table, printed
/// and written as CSV. Corrupt files are named on err and skipped; the exit
/// code is nonzero only if no valid record exists.
int cmd_report(const std::string& results_dir, std::ostream& out, std::ostream& err);

/// Prints the gate threshold matching a target selection ratio.
int cmd_solve_threshold(double target_ratio, std::ostream& out, std::ostream& err);

}  // namespace oasis
