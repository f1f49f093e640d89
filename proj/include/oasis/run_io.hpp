#pragma once

#include <string>

#include "oasis/metrics.hpp"
#include "oasis/sim.hpp"

#include <json.hpp>

namespace oasis {

/// Resolved settings as a JSON object, embedded in every summary so runs are
/// self-describing.
nlohmann::ordered_json settings_to_json(const RunSettings& settings);

/// Run-level summary object. Field order is fixed; NaN fields serialize as
/// null.
nlohmann::ordered_json record_to_summary_json(const RunRecord& record);

/// Writes the summary as a single JSON document.
void write_summary(const RunRecord& record, const std::string& path);

/// Writes the step log: one self-contained JSON object per line, "step"
/// records first, then "eval" and "track" records. Lines are emitted
/// append-only, so a truncated final line never corrupts earlier ones.
void write_steps(const RunRecord& record, const std::string& path);

/// The slice of a summary file the report and sweep commands aggregate.
struct SummaryRow {
    std::string selector;
    double target_ratio = 0.0;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    double a_avg = 0.0;
    double a_last = 0.0;
    double realized_ratio = 0.0;
    double density = 0.0;
    std::int64_t forward = 0;
    std::int64_t last_layer_grad = 0;
    std::int64_t backward = 0;
};

/// Parses one summary file. Throws std::runtime_error on malformed content.
SummaryRow read_summary_file(const std::string& path);

}  // namespace oasis
