#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oasis {

/// Abstract operation counters for one run. Forward and last-layer-gradient
/// ticks come from scoring, backward ticks from training on selected samples;
/// evaluation passes are not counted.
struct CostCounters {
    std::int64_t forward = 0;
    std::int64_t last_layer_grad = 0;
    std::int64_t backward = 0;
};

/// Accuracy matrix conventions: row k holds per-task accuracies over the
/// tasks seen up to boundary k, measured at that boundary.

/// Mean of the final row.
double a_last(const std::vector<std::vector<double>>& acc_matrix);

/// Mean over boundaries of each row's mean.
double a_avg(const std::vector<std::vector<double>>& acc_matrix);

/// Mean pairwise Gaussian-kernel similarity, exp(-||xi - xj||^2 / (2 h^2)),
/// over all unordered pairs. Lower density means a more diverse set. The
/// bandwidth defaults to the median pairwise distance (floored at 1e-8);
/// pass it explicitly when comparing sets against each other.
double density(const std::vector<std::vector<double>>& points,
               std::optional<double> bandwidth = {});

/// Median of the pairwise Euclidean distances (the default bandwidth).
double median_pairwise_distance(const std::vector<std::vector<double>>& points);

struct NormalityDiagnostic {
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double qq_max_abs_deviation = 0.0;
};

/// Moment-based normality diagnostics plus the largest absolute deviation
/// between standardized empirical quantiles and normal quantiles at
/// p = (i - 0.5) / n. Reported, never asserted. Needs >= 20 values and
/// non-degenerate variance.
NormalityDiagnostic normality_diagnostic(const std::vector<double>& values);

/// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9).
double inverse_normal_cdf(double p);

/// Compact per-iteration trace. The statistics fields are NaN for selectors
/// that do not maintain them (serialized as null).
struct StepRecord {
    std::int64_t timestep = 0;
    int task_id = 0;
    int n_presented = 0;
    std::vector<std::int64_t> selected_ids;
    double batch_mean_informativeness = 0.0;
    double mu = 0.0;
    double var = 0.0;
    double threshold = 0.0;
    double realized_ratio = 0.0;
};

/// Everything one experiment produces. config_json is filled by the front
/// end with the resolved configuration before serialization.
struct RunRecord {
    std::string config_json;
    std::uint64_t seed = 0;
    std::string selector_name;
    double target_ratio = 0.0;
    double threshold = 0.0;  // initial gate threshold (NaN for fixed-count selectors)

    std::vector<std::vector<double>> accuracy_matrix;
    double a_avg = 0.0;
    double a_last = 0.0;

    std::int64_t total_presented = 0;
    std::int64_t total_selected = 0;
    double realized_ratio = 0.0;

    double density_selected = 0.0;
    double density_bandwidth = 0.0;
    std::optional<NormalityDiagnostic> informativeness_normality;

    CostCounters counters;
    std::int64_t n_iterations = 0;
    std::vector<StepRecord> steps;
    /// Iteration count at which each boundary row was measured.
    std::vector<std::int64_t> boundary_timesteps;
    std::vector<std::pair<std::int64_t, double>> tracked_accuracy;
};

}  // namespace oasis
