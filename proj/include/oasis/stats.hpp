#pragma once

#include <cstdint>
#include <vector>

namespace oasis {

/// Floor applied to the normalization denominator so constant streams
/// stay finite (the gate then saturates deterministically).
inline constexpr double kVarianceFloor = 1e-8;

/// Exponential moving average / variance of batch-mean informativeness.
/// batches_seen == 0 marks an uninitialized instance; the first batch of a
/// run initializes mu and var from its own within-batch statistics.
struct StreamStats {
    double mu = 0.0;
    double var = 0.0;
    double alpha = 0.9;  // decay factor in (0, 1]
    std::int64_t batches_seen = 0;

    bool initialized() const { return batches_seen > 0; }
};

struct ThresholdSolverConfig {
    double grid_half_width = 8.0;  // integrate over [-w, w] standard deviations
    int grid_points = 4001;        // odd and >= 3 so the grid includes 0
    double tolerance = 1e-6;       // on |f(threshold) - target|
    int max_bisection_iters = 200;
};

/// Selection gate nonlinearity: 0.5 * (1 + tanh(x)), i.e. a logistic with
/// twice the standard steepness. The threshold solver and the probabilistic
/// sampler share this gate; for target ratios 6.25% / 12.5% / 25% it is
/// calibrated at thresholds of about 2.06 / 1.53 / 0.89.
double selection_gate(double x);

/// Builds the t=0 statistics from the first batch's raw scores:
/// mu = within-batch mean, var = within-batch sample variance (floored).
StreamStats init_stats_from_batch(const std::vector<double>& values, double alpha);

/// One streaming update:
///   mu'  = alpha * batch_mean + (1 - alpha) * mu
///   var' = alpha * (batch_mean - mu)^2 + (1 - alpha) * var
/// The squared deviation uses the pre-update mu. Requires initialized stats.
StreamStats update_stats(const StreamStats& stats, double batch_mean);

/// Z-score of a value against the stream statistics. The default divides by
/// sqrt(var) so the result is unit-variance; normalize_by_variance divides
/// by var itself (kept for sensitivity experiments). Denominator floored at
/// kVarianceFloor.
double z_normalize(double value, const StreamStats& stats,
                   bool normalize_by_variance = false);

/// Expected fraction of gated samples when z-scores are standard normal:
/// trapezoid quadrature of gate(z - threshold) * phi(z) over [-w, w].
/// Strictly decreasing in the threshold.
double expected_selection_rate(double threshold,
                               const ThresholdSolverConfig& cfg = {});

/// Inverts expected_selection_rate by bisection: returns the threshold whose
/// expected rate matches target_ratio within cfg.tolerance.
double solve_threshold(double target_ratio, const ThresholdSolverConfig& cfg = {});

}  // namespace oasis
