#include "oasis/stats.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace oasis {

namespace {

double standard_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

void validate_solver_config(const ThresholdSolverConfig& cfg) {
    if (cfg.grid_half_width <= 0.0) {
        throw std::invalid_argument("ThresholdSolverConfig: grid_half_width must be positive");
    }
    if (cfg.grid_points < 3 || cfg.grid_points % 2 == 0) {
        throw std::invalid_argument("ThresholdSolverConfig: grid_points must be odd and >= 3");
    }
    if (cfg.tolerance <= 0.0) {
        throw std::invalid_argument("ThresholdSolverConfig: tolerance must be positive");
    }
    if (cfg.max_bisection_iters < 1) {
        throw std::invalid_argument("ThresholdSolverConfig: max_bisection_iters must be positive");
    }
}

}  // namespace

double selection_gate(double x) {
    return 0.5 * (1.0 + std::tanh(x));
}

StreamStats init_stats_from_batch(const std::vector<double>& values, double alpha) {
    if (values.empty()) {
        throw std::invalid_argument("init_stats_from_batch: empty batch");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("init_stats_from_batch: alpha must be in (0, 1]");
    }
    double mean = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("init_stats_from_batch: non-finite value");
        }
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    if (values.size() > 1) {
        for (double v : values) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(values.size() - 1);
    }
    StreamStats stats;
    stats.mu = mean;
    stats.var = std::max(var, kVarianceFloor);
    stats.alpha = alpha;
    stats.batches_seen = 1;
    return stats;
}

StreamStats update_stats(const StreamStats& stats, double batch_mean) {
    if (!stats.initialized()) {
        throw std::invalid_argument("update_stats: stats not initialized");
    }
    if (!std::isfinite(batch_mean)) {
        throw std::invalid_argument("update_stats: non-finite batch mean");
    }
    const double a = stats.alpha;
    StreamStats next = stats;
    const double dev = batch_mean - stats.mu;
    next.mu = a * batch_mean + (1.0 - a) * stats.mu;
    next.var = a * dev * dev + (1.0 - a) * stats.var;
    next.batches_seen = stats.batches_seen + 1;
    return next;
}

double z_normalize(double value, const StreamStats& stats, bool normalize_by_variance) {
    if (!stats.initialized()) {
        throw std::invalid_argument("z_normalize: stats not initialized");
    }
    if (!std::isfinite(value)) {
        throw std::invalid_argument("z_normalize: non-finite value");
    }
    const double denom = normalize_by_variance
                             ? std::max(stats.var, kVarianceFloor)
                             : std::max(std::sqrt(stats.var), kVarianceFloor);
    return (value - stats.mu) / denom;
}

double expected_selection_rate(double threshold, const ThresholdSolverConfig& cfg) {
    validate_solver_config(cfg);
    const double w = cfg.grid_half_width;
    const int n = cfg.grid_points;
    const double h = 2.0 * w / static_cast<double>(n - 1);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = -w + h * static_cast<double>(i);
        const double f = selection_gate(z - threshold) * standard_normal_pdf(z);
        sum += (i == 0 || i == n - 1) ? 0.5 * f : f;
    }
    return sum * h;
}

double solve_threshold(double target_ratio, const ThresholdSolverConfig& cfg) {
    validate_solver_config(cfg);
    if (!(target_ratio > 0.0 && target_ratio < 1.0)) {
        throw std::invalid_argument("solve_threshold: target_ratio must be in (0, 1), got " +
                                    std::to_string(target_ratio));
    }
    double lo = -cfg.grid_half_width;
    double hi = cfg.grid_half_width;
    // The rate is decreasing in the threshold: f(lo) is the high end.
    if (expected_selection_rate(lo, cfg) < target_ratio ||
        expected_selection_rate(hi, cfg) > target_ratio) {
        throw std::runtime_error("solve_threshold: target ratio outside the bracket");
    }
    double mid = 0.0;
    for (int it = 0; it < cfg.max_bisection_iters; ++it) {
        mid = 0.5 * (lo + hi);
        const double f = expected_selection_rate(mid, cfg);
        if (std::abs(f - target_ratio) <= cfg.tolerance) {
            return mid;
        }
        if (f > target_ratio) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

}  // namespace oasis
