#include "oasis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oasis {

namespace {

double row_mean(const std::vector<double>& row) {
    double s = 0.0;
    for (double v : row) s += v;
    return s / static_cast<double>(row.size());
}

void validate_matrix(const std::vector<std::vector<double>>& m) {
    if (m.empty()) {
        throw std::invalid_argument("accuracy matrix is empty");
    }
    for (const auto& row : m) {
        if (row.empty()) {
            throw std::invalid_argument("accuracy matrix has an empty row");
        }
    }
}

}  // namespace

double a_last(const std::vector<std::vector<double>>& acc_matrix) {
    validate_matrix(acc_matrix);
    return row_mean(acc_matrix.back());
}

double a_avg(const std::vector<std::vector<double>>& acc_matrix) {
    validate_matrix(acc_matrix);
    double s = 0.0;
    for (const auto& row : acc_matrix) s += row_mean(row);
    return s / static_cast<double>(acc_matrix.size());
}

namespace {

std::vector<double> pairwise_sq_dists(const std::vector<std::vector<double>>& points) {
    if (points.size() < 2) {
        throw std::invalid_argument("density: needs at least two points");
    }
    const std::size_t n = points.size();
    const std::size_t d = points.front().size();
    for (const auto& p : points) {
        if (p.size() != d) {
            throw std::invalid_argument("density: dimension mismatch");
        }
    }
    std::vector<double> sq_dists;
    sq_dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = points[i][k] - points[j][k];
                s += diff * diff;
            }
            sq_dists.push_back(s);
        }
    }
    return sq_dists;
}

}  // namespace

double median_pairwise_distance(const std::vector<std::vector<double>>& points) {
    auto sq_dists = pairwise_sq_dists(points);
    std::vector<double> dists(sq_dists.size());
    for (std::size_t i = 0; i < sq_dists.size(); ++i) dists[i] = std::sqrt(sq_dists[i]);
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    return (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

double density(const std::vector<std::vector<double>>& points,
               std::optional<double> bandwidth) {
    const auto sq_dists = pairwise_sq_dists(points);
    double h;
    if (bandwidth) {
        if (!(*bandwidth > 0.0)) {
            throw std::invalid_argument("density: bandwidth must be positive");
        }
        h = *bandwidth;
    } else {
        h = std::max(median_pairwise_distance(points), 1e-8);
    }
    double acc = 0.0;
    for (double sq : sq_dists) {
        acc += std::exp(-sq / (2.0 * h * h));
    }
    return acc / static_cast<double>(sq_dists.size());
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("inverse_normal_cdf: p must be in (0, 1)");
    }
    // Acklam's rational approximation with the usual three regions.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    const double phigh = 1.0 - plow;
    double q, r, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p <= phigh) {
        q = p - 0.5;
        r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    return x;
}

NormalityDiagnostic normality_diagnostic(const std::vector<double>& values) {
    if (values.size() < 20) {
        throw std::invalid_argument("normality_diagnostic: needs at least 20 values");
    }
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double dv = v - mean;
        m2 += dv * dv;
        m3 += dv * dv * dv;
        m4 += dv * dv * dv * dv;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 <= 0.0) {
        throw std::invalid_argument("normality_diagnostic: degenerate zero-variance input");
    }
    NormalityDiagnostic diag;
    diag.skewness = m3 / std::pow(m2, 1.5);
    diag.excess_kurtosis = m4 / (m2 * m2) - 3.0;

    // QQ deviation on values standardized by the sample standard deviation.
    const double sd = std::sqrt(m2 * n / (n - 1.0));
    std::vector<double> z(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) z[i] = (values[i] - mean) / sd;
    std::sort(z.begin(), z.end());
    double max_dev = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        max_dev = std::max(max_dev, std::abs(z[i] - inverse_normal_cdf(p)));
    }
    diag.qq_max_abs_deviation = max_dev;
    return diag;
}

}  // namespace oasis
