#include "oasis/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oasis {

double informativeness(const GradientVector& g) {
    double sum = 0.0;
    for (double v : g.values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("informativeness: non-finite gradient component");
        }
        sum += v * v;
    }
    return sum;
}

double cosine_similarity(const GradientVector& a, const GradientVector& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        dot += a.values[k] * b.values[k];
        na += a.values[k] * a.values[k];
        nb += b.values[k] * b.values[k];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

GradientVector mean_gradient(const std::vector<GradientVector>& set) {
    if (set.empty()) {
        throw std::invalid_argument("mean_gradient: empty set");
    }
    const std::size_t d = set.front().dim();
    std::vector<double> acc(d, 0.0);
    for (const auto& g : set) {
        if (g.dim() != d) {
            throw std::invalid_argument("mean_gradient: dimension mismatch");
        }
        for (std::size_t k = 0; k < d; ++k) {
            acc[k] += g.values[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(set.size());
    for (double& v : acc) {
        v *= inv;
    }
    return GradientVector{std::move(acc)};
}

}  // namespace oasis
