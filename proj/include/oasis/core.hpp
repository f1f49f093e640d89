#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace oasis {

/// Dense last-layer gradient of a single sample.
struct GradientVector {
    std::vector<double> values;

    GradientVector() = default;
    explicit GradientVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t dim() const { return values.size(); }
};

struct Sample {
    std::int64_t id = 0;
    std::vector<double> features;
    int label = 0;
    int task_id = 0;
};

/// One retrieval unit of the stream. Size is fixed by the run configuration.
struct Batch {
    std::int64_t timestep = 0;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
};

/// Per-sample selection trace: raw score, redundancy-adjusted score,
/// z-score, gate probability and the final decision.
struct ScoredSample {
    std::int64_t sample_id = 0;
    double informativeness = 0.0;   // raw score, always >= 0
    double adjusted = 0.0;          // redundancy-adjusted; may be negative
    double relative = 0.0;          // z-score against the stream statistics
    double gate_probability = 0.0;  // in [0, 1]
    bool selected = false;
};

/// Squared Euclidean norm of the gradient. Rejects non-finite components.
double informativeness(const GradientVector& g);

/// Cosine similarity clamped to [-1, 1]. A zero vector on either side
/// yields 0: it carries no directional information.
double cosine_similarity(const GradientVector& a, const GradientVector& b);

/// Componentwise arithmetic mean of a non-empty set of equal-dim gradients.
GradientVector mean_gradient(const std::vector<GradientVector>& set);

}  // namespace oasis
