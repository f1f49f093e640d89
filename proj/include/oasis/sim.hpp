#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oasis/core.hpp"
#include "oasis/metrics.hpp"
#include "oasis/rng.hpp"
#include "oasis/select.hpp"

namespace oasis {

/// One task of the synthetic continual stream: class-conditional isotropic
/// Gaussians around per-class centers.
struct TaskSpec {
    int task_id = 0;
    std::int64_t n_samples = 0;
    std::vector<int> class_ids;
    std::map<int, std::vector<double>> class_centers;  // class -> center
    double feature_scale = 1.0;
    /// Fraction of this task's sample count re-emitted from the same
    /// distribution after the last task has finished.
    std::optional<double> recurrence;
};

struct StreamConfig {
    std::vector<TaskSpec> tasks;
    int feature_dim = 8;
    int n_classes = 4;
    int batch_size = 16;
    bool shuffle_within_task = true;
    /// Spread of auto-generated class centers (used for any class without an
    /// explicit center).
    double auto_center_spread = 4.0;
    std::uint64_t seed = 0;
};

/// Fills in any missing class centers with draws from N(0, spread^2 I),
/// from the "centers" substream of the stream seed.
void assign_auto_centers(StreamConfig& cfg, double spread);

/// Emits the full sample sequence: task-sequential, ids in emission order,
/// deterministic for a given config.
std::vector<Sample> generate_stream(const StreamConfig& cfg);

/// Held-out per-task test sets from the same distributions, drawn from a
/// disjoint substream.
std::vector<std::vector<Sample>> make_test_sets(const StreamConfig& cfg, int per_task);

/// Multinomial logistic regression. The whole model is its own last layer,
/// so the scored gradient is exact. Weights are row-major
/// [n_classes x (feature_dim + 1)] with the bias column last.
struct ToyModel {
    int n_classes = 0;
    int feature_dim = 0;
    double learning_rate = 0.05;
    std::vector<double> weights;

    static ToyModel zeros(int n_classes, int feature_dim, double learning_rate);

    std::vector<double> class_probabilities(const Sample& s) const;
};

/// Gradient of the per-sample cross-entropy wrt all weights, flattened in
/// weight order: (softmax(W x~) - onehot(y)) outer x~, with x~ the
/// bias-augmented feature vector. Ticks one forward and one last-layer
/// gradient.
GradientVector last_layer_gradient(const ToyModel& m, const Sample& s, CostCounters& counters);

/// Per-sample cross-entropy. Ticks one forward.
double sample_loss(const ToyModel& m, const Sample& s, CostCounters& counters);

/// One gradient-descent step on the mean cross-entropy of the subset.
/// Empty subset is a no-op. Ticks one backward per subset sample.
void train_step(ToyModel& m, const std::vector<Sample>& subset, CostCounters& counters);

/// Fraction of test samples whose argmax logit matches the label.
/// Does not touch the cost counters.
double evaluate_accuracy(const ToyModel& m, const std::vector<Sample>& test_set);

/// Unbounded store of every sample encountered so far. Batches are drawn
/// uniformly, without replacement within one draw (with replacement only
/// while the store is smaller than the batch). In once-only mode a sample
/// is excluded from later draws after it has been retrieved once.
class EpisodicMemory {
  public:
    explicit EpisodicMemory(bool once_only = false) : once_only_(once_only) {}

    void insert(const Sample& s);
    Batch sample_batch(int batch_size, Rng& rng, std::int64_t timestep);

    std::size_t size() const { return data_.size(); }
    const std::vector<Sample>& data() const { return data_; }

  private:
    bool once_only_;
    std::vector<Sample> data_;
    std::vector<char> consumed_;
    std::size_t n_consumed_ = 0;
};

enum class SelectorKind { kOasis, kRandom, kTopK, kGreedyOrthogonal, kLossPrune, kFull };

std::string selector_kind_name(SelectorKind kind);
std::optional<SelectorKind> selector_kind_from_name(const std::string& name);

struct ModelSettings {
    double learning_rate = 0.05;
    /// Batch iterations per arriving sample; 0.125 means one retrieval,
    /// selection and training step per eight arrivals.
    double iterations_per_encounter = 0.125;
    bool memory_once_only = false;
};

struct MetricsSettings {
    int test_samples_per_task = 200;
    std::optional<double> density_bandwidth;
    /// When > 0, also log the running average accuracy over seen tasks every
    /// this many iterations (step log only; boundary rows are unaffected).
    int track_accuracy_every = 0;
};

struct RunSettings {
    StreamConfig stream;
    SelectorKind selector = SelectorKind::kOasis;
    SelectorConfig selector_cfg;
    double prune_prob = 0.5;  // loss_prune only
    ModelSettings model;
    MetricsSettings metrics;
    std::uint64_t seed = 0;
};

/// Runs one full experiment: ingest the stream into episodic memory, retrieve
/// batches, score, select, train, and evaluate at every task boundary plus
/// the end. Fully deterministic for a given settings value.
RunRecord run_experiment(const RunSettings& settings);

}  // namespace oasis
