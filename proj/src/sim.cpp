#include "oasis/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "oasis/stats.hpp"

namespace oasis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_stream_config(const StreamConfig& cfg) {
    if (cfg.feature_dim < 1) {
        throw std::invalid_argument("stream: feature_dim must be >= 1");
    }
    if (cfg.n_classes < 2) {
        throw std::invalid_argument("stream: n_classes must be >= 2");
    }
    if (cfg.batch_size < 1) {
        throw std::invalid_argument("stream: batch_size must be >= 1");
    }
    if (cfg.tasks.empty()) {
        throw std::invalid_argument("stream: at least one task is required");
    }
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        const TaskSpec& t = cfg.tasks[i];
        if (t.task_id != static_cast<int>(i)) {
            throw std::invalid_argument("stream: task_id of task " + std::to_string(i) +
                                        " must equal its position");
        }
        if (t.n_samples < 1) {
            throw std::invalid_argument("stream: task " + std::to_string(i) +
                                        " n_samples must be >= 1");
        }
        if (t.class_ids.empty()) {
            throw std::invalid_argument("stream: task " + std::to_string(i) + " owns no classes");
        }
        for (int c : t.class_ids) {
            if (c < 0 || c >= cfg.n_classes) {
                throw std::invalid_argument("stream: task " + std::to_string(i) +
                                            " references class " + std::to_string(c) +
                                            " outside [0, n_classes)");
            }
        }
        if (!(t.feature_scale >= 0.0)) {
            throw std::invalid_argument("stream: task " + std::to_string(i) +
                                        " feature_scale must be >= 0");
        }
        if (t.recurrence && !(*t.recurrence >= 0.0 && *t.recurrence <= 1.0)) {
            throw std::invalid_argument("stream: task " + std::to_string(i) +
                                        " recurrence must be in [0, 1]");
        }
        for (const auto& [c, center] : t.class_centers) {
            if (center.size() != static_cast<std::size_t>(cfg.feature_dim)) {
                throw std::invalid_argument("stream: center of class " + std::to_string(c) +
                                            " in task " + std::to_string(i) +
                                            " does not match feature_dim");
            }
        }
    }
}

Sample draw_sample(const TaskSpec& task, const std::vector<double>& center, int label,
                   int feature_dim, Rng& rng) {
    Sample s;
    s.label = label;
    s.task_id = task.task_id;
    s.features.resize(feature_dim);
    for (int j = 0; j < feature_dim; ++j) {
        s.features[j] = center[j] + task.feature_scale * rng.normal();
    }
    return s;
}

std::vector<Sample> emit_task_samples(const TaskSpec& task, std::int64_t count, int feature_dim,
                                      Rng& rng) {
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = 0; j < count; ++j) {
        const int label =
            task.class_ids[rng.uniform_below(task.class_ids.size())];
        const auto it = task.class_centers.find(label);
        if (it == task.class_centers.end()) {
            throw std::invalid_argument("stream: missing center for class " +
                                        std::to_string(label) + " in task " +
                                        std::to_string(task.task_id));
        }
        out.push_back(draw_sample(task, it->second, label, feature_dim, rng));
    }
    return out;
}

}  // namespace

void assign_auto_centers(StreamConfig& cfg, double spread) {
    if (!(spread > 0.0)) {
        throw std::invalid_argument("assign_auto_centers: spread must be positive");
    }
    Rng rng(derive_seed(cfg.seed, "centers"));
    for (auto& task : cfg.tasks) {
        for (int c : task.class_ids) {
            auto& center = task.class_centers[c];
            if (center.empty()) {
                center.resize(cfg.feature_dim);
                for (int j = 0; j < cfg.feature_dim; ++j) {
                    center[j] = spread * rng.normal();
                }
            }
        }
    }
}

std::vector<Sample> generate_stream(const StreamConfig& cfg) {
    validate_stream_config(cfg);
    Rng rng(derive_seed(cfg.seed, "stream-gen"));
    std::vector<Sample> stream;

    for (const auto& task : cfg.tasks) {
        auto block = emit_task_samples(task, task.n_samples, cfg.feature_dim, rng);
        if (cfg.shuffle_within_task) {
            rng.shuffle(block);
        }
        stream.insert(stream.end(), block.begin(), block.end());
    }
    // Tasks with a recurrence fraction re-emit part of their distribution at
    // the tail of the stream, in task order.
    for (const auto& task : cfg.tasks) {
        if (task.recurrence && *task.recurrence > 0.0) {
            const auto extra = static_cast<std::int64_t>(
                std::ceil(*task.recurrence * static_cast<double>(task.n_samples)));
            auto block = emit_task_samples(task, extra, cfg.feature_dim, rng);
            stream.insert(stream.end(), block.begin(), block.end());
        }
    }
    for (std::size_t i = 0; i < stream.size(); ++i) {
        stream[i].id = static_cast<std::int64_t>(i);
    }
    return stream;
}

std::vector<std::vector<Sample>> make_test_sets(const StreamConfig& cfg, int per_task) {
    validate_stream_config(cfg);
    if (per_task < 1) {
        throw std::invalid_argument("make_test_sets: per_task must be >= 1");
    }
    Rng rng(derive_seed(cfg.seed, "test-gen"));
    std::vector<std::vector<Sample>> sets;
    sets.reserve(cfg.tasks.size());
    std::int64_t next_id = -1;
    for (const auto& task : cfg.tasks) {
        auto block = emit_task_samples(task, per_task, cfg.feature_dim, rng);
        for (auto& s : block) {
            s.id = next_id--;
        }
        sets.push_back(std::move(block));
    }
    return sets;
}

ToyModel ToyModel::zeros(int n_classes, int feature_dim, double learning_rate) {
    if (n_classes < 2 || feature_dim < 1) {
        throw std::invalid_argument("ToyModel: need n_classes >= 2 and feature_dim >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("ToyModel: learning_rate must be positive");
    }
    ToyModel m;
    m.n_classes = n_classes;
    m.feature_dim = feature_dim;
    m.learning_rate = learning_rate;
    m.weights.assign(static_cast<std::size_t>(n_classes) * (feature_dim + 1), 0.0);
    return m;
}

namespace {

void check_sample(const ToyModel& m, const Sample& s) {
    if (s.features.size() != static_cast<std::size_t>(m.feature_dim)) {
        throw std::invalid_argument("ToyModel: feature dimension mismatch");
    }
    if (s.label < 0 || s.label >= m.n_classes) {
        throw std::invalid_argument("ToyModel: label " + std::to_string(s.label) +
                                    " out of range");
    }
}

std::vector<double> compute_logits(const ToyModel& m, const Sample& s) {
    const int dp1 = m.feature_dim + 1;
    std::vector<double> logits(m.n_classes, 0.0);
    for (int c = 0; c < m.n_classes; ++c) {
        const double* row = m.weights.data() + static_cast<std::size_t>(c) * dp1;
        double acc = row[m.feature_dim];  // bias
        for (int j = 0; j < m.feature_dim; ++j) {
            acc += row[j] * s.features[j];
        }
        logits[c] = acc;
    }
    return logits;
}

std::vector<double> softmax(std::vector<double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logits) {
        v /= sum;
    }
    return logits;
}

// Accumulates scale * grad(cross-entropy) into acc; shared by the public
// gradient op and the training step.
void accumulate_gradient(const ToyModel& m, const Sample& s, double scale,
                         std::vector<double>& acc) {
    const auto probs = softmax(compute_logits(m, s));
    const int dp1 = m.feature_dim + 1;
    for (int c = 0; c < m.n_classes; ++c) {
        const double coef = scale * (probs[c] - (c == s.label ? 1.0 : 0.0));
        double* row = acc.data() + static_cast<std::size_t>(c) * dp1;
        for (int j = 0; j < m.feature_dim; ++j) {
            row[j] += coef * s.features[j];
        }
        row[m.feature_dim] += coef;  // bias input is 1
    }
}

}  // namespace

std::vector<double> ToyModel::class_probabilities(const Sample& s) const {
    check_sample(*this, s);
    return softmax(compute_logits(*this, s));
}

GradientVector last_layer_gradient(const ToyModel& m, const Sample& s, CostCounters& counters) {
    check_sample(m, s);
    counters.forward += 1;
    counters.last_layer_grad += 1;
    std::vector<double> g(m.weights.size(), 0.0);
    accumulate_gradient(m, s, 1.0, g);
    return GradientVector{std::move(g)};
}

double sample_loss(const ToyModel& m, const Sample& s, CostCounters& counters) {
    check_sample(m, s);
    counters.forward += 1;
    const auto logits = compute_logits(m, s);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) {
        sum += std::exp(v - mx);
    }
    return mx + std::log(sum) - logits[s.label];
}

void train_step(ToyModel& m, const std::vector<Sample>& subset, CostCounters& counters) {
    if (subset.empty()) {
        return;
    }
    std::vector<double> mean_grad(m.weights.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(subset.size());
    for (const auto& s : subset) {
        check_sample(m, s);
        accumulate_gradient(m, s, inv, mean_grad);
    }
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        m.weights[i] -= m.learning_rate * mean_grad[i];
    }
    counters.backward += static_cast<std::int64_t>(subset.size());
}

double evaluate_accuracy(const ToyModel& m, const std::vector<Sample>& test_set) {
    if (test_set.empty()) {
        throw std::invalid_argument("evaluate_accuracy: empty test set");
    }
    std::int64_t correct = 0;
    for (const auto& s : test_set) {
        const auto logits = compute_logits(m, s);
        const auto best = std::max_element(logits.begin(), logits.end());
        if (static_cast<int>(best - logits.begin()) == s.label) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

void EpisodicMemory::insert(const Sample& s) {
    data_.push_back(s);
    consumed_.push_back(0);
}

Batch EpisodicMemory::sample_batch(int batch_size, Rng& rng, std::int64_t timestep) {
    if (data_.empty()) {
        throw std::runtime_error("EpisodicMemory: cannot sample from empty memory");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("EpisodicMemory: batch_size must be >= 1");
    }
    const std::size_t want = static_cast<std::size_t>(batch_size);
    std::vector<std::size_t> indices;

    if (once_only_) {
        std::vector<std::size_t> fresh;
        fresh.reserve(data_.size() - n_consumed_);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!consumed_[i]) fresh.push_back(i);
        }
        if (fresh.size() >= want) {
            for (std::size_t pos : rng.sample_without_replacement(fresh.size(), want)) {
                indices.push_back(fresh[pos]);
            }
        } else {
            // Not enough unseen samples left; take them all and pad with
            // uniform redraws over the whole store.
            indices = fresh;
            while (indices.size() < want) {
                indices.push_back(static_cast<std::size_t>(rng.uniform_below(data_.size())));
            }
        }
        for (std::size_t i : indices) {
            if (!consumed_[i]) {
                consumed_[i] = 1;
                ++n_consumed_;
            }
        }
    } else if (data_.size() >= want) {
        indices = rng.sample_without_replacement(data_.size(), want);
    } else {
        indices.reserve(want);
        for (std::size_t i = 0; i < want; ++i) {
            indices.push_back(static_cast<std::size_t>(rng.uniform_below(data_.size())));
        }
    }

    Batch batch;
    batch.timestep = timestep;
    batch.samples.reserve(want);
    for (std::size_t i : indices) {
        batch.samples.push_back(data_[i]);
    }
    return batch;
}

std::string selector_kind_name(SelectorKind kind) {
    switch (kind) {
        case SelectorKind::kOasis: return "oasis";
        case SelectorKind::kRandom: return "random";
        case SelectorKind::kTopK: return "topk";
        case SelectorKind::kGreedyOrthogonal: return "greedy_orthogonal";
        case SelectorKind::kLossPrune: return "loss_prune";
        case SelectorKind::kFull: return "full";
    }
    return "unknown";
}

std::optional<SelectorKind> selector_kind_from_name(const std::string& name) {
    if (name == "oasis") return SelectorKind::kOasis;
    if (name == "random") return SelectorKind::kRandom;
    if (name == "topk") return SelectorKind::kTopK;
    if (name == "greedy_orthogonal") return SelectorKind::kGreedyOrthogonal;
    if (name == "loss_prune") return SelectorKind::kLossPrune;
    if (name == "full") return SelectorKind::kFull;
    return std::nullopt;
}

namespace {

void validate_run_settings(const RunSettings& settings) {
    validate_stream_config(settings.stream);
    if (!(settings.model.learning_rate > 0.0)) {
        throw std::invalid_argument("model: learning_rate must be positive");
    }
    if (!(settings.model.iterations_per_encounter > 0.0 &&
          settings.model.iterations_per_encounter <= 64.0)) {
        throw std::invalid_argument("model: iterations_per_encounter must be in (0, 64]");
    }
    if (settings.metrics.test_samples_per_task < 1) {
        throw std::invalid_argument("metrics: test_samples_per_task must be >= 1");
    }
    if (settings.metrics.density_bandwidth && !(*settings.metrics.density_bandwidth > 0.0)) {
        throw std::invalid_argument("metrics: density_bandwidth must be positive");
    }
    if (settings.metrics.track_accuracy_every < 0) {
        throw std::invalid_argument("metrics: track_accuracy_every must be >= 0");
    }
    if (!(settings.prune_prob >= 0.0 && settings.prune_prob <= 1.0)) {
        throw std::invalid_argument("selector: prune_prob must be in [0, 1]");
    }
    if (!(settings.selector_cfg.target_ratio > 0.0 && settings.selector_cfg.target_ratio < 1.0)) {
        throw std::invalid_argument("selector: target_ratio must be in (0, 1)");
    }
}

}  // namespace

RunRecord run_experiment(const RunSettings& settings) {
    validate_run_settings(settings);

    StreamConfig scfg = settings.stream;
    scfg.seed = derive_seed(settings.seed, "stream-gen");
    assign_auto_centers(scfg, scfg.auto_center_spread);
    const auto stream = generate_stream(scfg);
    const auto test_sets = make_test_sets(scfg, settings.metrics.test_samples_per_task);

    Rng rng_mem(derive_seed(settings.seed, "memory-sampling"));
    Rng rng_baseline(derive_seed(settings.seed, "baseline"));

    ToyModel model =
        ToyModel::zeros(scfg.n_classes, scfg.feature_dim, settings.model.learning_rate);
    EpisodicMemory memory(settings.model.memory_once_only);
    CostCounters counters;

    SelectorConfig ocfg = settings.selector_cfg;
    ocfg.seed = derive_seed(settings.seed, "gating");
    std::optional<OasisSelector> oasis_sel;
    std::optional<LossPruneSelector> prune_sel;
    if (settings.selector == SelectorKind::kOasis) {
        oasis_sel.emplace(ocfg);
    } else if (settings.selector == SelectorKind::kLossPrune) {
        prune_sel.emplace(settings.prune_prob);
    }
    const auto fixed_k = static_cast<std::size_t>(std::clamp<long>(
        std::lround(settings.selector_cfg.target_ratio * scfg.batch_size), 0,
        scfg.batch_size));

    RunRecord record;
    record.seed = settings.seed;
    record.selector_name = selector_kind_name(settings.selector);
    record.target_ratio = settings.selector_cfg.target_ratio;
    record.threshold = oasis_sel ? oasis_sel->threshold() : kNaN;

    std::int64_t total_presented = 0;
    std::int64_t total_selected = 0;
    std::vector<std::int64_t> selected_order;      // distinct ids, first-selection order
    std::unordered_set<std::int64_t> selected_set;
    std::vector<double> informativeness_pool;
    constexpr std::size_t kPoolCap = 100000;

    std::int64_t timestep = 0;
    int max_task_seen = 0;

    auto run_iteration = [&]() {
        Batch batch = memory.sample_batch(scfg.batch_size, rng_mem, timestep);
        const std::size_t n = batch.size();

        std::vector<std::int64_t> selected_ids;
        StepRecord step;
        step.timestep = timestep;
        step.task_id = max_task_seen;
        step.n_presented = static_cast<int>(n);
        step.batch_mean_informativeness = kNaN;
        step.mu = kNaN;
        step.var = kNaN;
        step.threshold = kNaN;

        const bool scores_gradients = settings.selector == SelectorKind::kOasis ||
                                      settings.selector == SelectorKind::kTopK ||
                                      settings.selector == SelectorKind::kGreedyOrthogonal;
        std::vector<GradientVector> grads;
        if (scores_gradients) {
            grads.reserve(n);
            double mean_i = 0.0;
            for (const auto& s : batch.samples) {
                grads.push_back(last_layer_gradient(model, s, counters));
                const double i_val = informativeness(grads.back());
                mean_i += i_val;
                if (informativeness_pool.size() < kPoolCap) {
                    informativeness_pool.push_back(i_val);
                }
            }
            step.batch_mean_informativeness = mean_i / static_cast<double>(n);
        }

        switch (settings.selector) {
            case SelectorKind::kOasis: {
                SelectionDecision decision = oasis_sel->select(batch, grads);
                selected_ids = decision.selected_ids;
                step.mu = decision.stats_after.mu;
                step.var = decision.stats_after.var;
                step.threshold = decision.threshold;
                break;
            }
            case SelectorKind::kRandom:
                selected_ids = random_select(batch, fixed_k, rng_baseline);
                break;
            case SelectorKind::kTopK:
                selected_ids = topk_norm_select(batch, grads, fixed_k);
                break;
            case SelectorKind::kGreedyOrthogonal:
                selected_ids = greedy_orthogonal_select(batch, grads, fixed_k);
                break;
            case SelectorKind::kLossPrune: {
                std::vector<double> losses;
                losses.reserve(n);
                for (const auto& s : batch.samples) {
                    losses.push_back(sample_loss(model, s, counters));
                }
                selected_ids = prune_sel->select(batch, losses, rng_baseline);
                break;
            }
            case SelectorKind::kFull:
                for (const auto& s : batch.samples) {
                    selected_ids.push_back(s.id);
                }
                break;
        }

        std::vector<Sample> chosen;
        chosen.reserve(selected_ids.size());
        for (std::int64_t id : selected_ids) {
            for (const auto& s : batch.samples) {
                if (s.id == id) {
                    chosen.push_back(s);
                    break;
                }
            }
            if (selected_set.insert(id).second) {
                selected_order.push_back(id);
            }
        }
        train_step(model, chosen, counters);

        total_presented += static_cast<std::int64_t>(n);
        total_selected += static_cast<std::int64_t>(selected_ids.size());
        step.selected_ids = std::move(selected_ids);
        step.realized_ratio =
            static_cast<double>(total_selected) / static_cast<double>(total_presented);
        record.steps.push_back(std::move(step));

        if (settings.metrics.track_accuracy_every > 0 &&
            timestep % settings.metrics.track_accuracy_every == 0) {
            double acc = 0.0;
            for (int k = 0; k <= max_task_seen; ++k) {
                acc += evaluate_accuracy(model, test_sets[k]);
            }
            record.tracked_accuracy.emplace_back(timestep,
                                                 acc / static_cast<double>(max_task_seen + 1));
        }
        ++timestep;
    };

    auto boundary_eval = [&]() {
        std::vector<double> row;
        row.reserve(max_task_seen + 1);
        for (int k = 0; k <= max_task_seen; ++k) {
            row.push_back(evaluate_accuracy(model, test_sets[k]));
        }
        record.accuracy_matrix.push_back(std::move(row));
        record.boundary_timesteps.push_back(timestep);
    };

    double iteration_budget = 0.0;
    int current_task = stream.empty() ? 0 : stream.front().task_id;
    for (const auto& sample : stream) {
        if (sample.task_id != current_task) {
            boundary_eval();
            current_task = sample.task_id;
        }
        max_task_seen = std::max(max_task_seen, sample.task_id);
        memory.insert(sample);
        iteration_budget += settings.model.iterations_per_encounter;
        while (iteration_budget >= 1.0) {
            iteration_budget -= 1.0;
            run_iteration();
        }
    }
    boundary_eval();

    record.a_avg = a_avg(record.accuracy_matrix);
    record.a_last = a_last(record.accuracy_matrix);
    record.total_presented = total_presented;
    record.total_selected = total_selected;
    record.realized_ratio =
        total_presented > 0
            ? static_cast<double>(total_selected) / static_cast<double>(total_presented)
            : 0.0;
    record.counters = counters;
    record.n_iterations = timestep;

    // Diversity of the distinct selected samples. Large sets are strided down
    // to a deterministic subsample to keep the pairwise loop bounded.
    constexpr std::size_t kDensityCap = 4000;
    if (selected_order.size() >= 2) {
        std::vector<std::vector<double>> points;
        const std::size_t stride = (selected_order.size() + kDensityCap - 1) / kDensityCap;
        points.reserve(selected_order.size() / stride + 1);
        for (std::size_t i = 0; i < selected_order.size(); i += stride) {
            points.push_back(stream[static_cast<std::size_t>(selected_order[i])].features);
        }
        double h;
        if (settings.metrics.density_bandwidth) {
            h = *settings.metrics.density_bandwidth;
        } else {
            h = std::max(median_pairwise_distance(points), 1e-8);
        }
        record.density_selected = density(points, h);
        record.density_bandwidth = h;
    } else {
        record.density_selected = kNaN;
        record.density_bandwidth = kNaN;
    }

    if (informativeness_pool.size() >= 20) {
        double lo = informativeness_pool.front(), hi = lo;
        for (double v : informativeness_pool) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi > lo) {
            record.informativeness_normality = normality_diagnostic(informativeness_pool);
        }
    }
    return record;
}

}  // namespace oasis
