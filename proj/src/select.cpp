#include "oasis/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oasis {

namespace {

void validate_selector_config(const SelectorConfig& cfg) {
    if (!(cfg.target_ratio > 0.0 && cfg.target_ratio < 1.0)) {
        throw std::invalid_argument("SelectorConfig: target_ratio must be in (0, 1)");
    }
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
        throw std::invalid_argument("SelectorConfig: alpha must be in (0, 1]");
    }
    if (cfg.ratio_controller_gain && !(*cfg.ratio_controller_gain > 0.0)) {
        throw std::invalid_argument("SelectorConfig: ratio_controller_gain must be > 0");
    }
    if (cfg.freeze_stats && cfg.frozen_var < 0.0) {
        throw std::invalid_argument("SelectorConfig: frozen_var must be >= 0");
    }
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

OasisSelector::OasisSelector(const SelectorConfig& cfg)
    : cfg_(cfg), rng_(cfg.seed) {
    validate_selector_config(cfg_);
    threshold_ = cfg_.threshold ? *cfg_.threshold : solve_threshold(cfg_.target_ratio);
    if (cfg_.freeze_stats) {
        stats_.mu = cfg_.frozen_mu;
        stats_.var = cfg_.frozen_var;
        stats_.alpha = cfg_.alpha;
        stats_.batches_seen = 1;
    } else {
        stats_.alpha = cfg_.alpha;
    }
}

SelectionDecision OasisSelector::select(const Batch& batch,
                                        const std::vector<GradientVector>& grads) {
    const std::size_t n = batch.size();
    if (n == 0) {
        throw std::invalid_argument("oasis_select: empty batch");
    }
    if (grads.size() != n) {
        throw std::invalid_argument("oasis_select: gradient count does not match batch size");
    }

    // Stage 1: raw scores.
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        raw[i] = informativeness(grads[i]);
    }

    // Stage 2: redundancy adjustment.
    std::vector<double> adjusted;
    if (cfg_.siren.enabled) {
        adjusted = adjust_batch(raw, grads, cfg_.siren).adjusted;
    } else {
        adjusted = raw;
    }

    // The first batch of a run provides its own statistics; afterwards the
    // batch is normalized against the running values from previous batches.
    bool initialized_now = false;
    if (!stats_.initialized()) {
        stats_ = init_stats_from_batch(raw, cfg_.alpha);
        initialized_now = true;
    }

    const double threshold_used = threshold_;
    SelectionDecision decision;
    decision.timestep = batch.timestep;
    decision.threshold = threshold_used;
    decision.scored.resize(n);

    // Stages 3 and 4: z-normalize and gate.
    const double shared_u =
        cfg_.gating_mode == GatingMode::kSharedThreshold ? rng_.uniform01() : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ScoredSample& s = decision.scored[i];
        s.sample_id = batch.samples[i].id;
        s.informativeness = raw[i];
        s.adjusted = adjusted[i];
        s.relative = z_normalize(adjusted[i], stats_, cfg_.normalize_by_variance);
        s.gate_probability = selection_gate(s.relative - threshold_used);
        if (cfg_.gating_mode == GatingMode::kPerSampleBernoulli) {
            s.selected = rng_.uniform01() < s.gate_probability;
        } else {
            s.selected = s.gate_probability > shared_u;
        }
        if (s.selected) {
            decision.selected_ids.push_back(s.sample_id);
        }
    }

    // Statistics update, from the raw batch mean (adjusted mean only as an
    // explicit ablation). The initializing batch already consumed its values.
    if (!cfg_.freeze_stats && !initialized_now) {
        const double batch_mean = cfg_.ema_uses_adjusted ? mean_of(adjusted) : mean_of(raw);
        stats_ = update_stats(stats_, batch_mean);
    }

    total_seen_ += static_cast<std::int64_t>(n);
    total_selected_ += static_cast<std::int64_t>(decision.selected_ids.size());
    decision.realized_ratio_so_far =
        static_cast<double>(total_selected_) / static_cast<double>(total_seen_);
    decision.stats_after = stats_;

    if (cfg_.ratio_controller_gain) {
        threshold_ = ratio_controller_step(threshold_, *cfg_.ratio_controller_gain,
                                           decision.realized_ratio_so_far, cfg_.target_ratio);
    }
    return decision;
}

std::vector<std::int64_t> random_select(const Batch& batch, std::size_t k, Rng& rng) {
    if (k > batch.size()) {
        throw std::invalid_argument("random_select: k exceeds batch size");
    }
    std::vector<std::int64_t> ids;
    ids.reserve(k);
    for (std::size_t idx : rng.sample_without_replacement(batch.size(), k)) {
        ids.push_back(batch.samples[idx].id);
    }
    return ids;
}

std::vector<std::int64_t> topk_norm_select(const Batch& batch,
                                           const std::vector<GradientVector>& grads,
                                           std::size_t k) {
    if (k > batch.size()) {
        throw std::invalid_argument("topk_norm_select: k exceeds batch size");
    }
    if (grads.size() != batch.size()) {
        throw std::invalid_argument("topk_norm_select: gradient count mismatch");
    }
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        score[i] = informativeness(grads[i]);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<std::int64_t> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        ids.push_back(batch.samples[order[i]].id);
    }
    return ids;
}

std::vector<std::int64_t> greedy_orthogonal_select(const Batch& batch,
                                                   const std::vector<GradientVector>& grads,
                                                   std::size_t k) {
    if (k > batch.size()) {
        throw std::invalid_argument("greedy_orthogonal_select: k exceeds batch size");
    }
    if (grads.size() != batch.size()) {
        throw std::invalid_argument("greedy_orthogonal_select: gradient count mismatch");
    }
    const std::size_t n = batch.size();
    const std::size_t d = n > 0 ? grads.front().dim() : 0;
    for (const auto& g : grads) {
        if (g.dim() != d) {
            throw std::invalid_argument("greedy_orthogonal_select: gradient dimension mismatch");
        }
    }

    // Residuals maintained by modified Gram-Schmidt against an orthonormal
    // basis of the picked gradients.
    std::vector<std::vector<double>> residual;
    residual.reserve(n);
    for (const auto& g : grads) residual.push_back(g.values);
    std::vector<bool> picked(n, false);
    std::vector<std::int64_t> ids;
    ids.reserve(k);

    auto sqnorm = [d](const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += v[j] * v[j];
        return s;
    };

    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = n;
        double best_norm = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (picked[i]) continue;
            const double rn = sqnorm(residual[i]);
            if (rn > best_norm) {
                best_norm = rn;
                best = i;
            }
        }
        picked[best] = true;
        ids.push_back(batch.samples[best].id);

        const double bn = std::sqrt(best_norm);
        if (bn <= 1e-12) continue;  // span unchanged; nothing left to project out
        std::vector<double> q = residual[best];
        for (std::size_t j = 0; j < d; ++j) q[j] /= bn;
        for (std::size_t i = 0; i < n; ++i) {
            if (picked[i]) continue;
            double proj = 0.0;
            for (std::size_t j = 0; j < d; ++j) proj += q[j] * residual[i][j];
            for (std::size_t j = 0; j < d; ++j) residual[i][j] -= proj * q[j];
        }
    }
    return ids;
}

LossPruneSelector::LossPruneSelector(double prune_prob) : prune_prob_(prune_prob) {
    if (!(prune_prob >= 0.0 && prune_prob <= 1.0)) {
        throw std::invalid_argument("LossPruneSelector: prune_prob must be in [0, 1]");
    }
}

double LossPruneSelector::running_mean_loss() const {
    return loss_count_ > 0 ? loss_sum_ / static_cast<double>(loss_count_) : 0.0;
}

std::vector<std::int64_t> LossPruneSelector::select(const Batch& batch,
                                                    const std::vector<double>& losses,
                                                    Rng& rng) {
    if (losses.size() != batch.size()) {
        throw std::invalid_argument("loss_prune_select: loss count does not match batch size");
    }
    // The very first call has no history; its own batch mean is the reference.
    double reference;
    if (loss_count_ > 0) {
        reference = loss_sum_ / static_cast<double>(loss_count_);
    } else {
        reference = losses.empty() ? 0.0 : mean_of(losses);
    }
    std::vector<std::int64_t> kept;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const bool below = losses[i] < reference;
        const bool drop = below && rng.uniform01() < prune_prob_;
        if (!drop) {
            kept.push_back(batch.samples[i].id);
        }
    }
    for (double l : losses) {
        loss_sum_ += l;
    }
    loss_count_ += static_cast<std::int64_t>(losses.size());
    return kept;
}

double ratio_controller_step(double threshold, double gain, double realized_ratio,
                             double target_ratio) {
    return threshold + gain * (realized_ratio - target_ratio);
}

}  // namespace oasis
