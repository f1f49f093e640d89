#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "oasis/core.hpp"
#include "oasis/rng.hpp"
#include "oasis/siren.hpp"
#include "oasis/stats.hpp"

namespace oasis {

/// How the gate probabilities are turned into decisions.
///   kPerSampleBernoulli: independent uniform draw per sample (default).
///   kSharedThreshold: one uniform draw per batch, select where p > u.
/// Both give each sample the same marginal selection probability.
enum class GatingMode { kPerSampleBernoulli, kSharedThreshold };

struct SelectorConfig {
    double target_ratio = 0.25;        // in (0, 1)
    std::optional<double> threshold;   // solved from target_ratio when absent
    double alpha = 0.9;                // EMA decay factor
    GatingMode gating_mode = GatingMode::kPerSampleBernoulli;
    SirenConfig siren;
    bool normalize_by_variance = false;
    /// Proportional feedback on the threshold:
    ///   threshold += gain * (realized - target)
    /// applied after every batch. Absent = fixed threshold.
    std::optional<double> ratio_controller_gain;
    /// Feed the EMA the redundancy-adjusted batch mean instead of the raw
    /// one. Ablation only; the reference pipeline uses raw scores.
    bool ema_uses_adjusted = false;
    /// Keep (mu, var) pinned at (frozen_mu, frozen_var) for the whole run:
    /// open-loop gating, used for calibration studies.
    bool freeze_stats = false;
    double frozen_mu = 0.0;
    double frozen_var = 1.0;
    std::uint64_t seed = 0;
};

struct SelectionDecision {
    std::int64_t timestep = 0;
    std::vector<ScoredSample> scored;         // batch order
    std::vector<std::int64_t> selected_ids;   // batch order
    StreamStats stats_after;
    double realized_ratio_so_far = 0.0;       // total selected / total seen
    double threshold = 0.0;                   // threshold used for this batch
};

/// The four-stage streaming selector: score, redundancy-adjust, z-normalize,
/// gate. Holds the stream statistics, the gate RNG and the running totals,
/// so one instance belongs to exactly one run and calls are sequential.
/// It never consults any total stream size.
class OasisSelector {
  public:
    explicit OasisSelector(const SelectorConfig& cfg);

    SelectionDecision select(const Batch& batch, const std::vector<GradientVector>& grads);

    const StreamStats& stats() const { return stats_; }
    double threshold() const { return threshold_; }
    std::int64_t total_seen() const { return total_seen_; }
    std::int64_t total_selected() const { return total_selected_; }

  private:
    SelectorConfig cfg_;
    StreamStats stats_;
    double threshold_ = 0.0;
    Rng rng_;
    std::int64_t total_seen_ = 0;
    std::int64_t total_selected_ = 0;
};

/// Uniform k-subset of the batch, without replacement.
std::vector<std::int64_t> random_select(const Batch& batch, std::size_t k, Rng& rng);

/// Ids of the k largest squared gradient norms; ties toward the lowest index.
std::vector<std::int64_t> topk_norm_select(const Batch& batch,
                                           const std::vector<GradientVector>& grads,
                                           std::size_t k);

/// Greedy diverse pick: repeatedly take the gradient with the largest norm
/// of its component orthogonal to the span of the already-picked gradients.
std::vector<std::int64_t> greedy_orthogonal_select(const Batch& batch,
                                                   const std::vector<GradientVector>& grads,
                                                   std::size_t k);

/// Soft pruning against a running mean loss kept across calls: samples whose
/// loss is below the running mean are dropped with probability prune_prob,
/// everything else is kept.
class LossPruneSelector {
  public:
    explicit LossPruneSelector(double prune_prob);

    std::vector<std::int64_t> select(const Batch& batch, const std::vector<double>& losses,
                                     Rng& rng);

    double running_mean_loss() const;

  private:
    double prune_prob_;
    double loss_sum_ = 0.0;
    std::int64_t loss_count_ = 0;
};

/// One proportional controller step on the gate threshold. Selecting above
/// target pushes the threshold up (stricter), below target pulls it down.
double ratio_controller_step(double threshold, double gain, double realized_ratio,
                             double target_ratio);

}  // namespace oasis
