#pragma once

#include <cstddef>
#include <vector>

#include "oasis/core.hpp"

namespace oasis {

struct SirenConfig {
    bool enabled = true;
    /// Largest picked-subset size entering the inclusion-exclusion correction.
    /// The full sum is exponential in the picked-set size, so the hot path
    /// truncates it; 3 keeps pair and triple overlaps.
    int max_order = 3;
    /// No cap: every subset of the picked set. Intended for tests and small
    /// batches.
    bool exact_mode = false;
};

struct SirenResult {
    std::vector<double> adjusted;         // redundancy-adjusted scores, input order
    std::vector<std::size_t> pick_order;  // argmax sequence over adjusted scores
};

/// Iterative redundancy elimination. Repeatedly moves the highest-adjusted
/// sample into the picked set H, then recomputes every remaining sample's
/// score from its original value:
///
///   adj_i = I_i - sum_{h in H} cos(g_i, g_h) * I_h
///               + sum_{U subset of H, 2 <= |U| <= cap} (-1)^|U| * cos(g_i, mean_g(U)) * mean_I(U)
///
/// Corrections always use original scores; only the argmax looks at adjusted
/// ones. Argmax ties break toward the lowest sample index. A sample's final
/// adjusted score is frozen at the moment it is picked.
SirenResult adjust_batch(const std::vector<double>& informativeness,
                         const std::vector<GradientVector>& grads,
                         const SirenConfig& cfg);

/// Independent reference implementation: direct enumeration of every subset
/// via submask iteration, no order cap, no caching, and no code shared with
/// adjust_batch. Batch size capped at 12 (2^12 subsets).
SirenResult brute_force_oracle(const std::vector<double>& informativeness,
                               const std::vector<GradientVector>& grads);

}  // namespace oasis
