#include "oasis/siren.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "oasis/core.hpp"

namespace oasis {

namespace {

void validate_inputs(const std::vector<double>& informativeness,
                     const std::vector<GradientVector>& grads) {
    if (informativeness.size() != grads.size()) {
        throw std::invalid_argument("siren: score/gradient count mismatch");
    }
    if (informativeness.empty()) {
        throw std::invalid_argument("siren: empty batch");
    }
    const std::size_t d = grads.front().dim();
    for (const auto& g : grads) {
        if (g.dim() != d) {
            throw std::invalid_argument("siren: gradient dimension mismatch");
        }
    }
    for (double v : informativeness) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("siren: scores must be finite and non-negative");
        }
    }
}

std::size_t argmax_remaining(const std::vector<double>& adjusted,
                             const std::vector<bool>& picked) {
    std::size_t best = adjusted.size();
    for (std::size_t i = 0; i < adjusted.size(); ++i) {
        if (picked[i]) continue;
        if (best == adjusted.size() || adjusted[i] > adjusted[best]) {
            best = i;
        }
    }
    return best;
}

struct SubsetTerm {
    double sign;  // (-1)^|U|
    double mean_score;
    GradientVector mean_grad;
};

}  // namespace

SirenResult adjust_batch(const std::vector<double>& informativeness,
                         const std::vector<GradientVector>& grads,
                         const SirenConfig& cfg) {
    validate_inputs(informativeness, grads);
    if (cfg.max_order < 1) {
        throw std::invalid_argument("siren: max_order must be >= 1");
    }

    const std::size_t n = informativeness.size();
    SirenResult res;
    res.adjusted = informativeness;
    res.pick_order.reserve(n);

    std::vector<bool> picked(n, false);
    std::vector<std::size_t> picked_list;
    picked_list.reserve(n);

    // Mean gradient / mean score per subset, cached across iterations of one
    // batch: subsets of an earlier H stay valid as H grows.
    std::unordered_map<std::uint64_t, SubsetTerm> subset_cache;
    std::vector<const SubsetTerm*> active_terms;

    while (picked_list.size() < n) {
        const std::size_t pick = argmax_remaining(res.adjusted, picked);
        picked[pick] = true;
        picked_list.push_back(pick);
        res.pick_order.push_back(pick);
        if (picked_list.size() == n) break;

        if (!cfg.enabled) {
            continue;  // scores stay raw; the loop is just a descending sort
        }

        const std::size_t m = picked_list.size();
        const std::size_t cap =
            cfg.exact_mode ? m : std::min<std::size_t>(static_cast<std::size_t>(cfg.max_order), m);

        // Enumerate subsets of the picked set with sizes 2..cap, materializing
        // their mean gradient and mean original score once.
        active_terms.clear();
        std::vector<std::size_t> combo;
        for (std::size_t size = 2; size <= cap; ++size) {
            combo.assign(size, 0);
            // standard lexicographic k-combinations over picked_list positions
            for (std::size_t i = 0; i < size; ++i) combo[i] = i;
            while (true) {
                std::uint64_t mask = 0;
                for (std::size_t pos : combo) mask |= (std::uint64_t{1} << picked_list[pos]);
                auto it = subset_cache.find(mask);
                if (it == subset_cache.end()) {
                    std::vector<GradientVector> members;
                    members.reserve(size);
                    double score_sum = 0.0;
                    for (std::size_t pos : combo) {
                        members.push_back(grads[picked_list[pos]]);
                        score_sum += informativeness[picked_list[pos]];
                    }
                    SubsetTerm term;
                    term.sign = (size % 2 == 0) ? 1.0 : -1.0;
                    term.mean_score = score_sum / static_cast<double>(size);
                    term.mean_grad = mean_gradient(members);
                    it = subset_cache.emplace(mask, std::move(term)).first;
                }
                active_terms.push_back(&it->second);

                // advance combination
                std::size_t k = size;
                while (k > 0 && combo[k - 1] == m - size + (k - 1)) --k;
                if (k == 0) break;
                ++combo[k - 1];
                for (std::size_t j = k; j < size; ++j) combo[j] = combo[j - 1] + 1;
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (picked[i]) continue;
            double v = informativeness[i];
            for (std::size_t h : picked_list) {
                v -= cosine_similarity(grads[i], grads[h]) * informativeness[h];
            }
            for (const SubsetTerm* term : active_terms) {
                v += term->sign * cosine_similarity(grads[i], term->mean_grad) * term->mean_score;
            }
            res.adjusted[i] = v;
        }
    }
    return res;
}

SirenResult brute_force_oracle(const std::vector<double>& informativeness,
                               const std::vector<GradientVector>& grads) {
    validate_inputs(informativeness, grads);
    const std::size_t n = informativeness.size();
    if (n > 12) {
        throw std::invalid_argument("brute_force_oracle: batch size capped at 12");
    }
    const std::size_t d = grads.front().dim();

    // Local primitives, written from scratch on purpose.
    auto cosine = [d](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            dot += a[k] * b[k];
            na += a[k] * a[k];
            nb += b[k] * b[k];
        }
        if (na == 0.0 || nb == 0.0) return 0.0;
        double c = dot / (std::sqrt(na) * std::sqrt(nb));
        if (c > 1.0) c = 1.0;
        if (c < -1.0) c = -1.0;
        return c;
    };

    SirenResult res;
    res.adjusted = informativeness;
    res.pick_order.reserve(n);
    std::uint32_t picked_mask = 0;

    while (res.pick_order.size() < n) {
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (picked_mask & (std::uint32_t{1} << i)) continue;
            if (pick == n || res.adjusted[i] > res.adjusted[pick]) pick = i;
        }
        picked_mask |= (std::uint32_t{1} << pick);
        res.pick_order.push_back(pick);
        if (res.pick_order.size() == n) break;

        for (std::size_t i = 0; i < n; ++i) {
            if (picked_mask & (std::uint32_t{1} << i)) continue;
            double v = informativeness[i];
            for (std::size_t h = 0; h < n; ++h) {
                if (picked_mask & (std::uint32_t{1} << h)) {
                    v -= cosine(grads[i].values, grads[h].values) * informativeness[h];
                }
            }
            // Every subset of the picked set with at least two members.
            for (std::uint32_t sub = picked_mask; sub != 0; sub = (sub - 1) & picked_mask) {
                const int size = std::popcount(sub);
                if (size < 2) continue;
                std::vector<double> mean_grad(d, 0.0);
                double mean_score = 0.0;
                for (std::size_t h = 0; h < n; ++h) {
                    if (sub & (std::uint32_t{1} << h)) {
                        for (std::size_t k = 0; k < d; ++k) mean_grad[k] += grads[h].values[k];
                        mean_score += informativeness[h];
                    }
                }
                for (std::size_t k = 0; k < d; ++k) mean_grad[k] /= size;
                mean_score /= size;
                const double sign = (size % 2 == 0) ? 1.0 : -1.0;
                v += sign * cosine(grads[i].values, mean_grad) * mean_score;
            }
            res.adjusted[i] = v;
        }
    }
    return res;
}

}  // namespace oasis
