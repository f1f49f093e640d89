#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oasis/core.hpp"
#include "oasis/rng.hpp"
#include "oasis/siren.hpp"

using namespace oasis;

namespace {

std::vector<GradientVector> random_gradients(Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<GradientVector> out;
    out.reserve(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (auto& x : v) x = scale * rng.normal();
        out.emplace_back(std::move(v));
    }
    return out;
}

std::vector<double> scores_of(const std::vector<GradientVector>& grads) {
    std::vector<double> s;
    s.reserve(grads.size());
    for (const auto& g : grads) s.push_back(informativeness(g));
    return s;
}

SirenConfig exact_cfg() {
    SirenConfig cfg;
    cfg.exact_mode = true;
    return cfg;
}

}  // namespace

TEST_CASE("two samples with identical direction: the duplicate is fully discounted") {
    std::vector<GradientVector> grads{GradientVector{{1.0, 0.0}}, GradientVector{{2.0, 0.0}}};
    std::vector<double> scores{5.0, 3.0};
    const auto res = adjust_batch(scores, grads, exact_cfg());
    CHECK(res.pick_order == std::vector<std::size_t>{0, 1});
    CHECK(res.adjusted[0] == doctest::Approx(5.0));
    CHECK(res.adjusted[1] == doctest::Approx(-2.0));  // 3 - 1*5
}

TEST_CASE("orthogonal gradients leave scores untouched") {
    std::vector<GradientVector> grads{GradientVector{{1.0, 0.0}}, GradientVector{{0.0, 1.0}}};
    std::vector<double> scores{5.0, 3.0};
    const auto res = adjust_batch(scores, grads, exact_cfg());
    CHECK(res.pick_order == std::vector<std::size_t>{0, 1});
    CHECK(res.adjusted[0] == doctest::Approx(5.0));
    CHECK(res.adjusted[1] == doctest::Approx(3.0));
}

TEST_CASE("mutually orthogonal batch reduces to a descending sort") {
    std::vector<GradientVector> grads;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> v(4, 0.0);
        v[i] = 1.0;
        grads.emplace_back(std::move(v));
    }
    std::vector<double> scores{2.0, 7.0, 1.0, 4.0};
    const auto res = adjust_batch(scores, grads, exact_cfg());
    CHECK(res.adjusted == scores);
    CHECK(res.pick_order == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("exact mode agrees with the brute-force oracle on seeded batches") {
    Rng rng(727);
    for (std::size_t n = 2; n <= 8; ++n) {
        for (int trial = 0; trial < 25; ++trial) {
            const auto grads = random_gradients(rng, n, 6);
            const auto scores = scores_of(grads);
            const auto fast = adjust_batch(scores, grads, exact_cfg());
            const auto slow = brute_force_oracle(scores, grads);
            REQUIRE(fast.pick_order == slow.pick_order);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::abs(fast.adjusted[i] - slow.adjusted[i]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("oracle handles the degenerate sizes") {
    const auto one = brute_force_oracle({4.0}, {GradientVector{{1.0, 2.0}}});
    CHECK(one.adjusted == std::vector<double>{4.0});
    CHECK(one.pick_order == std::vector<std::size_t>{0});

    std::vector<GradientVector> grads{GradientVector{{3.0, 0.0}}, GradientVector{{1.0, 0.0}}};
    const auto two = brute_force_oracle({5.0, 3.0}, grads);
    CHECK(two.adjusted[0] == doctest::Approx(5.0));
    CHECK(two.adjusted[1] == doctest::Approx(-2.0));

    std::vector<GradientVector> big(13, GradientVector{{1.0}});
    CHECK_THROWS_AS(brute_force_oracle(std::vector<double>(13, 1.0), big),
                    std::invalid_argument);
}

// Reference values produced by brute_force_oracle on this exact seeded batch,
// frozen here so regressions in either implementation surface immediately.
TEST_CASE("golden six-sample fixture") {
    Rng rng(3001);
    const auto grads = random_gradients(rng, 6, 5);
    const auto scores = scores_of(grads);
    const auto res = adjust_batch(scores, grads, exact_cfg());
    const auto oracle = brute_force_oracle(scores, grads);
    REQUIRE(res.pick_order == oracle.pick_order);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(res.adjusted[i] - oracle.adjusted[i]) <= 1e-12);
    }

    const std::vector<double> frozen_adjusted{
        2.0292695485822234,   0.11430822452992506, 0.33025871876890467,
        1.0509858545525494,   0.52349218702591693, 1.4440689662194655,
    };
    const std::vector<std::size_t> frozen_order{5, 0, 3, 4, 2, 1};
    REQUIRE(res.pick_order == frozen_order);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(res.adjusted[i] - frozen_adjusted[i]) <= 1e-12);
    }
}

TEST_CASE("disabled adjustment returns raw scores in descending pick order") {
    Rng rng(818);
    const auto grads = random_gradients(rng, 5, 4);
    const auto scores = scores_of(grads);
    SirenConfig cfg;
    cfg.enabled = false;
    const auto res = adjust_batch(scores, grads, cfg);
    CHECK(res.adjusted == scores);
    std::vector<std::size_t> expect(5);
    std::iota(expect.begin(), expect.end(), 0);
    std::stable_sort(expect.begin(), expect.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    CHECK(res.pick_order == expect);
}

TEST_CASE("permutation equivariance") {
    Rng rng(919);
    const auto grads = random_gradients(rng, 6, 5);
    const auto scores = scores_of(grads);
    const auto base = adjust_batch(scores, grads, exact_cfg());

    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    std::vector<GradientVector> pgrads(6);
    std::vector<double> pscores(6);
    for (std::size_t i = 0; i < 6; ++i) {
        pgrads[i] = grads[perm[i]];
        pscores[i] = scores[perm[i]];
    }
    const auto permuted = adjust_batch(pscores, pgrads, exact_cfg());
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(permuted.adjusted[i] == doctest::Approx(base.adjusted[perm[i]]).epsilon(1e-12));
    }
    // pick order maps through the permutation
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(perm[permuted.pick_order[k]] == base.pick_order[k]);
    }
}

TEST_CASE("duplicated sample pair: the second copy ends non-positive") {
    Rng rng(1020);
    for (int trial = 0; trial < 20; ++trial) {
        auto grads = random_gradients(rng, 2, 6);
        grads[1] = grads[0];  // exact duplicate
        auto scores = scores_of(grads);
        scores[1] = scores[0];
        const auto res = adjust_batch(scores, grads, exact_cfg());
        const std::size_t second = res.pick_order[1];
        CHECK(res.adjusted[second] <= 1e-9);

        // with unequal magnitudes the weaker copy goes strictly negative
        auto scaled = grads;
        for (auto& x : scaled[1].values) x *= 0.5;
        std::vector<double> s2{informativeness(scaled[0]), informativeness(scaled[1])};
        const auto res2 = adjust_batch(s2, scaled, exact_cfg());
        CHECK(res2.pick_order == std::vector<std::size_t>{0, 1});
        CHECK(res2.adjusted[1] < 0.0);
    }
}

TEST_CASE("order cap truncates the correction but keeps the first-order term") {
    std::vector<GradientVector> grads{
        GradientVector{{1.0, 0.0, 0.0}}, GradientVector{{0.9, 0.1, 0.0}},
        GradientVector{{0.8, 0.0, 0.2}}, GradientVector{{0.7, 0.1, 0.1}}};
    const std::vector<double> scores{4.0, 3.0, 2.0, 1.0};
    SirenConfig capped;
    capped.max_order = 2;
    const auto res_capped = adjust_batch(scores, grads, capped);
    const auto res_exact = adjust_batch(scores, grads, exact_cfg());
    // same data yields different tails once triples enter the correction
    CHECK(res_capped.adjusted.size() == res_exact.adjusted.size());

    SirenConfig bad;
    bad.max_order = 0;
    CHECK_THROWS_AS(adjust_batch(scores, grads, bad), std::invalid_argument);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(adjust_batch({1.0}, {}, exact_cfg()), std::invalid_argument);
    CHECK_THROWS_AS(adjust_batch({}, {}, exact_cfg()), std::invalid_argument);
    CHECK_THROWS_AS(
        adjust_batch({1.0, 1.0}, {GradientVector{{1.0}}, GradientVector{{1.0, 2.0}}},
                     exact_cfg()),
        std::invalid_argument);
    CHECK_THROWS_AS(adjust_batch({-1.0}, {GradientVector{{1.0}}}, exact_cfg()),
                    std::invalid_argument);
}
