// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Experiment configurations are pinned here, including every seed,
// tolerance and bandwidth, so the suite is fully deterministic.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oasis/cli_commands.hpp"
#include "oasis/core.hpp"
#include "oasis/rng.hpp"
#include "oasis/select.hpp"
#include "oasis/sim.hpp"
#include "oasis/siren.hpp"
#include "oasis/stats.hpp"

using namespace oasis;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

std::vector<GradientVector> random_unit_dim_grads(Rng& rng, std::size_t n, std::size_t dim) {
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

// ---- shared experiment setups -------------------------------------------

// Default 4-task imbalanced stream: two fresh classes per task, overlapping
// class-conditional Gaussians, task sizes 3000/1000/4000/2000.
RunSettings default_stream_run(std::uint64_t seed) {
    RunSettings rs;
    rs.stream.feature_dim = 16;
    rs.stream.n_classes = 8;
    rs.stream.batch_size = 16;
    rs.stream.auto_center_spread = 1.0;
    const std::int64_t sizes[] = {3000, 1000, 4000, 2000};
    for (int t = 0; t < 4; ++t) {
        TaskSpec task;
        task.task_id = t;
        task.n_samples = sizes[t];
        task.class_ids = {2 * t, 2 * t + 1};
        task.feature_scale = 1.0;
        rs.stream.tasks.push_back(task);
    }
    rs.selector = SelectorKind::kOasis;
    rs.selector_cfg.target_ratio = 0.25;
    rs.selector_cfg.ratio_controller_gain = 2.0;  // keeps the realized budget on target
    rs.model.learning_rate = 0.03;
    rs.model.iterations_per_encounter = 0.0625;
    rs.metrics.test_samples_per_task = 200;
    rs.metrics.density_bandwidth = 2.0;
    rs.seed = seed;
    return rs;
}

// Duplicate-cluster stream: one genuinely hard overlapping class pair plus
// three tasks of near-identical samples (tight clusters).
RunSettings duplicate_stream_run(std::uint64_t seed) {
    RunSettings rs;
    rs.stream.feature_dim = 16;
    rs.stream.n_classes = 8;
    rs.stream.batch_size = 16;
    rs.stream.auto_center_spread = 1.5;

    TaskSpec hard;
    hard.task_id = 0;
    hard.n_samples = 3000;
    hard.class_ids = {0, 1};
    hard.feature_scale = 1.0;
    hard.class_centers[0] = std::vector<double>(16, 0.0);
    hard.class_centers[0][0] = 0.6;
    hard.class_centers[1] = std::vector<double>(16, 0.0);
    hard.class_centers[1][0] = -0.6;
    rs.stream.tasks.push_back(hard);

    const std::int64_t sizes[] = {1000, 4000, 2000};
    for (int t = 0; t < 3; ++t) {
        TaskSpec dup;
        dup.task_id = t + 1;
        dup.n_samples = sizes[t];
        dup.class_ids = {2 * t + 2, 2 * t + 3};
        dup.feature_scale = 0.05;
        rs.stream.tasks.push_back(dup);
    }
    rs.selector = SelectorKind::kOasis;
    rs.selector_cfg.target_ratio = 0.25;
    rs.selector_cfg.ratio_controller_gain = 2.0;
    rs.model.learning_rate = 0.03;
    rs.model.iterations_per_encounter = 0.0625;
    rs.metrics.test_samples_per_task = 200;
    rs.metrics.density_bandwidth = 2.0;
    rs.seed = seed;
    return rs;
}

// Clustered stream for the diversity comparison: six well-separated tight
// clusters plus one persistently hard twin pair near the origin.
RunSettings clustered_stream_run(std::uint64_t seed) {
    RunSettings rs;
    rs.stream.feature_dim = 16;
    rs.stream.n_classes = 8;
    rs.stream.batch_size = 16;
    rs.stream.auto_center_spread = 1.5;
    TaskSpec task;
    task.task_id = 0;
    task.n_samples = 6000;
    task.class_ids = {0, 1, 2, 3, 4, 5, 6, 7};
    task.feature_scale = 0.1;
    task.class_centers[0] = std::vector<double>(16, 0.0);
    task.class_centers[0][0] = 0.1;
    task.class_centers[1] = std::vector<double>(16, 0.0);
    task.class_centers[1][0] = -0.1;
    rs.stream.tasks.push_back(task);
    rs.selector = SelectorKind::kOasis;
    rs.selector_cfg.target_ratio = 0.25;
    rs.selector_cfg.ratio_controller_gain = 2.0;
    rs.model.learning_rate = 0.01;
    rs.model.iterations_per_encounter = 0.0625;
    rs.metrics.test_samples_per_task = 200;
    rs.metrics.density_bandwidth = 2.0;
    rs.seed = seed;
    return rs;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::string g_cli_path;  // set from --cli; empty: library-level check only

// Cached records shared between criteria 6 and 8.
std::vector<RunRecord> g_oasis_default_records;

// ---- criteria ------------------------------------------------------------

bool criterion_threshold_reproduction(std::string& detail) {
    const auto start = Clock::now();
    const double t1 = solve_threshold(0.0625);
    const double t2 = solve_threshold(0.125);
    const double t3 = solve_threshold(0.25);
    const double elapsed = seconds_since(start);
    std::ostringstream ss;
    ss << "I_T(0.0625)=" << t1 << " I_T(0.125)=" << t2 << " I_T(0.25)=" << t3 << " in "
       << elapsed << " s";
    detail = ss.str();
    return std::abs(t1 - 2.06) <= 0.02 && std::abs(t2 - 1.53) <= 0.02 &&
           std::abs(t3 - 0.89) <= 0.02 && elapsed < 1.0;
}

bool criterion_calibration(std::string& detail) {
    const auto start = Clock::now();
    std::ostringstream ss;
    bool ok = true;
    for (const double ratio : {0.0625, 0.125, 0.25}) {
        for (const auto mode :
             {GatingMode::kPerSampleBernoulli, GatingMode::kSharedThreshold}) {
            SelectorConfig cfg;
            cfg.target_ratio = ratio;
            cfg.gating_mode = mode;
            cfg.siren.enabled = false;
            cfg.freeze_stats = true;  // z-scores standard normal by construction
            cfg.frozen_mu = 10.0;
            cfg.frozen_var = 1.0;
            cfg.seed = 20240 + static_cast<std::uint64_t>(ratio * 10000);
            OasisSelector sel(cfg);
            Rng z_rng(derive_seed(cfg.seed, "calibration-z"));
            std::int64_t next_id = 0;
            for (int t = 0; t < 10000; ++t) {
                Batch batch;
                batch.timestep = t;
                std::vector<GradientVector> grads;
                for (int i = 0; i < 16; ++i) {
                    Sample s;
                    s.id = next_id++;
                    batch.samples.push_back(s);
                    grads.push_back(GradientVector{{std::sqrt(10.0 + z_rng.normal())}});
                }
                sel.select(batch, grads);
            }
            const double realized = static_cast<double>(sel.total_selected()) /
                                    static_cast<double>(sel.total_seen());
            const bool pass = std::abs(realized - ratio) <= 0.10 * ratio;
            ok = ok && pass;
            ss << (mode == GatingMode::kPerSampleBernoulli ? "bern" : "shared") << "@" << ratio
               << "=" << realized << (pass ? " " : "(FAIL) ");
        }
    }
    const double elapsed = seconds_since(start);
    ss << "in " << elapsed << " s";
    detail = ss.str();
    return ok && elapsed < 10.0;
}

bool criterion_siren_equivalence(std::string& detail) {
    const auto start = Clock::now();
    SirenConfig cfg;
    cfg.exact_mode = true;
    Rng rng(5150);
    double worst = 0.0;
    for (std::size_t n = 2; n <= 10; ++n) {
        for (int trial = 0; trial < 100; ++trial) {
            const auto grads = random_unit_dim_grads(rng, n, 8);
            std::vector<double> scores;
            scores.reserve(n);
            for (const auto& g : grads) scores.push_back(informativeness(g));
            const auto fast = adjust_batch(scores, grads, cfg);
            const auto slow = brute_force_oracle(scores, grads);
            if (fast.pick_order != slow.pick_order) {
                detail = "pick order mismatch at n=" + std::to_string(n);
                return false;
            }
            for (std::size_t i = 0; i < n; ++i) {
                worst = std::max(worst, std::abs(fast.adjusted[i] - slow.adjusted[i]));
            }
        }
    }
    const double elapsed = seconds_since(start);
    std::ostringstream ss;
    ss << "max |diff|=" << worst << " over 900 batches in " << elapsed << " s";
    detail = ss.str();
    return worst <= 1e-12 && elapsed < 30.0;
}

bool criterion_stats_equivalence(std::string& detail) {
    Rng rng(6001);
    StreamStats s;
    s.mu = 2.0;
    s.var = 1.0;
    s.alpha = 0.9;
    s.batches_seen = 1;
    double mu = 2.0, var = 1.0;
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const double m = 5.0 + 3.0 * rng.normal();
        s = update_stats(s, m);
        const double new_mu = 0.9 * m + 0.1 * mu;
        const double new_var = 0.9 * (m - mu) * (m - mu) + 0.1 * var;
        mu = new_mu;
        var = new_var;
        worst = std::max(worst, std::abs(s.mu - mu) / std::max(1.0, std::abs(mu)));
        worst = std::max(worst, std::abs(s.var - var) / std::max(1.0, std::abs(var)));
    }
    std::ostringstream ss;
    ss << "max relative deviation " << worst << " over 10000 steps";
    detail = ss.str();
    return worst <= 1e-12;
}

bool criterion_gradient_correctness(std::string& detail) {
    Rng rng(7001);
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n_classes = 2 + static_cast<int>(rng.uniform_below(3));
        const int dim = 1 + static_cast<int>(rng.uniform_below(5));
        ToyModel m = ToyModel::zeros(n_classes, dim, 0.1);
        for (auto& w : m.weights) w = rng.normal();
        Sample s;
        s.features.resize(dim);
        for (auto& x : s.features) x = rng.normal();
        s.label = static_cast<int>(rng.uniform_below(n_classes));

        CostCounters counters;
        const auto g = last_layer_gradient(m, s, counters);
        double diff_sq = 0.0, ref_sq = 0.0;
        for (std::size_t k = 0; k < m.weights.size(); ++k) {
            ToyModel plus = m, minus = m;
            plus.weights[k] += h;
            minus.weights[k] -= h;
            CostCounters scratch;
            const double fd =
                (sample_loss(plus, s, scratch) - sample_loss(minus, s, scratch)) / (2.0 * h);
            diff_sq += (fd - g.values[k]) * (fd - g.values[k]);
            ref_sq += fd * fd;
        }
        worst = std::max(worst, std::sqrt(diff_sq / ref_sq));
    }
    std::ostringstream ss;
    ss << "max norm-relative error " << worst << " over 100 pairs";
    detail = ss.str();
    return worst < 1e-4;
}

bool criterion_selection_quality(std::string& detail) {
    const auto start = Clock::now();
    std::vector<double> oasis_a_last, random_a_last;
    std::vector<double> oasis_selected, random_selected;
    g_oasis_default_records.clear();
    for (const auto seed : kSeeds) {
        RunSettings rs = default_stream_run(seed);
        RunRecord rec = run_experiment(rs);
        oasis_a_last.push_back(rec.a_last);
        oasis_selected.push_back(static_cast<double>(rec.total_selected));
        g_oasis_default_records.push_back(std::move(rec));

        rs.selector = SelectorKind::kRandom;
        const RunRecord rrec = run_experiment(rs);
        random_a_last.push_back(rrec.a_last);
        random_selected.push_back(static_cast<double>(rrec.total_selected));
    }
    const double mo = mean_of(oasis_a_last), mr = mean_of(random_a_last);
    const double so = mean_of(oasis_selected), sr = mean_of(random_selected);
    const double parity = std::abs(so - sr) / sr;

    std::vector<double> with_siren, without_siren;
    for (const auto seed : kSeeds) {
        RunSettings rs = duplicate_stream_run(seed);
        with_siren.push_back(run_experiment(rs).a_last);
        rs.selector_cfg.siren.enabled = false;
        without_siren.push_back(run_experiment(rs).a_last);
    }
    const double ms = mean_of(with_siren), mn = mean_of(without_siren);
    const double elapsed = seconds_since(start);

    std::ostringstream ss;
    ss << "A_last oasis=" << mo << " random=" << mr << " (budget parity " << parity * 100.0
       << "%); siren on=" << ms << " off=" << mn << "; in " << elapsed << " s";
    detail = ss.str();
    return mo > mr && parity <= 0.05 && ms >= mn && elapsed < 300.0;
}

bool criterion_diversity(std::string& detail) {
    int wins = 0;
    std::ostringstream ss;
    for (const auto seed : kSeeds) {
        RunSettings rs = clustered_stream_run(seed);
        const RunRecord oasis_rec = run_experiment(rs);
        rs.selector = SelectorKind::kTopK;
        const RunRecord topk_rec = run_experiment(rs);
        const bool win = oasis_rec.density_selected <= topk_rec.density_selected;
        wins += win ? 1 : 0;
        ss << "s" << seed << ": " << oasis_rec.density_selected << " vs "
           << topk_rec.density_selected << (win ? " " : "(FAIL) ");
    }
    ss << "(" << wins << "/3 seeds, bandwidth 2.0)";
    detail = ss.str();
    return wins >= 2;
}

bool criterion_forward_only_cost(std::string& detail) {
    if (g_oasis_default_records.empty()) {
        detail = "selection-quality runs unavailable";
        return false;
    }
    bool ok = true;
    std::ostringstream ss;
    for (const auto& rec : g_oasis_default_records) {
        const double bound =
            rec.realized_ratio * static_cast<double>(rec.counters.forward) * 1.05;
        const bool pass = static_cast<double>(rec.counters.backward) <= bound;
        ok = ok && pass;
        ss << "backward=" << rec.counters.backward << "<=" << bound << (pass ? " " : "(FAIL) ");
    }

    // scoring alone must never tick the backward counter
    CostCounters counters;
    ToyModel m = ToyModel::zeros(4, 8, 0.1);
    Rng rng(8080);
    for (int i = 0; i < 32; ++i) {
        Sample s;
        s.features.assign(8, 0.0);
        for (auto& x : s.features) x = rng.normal();
        s.label = static_cast<int>(rng.uniform_below(4));
        last_layer_gradient(m, s, counters);
        sample_loss(m, s, counters);
    }
    ok = ok && counters.backward == 0;
    ss << "scoring backward=" << counters.backward;
    detail = ss.str();
    return ok;
}

bool criterion_determinism(std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / "oasis_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path config_path = dir / "config.ini";
    {
        std::ofstream cfg(config_path);
        cfg << "[run]\nseed = 42\n\n[stream]\nfeature_dim = 8\nn_classes = 4\nbatch_size = 16\n\n"
               "[task.0]\nn_samples = 800\nclasses = 0, 1\n\n"
               "[task.1]\nn_samples = 400\nclasses = 2, 3\n\n"
               "[selector]\nname = oasis\ntarget_ratio = 0.25\n\n"
               "[model]\nlearning_rate = 0.05\niterations_per_encounter = 0.125\n\n"
               "[metrics]\ntest_samples_per_task = 100\n";
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool ok = true;
    std::ostringstream ss;
    {
        RunCmdOptions opts;
        opts.config_path = config_path.string();
        std::ostringstream out, err;
        opts.out_prefix = (dir / "a").string();
        ok = ok && cmd_run(opts, out, err) == 0;
        opts.out_prefix = (dir / "b").string();
        ok = ok && cmd_run(opts, out, err) == 0;
        const bool summary_same =
            slurp(dir / "a.summary.json") == slurp(dir / "b.summary.json");
        const bool steps_same = slurp(dir / "a.steps.jsonl") == slurp(dir / "b.steps.jsonl");
        ok = ok && summary_same && steps_same;
        ss << "library: summary " << (summary_same ? "identical" : "DIFFERS") << ", steps "
           << (steps_same ? "identical" : "DIFFERS");
    }
    if (!g_cli_path.empty()) {
        const std::string base =
            "\"" + g_cli_path + "\" run --config \"" + config_path.string() + "\"";
        const std::string run1 =
            base + " --out \"" + (dir / "c").string() + "\" > /dev/null 2>&1";
        const std::string run2 =
            base + " --out \"" + (dir / "d").string() + "\" > /dev/null 2>&1";
        ok = ok && std::system(run1.c_str()) == 0 && std::system(run2.c_str()) == 0;
        const bool summary_same =
            slurp(dir / "c.summary.json") == slurp(dir / "d.summary.json");
        const bool steps_same = slurp(dir / "c.steps.jsonl") == slurp(dir / "d.steps.jsonl");
        ok = ok && summary_same && steps_same;
        ss << "; subprocess: summary " << (summary_same ? "identical" : "DIFFERS") << ", steps "
           << (steps_same ? "identical" : "DIFFERS");
    }
    fs::remove_all(dir);
    detail = ss.str();
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--cli") {
            g_cli_path = argv[i + 1];
        }
    }

    std::vector<Criterion> criteria{
        {"threshold reproduction (2.06/1.53/0.89 +-0.02)", criterion_threshold_reproduction},
        {"gate calibration (realized ratio +-10% rel, both modes)", criterion_calibration},
        {"redundancy adjustment matches brute-force oracle (1e-12)",
         criterion_siren_equivalence},
        {"streaming statistics match a from-scratch fold (1e-12 rel)",
         criterion_stats_equivalence},
        {"last-layer gradient matches finite differences (<1e-4)",
         criterion_gradient_correctness},
        {"selection quality: beats random at parity; adjustment helps on duplicates",
         criterion_selection_quality},
        {"diversity: gated set no denser than topk set (>=2/3 seeds)", criterion_diversity},
        {"forward-only selection cost accounting", criterion_forward_only_cost},
        {"byte-identical outputs for identical config and seed", criterion_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool pass = false;
        try {
            pass = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %zu. %s  (%s)\n", pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].name.c_str(), detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    if (failures > 0) {
        std::printf("%d of %zu acceptance criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return 0;
}
