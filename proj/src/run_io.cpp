#include "oasis/run_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace oasis {

using nlohmann::ordered_json;

namespace {

// NaN is not representable in JSON; nlohmann serializes it as null already,
// but going through an explicit helper keeps reads symmetric.
ordered_json num_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double null_or_num(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

}  // namespace

ordered_json settings_to_json(const RunSettings& s) {
    ordered_json j;
    j["seed"] = s.seed;

    ordered_json stream;
    stream["feature_dim"] = s.stream.feature_dim;
    stream["n_classes"] = s.stream.n_classes;
    stream["batch_size"] = s.stream.batch_size;
    stream["shuffle_within_task"] = s.stream.shuffle_within_task;
    stream["center_spread"] = s.stream.auto_center_spread;
    ordered_json tasks = ordered_json::array();
    for (const auto& t : s.stream.tasks) {
        ordered_json task;
        task["task_id"] = t.task_id;
        task["n_samples"] = t.n_samples;
        task["classes"] = t.class_ids;
        task["feature_scale"] = t.feature_scale;
        if (t.recurrence) task["recurrence"] = *t.recurrence;
        if (!t.class_centers.empty()) {
            ordered_json centers;
            for (const auto& [c, center] : t.class_centers) {
                centers[std::to_string(c)] = center;
            }
            task["centers"] = centers;
        }
        tasks.push_back(task);
    }
    stream["tasks"] = tasks;
    j["stream"] = stream;

    ordered_json selector;
    selector["name"] = selector_kind_name(s.selector);
    selector["target_ratio"] = s.selector_cfg.target_ratio;
    if (s.selector_cfg.threshold) selector["threshold"] = *s.selector_cfg.threshold;
    selector["alpha"] = s.selector_cfg.alpha;
    selector["gating_mode"] = s.selector_cfg.gating_mode == GatingMode::kPerSampleBernoulli
                                  ? "per_sample_bernoulli"
                                  : "shared_threshold";
    selector["normalize_by_variance"] = s.selector_cfg.normalize_by_variance;
    if (s.selector_cfg.ratio_controller_gain) {
        selector["ratio_controller_gain"] = *s.selector_cfg.ratio_controller_gain;
    }
    selector["ema_uses_adjusted"] = s.selector_cfg.ema_uses_adjusted;
    selector["freeze_stats"] = s.selector_cfg.freeze_stats;
    if (s.selector_cfg.freeze_stats) {
        selector["init_mu"] = s.selector_cfg.frozen_mu;
        selector["init_var"] = s.selector_cfg.frozen_var;
    }
    if (s.selector == SelectorKind::kLossPrune) selector["prune_prob"] = s.prune_prob;
    ordered_json siren;
    siren["enabled"] = s.selector_cfg.siren.enabled;
    siren["max_order"] = s.selector_cfg.siren.max_order;
    siren["exact_mode"] = s.selector_cfg.siren.exact_mode;
    selector["siren"] = siren;
    j["selector"] = selector;

    ordered_json model;
    model["learning_rate"] = s.model.learning_rate;
    model["iterations_per_encounter"] = s.model.iterations_per_encounter;
    model["memory_once_only"] = s.model.memory_once_only;
    j["model"] = model;

    ordered_json metrics;
    metrics["test_samples_per_task"] = s.metrics.test_samples_per_task;
    if (s.metrics.density_bandwidth) metrics["density_bandwidth"] = *s.metrics.density_bandwidth;
    metrics["track_accuracy_every"] = s.metrics.track_accuracy_every;
    j["metrics"] = metrics;
    return j;
}

ordered_json record_to_summary_json(const RunRecord& r) {
    ordered_json j;
    j["schema"] = "oasis-run-summary-v1";
    j["seed"] = r.seed;
    j["selector"] = r.selector_name;
    j["target_ratio"] = r.target_ratio;
    j["threshold"] = num_or_null(r.threshold);
    j["a_avg"] = r.a_avg;
    j["a_last"] = r.a_last;
    j["realized_ratio"] = r.realized_ratio;
    j["total_presented"] = r.total_presented;
    j["total_selected"] = r.total_selected;
    j["n_iterations"] = r.n_iterations;
    j["density_selected"] = num_or_null(r.density_selected);
    j["density_bandwidth"] = num_or_null(r.density_bandwidth);
    ordered_json counters;
    counters["forward"] = r.counters.forward;
    counters["last_layer_grad"] = r.counters.last_layer_grad;
    counters["backward"] = r.counters.backward;
    j["counters"] = counters;
    if (r.informativeness_normality) {
        ordered_json n;
        n["skewness"] = r.informativeness_normality->skewness;
        n["excess_kurtosis"] = r.informativeness_normality->excess_kurtosis;
        n["qq_max_abs_deviation"] = r.informativeness_normality->qq_max_abs_deviation;
        j["informativeness_normality"] = n;
    } else {
        j["informativeness_normality"] = nullptr;
    }
    j["accuracy_matrix"] = r.accuracy_matrix;
    j["boundary_timesteps"] = r.boundary_timesteps;
    ordered_json tracked = ordered_json::array();
    for (const auto& [t, acc] : r.tracked_accuracy) {
        tracked.push_back(ordered_json::array({t, acc}));
    }
    j["tracked_accuracy"] = tracked;
    if (!r.config_json.empty()) {
        j["config"] = ordered_json::parse(r.config_json);
    } else {
        j["config"] = nullptr;
    }
    return j;
}

void write_summary(const RunRecord& record, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << record_to_summary_json(record).dump(2) << "\n";
}

void write_steps(const RunRecord& record, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    for (const auto& s : record.steps) {
        ordered_json j;
        j["kind"] = "step";
        j["t"] = s.timestep;
        j["task"] = s.task_id;
        j["n"] = s.n_presented;
        j["selected"] = s.selected_ids;
        j["mean_informativeness"] = num_or_null(s.batch_mean_informativeness);
        j["mu"] = num_or_null(s.mu);
        j["var"] = num_or_null(s.var);
        j["threshold"] = num_or_null(s.threshold);
        j["realized_ratio"] = s.realized_ratio;
        out << j.dump() << "\n";
    }
    for (std::size_t i = 0; i < record.accuracy_matrix.size(); ++i) {
        ordered_json j;
        j["kind"] = "eval";
        j["t"] = i < record.boundary_timesteps.size() ? record.boundary_timesteps[i] : -1;
        j["boundary"] = i;
        j["task_accuracies"] = record.accuracy_matrix[i];
        out << j.dump() << "\n";
    }
    for (const auto& [t, acc] : record.tracked_accuracy) {
        ordered_json j;
        j["kind"] = "track";
        j["t"] = t;
        j["avg_accuracy"] = acc;
        out << j.dump() << "\n";
    }
}

SummaryRow read_summary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed JSON in '" + path + "': " + e.what());
    }
    if (!j.is_object() || j.value("schema", "") != "oasis-run-summary-v1") {
        throw std::runtime_error("'" + path + "' is not a run summary");
    }
    try {
        SummaryRow row;
        row.selector = j.at("selector").get<std::string>();
        row.target_ratio = j.at("target_ratio").get<double>();
        row.threshold = null_or_num(j.at("threshold"));
        row.seed = j.at("seed").get<std::uint64_t>();
        row.a_avg = j.at("a_avg").get<double>();
        row.a_last = j.at("a_last").get<double>();
        row.realized_ratio = j.at("realized_ratio").get<double>();
        row.density = null_or_num(j.at("density_selected"));
        row.forward = j.at("counters").at("forward").get<std::int64_t>();
        row.last_layer_grad = j.at("counters").at("last_layer_grad").get<std::int64_t>();
        row.backward = j.at("counters").at("backward").get<std::int64_t>();
        return row;
    } catch (const std::exception& e) {
        throw std::runtime_error("missing field in '" + path + "': " + e.what());
    }
}

}  // namespace oasis
