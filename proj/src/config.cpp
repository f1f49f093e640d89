#include "oasis/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace oasis {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct RawConfig {
    // section -> key -> (value, consumed flag)
    std::map<std::string, std::map<std::string, std::pair<std::string, bool>>> sections;
};

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header '" + t + "'");
            }
            section = trim(t.substr(1, t.size() - 2));
            raw.sections[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + t + "'");
        }
        if (section.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key outside of any [section]");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        auto& sec = raw.sections[section];
        if (sec.count(key)) {
            throw ConfigError("config: duplicate key '" + section + "." + key + "'");
        }
        sec[key] = {value, false};
    }
    return raw;
}

class SectionReader {
  public:
    SectionReader(RawConfig& raw, std::string name) : raw_(raw), name_(std::move(name)) {}

    bool exists() const { return raw_.sections.count(name_) > 0; }

    std::string qualified(const std::string& key) const { return name_ + "." + key; }

    const std::string* find(const std::string& key) {
        auto sec = raw_.sections.find(name_);
        if (sec == raw_.sections.end()) return nullptr;
        auto it = sec->second.find(key);
        if (it == sec->second.end()) return nullptr;
        it->second.second = true;
        return &it->second.first;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        const std::string* v = find(key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            const std::int64_t r = std::stoll(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return r;
        } catch (...) {
            throw ConfigError("config: " + qualified(key) + " expects an integer, got '" + *v +
                              "'");
        }
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
        const std::string* v = find(key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            const std::uint64_t r = std::stoull(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return r;
        } catch (...) {
            throw ConfigError("config: " + qualified(key) +
                              " expects a non-negative integer, got '" + *v + "'");
        }
    }

    double get_double(const std::string& key, double fallback) {
        const std::string* v = find(key);
        if (!v) return fallback;
        return parse_double(key, *v);
    }

    std::optional<double> get_optional_double(const std::string& key) {
        const std::string* v = find(key);
        if (!v) return std::nullopt;
        return parse_double(key, *v);
    }

    bool get_bool(const std::string& key, bool fallback) {
        const std::string* v = find(key);
        if (!v) return fallback;
        if (*v == "true") return true;
        if (*v == "false") return false;
        throw ConfigError("config: " + qualified(key) + " expects true or false, got '" + *v +
                          "'");
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        const std::string* v = find(key);
        return v ? *v : fallback;
    }

    std::vector<int> get_int_list(const std::string& key) {
        const std::string* v = find(key);
        if (!v) return {};
        std::vector<int> out;
        std::istringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string it = trim(item);
            try {
                std::size_t pos = 0;
                out.push_back(std::stoi(it, &pos));
                if (pos != it.size()) throw std::invalid_argument("");
            } catch (...) {
                throw ConfigError("config: " + qualified(key) +
                                  " expects a comma-separated integer list, got '" + *v + "'");
            }
        }
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) {
        const std::string* v = find(key);
        if (!v) return {};
        std::vector<double> out;
        std::istringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            out.push_back(parse_double(key, trim(item)));
        }
        return out;
    }

  private:
    double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double r = std::stod(v, &pos);
            if (pos != v.size() || !std::isfinite(r)) throw std::invalid_argument("");
            return r;
        } catch (...) {
            throw ConfigError("config: " + qualified(key) + " expects a finite number, got '" +
                              v + "'");
        }
    }

    RawConfig& raw_;
    std::string name_;
};

void reject_unconsumed(const RawConfig& raw, const std::set<std::string>& known_sections) {
    for (const auto& [section, keys] : raw.sections) {
        const bool task_section = section.rfind("task.", 0) == 0;
        if (!task_section && !known_sections.count(section)) {
            throw ConfigError("config: unknown section [" + section + "]");
        }
        for (const auto& [key, entry] : keys) {
            if (!entry.second) {
                throw ConfigError("config: unknown key '" + section + "." + key + "'");
            }
        }
    }
}

GatingMode parse_gating_mode(const std::string& s) {
    if (s == "per_sample_bernoulli") return GatingMode::kPerSampleBernoulli;
    if (s == "shared_threshold") return GatingMode::kSharedThreshold;
    throw ConfigError(
        "config: selector.gating_mode must be per_sample_bernoulli or shared_threshold, got '" +
        s + "'");
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
    RawConfig raw = tokenize(text);
    RunConfig cfg;
    RunSettings& s = cfg.settings;

    SectionReader run(raw, "run");
    s.seed = run.get_uint("seed", 0);

    SectionReader stream(raw, "stream");
    s.stream.feature_dim = static_cast<int>(stream.get_int("feature_dim", 8));
    s.stream.n_classes = static_cast<int>(stream.get_int("n_classes", 4));
    s.stream.batch_size = static_cast<int>(stream.get_int("batch_size", 16));
    s.stream.shuffle_within_task = stream.get_bool("shuffle_within_task", true);
    s.stream.auto_center_spread = stream.get_double("center_spread", 4.0);
    if (!(s.stream.auto_center_spread > 0.0)) {
        throw ConfigError("config: stream.center_spread must be > 0");
    }

    // Tasks come from consecutively numbered [task.N] sections.
    for (int i = 0;; ++i) {
        SectionReader task(raw, "task." + std::to_string(i));
        if (!task.exists()) {
            if (raw.sections.count("task." + std::to_string(i + 1))) {
                throw ConfigError("config: task sections must be numbered consecutively; "
                                  "[task." +
                                  std::to_string(i) + "] is missing");
            }
            break;
        }
        TaskSpec t;
        t.task_id = i;
        t.n_samples = task.get_int("n_samples", 0);
        if (t.n_samples < 1) {
            throw ConfigError("config: " + task.qualified("n_samples") + " must be >= 1");
        }
        t.class_ids = task.get_int_list("classes");
        if (t.class_ids.empty()) {
            throw ConfigError("config: " + task.qualified("classes") +
                              " must list at least one class");
        }
        t.feature_scale = task.get_double("feature_scale", 1.0);
        if (!(t.feature_scale >= 0.0)) {
            throw ConfigError("config: " + task.qualified("feature_scale") + " must be >= 0");
        }
        if (auto rec = task.get_optional_double("recurrence")) {
            if (!(*rec >= 0.0 && *rec <= 1.0)) {
                throw ConfigError("config: " + task.qualified("recurrence") +
                                  " must be in [0, 1]");
            }
            t.recurrence = rec;
        }
        for (int c : t.class_ids) {
            const auto center = task.get_double_list("center." + std::to_string(c));
            if (!center.empty()) {
                if (center.size() != static_cast<std::size_t>(s.stream.feature_dim)) {
                    throw ConfigError("config: " + task.qualified("center." + std::to_string(c)) +
                                      " must have feature_dim entries");
                }
                t.class_centers[c] = center;
            }
        }
        s.stream.tasks.push_back(std::move(t));
    }
    if (s.stream.tasks.empty()) {
        throw ConfigError("config: at least one [task.N] section is required");
    }

    SectionReader selector(raw, "selector");
    const std::string name = selector.get_string("name", "oasis");
    const auto kind = selector_kind_from_name(name);
    if (!kind) {
        throw ConfigError("config: selector.name must be one of oasis, random, topk, "
                          "greedy_orthogonal, loss_prune, full; got '" +
                          name + "'");
    }
    s.selector = *kind;
    s.selector_cfg.target_ratio = selector.get_double("target_ratio", 0.25);
    if (!(s.selector_cfg.target_ratio > 0.0 && s.selector_cfg.target_ratio < 1.0)) {
        throw ConfigError("config: selector.target_ratio must be in (0, 1), got " +
                          std::to_string(s.selector_cfg.target_ratio));
    }
    s.selector_cfg.threshold = selector.get_optional_double("threshold");
    s.selector_cfg.alpha = selector.get_double("alpha", 0.9);
    if (!(s.selector_cfg.alpha > 0.0 && s.selector_cfg.alpha <= 1.0)) {
        throw ConfigError("config: selector.alpha must be in (0, 1]");
    }
    s.selector_cfg.gating_mode =
        parse_gating_mode(selector.get_string("gating_mode", "per_sample_bernoulli"));
    s.selector_cfg.normalize_by_variance = selector.get_bool("normalize_by_variance", false);
    if (auto gain = selector.get_optional_double("ratio_controller_gain")) {
        if (!(*gain > 0.0)) {
            throw ConfigError("config: selector.ratio_controller_gain must be > 0");
        }
        s.selector_cfg.ratio_controller_gain = gain;
    }
    s.selector_cfg.ema_uses_adjusted = selector.get_bool("ema_uses_adjusted", false);
    s.selector_cfg.freeze_stats = selector.get_bool("freeze_stats", false);
    s.selector_cfg.frozen_mu = selector.get_double("init_mu", 0.0);
    s.selector_cfg.frozen_var = selector.get_double("init_var", 1.0);
    if (s.selector_cfg.freeze_stats && !(s.selector_cfg.frozen_var >= 0.0)) {
        throw ConfigError("config: selector.init_var must be >= 0");
    }
    s.prune_prob = selector.get_double("prune_prob", 0.5);
    if (!(s.prune_prob >= 0.0 && s.prune_prob <= 1.0)) {
        throw ConfigError("config: selector.prune_prob must be in [0, 1]");
    }

    SectionReader siren(raw, "siren");
    s.selector_cfg.siren.enabled = siren.get_bool("enabled", true);
    s.selector_cfg.siren.max_order = static_cast<int>(siren.get_int("max_order", 3));
    if (s.selector_cfg.siren.max_order < 1) {
        throw ConfigError("config: siren.max_order must be >= 1");
    }
    s.selector_cfg.siren.exact_mode = siren.get_bool("exact_mode", false);

    SectionReader model(raw, "model");
    s.model.learning_rate = model.get_double("learning_rate", 0.05);
    if (!(s.model.learning_rate > 0.0)) {
        throw ConfigError("config: model.learning_rate must be > 0");
    }
    s.model.iterations_per_encounter = model.get_double("iterations_per_encounter", 0.125);
    if (!(s.model.iterations_per_encounter > 0.0 && s.model.iterations_per_encounter <= 64.0)) {
        throw ConfigError("config: model.iterations_per_encounter must be in (0, 64]");
    }
    s.model.memory_once_only = model.get_bool("memory_once_only", false);

    SectionReader metrics(raw, "metrics");
    s.metrics.test_samples_per_task =
        static_cast<int>(metrics.get_int("test_samples_per_task", 200));
    if (s.metrics.test_samples_per_task < 1) {
        throw ConfigError("config: metrics.test_samples_per_task must be >= 1");
    }
    if (auto bw = metrics.get_optional_double("density_bandwidth")) {
        if (!(*bw > 0.0)) {
            throw ConfigError("config: metrics.density_bandwidth must be > 0");
        }
        s.metrics.density_bandwidth = bw;
    }
    s.metrics.track_accuracy_every =
        static_cast<int>(metrics.get_int("track_accuracy_every", 0));
    if (s.metrics.track_accuracy_every < 0) {
        throw ConfigError("config: metrics.track_accuracy_every must be >= 0");
    }

    SectionReader output(raw, "output");
    cfg.summary_path = output.get_string("summary", "");
    cfg.steps_path = output.get_string("steps", "");

    reject_unconsumed(raw, {"run", "stream", "selector", "siren", "model", "metrics", "output"});
    return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot read file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str());
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string settings_to_config_text(const RunSettings& s) {
    std::ostringstream out;
    out << "[run]\n";
    out << "seed = " << s.seed << "\n\n";

    out << "[stream]\n";
    out << "feature_dim = " << s.stream.feature_dim << "\n";
    out << "n_classes = " << s.stream.n_classes << "\n";
    out << "batch_size = " << s.stream.batch_size << "\n";
    out << "shuffle_within_task = " << (s.stream.shuffle_within_task ? "true" : "false") << "\n";
    out << "center_spread = " << fmt_double(s.stream.auto_center_spread) << "\n\n";

    for (const auto& t : s.stream.tasks) {
        out << "[task." << t.task_id << "]\n";
        out << "n_samples = " << t.n_samples << "\n";
        out << "classes = ";
        for (std::size_t i = 0; i < t.class_ids.size(); ++i) {
            out << (i ? ", " : "") << t.class_ids[i];
        }
        out << "\n";
        out << "feature_scale = " << fmt_double(t.feature_scale) << "\n";
        if (t.recurrence) {
            out << "recurrence = " << fmt_double(*t.recurrence) << "\n";
        }
        for (const auto& [c, center] : t.class_centers) {
            out << "center." << c << " = ";
            for (std::size_t i = 0; i < center.size(); ++i) {
                out << (i ? ", " : "") << fmt_double(center[i]);
            }
            out << "\n";
        }
        out << "\n";
    }

    out << "[selector]\n";
    out << "name = " << selector_kind_name(s.selector) << "\n";
    out << "target_ratio = " << fmt_double(s.selector_cfg.target_ratio) << "\n";
    if (s.selector_cfg.threshold) {
        out << "threshold = " << fmt_double(*s.selector_cfg.threshold) << "\n";
    }
    out << "alpha = " << fmt_double(s.selector_cfg.alpha) << "\n";
    out << "gating_mode = "
        << (s.selector_cfg.gating_mode == GatingMode::kPerSampleBernoulli ? "per_sample_bernoulli"
                                                                          : "shared_threshold")
        << "\n";
    out << "normalize_by_variance = " << (s.selector_cfg.normalize_by_variance ? "true" : "false")
        << "\n";
    if (s.selector_cfg.ratio_controller_gain) {
        out << "ratio_controller_gain = " << fmt_double(*s.selector_cfg.ratio_controller_gain)
            << "\n";
    }
    out << "ema_uses_adjusted = " << (s.selector_cfg.ema_uses_adjusted ? "true" : "false") << "\n";
    out << "freeze_stats = " << (s.selector_cfg.freeze_stats ? "true" : "false") << "\n";
    out << "init_mu = " << fmt_double(s.selector_cfg.frozen_mu) << "\n";
    out << "init_var = " << fmt_double(s.selector_cfg.frozen_var) << "\n";
    out << "prune_prob = " << fmt_double(s.prune_prob) << "\n\n";

    out << "[siren]\n";
    out << "enabled = " << (s.selector_cfg.siren.enabled ? "true" : "false") << "\n";
    out << "max_order = " << s.selector_cfg.siren.max_order << "\n";
    out << "exact_mode = " << (s.selector_cfg.siren.exact_mode ? "true" : "false") << "\n\n";

    out << "[model]\n";
    out << "learning_rate = " << fmt_double(s.model.learning_rate) << "\n";
    out << "iterations_per_encounter = " << fmt_double(s.model.iterations_per_encounter) << "\n";
    out << "memory_once_only = " << (s.model.memory_once_only ? "true" : "false") << "\n\n";

    out << "[metrics]\n";
    out << "test_samples_per_task = " << s.metrics.test_samples_per_task << "\n";
    if (s.metrics.density_bandwidth) {
        out << "density_bandwidth = " << fmt_double(*s.metrics.density_bandwidth) << "\n";
    }
    out << "track_accuracy_every = " << s.metrics.track_accuracy_every << "\n";
    return out.str();
}

}  // namespace oasis
