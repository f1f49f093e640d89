#include "oasis/cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "oasis/config.hpp"
#include "oasis/run_io.hpp"
#include "oasis/sim.hpp"
#include "oasis/stats.hpp"

namespace oasis {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

RunRecord execute_run(RunSettings settings) {
    RunRecord record = run_experiment(settings);
    record.config_json = settings_to_json(settings).dump();
    return record;
}

struct CellStats {
    std::vector<double> a_avg, a_last, realized, density, threshold;
    std::vector<double> forward, last_layer_grad, backward;
};

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void write_aggregate_table(const std::map<std::pair<std::string, double>, CellStats>& cells,
                           const std::string& csv_path, std::ostream& out) {
    std::ostringstream csv;
    csv << "selector,target_ratio,n_runs,a_avg_mean,a_avg_std,a_last_mean,a_last_std,"
           "realized_ratio_mean,density_mean,threshold_mean,forward_mean,"
           "last_layer_grad_mean,backward_mean\n";
    out << "selector            ratio    runs  a_avg            a_last           realized  "
           "density   threshold  forward    lastgrad   backward\n";
    for (const auto& [key, cell] : cells) {
        const auto& [selector, ratio] = key;
        csv << selector << "," << fmt(ratio, "%.10g") << "," << cell.a_avg.size() << ","
            << fmt(mean(cell.a_avg), "%.10g") << "," << fmt(sample_std(cell.a_avg), "%.10g") << ","
            << fmt(mean(cell.a_last), "%.10g") << "," << fmt(sample_std(cell.a_last), "%.10g")
            << "," << fmt(mean(cell.realized), "%.10g") << "," << fmt(mean(cell.density), "%.10g")
            << "," << fmt(mean(cell.threshold), "%.10g") << "," << fmt(mean(cell.forward), "%.10g")
            << "," << fmt(mean(cell.last_layer_grad), "%.10g") << ","
            << fmt(mean(cell.backward), "%.10g") << "\n";

        char line[320];
        std::snprintf(line, sizeof(line),
                      "%-19s %-8s %-5zu %7.4f +- %6.4f %7.4f +- %6.4f %-9s %-9s %-10s %-10s %-10s %s\n",
                      selector.c_str(), fmt(ratio, "%.4g").c_str(), cell.a_avg.size(),
                      mean(cell.a_avg), sample_std(cell.a_avg), mean(cell.a_last),
                      sample_std(cell.a_last), fmt(mean(cell.realized), "%.4f").c_str(),
                      fmt(mean(cell.density), "%.4f").c_str(),
                      fmt(mean(cell.threshold), "%.4f").c_str(),
                      fmt(mean(cell.forward), "%.0f").c_str(),
                      fmt(mean(cell.last_layer_grad), "%.0f").c_str(),
                      fmt(mean(cell.backward), "%.0f").c_str());
        out << line;
    }
    if (!csv_path.empty()) {
        std::ofstream f(csv_path, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot open '" + csv_path + "' for writing");
        }
        f << csv.str();
    }
}

}  // namespace

int cmd_run(const RunCmdOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        RunConfig cfg = parse_run_config_file(opts.config_path);
        if (opts.seed) {
            cfg.settings.seed = *opts.seed;
        }
        std::string summary_path = cfg.summary_path;
        std::string steps_path = cfg.steps_path;
        if (!opts.out_prefix.empty()) {
            summary_path = opts.out_prefix + ".summary.json";
            steps_path = opts.out_prefix + ".steps.jsonl";
        }
        if (summary_path.empty()) summary_path = "run.summary.json";
        if (steps_path.empty()) steps_path = "run.steps.jsonl";

        const RunRecord record = execute_run(cfg.settings);
        write_summary(record, summary_path);
        write_steps(record, steps_path);
        out << "run: selector=" << record.selector_name << " seed=" << record.seed
            << " a_avg=" << fmt(record.a_avg, "%.4f") << " a_last=" << fmt(record.a_last, "%.4f")
            << " realized_ratio=" << fmt(record.realized_ratio, "%.4f") << "\n"
            << "wrote " << summary_path << " and " << steps_path << "\n";
        return 0;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_sweep(const SweepCmdOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const RunConfig base = parse_run_config_file(opts.config_path);

        std::vector<std::string> selectors = opts.selectors;
        if (selectors.empty()) selectors = {selector_kind_name(base.settings.selector)};
        std::vector<std::string> ratios = opts.ratios;
        if (ratios.empty()) ratios = {fmt(base.settings.selector_cfg.target_ratio, "%.10g")};
        std::vector<std::uint64_t> seeds = opts.seeds;
        if (seeds.empty()) seeds = {base.settings.seed};
        if (opts.jobs < 1) {
            err << "error: --jobs must be >= 1\n";
            return 2;
        }

        struct Job {
            RunSettings settings;
            std::string name;
        };
        std::vector<Job> jobs;
        for (const auto& sel_name : selectors) {
            const auto kind = selector_kind_from_name(sel_name);
            if (!kind) {
                err << "error: unknown selector '" << sel_name << "'\n";
                return 2;
            }
            for (const auto& ratio_tok : ratios) {
                double ratio;
                try {
                    std::size_t pos = 0;
                    ratio = std::stod(ratio_tok, &pos);
                    if (pos != ratio_tok.size()) throw std::invalid_argument("");
                } catch (...) {
                    err << "error: ratio '" << ratio_tok << "' is not a number\n";
                    return 2;
                }
                if (!(ratio > 0.0 && ratio < 1.0)) {
                    err << "error: ratio " << ratio_tok << " must be in (0, 1)\n";
                    return 2;
                }
                for (std::uint64_t seed : seeds) {
                    Job job;
                    job.settings = base.settings;
                    job.settings.selector = *kind;
                    job.settings.selector_cfg.target_ratio = ratio;
                    job.settings.selector_cfg.threshold.reset();  // re-solve per ratio
                    job.settings.seed = seed;
                    job.name = sel_name + "_r" + ratio_tok + "_s" + std::to_string(seed);
                    jobs.push_back(std::move(job));
                }
            }
        }

        fs::create_directories(opts.out_dir);

        std::vector<RunRecord> records(jobs.size());
        std::vector<std::string> failures(jobs.size());
        std::mutex err_mutex;
        std::size_t next = 0;
        std::mutex next_mutex;
        auto worker = [&]() {
            while (true) {
                std::size_t idx;
                {
                    std::lock_guard<std::mutex> lock(next_mutex);
                    if (next >= jobs.size()) return;
                    idx = next++;
                }
                try {
                    RunRecord record = execute_run(jobs[idx].settings);
                    const std::string prefix =
                        (fs::path(opts.out_dir) / jobs[idx].name).string();
                    write_summary(record, prefix + ".summary.json");
                    write_steps(record, prefix + ".steps.jsonl");
                    records[idx] = std::move(record);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    failures[idx] = e.what();
                }
            }
        };
        const int n_workers = std::min<int>(opts.jobs, static_cast<int>(jobs.size()));
        std::vector<std::thread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();

        bool any_failed = false;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (!failures[i].empty()) {
                err << "error: run " << jobs[i].name << ": " << failures[i] << "\n";
                any_failed = true;
            }
        }

        std::map<std::pair<std::string, double>, CellStats> cells;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (!failures[i].empty()) continue;
            const RunRecord& r = records[i];
            auto& cell = cells[{r.selector_name, r.target_ratio}];
            cell.a_avg.push_back(r.a_avg);
            cell.a_last.push_back(r.a_last);
            cell.realized.push_back(r.realized_ratio);
            if (!std::isnan(r.density_selected)) cell.density.push_back(r.density_selected);
            if (!std::isnan(r.threshold)) cell.threshold.push_back(r.threshold);
            cell.forward.push_back(static_cast<double>(r.counters.forward));
            cell.last_layer_grad.push_back(static_cast<double>(r.counters.last_layer_grad));
            cell.backward.push_back(static_cast<double>(r.counters.backward));
        }
        write_aggregate_table(cells, (fs::path(opts.out_dir) / "sweep_summary.csv").string(),
                              out);
        out << "wrote " << (fs::path(opts.out_dir) / "sweep_summary.csv").string() << "\n";
        return any_failed ? 1 : 0;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_report(const std::string& results_dir, std::ostream& out, std::ostream& err) {
    try {
        if (!fs::is_directory(results_dir)) {
            err << "error: '" << results_dir << "' is not a directory\n";
            return 2;
        }
        std::vector<std::string> paths;
        for (const auto& entry : fs::directory_iterator(results_dir)) {
            if (!entry.is_regular_file()) continue;
            const std::string name = entry.path().filename().string();
            if (name.size() > 13 && name.substr(name.size() - 13) == ".summary.json") {
                paths.push_back(entry.path().string());
            }
        }
        std::sort(paths.begin(), paths.end());

        std::map<std::pair<std::string, double>, CellStats> cells;
        std::size_t valid = 0;
        for (const auto& path : paths) {
            try {
                const SummaryRow row = read_summary_file(path);
                auto& cell = cells[{row.selector, row.target_ratio}];
                cell.a_avg.push_back(row.a_avg);
                cell.a_last.push_back(row.a_last);
                cell.realized.push_back(row.realized_ratio);
                if (!std::isnan(row.density)) cell.density.push_back(row.density);
                if (!std::isnan(row.threshold)) cell.threshold.push_back(row.threshold);
                cell.forward.push_back(static_cast<double>(row.forward));
                cell.last_layer_grad.push_back(static_cast<double>(row.last_layer_grad));
                cell.backward.push_back(static_cast<double>(row.backward));
                ++valid;
            } catch (const std::exception& e) {
                err << "skipping: " << e.what() << "\n";
            }
        }
        if (valid == 0) {
            err << "error: no valid run summaries in '" << results_dir << "'\n";
            return 1;
        }
        write_aggregate_table(cells, (fs::path(results_dir) / "report_summary.csv").string(),
                              out);
        out << valid << " run(s) aggregated; wrote "
            << (fs::path(results_dir) / "report_summary.csv").string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_solve_threshold(double target_ratio, std::ostream& out, std::ostream& err) {
    try {
        const double threshold = solve_threshold(target_ratio);
        out << fmt(threshold, "%.6f") << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace oasis
