// Command-line front end for the streaming sample-selection engine:
//   run             one experiment from a config file
//   sweep           selector x ratio x seed grid
//   report          aggregate a directory of run summaries
//   solve-threshold gate threshold for a target selection ratio

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oasis/cli_commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"oasis: adaptive streaming sample selection on a synthetic continual stream"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute one experiment");
    std::string run_config;
    std::uint64_t run_seed = 0;
    bool run_seed_set = false;
    std::string run_out;
    run->add_option("--config", run_config, "configuration file")->required();
    run->add_option("--seed", run_seed, "root seed override")->each([&](const std::string&) {
        run_seed_set = true;
    });
    run->add_option("--out", run_out, "output path prefix");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a selector x ratio x seed grid");
    std::string sweep_config;
    std::vector<std::string> sweep_selectors;
    std::vector<std::string> sweep_ratios;
    std::vector<std::uint64_t> sweep_seeds;
    std::string sweep_out = "sweep_out";
    int sweep_jobs = 1;
    sweep->add_option("--config", sweep_config, "base configuration file")->required();
    sweep->add_option("--selectors", sweep_selectors, "selector names")->delimiter(',');
    sweep->add_option("--ratios", sweep_ratios, "target selection ratios")->delimiter(',');
    sweep->add_option("--seeds", sweep_seeds, "root seeds")->delimiter(',');
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->add_option("--jobs", sweep_jobs, "parallel runs");

    // report
    auto* report = app.add_subcommand("report", "aggregate run summaries in a directory");
    std::string report_dir;
    report->add_option("dir", report_dir, "directory of *.summary.json files")->required();

    // solve-threshold
    auto* solve = app.add_subcommand("solve-threshold", "gate threshold for a target ratio");
    double solve_ratio = 0.25;
    solve->add_option("--ratio", solve_ratio, "target selection ratio in (0, 1)")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        oasis::RunCmdOptions opts;
        opts.config_path = run_config;
        if (run_seed_set) opts.seed = run_seed;
        opts.out_prefix = run_out;
        return oasis::cmd_run(opts, std::cout, std::cerr);
    }
    if (sweep->parsed()) {
        oasis::SweepCmdOptions opts;
        opts.config_path = sweep_config;
        opts.selectors = sweep_selectors;
        opts.ratios = sweep_ratios;
        opts.seeds = sweep_seeds;
        opts.out_dir = sweep_out;
        opts.jobs = sweep_jobs;
        return oasis::cmd_sweep(opts, std::cout, std::cerr);
    }
    if (report->parsed()) {
        return oasis::cmd_report(report_dir, std::cout, std::cerr);
    }
    if (solve->parsed()) {
        return oasis::cmd_solve_threshold(solve_ratio, std::cout, std::cerr);
    }
    return 1;
}
