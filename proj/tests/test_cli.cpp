#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oasis/cli_commands.hpp"
#include "oasis/config.hpp"
#include "oasis/run_io.hpp"

using namespace oasis;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"(
[run]
seed = 42

[stream]
feature_dim = 4
n_classes = 4
batch_size = 8

[task.0]
n_samples = 400
classes = 0, 1

[task.1]
n_samples = 200
classes = 2, 3

[selector]
name = oasis
target_ratio = 0.25

[model]
learning_rate = 0.2
iterations_per_encounter = 0.125

[metrics]
test_samples_per_task = 50
)";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("oasis_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string write_config(const TempDir& dir, const std::string& text) {
    const auto p = dir.path / "config.ini";
    std::ofstream out(p);
    out << text;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cmd_run writes a parsable summary and step log") {
    TempDir dir("run");
    RunCmdOptions opts;
    opts.config_path = write_config(dir, kConfig);
    opts.out_prefix = (dir.path / "demo").string();
    std::ostringstream out, err;
    REQUIRE(cmd_run(opts, out, err) == 0);
    CHECK(err.str().empty());

    const auto summary_path = dir.path / "demo.summary.json";
    const auto steps_path = dir.path / "demo.steps.jsonl";
    REQUIRE(fs::exists(summary_path));
    REQUIRE(fs::exists(steps_path));

    const auto j = nlohmann::json::parse(slurp(summary_path));
    CHECK(j["schema"] == "oasis-run-summary-v1");
    CHECK(j["seed"] == 42);
    CHECK(j["selector"] == "oasis");
    CHECK(j["config"].is_object());
    CHECK(j["config"]["selector"]["target_ratio"] == 0.25);

    // every step line parses on its own
    std::ifstream steps(steps_path);
    std::string line;
    int n_lines = 0;
    while (std::getline(steps, line)) {
        const auto rec = nlohmann::json::parse(line);
        CHECK(rec.contains("kind"));
        ++n_lines;
    }
    CHECK(n_lines > 0);
}

TEST_CASE("cmd_run rejects an invalid ratio with a named field") {
    TempDir dir("badratio");
    std::string text = kConfig;
    text.replace(text.find("target_ratio = 0.25"), 19, "target_ratio = 1.5 ");
    RunCmdOptions opts;
    opts.config_path = write_config(dir, text);
    opts.out_prefix = (dir.path / "x").string();
    std::ostringstream out, err;
    CHECK(cmd_run(opts, out, err) != 0);
    CHECK(err.str().find("target_ratio") != std::string::npos);
    CHECK(err.str().find("(0, 1)") != std::string::npos);
}

TEST_CASE("cmd_run on a missing config file fails with a distinct message") {
    RunCmdOptions opts;
    opts.config_path = "/nonexistent.ini";
    std::ostringstream out, err;
    CHECK(cmd_run(opts, out, err) != 0);
    CHECK(err.str().find("cannot read") != std::string::npos);
}

TEST_CASE("cmd_run is byte-identical across repeated executions") {
    TempDir dir("determinism");
    RunCmdOptions opts;
    opts.config_path = write_config(dir, kConfig);
    std::ostringstream out, err;

    opts.out_prefix = (dir.path / "a").string();
    REQUIRE(cmd_run(opts, out, err) == 0);
    opts.out_prefix = (dir.path / "b").string();
    REQUIRE(cmd_run(opts, out, err) == 0);

    CHECK(slurp(dir.path / "a.summary.json") == slurp(dir.path / "b.summary.json"));
    CHECK(slurp(dir.path / "a.steps.jsonl") == slurp(dir.path / "b.steps.jsonl"));
}

TEST_CASE("seed override changes the outputs") {
    TempDir dir("seedover");
    RunCmdOptions opts;
    opts.config_path = write_config(dir, kConfig);
    std::ostringstream out, err;
    opts.out_prefix = (dir.path / "a").string();
    REQUIRE(cmd_run(opts, out, err) == 0);
    opts.seed = 43;
    opts.out_prefix = (dir.path / "b").string();
    REQUIRE(cmd_run(opts, out, err) == 0);
    CHECK(slurp(dir.path / "a.summary.json") != slurp(dir.path / "b.summary.json"));
    const auto j = nlohmann::json::parse(slurp(dir.path / "b.summary.json"));
    CHECK(j["seed"] == 43);
}

TEST_CASE("a truncated final step-log line leaves earlier records intact") {
    TempDir dir("truncate");
    RunCmdOptions opts;
    opts.config_path = write_config(dir, kConfig);
    opts.out_prefix = (dir.path / "t").string();
    std::ostringstream out, err;
    REQUIRE(cmd_run(opts, out, err) == 0);

    std::string content = slurp(dir.path / "t.steps.jsonl");
    content.resize(content.size() - 7);  // cut into the final record
    std::istringstream in(content);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() > 1);
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
        CHECK_NOTHROW(nlohmann::json::parse(lines[i]));
    }
    CHECK_THROWS(nlohmann::json::parse(lines.back()));
}

TEST_CASE("cmd_sweep produces the full grid plus an aggregate table") {
    TempDir dir("sweep");
    SweepCmdOptions opts;
    opts.config_path = write_config(dir, kConfig);
    opts.selectors = {"oasis", "random"};
    opts.ratios = {"0.25"};
    opts.seeds = {1, 2, 3};
    opts.out_dir = (dir.path / "grid").string();
    opts.jobs = 2;
    std::ostringstream out, err;
    REQUIRE(cmd_sweep(opts, out, err) == 0);

    int summaries = 0;
    for (const auto& e : fs::directory_iterator(opts.out_dir)) {
        const auto name = e.path().filename().string();
        if (name.find(".summary.json") != std::string::npos) ++summaries;
    }
    CHECK(summaries == 6);

    const std::string csv = slurp(fs::path(opts.out_dir) / "sweep_summary.csv");
    // header plus one row per (selector, ratio) cell
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("oasis,0.25,3") != std::string::npos);
    CHECK(csv.find("random,0.25,3") != std::string::npos);
}

TEST_CASE("sweep thresholds follow the solved ratio-threshold pairs") {
    TempDir dir("sweepthresh");
    SweepCmdOptions opts;
    opts.config_path = write_config(dir, kConfig);
    opts.selectors = {"oasis"};
    opts.ratios = {"0.0625", "0.125", "0.25"};
    opts.seeds = {1};
    opts.out_dir = (dir.path / "grid").string();
    std::ostringstream out, err;
    REQUIRE(cmd_sweep(opts, out, err) == 0);

    const std::vector<std::pair<std::string, double>> expect{
        {"oasis_r0.0625_s1.summary.json", 2.06},
        {"oasis_r0.125_s1.summary.json", 1.53},
        {"oasis_r0.25_s1.summary.json", 0.89},
    };
    for (const auto& [name, threshold] : expect) {
        const auto j = nlohmann::json::parse(slurp(fs::path(opts.out_dir) / name));
        CHECK(std::abs(j["threshold"].get<double>() - threshold) < 0.02);
    }
}

TEST_CASE("cmd_report aggregates valid records and names corrupt ones") {
    TempDir dir("report");
    SweepCmdOptions sweep_opts;
    sweep_opts.config_path = write_config(dir, kConfig);
    sweep_opts.selectors = {"random"};
    sweep_opts.ratios = {"0.25"};
    sweep_opts.seeds = {1, 2, 3};
    sweep_opts.out_dir = (dir.path / "grid").string();
    std::ostringstream sweep_out, sweep_err;
    REQUIRE(cmd_sweep(sweep_opts, sweep_out, sweep_err) == 0);

    // drop a corrupt record next to the real ones
    {
        std::ofstream bad(fs::path(sweep_opts.out_dir) / "broken.summary.json");
        bad << "{ not json";
    }

    std::ostringstream out, err;
    REQUIRE(cmd_report(sweep_opts.out_dir, out, err) == 0);
    CHECK(err.str().find("broken.summary.json") != std::string::npos);
    CHECK(out.str().find("random") != std::string::npos);

    // aggregate mean equals the hand-computed mean of the three records
    double sum = 0.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto j = nlohmann::json::parse(
            slurp(fs::path(sweep_opts.out_dir) / ("random_r0.25_s" + std::to_string(seed) +
                                                  ".summary.json")));
        sum += j["a_last"].get<double>();
    }
    const std::string csv = slurp(fs::path(sweep_opts.out_dir) / "report_summary.csv");
    std::istringstream csvin(csv);
    std::string header, row;
    std::getline(csvin, header);
    std::getline(csvin, row);
    // a_last_mean is the sixth column
    std::istringstream rs(row);
    std::string field;
    for (int i = 0; i < 6; ++i) std::getline(rs, field, ',');
    CHECK(std::stod(field) == doctest::Approx(sum / 3.0).epsilon(1e-9));
}

TEST_CASE("cmd_report on an empty directory fails") {
    TempDir dir("empty");
    std::ostringstream out, err;
    CHECK(cmd_report(dir.path.string(), out, err) != 0);
}

TEST_CASE("cmd_solve_threshold prints the threshold") {
    std::ostringstream out, err;
    REQUIRE(cmd_solve_threshold(0.125, out, err) == 0);
    CHECK(std::abs(std::stod(out.str()) - 1.53) < 0.02);
    CHECK(cmd_solve_threshold(1.5, out, err) != 0);
}
