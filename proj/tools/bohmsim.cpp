// bohmsim: sample / evolve / classify / report Bohmian ensembles.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "bohm/config.hpp"
#include "bohm/errors.hpp"
#include "bohm/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 1;
    bool desk_scale = false;
    std::string out = "out";
    double stop_at = -1.0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "config file or bundled name (single-node, multi-node-a, multi-node-b)")
        ->required();
    app->add_option_function<std::uint64_t>(
        "--seed", [&c](const std::uint64_t& s) { c.seed = s, c.seed_set = true; }, "override ensemble seed");
    app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_flag("--desk-scale", c.desk_scale, "apply the config's desk_scale overrides");
    app->add_option("--out", c.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bohmian trajectories of 2D anisotropic oscillator superpositions"};
    app.require_subcommand(1);
    Common c;
    auto* sample = app.add_subcommand("sample", "draw the initial ensemble");
    auto* evolve = app.add_subcommand("evolve", "integrate trajectories (resumes from checkpoint.bin)");
    auto* classify = app.add_subcommand("classify", "label trajectories by footprint");
    auto* report = app.add_subcommand("report", "deviation tables, zones, convergence, summaries");
    auto* run = app.add_subcommand("run", "sample, evolve, classify and report");
    for (auto* s : {sample, evolve, classify, report, run}) add_common(s, c);
    for (auto* s : {evolve, run})
        s->add_option("--stop-at", c.stop_at, "stop after the first checkpoint at or past this time");
    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = bohm::load_config(c.config, c.desk_scale);
        if (c.seed_set) cfg.ensemble.seed = c.seed;
        const bohm::RunOptions opts{c.out, c.threads, c.stop_at};
        if (*sample) bohm::cmd_sample(cfg, opts);
        if (*evolve && !bohm::cmd_evolve(cfg, opts))
            std::fprintf(stderr, "stopped at checkpoint; rerun evolve to resume\n");
        if (*classify) bohm::cmd_classify(cfg, opts);
        if (*report) bohm::cmd_report(cfg, opts);
        if (*run) bohm::cmd_run(cfg, opts);
    } catch (const bohm::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
