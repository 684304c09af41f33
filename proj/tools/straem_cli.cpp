// Command-line front end: generate | run | compare.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "straem/experiment.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::string> out;
};

straem::ExperimentConfig load(const std::string& path, const Overrides& o) {
    auto c = straem::load_experiment_config(path);
    if (o.seed) c.base_seed = *o.seed;
    if (o.reps) c.repetitions = *o.reps;
    if (o.out) c.output_dir = *o.out;
    return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Base seed (repetition r uses seed + r)");
    cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming autoencoder anomaly detection with drift adaptation"};
    app.require_subcommand(1);

    Overrides gen_o, run_o, cmp_o;
    std::string gen_config, run_config;
    std::vector<std::string> cmp_configs;
    bool run_serial = false, cmp_serial = false;

    auto* gen = app.add_subcommand("generate", "Write a labelled stream and its pretrain pool as CSV");
    gen->add_option("--config", gen_config, "Experiment config file")->required()->check(CLI::ExistingFile);
    add_common(gen, gen_o);

    auto* run = app.add_subcommand("run", "Run repetitions and write traces, aggregate and metadata");
    run->add_option("--config", run_config, "Experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--reps", run_o.reps, "Number of repetitions");
    run->add_flag("--serial", run_serial, "Run repetitions sequentially");
    add_common(run, run_o);

    auto* cmp = app.add_subcommand("compare", "Run several methods on one stream and merge their aggregates");
    cmp->add_option("--config", cmp_configs, "Experiment config files (one per method)")->required()->check(CLI::ExistingFile);
    cmp->add_option("--reps", cmp_o.reps, "Number of repetitions");
    cmp->add_flag("--serial", cmp_serial, "Run repetitions sequentially");
    add_common(cmp, cmp_o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto c = load(gen_config, gen_o);
            straem::cmd_generate(c);
            std::cout << "wrote " << c.output_dir << "/stream.csv and " << c.output_dir << "/pool.csv\n";
        } else if (*run) {
            const auto c = load(run_config, run_o);
            const auto res = straem::cmd_run(c, run_serial);
            std::size_t alarms = 0;
            for (const auto& tr : res.traces) alarms += tr.alarm_steps().size();
            std::cout << straem::to_string(c.engine.method) << " on " << straem::to_string(c.stream.dataset) << ": "
                      << res.traces.size() << " repetitions, " << alarms << " alarms, output in " << c.output_dir << "\n";
        } else if (*cmp) {
            std::vector<straem::ExperimentConfig> configs;
            for (const auto& p : cmp_configs) configs.push_back(load(p, cmp_o));
            const std::string out = cmp_o.out ? *cmp_o.out : configs.front().output_dir;
            straem::cmd_compare(configs, out, cmp_serial);
            std::cout << "wrote " << out << "/compare.csv\n";
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
