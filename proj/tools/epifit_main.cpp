#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epifit/config.hpp"
#include "epifit/pipeline.hpp"
#include "epifit/version.hpp"

namespace {

struct SharedFlags {
    std::string model;
    std::string config_path;
    std::string units;
    std::string out_dir = "epifit-out";
    std::uint64_t seed = 0;
    int starts = 0;
    double step = 0.0;
    double rel_step = 0.0;

    CLI::Option* model_opt = nullptr;
    CLI::Option* config_opt = nullptr;
    CLI::Option* units_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* starts_opt = nullptr;
    CLI::Option* step_opt = nullptr;
    CLI::Option* rel_step_opt = nullptr;
};

void add_shared_flags(CLI::App* cmd, SharedFlags& flags) {
    flags.model_opt = cmd->add_option(
        "--model", flags.model,
        "model kind: sir_mass_action, sir_holling2, sir_recruitment, exponential");
    flags.config_opt = cmd->add_option("--config", flags.config_path,
                                       "flat key = value config file")
                           ->check(CLI::ExistingFile);
    flags.seed_opt = cmd->add_option("--seed", flags.seed, "multistart RNG seed");
    flags.starts_opt =
        cmd->add_option("--starts", flags.starts, "number of optimizer starts");
    flags.step_opt =
        cmd->add_option("--step", flags.step, "integration grid step in days");
    flags.units_opt = cmd->add_option("--units", flags.units,
                                      "input count units: thousands or raw");
    flags.rel_step_opt = cmd->add_option("--rel-step", flags.rel_step,
                                         "relative step for sensitivity differences");
    cmd->add_option("--out-dir", flags.out_dir, "directory for output artifacts")
        ->capture_default_str();
}

// File values first, command-line flags on top.
epifit::RunConfig build_config(const SharedFlags& flags) {
    epifit::RunConfig config;
    if (flags.config_opt->count() > 0) config = epifit::load_config(flags.config_path);
    if (flags.model_opt->count() > 0)
        config.model = epifit::model_kind_from_string(flags.model);
    if (flags.units_opt->count() > 0) config.units = epifit::units_from_string(flags.units);
    if (flags.seed_opt->count() > 0) config.seed = flags.seed;
    if (flags.starts_opt->count() > 0) config.n_starts = flags.starts;
    if (flags.step_opt->count() > 0) config.grid_step = flags.step;
    if (flags.rel_step_opt->count() > 0) config.rel_step = flags.rel_step;
    config.validate();
    return config;
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> values;
    for (const std::string& cell : epifit::detail::split_csv_row(text))
        values.push_back(epifit::detail::parse_double(cell, 0));
    return values;
}

std::vector<epifit::ModelKind> parse_kind_list(const std::string& text) {
    std::vector<epifit::ModelKind> kinds;
    for (const std::string& cell : epifit::detail::split_csv_row(text))
        kinds.push_back(epifit::model_kind_from_string(cell));
    return kinds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fits compartmental spread models to daily count time series"};
    app.set_version_flag("--version", epifit::kVersion);
    app.require_subcommand(1);

    CLI::App* simulate = app.add_subcommand(
        "simulate", "integrate a model forward and write trajectory artifacts");
    SharedFlags sim_flags;
    add_shared_flags(simulate, sim_flags);
    std::string params_text;
    double horizon = 14.0;
    simulate
        ->add_option("--params", params_text,
                     "comma-separated parameter values in model order")
        ->required();
    simulate->add_option("--horizon", horizon, "simulation horizon in days")
        ->capture_default_str();

    CLI::App* fit = app.add_subcommand(
        "fit", "fit a model to observed counts and write report artifacts");
    SharedFlags fit_flags;
    add_shared_flags(fit, fit_flags);
    std::string fit_data;
    fit->add_option("--data", fit_data, "day,count CSV file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* compare = app.add_subcommand(
        "compare", "fit several model kinds to the same data side by side");
    SharedFlags cmp_flags;
    add_shared_flags(compare, cmp_flags);
    std::string cmp_data;
    std::string kinds_text;
    compare->add_option("--data", cmp_data, "day,count CSV file")
        ->required()
        ->check(CLI::ExistingFile);
    compare
        ->add_option("--models", kinds_text,
                     "comma-separated model kinds (at least two)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const epifit::RunConfig config = build_config(sim_flags);
            return epifit::simulate_command(config, parse_number_list(params_text),
                                            horizon, sim_flags.out_dir, std::cout);
        }
        if (fit->parsed()) {
            const epifit::RunConfig config = build_config(fit_flags);
            return epifit::fit_command(config, fit_data, fit_flags.out_dir, std::cout);
        }
        const epifit::RunConfig config = build_config(cmp_flags);
        return epifit::compare_models_command(config, cmp_data,
                                              parse_kind_list(kinds_text),
                                              cmp_flags.out_dir, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
