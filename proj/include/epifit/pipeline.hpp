#ifndef EPIFIT_PIPELINE_HPP
#define EPIFIT_PIPELINE_HPP

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epifit/config.hpp"
#include "epifit/csv.hpp"
#include "epifit/errors.hpp"
#include "epifit/estimation.hpp"
#include "epifit/models.hpp"
#include "epifit/report.hpp"
#include "epifit/svg.hpp"
#include "epifit/uncertainty.hpp"

namespace epifit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFitFailure = 2;
inline constexpr int kExitNonIdentifiable = 3;
inline constexpr int kExitNotConverged = 4;

namespace detail {

inline MultistartOptions multistart_options(const RunConfig& config) {
    MultistartOptions opts;
    opts.n_starts = config.n_starts;
    opts.seed = config.seed;
    opts.nm = config.nm;
    opts.grid_step = config.grid_step;
    return opts;
}

inline std::string day_axis_label(const RunConfig& config) {
    if (config.t0_anchor.empty()) return "day";
    return "days since " + config.t0_anchor;
}

/// Daily output times 0, 1, ..., plus the horizon itself when fractional.
inline std::vector<double> daily_grid(double horizon) {
    std::vector<double> times;
    for (double t = 0.0; t <= horizon; t += 1.0) times.push_back(t);
    if (times.empty() || times.back() < horizon) times.push_back(horizon);
    return times;
}

inline std::vector<double> dense_grid(double t0, double tf, double dt) {
    std::vector<double> times;
    for (double t = t0; t < tf; t += dt) times.push_back(t);
    times.push_back(tf);
    return times;
}

} // namespace detail

/// Integrates the configured compartmental model and writes trajectory.csv
/// (times,S,I), observations.csv (day,count; re-ingestable by load_dataset
/// with units=thousands) and trajectory.svg into out_dir.
inline int simulate_command(const RunConfig& config, const ParameterVector& params,
                            double horizon, const std::filesystem::path& out_dir,
                            std::ostream& log) {
    config.validate();
    if (!(horizon >= 0.0))
        throw std::invalid_argument("simulate: horizon must be nonnegative");
    const ModelSpec model = make_model(config);
    if (!model.is_sir_family())
        throw std::invalid_argument(
            "simulate: the trajectory schema times,S,I is compartmental; the "
            "exponential kind has no compartments (fit it instead)");
    model.require_in_domain(params);

    const std::vector<double> times = detail::daily_grid(horizon);
    TimeGrid grid{0.0, horizon, config.grid_step, times};
    if (horizon > 0.0) grid.step = std::min(config.grid_step, horizon);
    const Trajectory trajectory =
        integrate(make_system(model), params, initial_state(model, params), grid);

    std::filesystem::create_directories(out_dir);
    write_trajectory_csv(out_dir / "trajectory.csv", trajectory);

    std::vector<double> infectious(trajectory.times.size());
    std::vector<double> susceptible(trajectory.times.size());
    for (std::size_t j = 0; j < trajectory.times.size(); ++j) {
        susceptible[j] = trajectory.states[j][0];
        infectious[j] = trajectory.states[j][1];
    }
    write_observations_csv(out_dir / "observations.csv", trajectory.times, infectious,
                           "simulated daily infectious counts, thousands; model " +
                               to_string(model.kind));

    std::vector<PlotSeries> series;
    series.push_back({"S(t)", trajectory.times, susceptible, "#2ca02c", false});
    series.push_back({"I(t)", trajectory.times, infectious, "#1f77b4", false});
    write_svg(out_dir / "trajectory.svg", "simulated trajectory: " + to_string(model.kind),
              detail::day_axis_label(config), "population (thousands)", series);

    for (const std::string& warning : trajectory.warnings) log << "warning: " << warning << '\n';
    log << "simulate: wrote " << trajectory.times.size() << " rows to "
        << (out_dir / "trajectory.csv").string() << '\n';
    return kExitOk;
}

namespace detail {

inline void write_fit_artifacts(const ReportBundle& bundle, const RunConfig& config,
                                const Dataset& dataset,
                                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "report.json", report_json(bundle, config).dump(2) + "\n");
    write_text_file(out_dir / "table.txt", render_table(bundle));

    std::vector<PlotSeries> series;
    series.push_back({"observed", dataset.times, dataset.observations, "#d62728", true});
    if (!bundle.fit.theta_hat.empty()) {
        const std::vector<double> dense =
            dense_grid(dataset.times.front(), dataset.times.back(), 0.25);
        series.push_back({"fitted I(t)", dense,
                          predict_observable(bundle.fit.model, bundle.fit.theta_hat,
                                             dense, config.grid_step),
                          "#1f77b4", false});
    }
    write_svg(out_dir / "fit.svg",
              "fit: " + to_string(bundle.fit.model.kind) + " on " +
                  bundle.provenance.dataset_label,
              day_axis_label(config), "infectious (thousands)", series);
}

} // namespace detail

/// Multistart fit plus the full uncertainty pipeline; writes report.json,
/// table.txt and fit.svg. Nonzero exit on fit failure, non-identifiability
/// or non-convergence; the report is still written as a diagnostic.
inline int fit_command(const RunConfig& config, const std::filesystem::path& dataset_path,
                       const std::filesystem::path& out_dir, std::ostream& log) {
    config.validate();
    const Dataset dataset = load_dataset(dataset_path, config.units);
    const ModelSpec model = make_model(config);

    ReportBundle bundle;
    bundle.fit.model = model;
    bundle.provenance.dataset_label = dataset.label;
    bundle.provenance.config_hash = config_hash(config);
    bundle.provenance.generated_at = iso_utc_now();

    int exit_code = kExitOk;
    try {
        bundle.fit = multistart_fit(model, dataset, detail::multistart_options(config));
        try {
            UncertaintyOptions uopts;
            uopts.rel_step = config.rel_step;
            uopts.grid_step = config.grid_step;
            bundle.uncertainty = quantify_uncertainty(model, dataset, bundle.fit, uopts);
        } catch (const NonIdentifiableError& e) {
            bundle.failure = e.what();
            exit_code = kExitNonIdentifiable;
        }
        if (exit_code == kExitOk && !bundle.fit.converged) exit_code = kExitNotConverged;
    } catch (const FitError& e) {
        bundle.failure = e.what();
        exit_code = kExitFitFailure;
    }

    detail::write_fit_artifacts(bundle, config, dataset, out_dir);
    log << "fit: model=" << to_string(model.kind) << " n=" << dataset.size()
        << " objective=" << bundle.fit.objective
        << " converged=" << (bundle.fit.converged ? "yes" : "no") << '\n';
    if (!bundle.failure.empty()) log << "fit: " << bundle.failure << '\n';
    log << "fit: report written to " << (out_dir / "report.json").string() << '\n';
    return exit_code;
}

/// One row of a model comparison.
struct ComparisonEntry {
    ModelKind kind = ModelKind::SirMassAction;
    ReportBundle bundle;
    bool fit_ok = false;
};

/// Fits each requested kind on the same dataset and renders a side-by-side
/// table (comparison.txt / comparison.json). Parameters whose 2-SE interval
/// contains zero are flagged; per-kind failures are reported inline. The
/// mass-action solution, when requested, seeds the nested variants.
inline int compare_models_command(const RunConfig& config,
                                  const std::filesystem::path& dataset_path,
                                  const std::vector<ModelKind>& kinds,
                                  const std::filesystem::path& out_dir,
                                  std::ostream& log) {
    config.validate();
    if (kinds.size() < 2)
        throw std::invalid_argument("compare: need at least two model kinds");
    const Dataset dataset = load_dataset(dataset_path, config.units);

    // Fit mass action ahead of its supersets so their searches can start
    // from the nested solution; report in the caller's order.
    std::vector<std::size_t> fit_order(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) fit_order[i] = i;
    std::stable_sort(fit_order.begin(), fit_order.end(), [&](std::size_t a, std::size_t b) {
        return (kinds[a] == ModelKind::SirMassAction) >
               (kinds[b] == ModelKind::SirMassAction);
    });

    std::vector<ComparisonEntry> entries(kinds.size());
    std::optional<ParameterVector> mass_action_solution;
    const std::string generated_at = iso_utc_now();

    for (std::size_t index : fit_order) {
        ComparisonEntry& entry = entries[index];
        entry.kind = kinds[index];
        RunConfig kind_config = config;
        kind_config.model = entry.kind;
        entry.bundle.provenance.dataset_label = dataset.label;
        entry.bundle.provenance.generated_at = generated_at;
        entry.bundle.provenance.config_hash = config_hash(kind_config);
        try {
            const ModelSpec model = make_model(kind_config);
            entry.bundle.fit.model = model;
            MultistartOptions opts = detail::multistart_options(kind_config);
            const bool nested_sir = entry.kind == ModelKind::SirHolling2 ||
                                    entry.kind == ModelKind::SirRecruitment;
            if (nested_sir && mass_action_solution) {
                ParameterVector warm = *mass_action_solution;
                warm.push_back(1e-8); // nearly the nested model inside the open domain
                opts.extra_starts.push_back(warm);
            }
            entry.bundle.fit = multistart_fit(model, dataset, opts);
            entry.fit_ok = true;
            if (entry.kind == ModelKind::SirMassAction)
                mass_action_solution = entry.bundle.fit.theta_hat;
            UncertaintyOptions uopts;
            uopts.rel_step = kind_config.rel_step;
            uopts.grid_step = kind_config.grid_step;
            entry.bundle.uncertainty =
                quantify_uncertainty(model, dataset, entry.bundle.fit, uopts);
        } catch (const std::exception& e) {
            entry.bundle.failure = e.what();
        }
    }

    std::ostringstream text;
    text << "model comparison   dataset: " << dataset.label << "   n = " << dataset.size()
         << "\n\n";
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["dataset_label"] = dataset.label;
    j["generated_at"] = generated_at;
    nlohmann::ordered_json jmodels = nlohmann::ordered_json::array();

    bool all_ok = true;
    for (const ComparisonEntry& entry : entries) {
        nlohmann::ordered_json jm;
        jm["model"] = to_string(entry.kind);
        text << to_string(entry.kind) << ":\n";
        if (!entry.fit_ok) {
            all_ok = false;
            text << "  failed: " << entry.bundle.failure << "\n\n";
            jm["failure"] = entry.bundle.failure;
            jmodels.push_back(jm);
            continue;
        }
        const FitResult& fit = entry.bundle.fit;
        text << "  parameters: " << fit.theta_hat.size()
             << "   objective: " << detail::fixed4(fit.objective)
             << "   converged: " << (fit.converged ? "yes" : "no") << '\n';
        jm["parameter_count"] = fit.theta_hat.size();
        jm["objective"] = fit.objective;
        jm["converged"] = fit.converged;
        if (entry.bundle.uncertainty) {
            const UncertaintyReport& u = *entry.bundle.uncertainty;
            jm["sigma2_hat"] = u.sigma2_hat;
            nlohmann::ordered_json jparams = nlohmann::ordered_json::array();
            for (std::size_t k = 0; k < u.intervals.size(); ++k) {
                const IntervalEstimate& iv = u.intervals[k];
                const std::string& name = fit.model.parameter_names[k];
                std::string note;
                if (iv.contains(0.0)) note = "interval contains 0";
                detail::table_row(text, name, iv.lower, iv.estimate, iv.upper, note);
                jparams.push_back({{"name", name},
                                   {"lower", iv.lower},
                                   {"estimate", iv.estimate},
                                   {"upper", iv.upper},
                                   {"contains_zero", iv.contains(0.0)}});
            }
            jm["parameters"] = jparams;
        } else {
            all_ok = false;
            text << "  uncertainty unavailable: " << entry.bundle.failure << '\n';
            jm["failure"] = entry.bundle.failure;
        }
        text << '\n';
        jmodels.push_back(jm);
    }
    j["models"] = jmodels;

    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "comparison.txt", text.str());
    write_text_file(out_dir / "comparison.json", j.dump(2) + "\n");
    log << text.str();
    log << "compare: reports written to " << (out_dir / "comparison.txt").string() << '\n';
    return all_ok ? kExitOk : 1;
}

} // namespace epifit

#endif
