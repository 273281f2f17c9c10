#ifndef EPIFIT_REPORT_HPP
#define EPIFIT_REPORT_HPP

#include <cstdio>
#include <ctime>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epifit/config.hpp"
#include "epifit/estimation.hpp"
#include "epifit/models.hpp"
#include "epifit/uncertainty.hpp"
#include "epifit/version.hpp"

namespace epifit {

struct Provenance {
    std::string tool_version = kVersion;
    std::string dataset_label;
    std::string config_hash;
    std::string generated_at; // ISO 8601 UTC
};

/// Everything one fit run produced. The uncertainty block is absent when
/// the pipeline stopped early (e.g. non-identifiable covariance); `failure`
/// then explains why and the rendered report is diagnostic.
struct ReportBundle {
    FitResult fit;
    std::optional<UncertaintyReport> uncertainty;
    Provenance provenance;
    std::string failure;
};

inline std::string iso_utc_now() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail {

inline nlohmann::ordered_json interval_json(const IntervalEstimate& iv) {
    return {{"lower", iv.lower}, {"estimate", iv.estimate}, {"upper", iv.upper}};
}

inline nlohmann::ordered_json derived_json(const DerivedIntervals& d) {
    return {{"r0", interval_json(d.r0)},
            {"mean_infectious_period_days", interval_json(d.infectious_period)}};
}

} // namespace detail

/// Machine-readable report. All numbers are stored at full round-trip
/// precision; key order is fixed, so two runs differ only where their
/// values differ (the generated_at field being the expected one).
inline nlohmann::ordered_json report_json(const ReportBundle& bundle,
                                          const RunConfig& config) {
    using nlohmann::ordered_json;
    const ModelSpec& model = bundle.fit.model;

    ordered_json j;
    j["schema_version"] = 1;
    j["provenance"] = {{"tool_version", bundle.provenance.tool_version},
                       {"dataset_label", bundle.provenance.dataset_label},
                       {"config_hash", bundle.provenance.config_hash},
                       {"generated_at", bundle.provenance.generated_at}};

    ordered_json cfg;
    cfg["model"] = to_string(config.model);
    cfg["units"] = to_string(config.units);
    cfg["grid_step"] = config.grid_step;
    cfg["n_starts"] = config.n_starts;
    cfg["seed"] = config.seed;
    cfg["rel_step"] = config.rel_step;
    cfg["function_tol"] = config.nm.function_tol;
    cfg["param_tol"] = config.nm.param_tol;
    cfg["max_evals"] = config.nm.max_evals;
    cfg["population_cap"] = config.population_cap;
    if (!config.t0_anchor.empty()) cfg["t0_anchor"] = config.t0_anchor;
    for (const auto& [name, lo] : config.domain_lower)
        cfg["domain_overrides"][name]["lower"] = lo;
    for (const auto& [name, hi] : config.domain_upper)
        cfg["domain_overrides"][name]["upper"] = hi;
    j["config"] = cfg;

    ordered_json fit;
    fit["model"] = to_string(model.kind);
    fit["converged"] = bundle.fit.converged;
    fit["objective"] = bundle.fit.objective;
    fit["n_evaluations"] = bundle.fit.n_evaluations;
    ordered_json params = ordered_json::array();
    for (std::size_t k = 0; k < bundle.fit.theta_hat.size(); ++k)
        params.push_back({{"name", model.parameter_names[k]},
                          {"estimate", bundle.fit.theta_hat[k]}});
    fit["parameters"] = params;
    fit["residuals"] = bundle.fit.residuals;
    ordered_json minima = ordered_json::array();
    for (const LocalMinimum& m : bundle.fit.local_minima)
        minima.push_back({{"params", m.params},
                          {"objective", m.objective},
                          {"converged", m.converged}});
    fit["local_minima"] = minima;
    j["fit"] = fit;

    if (bundle.uncertainty) {
        const UncertaintyReport& u = *bundle.uncertainty;
        ordered_json unc;
        unc["sigma2_hat"] = u.sigma2_hat;
        unc["covariance_formula"] = u.covariance_formula;
        unc["interval_rule"] = "estimate +/- 2 SE (approx. 95%)";
        ordered_json intervals = ordered_json::array();
        for (std::size_t k = 0; k < u.intervals.size(); ++k) {
            const IntervalEstimate& iv = u.intervals[k];
            intervals.push_back({{"name", model.parameter_names[k]},
                                 {"lower", iv.lower},
                                 {"estimate", iv.estimate},
                                 {"upper", iv.upper},
                                 {"standard_error", u.standard_errors[k]},
                                 {"contains_zero", iv.contains(0.0)}});
        }
        unc["parameters"] = intervals;
        ordered_json cov = ordered_json::array();
        for (Eigen::Index r = 0; r < u.covariance.rows(); ++r) {
            ordered_json row = ordered_json::array();
            for (Eigen::Index c = 0; c < u.covariance.cols(); ++c)
                row.push_back(u.covariance(r, c));
            cov.push_back(row);
        }
        unc["covariance"] = cov;
        unc["one_sided_sensitivity_columns"] = u.one_sided_columns;
        if (u.derived_endpoint)
            unc["derived_endpoint_arithmetic"] = detail::derived_json(*u.derived_endpoint);
        if (!u.derived_endpoint_note.empty())
            unc["derived_endpoint_note"] = u.derived_endpoint_note;
        if (u.derived_delta)
            unc["derived_delta_method"] = detail::derived_json(*u.derived_delta);
        if (u.decay_period)
            unc["decay_period_days"] = detail::interval_json(*u.decay_period);
        j["uncertainty"] = unc;
    }
    if (!bundle.failure.empty()) j["failure"] = bundle.failure;
    return j;
}

namespace detail {

inline std::string fixed4(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

inline void table_row(std::ostringstream& out, const std::string& name, double lower,
                      double estimate, double upper, const std::string& note = {}) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-24s %14s %14s %14s", name.c_str(),
                  fixed4(lower).c_str(), fixed4(estimate).c_str(),
                  fixed4(upper).c_str());
    out << buf;
    if (!note.empty()) out << "   " << note;
    out << '\n';
}

} // namespace detail

/// Human-readable table: per-parameter lower/estimate/upper plus derived
/// quantities in both interval styles. Rendering rounds to four decimals;
/// the JSON report keeps full precision.
inline std::string render_table(const ReportBundle& bundle) {
    const ModelSpec& model = bundle.fit.model;
    std::ostringstream out;
    out << "model: " << to_string(model.kind)
        << "   dataset: " << bundle.provenance.dataset_label << '\n';
    out << "converged: " << (bundle.fit.converged ? "yes" : "no")
        << "   objective: " << detail::fixed4(bundle.fit.objective)
        << "   evaluations: " << bundle.fit.n_evaluations << '\n';
    if (!bundle.failure.empty()) out << "FAILURE: " << bundle.failure << '\n';
    out << '\n';

    char header[160];
    std::snprintf(header, sizeof header, "  %-24s %14s %14s %14s", "parameter", "lower",
                  "estimate", "upper");
    out << header << '\n';

    if (bundle.uncertainty) {
        const UncertaintyReport& u = *bundle.uncertainty;
        for (std::size_t k = 0; k < u.intervals.size(); ++k) {
            const IntervalEstimate& iv = u.intervals[k];
            std::string note;
            if (iv.contains(0.0)) note = "interval contains 0";
            for (std::size_t c : u.one_sided_columns)
                if (c == k) note += note.empty() ? "one-sided sensitivity"
                                                 : "; one-sided sensitivity";
            detail::table_row(out, model.parameter_names[k], iv.lower, iv.estimate,
                              iv.upper, note);
        }
        out << '\n';
        out << "  intervals: estimate +/- 2 SE (approx. 95%)   sigma^2: "
            << detail::fixed4(u.sigma2_hat) << '\n';

        if (u.derived_endpoint || u.derived_delta || u.decay_period) {
            out << '\n' << "  derived quantities\n";
            if (u.derived_endpoint) {
                detail::table_row(out, "R0", u.derived_endpoint->r0.lower,
                                  u.derived_endpoint->r0.estimate,
                                  u.derived_endpoint->r0.upper, "endpoint arithmetic");
                detail::table_row(out, "mean infectious period",
                                  u.derived_endpoint->infectious_period.lower,
                                  u.derived_endpoint->infectious_period.estimate,
                                  u.derived_endpoint->infectious_period.upper,
                                  "endpoint arithmetic, days");
            }
            if (!u.derived_endpoint_note.empty())
                out << "  " << u.derived_endpoint_note << '\n';
            if (u.derived_delta) {
                detail::table_row(out, "R0", u.derived_delta->r0.lower,
                                  u.derived_delta->r0.estimate, u.derived_delta->r0.upper,
                                  "delta method");
                detail::table_row(out, "mean infectious period",
                                  u.derived_delta->infectious_period.lower,
                                  u.derived_delta->infectious_period.estimate,
                                  u.derived_delta->infectious_period.upper,
                                  "delta method, days");
            }
            if (u.decay_period)
                detail::table_row(out, "decay period 1/|k|", u.decay_period->lower,
                                  u.decay_period->estimate, u.decay_period->upper,
                                  "endpoint arithmetic, days");
        }
    } else {
        for (std::size_t k = 0; k < bundle.fit.theta_hat.size(); ++k)
            detail::table_row(out, model.parameter_names[k], bundle.fit.theta_hat[k],
                              bundle.fit.theta_hat[k], bundle.fit.theta_hat[k],
                              "no uncertainty available");
    }

    out << '\n'
        << "tool " << bundle.provenance.tool_version << "   config "
        << bundle.provenance.config_hash << "   generated "
        << bundle.provenance.generated_at << '\n';
    return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

} // namespace epifit

#endif
