#ifndef EPIFIT_ESTIMATION_HPP
#define EPIFIT_ESTIMATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epifit/detail/parallel.hpp"
#include "epifit/errors.hpp"
#include "epifit/models.hpp"
#include "epifit/nelder_mead.hpp"
#include "epifit/ode.hpp"

namespace epifit {

/// Observation times (days) paired with observed infectious counts
/// (thousands). Times are strictly ascending, counts nonnegative.
struct Dataset {
    std::vector<double> times;
    std::vector<double> observations;
    std::string label;

    std::size_t size() const { return times.size(); }

    void validate() const {
        if (times.size() != observations.size())
            throw std::invalid_argument("dataset: times/observations length mismatch");
        if (times.empty()) throw std::invalid_argument("dataset: no observations");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw std::invalid_argument("dataset: times must be strictly ascending");
        for (double y : observations)
            if (!(y >= 0.0))
                throw std::invalid_argument("dataset: observations must be nonnegative");
    }
};

/// Selects the single observable component of the state; for SIR systems
/// that is the infectious compartment.
struct ObservationOperator {
    int state_index = 1;
};

inline constexpr double kDefaultGridStep = 1e-3; // days

/// The forward map f(t_j, theta): model output at the requested times.
/// SIR-family kinds integrate from the first requested time with state
/// [S0, I0]; the exponential kind evaluates its closed form.
inline std::vector<double> predict_observable(const ModelSpec& model,
                                              const ParameterVector& params,
                                              const std::vector<double>& times,
                                              double grid_step = kDefaultGridStep,
                                              ObservationOperator obs = {}) {
    if (times.empty()) return {};
    if (model.kind == ModelKind::Exponential) {
        std::vector<double> out(times.size());
        for (std::size_t j = 0; j < times.size(); ++j)
            out[j] = exponential_model(times[j], params);
        return out;
    }
    TimeGrid grid{times.front(), times.back(), grid_step, times};
    if (grid.tf > grid.t0) grid.step = std::min(grid_step, grid.tf - grid.t0);
    const Trajectory traj =
        integrate(make_system(model), params, initial_state(model, params), grid);
    std::vector<double> out(times.size());
    for (std::size_t j = 0; j < times.size(); ++j)
        out[j] = traj.states[j][static_cast<std::size_t>(obs.state_index)];
    return out;
}

inline constexpr double kIntegrationFailureSentinel = 1e30;

/// Sum of squared residuals between the observations and the model output
/// at the dataset times. A failed forward solve yields the large sentinel
/// so a simplex search retreats instead of aborting.
inline double ols_objective(const ModelSpec& model, const Dataset& dataset,
                            const ParameterVector& params,
                            double grid_step = kDefaultGridStep) {
    dataset.validate();
    model.require_in_domain(params);
    std::vector<double> predicted;
    try {
        predicted = predict_observable(model, params, dataset.times, grid_step);
    } catch (const IntegrationError&) {
        return kIntegrationFailureSentinel;
    }
    double ssr = 0.0;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        const double r = dataset.observations[j] - predicted[j];
        ssr += r * r;
    }
    return ssr;
}

struct LocalMinimum {
    ParameterVector params;
    double objective = 0.0;
    bool converged = false;
};

struct FitResult {
    ModelSpec model;
    ParameterVector theta_hat;
    double objective = 0.0;
    std::int64_t n_evaluations = 0;
    bool converged = false;
    std::vector<LocalMinimum> local_minima; // non-global minima, best first
    std::vector<double> residuals;          // observation - prediction
};

struct MultistartOptions {
    int n_starts = 32;
    std::uint64_t seed = 1;
    NmOptions nm;
    double grid_step = kDefaultGridStep;
    /// Replaces the built-in heuristic first start when set.
    std::optional<ParameterVector> initial_guess;
    /// Additional user-supplied starts (e.g. a nested model's solution).
    std::vector<ParameterVector> extra_starts;
    unsigned max_threads = 64;
};

namespace detail {

/// Data-driven first start: a population about ten times the observed peak,
/// the first observation as the initial infectious count, a two-day-ish
/// infectious period and a transmission rate placing R0 near 2.
inline ParameterVector heuristic_start(const ModelSpec& model, const Dataset& data) {
    const double max_obs =
        std::max(1e-3, *std::max_element(data.observations.begin(), data.observations.end()));
    const double first_obs = std::max(1e-3, data.observations.front());
    const double cap = model.domain.box[model.is_sir_family() ? kS0 : kExpI0].upper;

    if (model.kind == ModelKind::Exponential) {
        double rate = -0.5;
        const double last_obs = std::max(1e-6, data.observations.back());
        const double dt = data.times.back() - data.times.front();
        if (dt > 0.0) rate = std::log(last_obs / first_obs) / dt;
        if (!std::isfinite(rate)) rate = -0.5;
        return {std::min(first_obs, 0.5 * cap), rate};
    }

    const double s0 = std::min(10.0 * max_obs, 0.5 * cap);
    const double i0 = std::min(first_obs, 0.5 * cap);
    const double gamma = 0.5;
    const double beta = 2.0 * gamma / s0;
    ParameterVector start = {beta, gamma, s0, i0};
    if (model.kind == ModelKind::SirHolling2) start.push_back(1e-3);
    if (model.kind == ModelKind::SirRecruitment) start.push_back(1e-3);
    return start;
}

/// Random start: rates log-uniform in [1e-4, 10], populations log-uniform
/// between the observed peak and the population cap, free-sign rates
/// uniform in [-5, 5].
inline ParameterVector sample_start(const ModelSpec& model, const Dataset& data,
                                    std::mt19937_64& rng) {
    const double max_obs =
        std::max(1e-3, *std::max_element(data.observations.begin(), data.observations.end()));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) {
        return lo * std::exp(unit(rng) * std::log(hi / lo));
    };

    ParameterVector start(model.parameter_count());
    for (std::size_t i = 0; i < model.parameter_count(); ++i) {
        const std::string& name = model.parameter_names[i];
        const Interval& iv = model.domain.box[i];
        if (name == "S0" || name == "I0") {
            const double lo = std::min(max_obs, 0.5 * iv.upper);
            start[i] = log_uniform(lo, iv.upper * (1.0 - 1e-9));
        } else if (name == "k") {
            start[i] = -5.0 + 10.0 * unit(rng);
        } else if (name == "Gamma") {
            start[i] = log_uniform(1e-4, 10.0 * max_obs);
        } else { // beta, gamma, h
            start[i] = log_uniform(1e-4, 10.0);
        }
    }
    return start;
}

} // namespace detail

/// Runs Nelder-Mead from n_starts start points (a data-driven heuristic
/// plus seeded random draws), deduplicates the minima and returns the
/// global best. Deterministic for a fixed seed. Ties within function_tol
/// break toward the smaller basic reproduction number.
inline FitResult multistart_fit(const ModelSpec& model, const Dataset& dataset,
                                const MultistartOptions& opts = {}) {
    dataset.validate();
    if (opts.n_starts < 1)
        throw std::invalid_argument("multistart_fit: n_starts must be >= 1");
    const std::size_t n = dataset.size();
    const std::size_t p = model.parameter_count();
    if (n <= p)
        throw std::invalid_argument(
            "multistart_fit: n <= p (need more observations than parameters; n = " +
            std::to_string(n) + ", p = " + std::to_string(p) + ")");

    // All starts are drawn up front so the result does not depend on how
    // the runs are scheduled.
    std::vector<ParameterVector> starts;
    starts.reserve(static_cast<std::size_t>(opts.n_starts) + opts.extra_starts.size());
    starts.push_back(opts.initial_guess ? *opts.initial_guess
                                        : detail::heuristic_start(model, dataset));
    model.require_in_domain(starts.front());
    std::mt19937_64 rng(opts.seed);
    for (int i = 1; i < opts.n_starts; ++i)
        starts.push_back(detail::sample_start(model, dataset, rng));
    for (const ParameterVector& extra : opts.extra_starts) {
        model.require_in_domain(extra);
        starts.push_back(extra);
    }

    auto objective = [&](const ParameterVector& theta) {
        return ols_objective(model, dataset, theta, opts.grid_step);
    };

    struct Run {
        BoundedMinimum minimum;
    };
    std::vector<Run> runs(starts.size());
    detail::parallel_for_index(starts.size(), opts.max_threads, [&](std::size_t i) {
        runs[i].minimum = nelder_mead_minimize(objective, starts[i], model.domain, opts.nm);
    });

    std::int64_t total_evals = 0;
    for (const Run& run : runs) total_evals += run.minimum.n_evaluations;

    std::vector<LocalMinimum> minima;
    for (const Run& run : runs) {
        if (run.minimum.fmin >= kIntegrationFailureSentinel) continue;
        minima.push_back({run.minimum.x, run.minimum.fmin, run.minimum.converged});
    }
    if (minima.empty())
        throw FitError("multistart_fit: every start failed (forward solves blew up)");

    // Deduplicate minima closer than param_tol in transformed space.
    const DomainTransform transform(model.domain);
    std::vector<LocalMinimum> unique;
    for (const LocalMinimum& candidate : minima) {
        const std::vector<double> zc = transform.to_unbounded(candidate.params);
        bool merged = false;
        for (LocalMinimum& kept : unique) {
            const std::vector<double> zk = transform.to_unbounded(kept.params);
            double dist = 0.0;
            for (std::size_t i = 0; i < zc.size(); ++i)
                dist = std::max(dist, std::abs(zc[i] - zk[i]));
            if (dist < opts.nm.param_tol) {
                if (candidate.objective < kept.objective) kept = candidate;
                merged = true;
                break;
            }
        }
        if (!merged) unique.push_back(candidate);
    }

    auto tie_break_key = [&](const LocalMinimum& m) {
        return model.is_sir_family() ? basic_reproduction_number(m.params)
                                     : m.params[kExpRate];
    };
    double fmin = unique.front().objective;
    for (const LocalMinimum& m : unique) fmin = std::min(fmin, m.objective);
    std::size_t winner = 0;
    bool have_winner = false;
    for (std::size_t i = 0; i < unique.size(); ++i) {
        if (unique[i].objective > fmin + opts.nm.function_tol) continue;
        if (!have_winner || tie_break_key(unique[i]) < tie_break_key(unique[winner])) {
            winner = i;
            have_winner = true;
        }
    }

    FitResult result;
    result.model = model;
    result.theta_hat = unique[winner].params;
    result.objective = unique[winner].objective;
    result.converged = unique[winner].converged;
    result.n_evaluations = total_evals;
    for (std::size_t i = 0; i < unique.size(); ++i)
        if (i != winner) result.local_minima.push_back(unique[i]);
    std::stable_sort(result.local_minima.begin(), result.local_minima.end(),
                     [](const LocalMinimum& a, const LocalMinimum& b) {
                         return a.objective < b.objective;
                     });

    const std::vector<double> predicted =
        predict_observable(model, result.theta_hat, dataset.times, opts.grid_step);
    result.residuals.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        result.residuals[j] = dataset.observations[j] - predicted[j];
    return result;
}

} // namespace epifit

#endif
