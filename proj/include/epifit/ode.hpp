#ifndef EPIFIT_ODE_HPP
#define EPIFIT_ODE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epifit/errors.hpp"

namespace epifit {

using ParameterVector = std::vector<double>;

/// A parameterized first-order ODE system x'(t) = g(t, x, theta).
/// The right-hand side must be deterministic and write exactly
/// `dimension` derivative components.
struct OdeSystem {
    int dimension = 0;
    std::function<void(double t, std::span<const double> state,
                       std::span<const double> params, std::span<double> dxdt)>
        rhs;
};

/// Integration window [t0, tf], nominal step size, and the times at which
/// states are reported. Output times must be strictly ascending and lie
/// inside the window.
struct TimeGrid {
    double t0 = 0.0;
    double tf = 0.0;
    double step = 1e-3;
    std::vector<double> output_times;

    void validate() const {
        if (!(step > 0.0))
            throw std::invalid_argument("TimeGrid: step must be positive");
        if (tf < t0)
            throw std::invalid_argument("TimeGrid: tf must be >= t0");
        if (tf > t0 && step > tf - t0)
            throw std::invalid_argument("TimeGrid: step exceeds tf - t0");
        if (output_times.empty())
            throw std::invalid_argument("TimeGrid: no output times");
        if (output_times.front() < t0 || output_times.back() > tf)
            throw std::invalid_argument("TimeGrid: output times outside [t0, tf]");
        for (std::size_t i = 1; i < output_times.size(); ++i)
            if (!(output_times[i] > output_times[i - 1]))
                throw std::invalid_argument(
                    "TimeGrid: output times must be strictly ascending");
    }

    /// Grid reporting every `dt_out` days from t0 through tf inclusive.
    static TimeGrid dense(double t0, double tf, double step, double dt_out) {
        TimeGrid g{t0, tf, step, {}};
        for (long i = 0;; ++i) {
            const double t = t0 + static_cast<double>(i) * dt_out;
            if (t > tf + 1e-12 * std::max(1.0, std::abs(tf))) break;
            g.output_times.push_back(std::min(t, tf));
            if (t >= tf) break;
        }
        return g;
    }
};

/// States sampled on a time grid. `times` holds exactly the requested
/// output times; `states[i]` is the state vector at `times[i]`.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_finite_stage(std::span<const double> v, double t) {
    for (double x : v)
        if (!std::isfinite(x))
            throw IntegrationError(
                "integration failure: non-finite value at t = " + std::to_string(t),
                t);
}

/// Classical four-stage RK4 update. `work` must hold 5 * dim doubles.
inline void rk4_step_inplace(const OdeSystem& system, double t,
                             std::span<const double> state, double h,
                             std::span<const double> params,
                             std::span<double> out, std::span<double> work) {
    const std::size_t dim = static_cast<std::size_t>(system.dimension);
    std::span<double> k1 = work.subspan(0, dim);
    std::span<double> k2 = work.subspan(dim, dim);
    std::span<double> k3 = work.subspan(2 * dim, dim);
    std::span<double> k4 = work.subspan(3 * dim, dim);
    std::span<double> tmp = work.subspan(4 * dim, dim);

    system.rhs(t, state, params, k1);
    check_finite_stage(k1, t);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + 0.5 * h * k1[i];
    system.rhs(t + 0.5 * h, tmp, params, k2);
    check_finite_stage(k2, t + 0.5 * h);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + 0.5 * h * k2[i];
    system.rhs(t + 0.5 * h, tmp, params, k3);
    check_finite_stage(k3, t + 0.5 * h);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + h * k3[i];
    system.rhs(t + h, tmp, params, k4);
    check_finite_stage(k4, t + h);
    for (std::size_t i = 0; i < dim; ++i)
        out[i] = state[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    check_finite_stage(out, t + h);
}

} // namespace detail

/// One classical RK4 step of size h from (t, state). Local truncation
/// error is O(h^5); exact through the degree-4 Taylor term for linear
/// autonomous systems.
inline std::vector<double> rk4_step(const OdeSystem& system, double t,
                                    const std::vector<double>& state, double h,
                                    const ParameterVector& params) {
    if (!(h > 0.0)) throw std::invalid_argument("rk4_step: h must be positive");
    if (state.size() != static_cast<std::size_t>(system.dimension))
        throw std::invalid_argument("rk4_step: state length != dimension");
    std::vector<double> out(state.size());
    std::vector<double> work(5 * state.size());
    detail::rk4_step_inplace(system, t, state, h, params, out, work);
    return out;
}

inline constexpr double kPositivityTolerance = -1e-9;

/// Fixed-step RK4 march from grid.t0 that lands exactly on every requested
/// output time: the step into each output time is shortened as needed, never
/// interpolated. Returned times equal grid.output_times bitwise.
///
/// A state component dipping below -1e-9 attaches a positivity-violation
/// warning to the trajectory (states are never clamped).
inline Trajectory integrate(const OdeSystem& system, const ParameterVector& params,
                            const std::vector<double>& initial_state,
                            const TimeGrid& grid) {
    grid.validate();
    if (initial_state.size() != static_cast<std::size_t>(system.dimension))
        throw std::invalid_argument("integrate: initial state length != dimension");

    const std::size_t dim = initial_state.size();
    std::vector<double> state = initial_state;
    std::vector<double> next(dim);
    std::vector<double> work(5 * dim);

    Trajectory traj;
    traj.times.reserve(grid.output_times.size());
    traj.states.reserve(grid.output_times.size());

    double worst_negative = 0.0;
    double worst_negative_time = grid.t0;
    auto track_positivity = [&](double t) {
        for (double x : state) {
            if (x < worst_negative) {
                worst_negative = x;
                worst_negative_time = t;
            }
        }
    };

    double t_cur = grid.t0;
    track_positivity(t_cur);
    for (double t_out : grid.output_times) {
        while (t_cur < t_out) {
            const double h = std::min(grid.step, t_out - t_cur);
            detail::rk4_step_inplace(system, t_cur, state, h, params, next, work);
            state.swap(next);
            t_cur += h;
            track_positivity(t_cur);
        }
        t_cur = t_out;
        traj.times.push_back(t_out);
        traj.states.push_back(state);
    }

    if (worst_negative < kPositivityTolerance) {
        traj.warnings.push_back(
            "positivity violation: state component reached " +
            std::to_string(worst_negative) + " near t = " +
            std::to_string(worst_negative_time) + "; step may be too coarse");
    }
    return traj;
}

} // namespace epifit

#endif
