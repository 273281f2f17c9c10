#ifndef EPIFIT_NELDER_MEAD_HPP
#define EPIFIT_NELDER_MEAD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "epifit/bounds.hpp"
#include "epifit/models.hpp"

namespace epifit {

struct NmOptions {
    double function_tol = 1e-10;        // absolute spread across the simplex
    double param_tol = 1e-8;            // simplex diameter, transformed space
    std::int64_t max_evals = 100000;
    double initial_simplex_scale = 0.25; // per-coordinate offset, transformed space
};

struct NmResult {
    std::vector<double> x;
    double fmin = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::int64_t n_evaluations = 0;
};

/// Nelder-Mead simplex search in R^n with the classical coefficients:
/// reflection 1, expansion 2, contraction 0.5, shrink 0.5. Stops when the
/// function spread falls below function_tol, the simplex diameter falls
/// below param_tol, or the evaluation budget is exhausted (converged=false).
inline NmResult nelder_mead(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> start, const NmOptions& opts) {
    constexpr double kReflect = 1.0;
    constexpr double kExpand = 2.0;
    constexpr double kContract = 0.5;
    constexpr double kShrink = 0.5;

    const std::size_t n = start.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");

    NmResult result;
    auto eval = [&](std::span<const double> x) {
        ++result.n_evaluations;
        return objective(x);
    };

    // Vertices: start plus one axis offset per coordinate.
    std::vector<std::vector<double>> verts(n + 1, std::vector<double>(start.begin(), start.end()));
    for (std::size_t j = 0; j < n; ++j) verts[j + 1][j] += opts.initial_simplex_scale;
    std::vector<double> fvals(n + 1);
    for (std::size_t j = 0; j <= n; ++j) fvals[j] = eval(verts[j]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);

    while (true) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n - 1];

        const double spread = fvals[worst] - fvals[best];
        double diameter = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            for (std::size_t i = 0; i < n; ++i)
                diameter = std::max(diameter, std::abs(verts[j][i] - verts[best][i]));
        }
        if (spread <= opts.function_tol || diameter <= opts.param_tol) {
            result.converged = true;
            break;
        }
        if (result.n_evaluations >= opts.max_evals) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t j = 0; j <= n; ++j) {
            if (j == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += verts[j][i];
        }
        for (std::size_t i = 0; i < n; ++i) centroid[i] /= static_cast<double>(n);

        for (std::size_t i = 0; i < n; ++i)
            xr[i] = centroid[i] + kReflect * (centroid[i] - verts[worst][i]);
        const double fr = eval(xr);

        if (fr < fvals[best]) {
            for (std::size_t i = 0; i < n; ++i)
                xe[i] = centroid[i] + kExpand * (xr[i] - centroid[i]);
            const double fe = eval(xe);
            if (fe < fr) {
                verts[worst] = xe;
                fvals[worst] = fe;
            } else {
                verts[worst] = xr;
                fvals[worst] = fr;
            }
        } else if (fr < fvals[second_worst]) {
            verts[worst] = xr;
            fvals[worst] = fr;
        } else {
            bool shrink = false;
            if (fr < fvals[worst]) {
                // Outside contraction between centroid and reflected point.
                for (std::size_t i = 0; i < n; ++i)
                    xc[i] = centroid[i] + kContract * (xr[i] - centroid[i]);
                const double fc = eval(xc);
                if (fc <= fr) {
                    verts[worst] = xc;
                    fvals[worst] = fc;
                } else {
                    shrink = true;
                }
            } else {
                // Inside contraction toward the worst vertex.
                for (std::size_t i = 0; i < n; ++i)
                    xc[i] = centroid[i] + kContract * (verts[worst][i] - centroid[i]);
                const double fc = eval(xc);
                if (fc < fvals[worst]) {
                    verts[worst] = xc;
                    fvals[worst] = fc;
                } else {
                    shrink = true;
                }
            }
            if (shrink) {
                for (std::size_t j = 0; j <= n; ++j) {
                    if (j == best) continue;
                    for (std::size_t i = 0; i < n; ++i)
                        verts[j][i] = verts[best][i] + kShrink * (verts[j][i] - verts[best][i]);
                    fvals[j] = eval(verts[j]);
                }
            }
        }
    }

    const std::size_t best =
        static_cast<std::size_t>(std::min_element(fvals.begin(), fvals.end()) - fvals.begin());
    result.x = verts[best];
    result.fmin = fvals[best];
    return result;
}

/// Value returned to the simplex when a probe cannot be evaluated (forward
/// solve blew up or the transform saturated onto the box boundary). Finite
/// and orderable so the search simply retreats.
inline constexpr double kObjectiveSentinel = 1e30;

struct BoundedMinimum {
    ParameterVector x;
    double fmin = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::int64_t n_evaluations = 0;
};

/// Minimizes over an open box by running Nelder-Mead unconstrained in
/// transformed space. Every point handed to `objective` (and to `observer`,
/// when given) lies strictly inside the domain; the returned point does too.
inline BoundedMinimum nelder_mead_minimize(
    const std::function<double(const ParameterVector&)>& objective,
    const ParameterVector& start, const ParameterDomain& domain,
    const NmOptions& opts,
    const std::function<void(const ParameterVector&, double)>& observer = {}) {
    if (start.size() != domain.box.size())
        throw std::invalid_argument("nelder_mead_minimize: start/domain size mismatch");
    if (!domain.contains(start))
        throw std::domain_error("nelder_mead_minimize: start outside domain");

    const DomainTransform transform(domain);
    auto wrapped = [&](std::span<const double> z) -> double {
        const ParameterVector x = transform.to_bounded(z);
        if (!domain.contains(x)) return kObjectiveSentinel;
        const double f = objective(x);
        if (observer) observer(x, f);
        return f;
    };

    const std::vector<double> z0 = transform.to_unbounded(start);
    const NmResult inner = nelder_mead(wrapped, z0, opts);

    BoundedMinimum out;
    out.x = transform.to_bounded(inner.x);
    if (!domain.contains(out.x)) out.x = start; // saturated tail probe; keep start
    out.fmin = inner.fmin;
    out.converged = inner.converged;
    out.n_evaluations = inner.n_evaluations;
    return out;
}

} // namespace epifit

#endif
