#ifndef EPIFIT_UNCERTAINTY_HPP
#define EPIFIT_UNCERTAINTY_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "epifit/errors.hpp"
#include "epifit/estimation.hpp"
#include "epifit/models.hpp"

namespace epifit {

/// Stacked sensitivity rows: entries(j, k) = d I(t_j, theta) / d theta_k.
struct SensitivityMatrix {
    Eigen::MatrixXd entries;
    /// Columns where a perturbed point left the domain and a one-sided
    /// difference was used instead.
    std::vector<std::size_t> one_sided_columns;

    std::size_t rows() const { return static_cast<std::size_t>(entries.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(entries.cols()); }
};

inline constexpr double kDefaultSensitivityRelStep = 1e-4;

/// Central finite differences of the forward map with per-parameter step
/// delta_k = rel_step * max(|theta_k|, 1e-6); each column costs two full
/// forward solves. Falls back to a one-sided difference (and flags the
/// column) when a perturbed point would leave the domain.
inline SensitivityMatrix sensitivity_matrix(const ModelSpec& model,
                                            const std::vector<double>& times,
                                            const ParameterVector& theta,
                                            double rel_step = kDefaultSensitivityRelStep,
                                            double grid_step = kDefaultGridStep) {
    model.require_in_domain(theta);
    if (times.empty())
        throw std::invalid_argument("sensitivity_matrix: no observation times");
    const std::size_t n = times.size();
    const std::size_t p = model.parameter_count();

    SensitivityMatrix result;
    result.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));

    std::optional<std::vector<double>> base; // only solved if a fallback needs it
    for (std::size_t k = 0; k < p; ++k) {
        const double delta = rel_step * std::max(std::abs(theta[k]), 1e-6);
        ParameterVector plus = theta;
        ParameterVector minus = theta;
        plus[k] += delta;
        minus[k] -= delta;
        const bool plus_ok = model.domain.contains(plus);
        const bool minus_ok = model.domain.contains(minus);

        std::vector<double> hi, lo;
        double denom = 2.0 * delta;
        if (plus_ok && minus_ok) {
            hi = predict_observable(model, plus, times, grid_step);
            lo = predict_observable(model, minus, times, grid_step);
        } else if (plus_ok || minus_ok) {
            if (!base) base = predict_observable(model, theta, times, grid_step);
            hi = plus_ok ? predict_observable(model, plus, times, grid_step) : *base;
            lo = plus_ok ? *base : predict_observable(model, minus, times, grid_step);
            denom = delta;
            result.one_sided_columns.push_back(k);
        } else {
            throw std::domain_error(
                "sensitivity_matrix: theta too close to the domain boundary in " +
                model.parameter_names[k]);
        }
        for (std::size_t j = 0; j < n; ++j)
            result.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                (hi[j] - lo[j]) / denom;
    }
    return result;
}

/// Bias-adjusted residual variance: SSR at the minimum over (n - p).
inline double estimate_sigma2(double objective_at_min, std::size_t n, std::size_t p) {
    if (n <= p)
        throw std::domain_error("estimate_sigma2: n <= p leaves no residual degrees "
                                "of freedom");
    if (objective_at_min < 0.0)
        throw std::domain_error("estimate_sigma2: negative objective");
    return objective_at_min / static_cast<double>(n - p);
}

inline constexpr double kMaxConditionNumber = 1e12;

namespace detail {

inline std::string describe_direction(const Eigen::VectorXd& v,
                                      const std::vector<std::string>& names) {
    std::ostringstream oss;
    oss.precision(3);
    Eigen::Index dominant = 0;
    v.cwiseAbs().maxCoeff(&dominant);
    oss << "dominated by " << names[static_cast<std::size_t>(dominant)] << "; [";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) oss << ", ";
        oss << names[static_cast<std::size_t>(i)] << ": " << v(i);
    }
    oss << "]";
    return oss.str();
}

} // namespace detail

/// Asymptotic OLS covariance sigma2 * (sum_j D_j^T D_j)^-1, computed through
/// the eigendecomposition of the normal matrix so near-singular directions
/// are detected and named.
inline Eigen::MatrixXd covariance_matrix(const SensitivityMatrix& D, double sigma2,
                                         const std::vector<std::string>& parameter_names = {}) {
    if (sigma2 < 0.0) throw std::domain_error("covariance_matrix: negative sigma2");
    const Eigen::MatrixXd normal = D.entries.transpose() * D.entries;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(normal);
    if (eigen.info() != Eigen::Success)
        throw std::runtime_error("covariance_matrix: eigendecomposition failed");
    const Eigen::VectorXd& lambda = eigen.eigenvalues(); // ascending
    const double lambda_min = lambda(0);
    const double lambda_max = lambda(lambda.size() - 1);

    std::vector<std::string> names = parameter_names;
    if (names.size() != D.cols()) {
        names.clear();
        for (std::size_t k = 0; k < D.cols(); ++k)
            names.push_back("theta" + std::to_string(k + 1));
    }
    if (!(lambda_min > 0.0) || lambda_max / lambda_min >= kMaxConditionNumber) {
        const std::string direction =
            detail::describe_direction(eigen.eigenvectors().col(0), names);
        throw NonIdentifiableError(
            "covariance_matrix: normal matrix is singular or ill-conditioned "
            "(near-null direction " + direction + ")",
            direction);
    }

    const Eigen::MatrixXd inverse = eigen.eigenvectors() *
                                    lambda.cwiseInverse().asDiagonal() *
                                    eigen.eigenvectors().transpose();
    Eigen::MatrixXd cov = sigma2 * inverse;
    cov = 0.5 * (cov + cov.transpose().eval()); // exact symmetry
    return cov;
}

/// A point estimate bracketed by estimate +/- 2 SE.
struct IntervalEstimate {
    double lower = 0.0;
    double estimate = 0.0;
    double upper = 0.0;
    bool contains(double x) const { return x > lower && x < upper; }
    double half_width() const { return 0.5 * (upper - lower); }
};

/// Per-parameter intervals theta_k +/- 2 sqrt(cov_kk).
inline std::vector<IntervalEstimate> confidence_intervals(const ParameterVector& theta,
                                                          const Eigen::MatrixXd& cov) {
    if (static_cast<std::size_t>(cov.rows()) != theta.size() ||
        static_cast<std::size_t>(cov.cols()) != theta.size())
        throw std::invalid_argument("confidence_intervals: covariance shape mismatch");
    std::vector<IntervalEstimate> intervals(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double var = cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        if (var < 0.0)
            throw std::domain_error("confidence_intervals: negative variance for "
                                    "parameter " + std::to_string(k + 1));
        const double se = std::sqrt(var);
        intervals[k] = {theta[k] - 2.0 * se, theta[k], theta[k] + 2.0 * se};
    }
    return intervals;
}

struct DerivedIntervals {
    IntervalEstimate r0;
    IntervalEstimate infectious_period;
};

/// Interval bounds for R0 = beta*S0/gamma and 1/gamma by endpoint arithmetic
/// on the monotone expressions. Expects SIR-family parameter intervals
/// ordered [beta, gamma, S0, ...] with positive lower endpoints.
inline DerivedIntervals derived_intervals(std::span<const IntervalEstimate> params) {
    if (params.size() < 3)
        throw std::invalid_argument("derived_intervals: need beta, gamma, S0 intervals");
    const IntervalEstimate& beta = params[kBeta];
    const IntervalEstimate& gamma = params[kGamma];
    const IntervalEstimate& s0 = params[kS0];
    for (const IntervalEstimate* iv : {&beta, &gamma, &s0})
        if (!(iv->lower > 0.0))
            throw std::domain_error("derived_intervals: parameter interval lower "
                                    "endpoint must be positive");
    DerivedIntervals out;
    out.r0 = {beta.lower * s0.lower / gamma.upper,
              beta.estimate * s0.estimate / gamma.estimate,
              beta.upper * s0.upper / gamma.lower};
    out.infectious_period = {1.0 / gamma.upper, 1.0 / gamma.estimate, 1.0 / gamma.lower};
    return out;
}

/// Delta-method alternative: linearizes R0 and 1/gamma at theta_hat and
/// propagates the parameter covariance, which accounts for correlations the
/// endpoint arithmetic ignores.
inline DerivedIntervals derived_intervals_delta(const ParameterVector& theta,
                                                const Eigen::MatrixXd& cov) {
    const double beta = theta[kBeta];
    const double gamma = theta[kGamma];
    const double s0 = theta[kS0];
    if (!(gamma > 0.0))
        throw std::domain_error("derived_intervals_delta: gamma must be positive");

    const std::size_t p = theta.size();
    Eigen::VectorXd grad_r0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    grad_r0(kBeta) = s0 / gamma;
    grad_r0(kGamma) = -beta * s0 / (gamma * gamma);
    grad_r0(kS0) = beta / gamma;
    const double var_r0 = grad_r0.dot(cov * grad_r0);

    Eigen::VectorXd grad_period = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    grad_period(kGamma) = -1.0 / (gamma * gamma);
    const double var_period = grad_period.dot(cov * grad_period);

    const double r0 = beta * s0 / gamma;
    const double period = 1.0 / gamma;
    const double se_r0 = std::sqrt(std::max(var_r0, 0.0));
    const double se_period = std::sqrt(std::max(var_period, 0.0));
    DerivedIntervals out;
    out.r0 = {r0 - 2.0 * se_r0, r0, r0 + 2.0 * se_r0};
    out.infectious_period = {period - 2.0 * se_period, period, period + 2.0 * se_period};
    return out;
}

/// Full uncertainty pipeline output for one fit.
struct UncertaintyReport {
    double sigma2_hat = 0.0;
    Eigen::MatrixXd covariance;
    std::vector<double> standard_errors;
    std::vector<IntervalEstimate> intervals; // per parameter, +/- 2 SE
    /// SIR family only: derived quantities in both interval styles.
    std::optional<DerivedIntervals> derived_endpoint;
    std::optional<DerivedIntervals> derived_delta;
    /// Exponential decay fits report 1/|k| as the mean infectious period.
    std::optional<IntervalEstimate> decay_period;
    std::vector<std::size_t> one_sided_columns;
    std::string derived_endpoint_note; // set when endpoint arithmetic was skipped
    /// Reading of the covariance formula actually applied.
    std::string covariance_formula = "sigma2 * inv(sum_j Dj^T Dj)";
};

struct UncertaintyOptions {
    double rel_step = kDefaultSensitivityRelStep;
    double grid_step = kDefaultGridStep;
};

/// Sensitivities, residual variance, covariance, 2-SE intervals and derived
/// quantities for a completed fit.
inline UncertaintyReport quantify_uncertainty(const ModelSpec& model,
                                              const Dataset& dataset,
                                              const FitResult& fit,
                                              const UncertaintyOptions& opts = {}) {
    const std::size_t n = dataset.size();
    const std::size_t p = model.parameter_count();

    UncertaintyReport report;
    const SensitivityMatrix D =
        sensitivity_matrix(model, dataset.times, fit.theta_hat, opts.rel_step, opts.grid_step);
    report.one_sided_columns = D.one_sided_columns;
    report.sigma2_hat = estimate_sigma2(fit.objective, n, p);
    report.covariance = covariance_matrix(D, report.sigma2_hat, model.parameter_names);
    report.standard_errors.resize(p);
    for (std::size_t k = 0; k < p; ++k)
        report.standard_errors[k] =
            std::sqrt(report.covariance(static_cast<Eigen::Index>(k),
                                        static_cast<Eigen::Index>(k)));
    report.intervals = confidence_intervals(fit.theta_hat, report.covariance);

    if (model.is_sir_family()) {
        report.derived_delta = derived_intervals_delta(fit.theta_hat, report.covariance);
        try {
            report.derived_endpoint = derived_intervals(report.intervals);
        } catch (const std::domain_error& e) {
            report.derived_endpoint_note =
                std::string("endpoint interval arithmetic unavailable: ") + e.what();
        }
    } else {
        const double k_hat = fit.theta_hat[kExpRate];
        const double se_k = report.standard_errors[kExpRate];
        const double abs_k = std::abs(k_hat);
        if (abs_k > 0.0) {
            // 1/|k| with endpoint arithmetic over (|k|-2SE, |k|+2SE) when the
            // rate interval excludes zero.
            IntervalEstimate period;
            period.estimate = 1.0 / abs_k;
            if (abs_k - 2.0 * se_k > 0.0) {
                period.lower = 1.0 / (abs_k + 2.0 * se_k);
                period.upper = 1.0 / (abs_k - 2.0 * se_k);
            } else {
                period.lower = 1.0 / (abs_k + 2.0 * se_k);
                period.upper = std::numeric_limits<double>::infinity();
            }
            report.decay_period = period;
        }
    }
    return report;
}

} // namespace epifit

#endif
