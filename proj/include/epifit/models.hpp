#ifndef EPIFIT_MODELS_HPP
#define EPIFIT_MODELS_HPP

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epifit/ode.hpp"

namespace epifit {

/// Model family. Populations are measured in thousands, time in days.
enum class ModelKind {
    SirMassAction,  // S' = -bSI,           I' = bSI - gI
    SirHolling2,    // S' = -bSI/(1+hS),    I' = bSI/(1+hS) - gI
    SirRecruitment, // S' = G - bSI,        I' = bSI - gI
    Exponential,    // I(t) = I0 * exp(k t), closed form
};

inline std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::SirMassAction: return "sir_mass_action";
        case ModelKind::SirHolling2: return "sir_holling2";
        case ModelKind::SirRecruitment: return "sir_recruitment";
        case ModelKind::Exponential: return "exponential";
    }
    throw std::logic_error("unknown model kind");
}

inline ModelKind model_kind_from_string(const std::string& name) {
    if (name == "sir_mass_action") return ModelKind::SirMassAction;
    if (name == "sir_holling2") return ModelKind::SirHolling2;
    if (name == "sir_recruitment") return ModelKind::SirRecruitment;
    if (name == "exponential") return ModelKind::Exponential;
    throw std::invalid_argument("unknown model kind: " + name +
                                " (expected sir_mass_action, sir_holling2, "
                                "sir_recruitment or exponential)");
}

/// Open interval (lower, upper); either bound may be infinite.
struct Interval {
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    bool contains(double x) const { return std::isfinite(x) && x > lower && x < upper; }
};

/// Per-parameter open box of admissible values.
struct ParameterDomain {
    std::vector<Interval> box;

    bool contains(std::span<const double> params) const {
        if (params.size() != box.size()) return false;
        for (std::size_t i = 0; i < box.size(); ++i)
            if (!box[i].contains(params[i])) return false;
        return true;
    }
};

// Parameter layout indices. SIR-family vectors start [beta, gamma, S0, I0];
// the Holling and recruitment variants append h and Gamma respectively.
inline constexpr std::size_t kBeta = 0;
inline constexpr std::size_t kGamma = 1;
inline constexpr std::size_t kS0 = 2;
inline constexpr std::size_t kI0 = 3;
inline constexpr std::size_t kHandling = 4;    // SirHolling2 only
inline constexpr std::size_t kRecruitment = 4; // SirRecruitment only
inline constexpr std::size_t kExpI0 = 0;       // Exponential only
inline constexpr std::size_t kExpRate = 1;     // Exponential only

/// Monthly-active-user ceiling for the population parameters, in thousands.
inline constexpr double kDefaultPopulationCap = 3.02e5;

/// One member of the model family: its layout, names and admissible box.
struct ModelSpec {
    ModelKind kind = ModelKind::SirMassAction;
    std::vector<std::string> parameter_names;
    ParameterDomain domain;

    static ModelSpec make(ModelKind kind,
                          double population_cap = kDefaultPopulationCap) {
        const double inf = std::numeric_limits<double>::infinity();
        ModelSpec spec;
        spec.kind = kind;
        switch (kind) {
            case ModelKind::SirMassAction:
                spec.parameter_names = {"beta", "gamma", "S0", "I0"};
                spec.domain.box = {{0.0, inf}, {0.0, inf},
                                   {0.0, population_cap}, {0.0, population_cap}};
                break;
            case ModelKind::SirHolling2:
                spec.parameter_names = {"beta", "gamma", "S0", "I0", "h"};
                spec.domain.box = {{0.0, inf}, {0.0, inf},
                                   {0.0, population_cap}, {0.0, population_cap},
                                   {0.0, inf}};
                break;
            case ModelKind::SirRecruitment:
                spec.parameter_names = {"beta", "gamma", "S0", "I0", "Gamma"};
                spec.domain.box = {{0.0, inf}, {0.0, inf},
                                   {0.0, population_cap}, {0.0, population_cap},
                                   {0.0, inf}};
                break;
            case ModelKind::Exponential:
                spec.parameter_names = {"I0", "k"};
                spec.domain.box = {{0.0, population_cap}, {-inf, inf}};
                break;
        }
        return spec;
    }

    std::size_t parameter_count() const { return parameter_names.size(); }
    bool is_sir_family() const { return kind != ModelKind::Exponential; }

    /// Index of a parameter by name; throws if absent.
    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < parameter_names.size(); ++i)
            if (parameter_names[i] == name) return i;
        throw std::invalid_argument("model " + to_string(kind) +
                                    " has no parameter named " + name);
    }

    void require_in_domain(std::span<const double> params) const {
        if (params.size() != parameter_count())
            throw std::domain_error("parameter vector length " +
                                    std::to_string(params.size()) +
                                    " does not match " + to_string(kind));
        if (!domain.contains(params))
            throw std::domain_error("parameter vector outside admissible domain for " +
                                    to_string(kind));
    }
};

// ---------------------------------------------------------------------------
// Right-hand sides. State is [S, I] in thousands; derivatives are per day.
// ---------------------------------------------------------------------------

inline void sir_mass_action_rhs(std::span<const double> state,
                                std::span<const double> params,
                                std::span<double> out) {
    const double transmission = params[kBeta] * state[0] * state[1];
    out[0] = -transmission;
    out[1] = transmission - params[kGamma] * state[1];
}

inline void sir_holling2_rhs(std::span<const double> state,
                             std::span<const double> params,
                             std::span<double> out) {
    const double denom = 1.0 + params[kHandling] * state[0];
    if (std::abs(denom) < 1e-12)
        throw std::domain_error("holling singularity: |1 + h*S| < 1e-12 at S = " +
                                std::to_string(state[0]));
    const double transmission = params[kBeta] * state[0] * state[1] / denom;
    out[0] = -transmission;
    out[1] = transmission - params[kGamma] * state[1];
}

inline void sir_recruitment_rhs(std::span<const double> state,
                                std::span<const double> params,
                                std::span<double> out) {
    const double transmission = params[kBeta] * state[0] * state[1];
    out[0] = params[kRecruitment] - transmission;
    out[1] = transmission - params[kGamma] * state[1];
}

/// Closed form I(t) = I0 * exp(k t); no integration involved.
inline double exponential_model(double t, std::span<const double> params) {
    return params[kExpI0] * std::exp(params[kExpRate] * t);
}

/// OdeSystem for the SIR-family kinds; the exponential model has no ODE form.
inline OdeSystem make_system(const ModelSpec& spec) {
    OdeSystem system;
    system.dimension = 2;
    switch (spec.kind) {
        case ModelKind::SirMassAction:
            system.rhs = [](double, std::span<const double> x,
                            std::span<const double> p, std::span<double> dx) {
                sir_mass_action_rhs(x, p, dx);
            };
            break;
        case ModelKind::SirHolling2:
            system.rhs = [](double, std::span<const double> x,
                            std::span<const double> p, std::span<double> dx) {
                sir_holling2_rhs(x, p, dx);
            };
            break;
        case ModelKind::SirRecruitment:
            system.rhs = [](double, std::span<const double> x,
                            std::span<const double> p, std::span<double> dx) {
                sir_recruitment_rhs(x, p, dx);
            };
            break;
        case ModelKind::Exponential:
            throw std::logic_error("exponential model has no ODE system");
    }
    return system;
}

/// Initial state [S0, I0] for SIR-family parameter vectors.
inline std::vector<double> initial_state(const ModelSpec& spec,
                                         std::span<const double> params) {
    if (!spec.is_sir_family())
        throw std::logic_error("initial_state: not an SIR-family model");
    return {params[kS0], params[kI0]};
}

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

/// R0 = beta * S0 / gamma for an SIR-family parameter vector. Measured in
/// thousands of new posters elicited per initial thousand posters.
inline double basic_reproduction_number(std::span<const double> params) {
    if (!(params[kGamma] > 0.0))
        throw std::domain_error("basic_reproduction_number: gamma must be positive");
    return params[kBeta] * params[kS0] / params[kGamma];
}

/// Mean time an individual stays in the infectious class: 1/gamma days.
inline double mean_infectious_period(std::span<const double> params) {
    if (!(params[kGamma] > 0.0))
        throw std::domain_error("mean_infectious_period: gamma must be positive");
    return 1.0 / params[kGamma];
}

/// Early-outbreak linearization I0 * exp((beta*S0 - gamma) t), valid while
/// S(t) stays close to S0.
inline double linearized_infectious(double t, std::span<const double> params) {
    const double growth = params[kBeta] * params[kS0] - params[kGamma];
    return params[kI0] * std::exp(growth * t);
}

} // namespace epifit

#endif
