#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "epifit/models.hpp"
#include "epifit/ode.hpp"

using namespace epifit;

namespace {

OdeSystem scalar_system(double coefficient) {
    OdeSystem sys;
    sys.dimension = 1;
    sys.rhs = [coefficient](double, std::span<const double> x, std::span<const double>,
                            std::span<double> dx) { dx[0] = coefficient * x[0]; };
    return sys;
}

const ParameterVector kNoParams{};

// Table-style reference parameters used across the suite.
const ParameterVector kSirRef{0.0153, 0.3643, 156.6120, 2.2726};

} // namespace

TEST_CASE("rk4_step matches the degree-4 Taylor polynomial on x' = x") {
    const double h = 0.1;
    const auto out = rk4_step(scalar_system(1.0), 0.0, {1.0}, h, kNoParams);
    // For a linear autonomous system one RK4 step is exactly
    // 1 + h + h^2/2 + h^3/6 + h^4/24.
    const double taylor = 1.0 + h + h * h / 2.0 + h * h * h / 6.0 + h * h * h * h / 24.0;
    REQUIRE(out[0] == Catch::Approx(taylor).epsilon(1e-15));
    REQUIRE(out[0] == Catch::Approx(1.1051708333333333).epsilon(1e-12));
}

TEST_CASE("rk4_step leaves the state unchanged when the rhs is zero") {
    const auto out = rk4_step(scalar_system(0.0), 3.0, {5.0}, 0.7, kNoParams);
    REQUIRE(out[0] == 5.0);
}

TEST_CASE("rk4_step with beta = 0 decouples S in the SIR system") {
    const ModelSpec spec = ModelSpec::make(ModelKind::SirMassAction);
    const ParameterVector params{0.0, 0.3643, 156.6120, 2.2726};
    const auto out = rk4_step(make_system(spec), 0.0, {100.0, 2.0}, 0.01, params);
    REQUIRE(out[0] == 100.0);
    REQUIRE(out[1] < 2.0);
}

TEST_CASE("rk4_step validates its inputs") {
    REQUIRE_THROWS_AS(rk4_step(scalar_system(1.0), 0.0, {1.0}, 0.0, kNoParams),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(rk4_step(scalar_system(1.0), 0.0, {1.0, 2.0}, 0.1, kNoParams),
                      std::invalid_argument);
}

TEST_CASE("integrate reproduces exponential decay to 1e-9") {
    TimeGrid grid{0.0, 1.0, 1e-3, {1.0}};
    const Trajectory traj = integrate(scalar_system(-1.0), kNoParams, {1.0}, grid);
    REQUIRE(std::abs(traj.states[0][0] - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("integrate with output_times = [t0] returns the initial state") {
    TimeGrid grid{2.0, 2.0, 0.5, {2.0}};
    const Trajectory traj = integrate(scalar_system(-1.0), kNoParams, {7.5}, grid);
    REQUIRE(traj.times == std::vector<double>{2.0});
    REQUIRE(traj.states[0][0] == 7.5);
    REQUIRE(traj.warnings.empty());
}

TEST_CASE("SIR trajectory rises then falls with a single interior maximum") {
    const ModelSpec spec = ModelSpec::make(ModelKind::SirMassAction);
    TimeGrid grid = TimeGrid::dense(0.0, 14.0, 1e-3, 1.0);
    const Trajectory traj =
        integrate(make_system(spec), kSirRef, initial_state(spec, kSirRef), grid);

    std::size_t peak = 0;
    for (std::size_t j = 1; j < traj.states.size(); ++j)
        if (traj.states[j][1] > traj.states[peak][1]) peak = j;
    REQUIRE(peak > 0);
    REQUIRE(peak + 1 < traj.states.size());
    for (std::size_t j = 1; j <= peak; ++j)
        REQUIRE(traj.states[j][1] > traj.states[j - 1][1]);
    for (std::size_t j = peak + 1; j < traj.states.size(); ++j)
        REQUIRE(traj.states[j][1] < traj.states[j - 1][1]);

    // Brute-force oracle: ten-times-finer march must agree closely.
    TimeGrid fine = grid;
    fine.step = 1e-4;
    const Trajectory oracle =
        integrate(make_system(spec), kSirRef, initial_state(spec, kSirRef), fine);
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        REQUIRE(traj.states[j][0] ==
                Catch::Approx(oracle.states[j][0]).margin(1e-8));
        REQUIRE(traj.states[j][1] ==
                Catch::Approx(oracle.states[j][1]).margin(1e-8));
    }
}

TEST_CASE("halving the step shrinks the error by about 2^4") {
    auto max_error = [&](double h) {
        TimeGrid grid{0.0, 5.0, h, {1.0, 2.0, 3.0, 4.0, 5.0}};
        const Trajectory traj = integrate(scalar_system(-1.0), kNoParams, {1.0}, grid);
        double err = 0.0;
        for (std::size_t j = 0; j < traj.times.size(); ++j)
            err = std::max(err, std::abs(traj.states[j][0] - std::exp(-traj.times[j])));
        return err;
    };
    double previous = max_error(0.1);
    for (double h : {0.05, 0.025, 0.0125}) {
        const double current = max_error(h);
        const double ratio = previous / current;
        REQUIRE(ratio > 14.0);
        REQUIRE(ratio < 18.0);
        previous = current;
    }
}

TEST_CASE("integrate returns the requested output times bitwise") {
    const std::vector<double> requested{0.0, 0.3, 1.7, 2.0000000001, 13.99};
    TimeGrid grid{0.0, 14.0, 1e-2, requested};
    const Trajectory traj = integrate(scalar_system(-0.5), kNoParams, {1.0}, grid);
    REQUIRE(traj.times.size() == requested.size());
    for (std::size_t j = 0; j < requested.size(); ++j)
        REQUIRE(std::memcmp(&traj.times[j], &requested[j], sizeof(double)) == 0);
}

TEST_CASE("integrate is deterministic") {
    const ModelSpec spec = ModelSpec::make(ModelKind::SirMassAction);
    TimeGrid grid = TimeGrid::dense(0.0, 10.0, 1e-3, 0.5);
    const Trajectory a =
        integrate(make_system(spec), kSirRef, initial_state(spec, kSirRef), grid);
    const Trajectory b =
        integrate(make_system(spec), kSirRef, initial_state(spec, kSirRef), grid);
    REQUIRE(a.times == b.times);
    REQUIRE(a.states == b.states);
}

TEST_CASE("SIR invariants: S and S+I are nonincreasing") {
    const ModelSpec spec = ModelSpec::make(ModelKind::SirMassAction);
    TimeGrid grid = TimeGrid::dense(0.0, 30.0, 1e-3, 0.25);
    const Trajectory traj =
        integrate(make_system(spec), kSirRef, initial_state(spec, kSirRef), grid);
    for (std::size_t j = 1; j < traj.states.size(); ++j) {
        REQUIRE(traj.states[j][0] <= traj.states[j - 1][0] + 1e-9);
        const double total = traj.states[j][0] + traj.states[j][1];
        const double total_prev = traj.states[j - 1][0] + traj.states[j - 1][1];
        REQUIRE(total <= total_prev + 1e-9);
    }
    REQUIRE(traj.warnings.empty());
}

TEST_CASE("a blow-up raises an integration failure naming the time") {
    OdeSystem quadratic;
    quadratic.dimension = 1;
    quadratic.rhs = [](double, std::span<const double> x, std::span<const double>,
                       std::span<double> dx) { dx[0] = x[0] * x[0]; };
    TimeGrid grid{0.0, 5.0, 1e-2, {5.0}};
    // x' = x^2 from x(0) = 1 is singular at t = 1.
    REQUIRE_THROWS_AS(integrate(quadratic, kNoParams, {1.0}, grid), IntegrationError);
    try {
        integrate(quadratic, kNoParams, {1.0}, grid);
    } catch (const IntegrationError& e) {
        REQUIRE(e.time() > 0.9);
        REQUIRE(e.time() <= 5.0);
        REQUIRE(std::string(e.what()).find("t = ") != std::string::npos);
    }
}

TEST_CASE("crossing below -1e-9 attaches a positivity warning") {
    OdeSystem constant_decay;
    constant_decay.dimension = 1;
    constant_decay.rhs = [](double, std::span<const double>, std::span<const double>,
                            std::span<double> dx) { dx[0] = -1.0; };
    TimeGrid grid{0.0, 1.0, 1e-2, {1.0}};
    const Trajectory traj = integrate(constant_decay, kNoParams, {0.5}, grid);
    REQUIRE(traj.states[0][0] == Catch::Approx(-0.5).margin(1e-12));
    REQUIRE_FALSE(traj.warnings.empty());
    REQUIRE(traj.warnings.front().find("positivity") != std::string::npos);
}

TEST_CASE("TimeGrid validation rejects malformed grids") {
    REQUIRE_THROWS_AS((TimeGrid{0.0, 1.0, 0.0, {0.5}}.validate()), std::invalid_argument);
    REQUIRE_THROWS_AS((TimeGrid{0.0, 1.0, 2.0, {0.5}}.validate()), std::invalid_argument);
    REQUIRE_THROWS_AS((TimeGrid{0.0, 1.0, 0.1, {}}.validate()), std::invalid_argument);
    REQUIRE_THROWS_AS((TimeGrid{0.0, 1.0, 0.1, {0.2, 0.2}}.validate()),
                      std::invalid_argument);
    REQUIRE_THROWS_AS((TimeGrid{0.0, 1.0, 0.1, {-0.1, 0.5}}.validate()),
                      std::invalid_argument);
    REQUIRE_NOTHROW((TimeGrid{0.0, 1.0, 0.1, {0.0, 0.5, 1.0}}.validate()));
}
