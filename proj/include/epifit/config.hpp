#ifndef EPIFIT_CONFIG_HPP
#define EPIFIT_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "epifit/errors.hpp"
#include "epifit/estimation.hpp"
#include "epifit/models.hpp"
#include "epifit/nelder_mead.hpp"
#include "epifit/uncertainty.hpp"

namespace epifit {

/// Units the input counts are declared in. The model always works in
/// thousands; raw counts are divided by 1000 on ingestion.
enum class Units { Thousands, Raw };

inline Units units_from_string(std::string_view name) {
    if (name == "thousands") return Units::Thousands;
    if (name == "raw") return Units::Raw;
    throw std::invalid_argument("unknown units '" + std::string(name) +
                                "' (expected thousands or raw)");
}

inline std::string to_string(Units units) {
    return units == Units::Raw ? "raw" : "thousands";
}

/// One run's worth of settings: model choice, solver and optimizer knobs,
/// units declaration, and optional per-parameter domain overrides.
struct RunConfig {
    ModelKind model = ModelKind::SirMassAction;
    Units units = Units::Thousands;
    double grid_step = kDefaultGridStep;
    int n_starts = 32;
    std::uint64_t seed = 1;
    double rel_step = kDefaultSensitivityRelStep;
    NmOptions nm;
    double population_cap = kDefaultPopulationCap;
    /// Axis-label anchor for day 0 (ISO date). Never shifts the data.
    std::string t0_anchor;
    /// Keyed by parameter name: overrides for the domain box endpoints.
    std::map<std::string, double> domain_lower;
    std::map<std::string, double> domain_upper;

    void validate() const {
        if (!(grid_step > 0.0)) throw std::invalid_argument("config: grid_step must be positive");
        if (n_starts < 1) throw std::invalid_argument("config: n_starts must be >= 1");
        if (!(rel_step > 0.0)) throw std::invalid_argument("config: rel_step must be positive");
        if (!(nm.function_tol > 0.0) || !(nm.param_tol > 0.0))
            throw std::invalid_argument("config: optimizer tolerances must be positive");
        if (nm.max_evals < 1) throw std::invalid_argument("config: max_evals must be >= 1");
        if (!(nm.initial_simplex_scale > 0.0))
            throw std::invalid_argument("config: initial_simplex_scale must be positive");
        if (!(population_cap > 0.0))
            throw std::invalid_argument("config: population_cap must be positive");
        if (!t0_anchor.empty()) {
            const bool iso = t0_anchor.size() == 10 && t0_anchor[4] == '-' &&
                             t0_anchor[7] == '-' &&
                             t0_anchor.find_first_not_of("0123456789-") == std::string::npos;
            if (!iso)
                throw std::invalid_argument("config: t0_anchor must be an ISO date "
                                            "(YYYY-MM-DD)");
        }
    }
};

/// Model spec for a config: the configured population cap plus any explicit
/// per-parameter box overrides. Unknown parameter names are rejected so a
/// config written for one model is not silently misapplied to another.
inline ModelSpec make_model(const RunConfig& config) {
    ModelSpec spec = ModelSpec::make(config.model, config.population_cap);
    auto index_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < spec.parameter_names.size(); ++i)
            if (spec.parameter_names[i] == name) return i;
        throw std::invalid_argument("config: domain override for unknown parameter '" +
                                    name + "' of model " + to_string(config.model));
    };
    for (const auto& [name, lo] : config.domain_lower) spec.domain.box[index_of(name)].lower = lo;
    for (const auto& [name, hi] : config.domain_upper) spec.domain.box[index_of(name)].upper = hi;
    for (std::size_t i = 0; i < spec.domain.box.size(); ++i)
        if (!(spec.domain.box[i].lower < spec.domain.box[i].upper))
            throw std::invalid_argument("config: empty domain for parameter '" +
                                        spec.parameter_names[i] + "'");
    return spec;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

inline double parse_double(const std::string& text, long line) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("invalid number '" + text + "'", line);
    return value;
}

inline std::int64_t parse_int(const std::string& text, long line) {
    std::int64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("invalid integer '" + text + "'", line);
    return value;
}

} // namespace detail

/// Flat key = value file; `#` starts a comment, blank lines skipped.
/// Unknown keys are an error so typos do not pass silently.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
    std::string raw_line;
    long line_no = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        const std::string line = detail::trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key = value", line_no);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (value.empty()) throw ParseError("empty value for '" + key + "'", line_no);

        if (key == "model") {
            try {
                base.model = model_kind_from_string(value);
            } catch (const std::invalid_argument& e) {
                throw ParseError(e.what(), line_no);
            }
        } else if (key == "units") {
            try {
                base.units = units_from_string(value);
            } catch (const std::invalid_argument& e) {
                throw ParseError(e.what(), line_no);
            }
        } else if (key == "grid_step") {
            base.grid_step = detail::parse_double(value, line_no);
        } else if (key == "n_starts") {
            base.n_starts = static_cast<int>(detail::parse_int(value, line_no));
        } else if (key == "seed") {
            base.seed = static_cast<std::uint64_t>(detail::parse_int(value, line_no));
        } else if (key == "rel_step") {
            base.rel_step = detail::parse_double(value, line_no);
        } else if (key == "function_tol") {
            base.nm.function_tol = detail::parse_double(value, line_no);
        } else if (key == "param_tol") {
            base.nm.param_tol = detail::parse_double(value, line_no);
        } else if (key == "max_evals") {
            base.nm.max_evals = detail::parse_int(value, line_no);
        } else if (key == "initial_simplex_scale") {
            base.nm.initial_simplex_scale = detail::parse_double(value, line_no);
        } else if (key == "population_cap") {
            base.population_cap = detail::parse_double(value, line_no);
        } else if (key == "t0_anchor") {
            base.t0_anchor = value;
        } else if (key.rfind("domain.", 0) == 0) {
            const std::string rest = key.substr(7);
            const auto dot = rest.rfind('.');
            if (dot == std::string::npos)
                throw ParseError("domain override must be domain.<name>.lower|upper", line_no);
            const std::string name = rest.substr(0, dot);
            const std::string side = rest.substr(dot + 1);
            if (name.empty() || (side != "lower" && side != "upper"))
                throw ParseError("domain override must be domain.<name>.lower|upper", line_no);
            const double endpoint = detail::parse_double(value, line_no);
            if (side == "lower")
                base.domain_lower[name] = endpoint;
            else
                base.domain_upper[name] = endpoint;
        } else {
            throw ParseError("unknown config key '" + key + "'", line_no);
        }
    }
    return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file " + path.string());
    return parse_config(in, base);
}

namespace detail {

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

} // namespace detail

/// Canonical rendering of every setting; two configs hash equal iff they
/// render equal.
inline std::string canonical_string(const RunConfig& config) {
    std::ostringstream oss;
    oss.precision(17);
    oss << "model=" << to_string(config.model) << ";units=" << to_string(config.units)
        << ";grid_step=" << config.grid_step << ";n_starts=" << config.n_starts
        << ";seed=" << config.seed << ";rel_step=" << config.rel_step
        << ";function_tol=" << config.nm.function_tol
        << ";param_tol=" << config.nm.param_tol << ";max_evals=" << config.nm.max_evals
        << ";initial_simplex_scale=" << config.nm.initial_simplex_scale
        << ";population_cap=" << config.population_cap
        << ";t0_anchor=" << config.t0_anchor;
    for (const auto& [name, lo] : config.domain_lower)
        oss << ";domain." << name << ".lower=" << lo;
    for (const auto& [name, hi] : config.domain_upper)
        oss << ";domain." << name << ".upper=" << hi;
    return oss.str();
}

inline std::string config_hash(const RunConfig& config) {
    std::ostringstream oss;
    oss << std::hex;
    oss.width(16);
    oss.fill('0');
    oss << detail::fnv1a64(canonical_string(config));
    return oss.str();
}

} // namespace epifit

#endif
