#ifndef EPIFIT_ERRORS_HPP
#define EPIFIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epifit {

/// Forward solve produced a non-finite value. Carries the time at which the
/// integration broke down.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// The normal matrix of the sensitivity system is singular or too
/// ill-conditioned to invert; names the near-null-space direction.
class NonIdentifiableError : public std::runtime_error {
public:
    NonIdentifiableError(const std::string& what, std::string direction)
        : std::runtime_error(what), direction_(std::move(direction)) {}
    const std::string& direction() const noexcept { return direction_; }

private:
    std::string direction_;
};

/// Every optimizer start failed; no usable minimum was found.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what, long line = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")"
                                      : what),
          line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

} // namespace epifit

#endif
