#ifndef EPIFIT_BOUNDS_HPP
#define EPIFIT_BOUNDS_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "epifit/models.hpp"

namespace epifit {

/// Smooth bijection between one open interval and the real line:
///   (a, b)      <-> logit of the normalized coordinate
///   (a, +inf)   <-> log(x - a)
///   (-inf, b)   <-> log(b - x)
///   (-inf,+inf) <-> identity
/// Lets a simplex search run unconstrained while every probed point maps
/// back into the open box.
class IntervalTransform {
public:
    explicit IntervalTransform(Interval iv) : iv_(iv) {
        const bool lo = std::isfinite(iv.lower);
        const bool hi = std::isfinite(iv.upper);
        kind_ = lo ? (hi ? Kind::Finite : Kind::LowerOnly)
                   : (hi ? Kind::UpperOnly : Kind::Free);
        if (kind_ == Kind::Finite && !(iv.upper > iv.lower))
            throw std::invalid_argument("IntervalTransform: empty interval");
    }

    double to_unbounded(double x) const {
        switch (kind_) {
            case Kind::Free: return x;
            case Kind::LowerOnly: return std::log(x - iv_.lower);
            case Kind::UpperOnly: return std::log(iv_.upper - x);
            case Kind::Finite: {
                const double u = (x - iv_.lower) / (iv_.upper - iv_.lower);
                return std::log(u / (1.0 - u));
            }
        }
        return x;
    }

    double to_bounded(double z) const {
        switch (kind_) {
            case Kind::Free: return z;
            case Kind::LowerOnly: return iv_.lower + std::exp(z);
            case Kind::UpperOnly: return iv_.upper - std::exp(z);
            case Kind::Finite: {
                // Overflow-safe logistic; saturates to an endpoint only in
                // the far tails, which callers treat as out-of-domain.
                if (z >= 0.0) {
                    const double e = std::exp(-z);
                    return (iv_.lower * e + iv_.upper) / (1.0 + e);
                }
                const double e = std::exp(z);
                return (iv_.lower + iv_.upper * e) / (1.0 + e);
            }
        }
        return z;
    }

private:
    enum class Kind { Free, LowerOnly, UpperOnly, Finite };
    Interval iv_;
    Kind kind_;
};

/// Per-coordinate transform for a whole parameter box.
class DomainTransform {
public:
    explicit DomainTransform(const ParameterDomain& domain) {
        transforms_.reserve(domain.box.size());
        for (const Interval& iv : domain.box) transforms_.emplace_back(iv);
    }

    std::size_t size() const { return transforms_.size(); }

    std::vector<double> to_unbounded(std::span<const double> x) const {
        std::vector<double> z(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            z[i] = transforms_[i].to_unbounded(x[i]);
        return z;
    }

    std::vector<double> to_bounded(std::span<const double> z) const {
        std::vector<double> x(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            x[i] = transforms_[i].to_bounded(z[i]);
        return x;
    }

private:
    std::vector<IntervalTransform> transforms_;
};

} // namespace epifit

#endif
