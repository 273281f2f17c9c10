#ifndef EPIFIT_VERSION_HPP
#define EPIFIT_VERSION_HPP

namespace epifit {

inline constexpr const char* kVersion = "0.1.0";

} // namespace epifit

#endif
