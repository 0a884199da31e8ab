#pragma once

#include <cmath>
#include <string>

#include "dualfield/errors.hpp"

namespace dualfield {

/// Vacuum constants (c, ε₀); μ₀ is derived so that μ₀ε₀c² = 1.
///
/// Default-constructed units are the dimensionless c = ε₀ = 1 system used
/// throughout the tests.
class UnitSystem {
public:
    UnitSystem() = default;

    UnitSystem(double c, double eps0) : c_(c), eps0_(eps0) {
        if (!(std::isfinite(c) && c > 0.0)) {
            throw InvalidArgument("UnitSystem: c must be finite and positive, got " + std::to_string(c));
        }
        if (!(std::isfinite(eps0) && eps0 > 0.0)) {
            throw InvalidArgument("UnitSystem: eps0 must be finite and positive, got " +
                                  std::to_string(eps0));
        }
    }

    static UnitSystem natural() { return {}; }
    static UnitSystem si() { return {299792458.0, 8.8541878128e-12}; }

    [[nodiscard]] double c() const { return c_; }
    [[nodiscard]] double eps0() const { return eps0_; }
    [[nodiscard]] double mu0() const { return 1.0 / (eps0_ * c_ * c_); }

private:
    double c_{1.0};
    double eps0_{1.0};
};

}  // namespace dualfield
