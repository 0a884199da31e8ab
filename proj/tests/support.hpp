#pragma once

// Seeded generators for the property tests.

#include <cmath>
#include <numbers>
#include <random>

#include "dualfield/dualcore.hpp"
#include "dualfield/grid.hpp"

namespace testing_support {

using namespace dualfield;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    /// Magnitudes spread over several decades.
    double scalar() { return normal() * std::pow(10.0, uniform(-3.0, 3.0)); }
    Vec3 vec() { return {scalar(), scalar(), scalar()}; }
    Vec3 unit_box(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
    DualAngle angle() { return DualAngle(uniform(-4.0 * std::numbers::pi, 4.0 * std::numbers::pi)); }
    ChargePair charges() { return {scalar(), scalar()}; }
    FieldVecPair fields() { return {vec(), vec()}; }
    PotentialPair potentials() {
        return {{scalar(), scalar(), scalar(), scalar()}, {scalar(), scalar(), scalar(), scalar()}};
    }
    UnitSystem units() { return {std::pow(10.0, uniform(-1.0, 1.0)), std::pow(10.0, uniform(-1.0, 1.0))}; }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline double rel(double a, double b) {
    const double s = std::fmax(std::fabs(a), std::fabs(b));
    return s == 0.0 ? 0.0 : std::fabs(a - b) / s;
}

inline double rel(const Vec3& a, const Vec3& b) {
    const double s = std::fmax(norm(a), norm(b));
    return s == 0.0 ? 0.0 : norm(a - b) / s;
}

/// Relative difference in the scaled (E, cB) plane.
inline double rel(const FieldVecPair& a, const FieldVecPair& b, const UnitSystem& u) {
    const double c = u.c();
    const double s = std::sqrt(dot(a.E, a.E) + c * c * dot(a.B, a.B)) +
                     std::sqrt(dot(b.E, b.E) + c * c * dot(b.B, b.B));
    const Vec3 dE = a.E - b.E;
    const Vec3 dB = a.B - b.B;
    return s == 0.0 ? 0.0 : std::sqrt(dot(dE, dE) + c * c * dot(dB, dB)) / s;
}

inline double rel(const ChargePair& a, const ChargePair& b, const UnitSystem& u) {
    const double s = charge_norm(a, u) + charge_norm(b, u);
    return s == 0.0 ? 0.0 : charge_norm({a.qe - b.qe, a.qm - b.qm}, u) / s;
}

inline double rel(const PotentialPair& a, const PotentialPair& b, const UnitSystem& u) {
    const double c = u.c();
    double n = 0.0, sa = 0.0, sb = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        n += std::pow(a.A[mu] - b.A[mu], 2) + std::pow((a.C[mu] - b.C[mu]) / c, 2);
        sa += a.A[mu] * a.A[mu] + std::pow(a.C[mu] / c, 2);
        sb += b.A[mu] * b.A[mu] + std::pow(b.C[mu] / c, 2);
    }
    const double s = std::sqrt(sa) + std::sqrt(sb);
    return s == 0.0 ? 0.0 : std::sqrt(n) / s;
}

}  // namespace testing_support
