#pragma once

// Analytic point-charge fields, Gaussian charge deposition, field synthesis
// from the potential pair, and the spectral transverse/longitudinal split.
//
// Time-derivative convention: ∂⁰ = (1/c)∂_t with metric signature (+,−,−,−),
// so the potentials' time derivatives are stored as ∂_t (not ∂⁰).

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dualfield/dualcore.hpp"
#include "dualfield/grid.hpp"
#include "dualfield/spectral.hpp"

namespace dualfield {

using GridFieldPair = BasicFieldPair<VectorField>;
using GridChargePair = BasicChargePair<ScalarField>;
using GridPotentialPair = BasicPotentialPair<ScalarField>;

inline GridFieldPair zero_fields(const Grid3& g) { return {VectorField(g), VectorField(g)}; }

inline GridPotentialPair zero_potentials(const Grid3& g) {
    const ScalarField z(g);
    return {{z, z, z, z}, {z, z, z, z}};
}

/// Potentials on a grid together with their time derivatives ∂_t Ã^μ, ∂_t C̃^μ.
struct GriddedPotentials {
    GridPotentialPair value;
    GridPotentialPair rate;

    [[nodiscard]] const Grid3& grid() const { return value.A[0].grid; }
};

inline GriddedPotentials zero_gridded_potentials(const Grid3& g) {
    return {zero_potentials(g), zero_potentials(g)};
}

// ---------------------------------------------------------------------------
// Analytic point fields

/// E = q x̂ / (4πε₀|x|²).
inline Vec3 point_electric_field(double q, const Vec3& x, const UnitSystem& u) {
    const double r = norm(x);
    if (r == 0.0) throw SingularPoint("point_electric_field: evaluated at the charge itself");
    return x * (q / (4.0 * std::numbers::pi * u.eps0() * r * r * r));
}

/// B = g x̂ / (4π|x|²), from ∇·B̃ = ρ̃_m (no ε₀ or μ₀ factor).
inline Vec3 point_magnetic_field(double g, const Vec3& x, const UnitSystem& /*u*/) {
    const double r = norm(x);
    if (r == 0.0) throw SingularPoint("point_magnetic_field: evaluated at the charge itself");
    return x * (g / (4.0 * std::numbers::pi * r * r * r));
}

// ---------------------------------------------------------------------------
// Sources and deposition

struct PointSource {
    Vec3 pos;
    Vec3 vel;
    ChargePair charges;
    double sigma{0.0};  ///< Gaussian smearing width; 0 means an ideal point
};

inline void validate_source(const PointSource& s, const UnitSystem& u) {
    check_finite(s.pos, "source.pos");
    check_finite(s.vel, "source.vel");
    check_finite(s.charges.qe, "source.qe");
    check_finite(s.charges.qm, "source.qm");
    if (!(s.sigma >= 0.0)) throw InvalidArgument("source smearing width must be >= 0");
    if (!(norm(s.vel) < u.c())) throw InvalidArgument("source speed must be below c");
}

inline std::vector<ChargePair> charges_of(std::span<const PointSource> srcs) {
    std::vector<ChargePair> out;
    out.reserve(srcs.size());
    for (const auto& s : srcs) out.push_back(s.charges);
    return out;
}

/// Densities and currents deposited on a grid.
struct SourceDensities {
    ScalarField rho_e;
    ScalarField rho_m;
    VectorField j_e;
    VectorField j_m;
};

/// Default smearing: three cells of the coarsest axis.
inline double default_smearing(const Grid3& g) { return 3.0 * g.max_dx(); }

namespace detail {

// Periodically summed, discretely normalised 1D Gaussian: Σ_i profile[i]·dx = 1.
inline std::vector<double> periodic_gaussian(int n, double L, double x0, double sigma) {
    const double dx = L / n;
    const int images = static_cast<int>(std::ceil(8.0 * sigma / L)) + 1;
    std::vector<double> p(n, 0.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = 0.0;
        for (int m = -images; m <= images; ++m) {
            const double d = i * dx - x0 + m * L;
            v += std::exp(-d * d / (2.0 * sigma * sigma));
        }
        p[i] = v;
        total += v;
    }
    for (double& v : p) v /= total * dx;
    return p;
}

inline void add_source(SourceDensities& out, const PointSource& s, const Grid3& g) {
    std::array<std::vector<double>, 3> prof;
    for (int d = 0; d < 3; ++d) prof[d] = periodic_gaussian(g.n(d), g.L(d), s.pos[d], s.sigma);
    for (int i = 0; i < g.n(0); ++i)
        for (int j = 0; j < g.n(1); ++j) {
            const double pij = prof[0][i] * prof[1][j];
            for (int k = 0; k < g.n(2); ++k) {
                const std::size_t idx = g.index(i, j, k);
                const double shape = pij * prof[2][k];
                const double re = s.charges.qe * shape;
                const double rm = s.charges.qm * shape;
                out.rho_e[idx] += re;
                out.rho_m[idx] += rm;
                for (int d = 0; d < 3; ++d) {
                    out.j_e.comp[d][idx] += re * s.vel[d];
                    out.j_m.comp[d][idx] += rm * s.vel[d];
                }
            }
        }
}

}  // namespace detail

/// Gaussian-smeared ρ̃_e, ρ̃_m and currents j = ρ·v. Each source's profile is
/// summed over periodic images and normalised on the grid, so ∫ρ dV = q to
/// rounding.
inline SourceDensities deposit_sources(std::span<const PointSource> srcs, const Grid3& g,
                                       const UnitSystem& u = {}) {
    SourceDensities out{ScalarField(g), ScalarField(g), VectorField(g), VectorField(g)};
    for (std::size_t n = 0; n < srcs.size(); ++n) {
        const PointSource& s = srcs[n];
        validate_source(s, u);
        if (!g.contains(s.pos)) {
            throw SourceOutsideBox("deposit_sources: source " + std::to_string(n) +
                                   " lies outside the periodic box");
        }
        if (s.sigma < 2.0 * g.max_dx()) {
            throw UnresolvedSmearing("deposit_sources: source " + std::to_string(n) +
                                     " has sigma below two cell widths");
        }
        detail::add_source(out, s, g);
    }
    return out;
}

inline Vec3 wrap_into_box(Vec3 x, const Grid3& g) {
    for (int d = 0; d < 3; ++d) {
        double r = std::fmod(x[d], g.L(d));
        if (r < 0.0) r += g.L(d);
        if (r >= g.L(d)) r = 0.0;
        x[d] = r;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Fields from potentials

/// Ẽ = −(∂_tÃ + c∇Ã⁰ + ∇×C̃),  B̃ = −(∂_tC̃/c² + ∇C̃⁰/c − ∇×Ã).
inline GridFieldPair fields_from_potentials(const GriddedPotentials& p, const UnitSystem& u,
                                            const SpectralOps& ops) {
    const Grid3& g = p.grid();
    for (int mu = 0; mu < 4; ++mu) {
        require_same_grid(g, p.value.A[mu].grid, "fields_from_potentials");
        require_same_grid(g, p.value.C[mu].grid, "fields_from_potentials");
        require_same_grid(g, p.rate.A[mu].grid, "fields_from_potentials");
        require_same_grid(g, p.rate.C[mu].grid, "fields_from_potentials");
    }
    require_same_grid(g, ops.grid(), "fields_from_potentials");
    const double c = u.c();
    const VectorField A(p.value.A[1], p.value.A[2], p.value.A[3]);
    const VectorField C(p.value.C[1], p.value.C[2], p.value.C[3]);
    const VectorField dA(p.rate.A[1], p.rate.A[2], p.rate.A[3]);
    const VectorField dC(p.rate.C[1], p.rate.C[2], p.rate.C[3]);

    VectorField E = dA + ops.gradient(p.value.A[0]) * c + ops.curl(C);
    E *= -1.0;
    VectorField B = dC * (1.0 / (c * c)) + ops.gradient(p.value.C[0]) * (1.0 / c) - ops.curl(A);
    B *= -1.0;
    return {std::move(E), std::move(B)};
}

inline GridFieldPair fields_from_potentials(const GriddedPotentials& p, const UnitSystem& u) {
    return fields_from_potentials(p, u, SpectralOps(p.grid()));
}

// ---------------------------------------------------------------------------
// Helmholtz decomposition

struct HelmholtzParts {
    VectorField transverse;
    VectorField longitudinal;
};

/// v = v_T + v_L with P_T = 1 − k̂k̂ᵀ, P_L = k̂k̂ᵀ; the mean goes to v_L.
inline HelmholtzParts helmholtz_decompose(const VectorField& v, const SpectralOps& ops) {
    auto [t, l] = ops.helmholtz(v);
    return {std::move(t), std::move(l)};
}

inline HelmholtzParts helmholtz_decompose(const VectorField& v) {
    return helmholtz_decompose(v, SpectralOps(v.grid));
}

/// ‖P_L v‖/‖v‖ (0 for a zero field).
inline double longitudinal_fraction(const VectorField& v, const SpectralOps& ops) {
    const double n = l2_norm(v);
    if (n == 0.0) return 0.0;
    return l2_norm(helmholtz_decompose(v, ops).longitudinal) / n;
}

inline void require_transverse(const VectorField& v, const SpectralOps& ops, std::string_view name,
                               double tol = 1e-10) {
    const double frac = longitudinal_fraction(v, ops);
    if (frac > tol) {
        throw NotTransverse(std::string(name) + " has longitudinal fraction " + std::to_string(frac));
    }
}

// ---------------------------------------------------------------------------
// Static (Coulomb-like) fields of deposited densities

/// Ẽ = −∇φ_e with −∇²φ_e = ρ̃_e/ε₀ and B̃ = −∇φ_m with −∇²φ_m = ρ̃_m,
/// both against a uniform neutralising background.
inline GridFieldPair solve_static_fields(const ScalarField& rho_e, const ScalarField& rho_m,
                                         const UnitSystem& u, const SpectralOps& ops) {
    require_same_grid(rho_e.grid, rho_m.grid, "solve_static_fields");
    VectorField E = ops.gradient(ops.inverse_laplacian(rho_e)) * (-1.0 / u.eps0());
    VectorField B = ops.gradient(ops.inverse_laplacian(rho_m)) * -1.0;
    return {std::move(E), std::move(B)};
}

inline GridFieldPair solve_static_fields(const ScalarField& rho_e, const ScalarField& rho_m,
                                         const UnitSystem& u) {
    return solve_static_fields(rho_e, rho_m, u, SpectralOps(rho_e.grid));
}

}  // namespace dualfield
