#pragma once

// Symmetric Maxwell system with electric and magnetic sources:
//
//   ∂_tẼ = c²∇×B̃ − J̃_e/ε₀        ∇·Ẽ = ρ̃_e/ε₀
//   ∂_tB̃ = −∇×Ẽ − J̃_m            ∇·B̃ = ρ̃_m
//
// Spectral curls, classical RK4 in time. Sources follow straight-line
// trajectories (periodically wrapped) during a step.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <span>
#include <vector>

#include "dualfield/fields.hpp"

namespace dualfield {

struct EMState {
    double t{0.0};
    GridFieldPair fields;
    std::vector<PointSource> sources;

    [[nodiscard]] const Grid3& grid() const { return fields.E.grid; }
};

inline EMState rotate_state(const EMState& s, DualAngle th, const UnitSystem& u, bool forward) {
    EMState out{s.t, forward ? to_symmetric(s.fields, th, u) : to_asymmetric(s.fields, th, u),
                s.sources};
    for (auto& src : out.sources) {
        src.charges = forward ? to_symmetric(src.charges, th, u) : to_asymmetric(src.charges, th, u);
    }
    return out;
}

/// Fields and every source charge moved asymmetric → symmetric by θ.
inline EMState to_symmetric(const EMState& s, DualAngle th, const UnitSystem& u) {
    return rotate_state(s, th, u, true);
}

inline EMState to_asymmetric(const EMState& s, DualAngle th, const UnitSystem& u) {
    return rotate_state(s, th, u, false);
}

/// Static sources with the matching Coulomb-like fields (Gauss laws satisfied).
inline EMState consistent_initial_state(const Grid3& g, std::vector<PointSource> sources,
                                        const UnitSystem& u) {
    const SourceDensities d = deposit_sources(sources, g, u);
    return {0.0, solve_static_fields(d.rho_e, d.rho_m, u), std::move(sources)};
}

/// ½∫(ε₀Ẽ² + B̃²/μ₀) dV.
inline double field_energy(const GridFieldPair& f, const UnitSystem& u) {
    const double dv = f.E.grid.cell_volume();
    return 0.5 * dv * (u.eps0() * inner(f.E, f.E) + inner(f.B, f.B) / u.mu0());
}

class SymmetricMaxwell {
public:
    SymmetricMaxwell(const Grid3& g, const UnitSystem& u) : u_(u), ops_(g) {}

    [[nodiscard]] const Grid3& grid() const { return ops_.grid(); }
    [[nodiscard]] double cfl_limit() const { return 0.5 * grid().min_dx() / u_.c(); }

    [[nodiscard]] EMState step(const EMState& s, double dt) const {
        check(s, dt);
        const bool moving = has_moving_sources(s.sources);
        std::optional<Currents> j0;
        std::optional<Currents> jh;
        std::optional<Currents> j1;
        if (moving) {
            j0 = currents(s.sources, 0.0);
            jh = currents(s.sources, 0.5 * dt);
            j1 = currents(s.sources, dt);
        }
        const GridFieldPair& f = s.fields;
        const GridFieldPair k1 = rhs(f, j0);
        const GridFieldPair k2 = rhs(axpy(f, 0.5 * dt, k1), jh);
        const GridFieldPair k3 = rhs(axpy(f, 0.5 * dt, k2), jh);
        const GridFieldPair k4 = rhs(axpy(f, dt, k3), j1);

        EMState out{s.t + dt, f, s.sources};
        const double w = dt / 6.0;
        out.fields.E += (k1.E + k2.E * 2.0 + k3.E * 2.0 + k4.E) * w;
        out.fields.B += (k1.B + k2.B * 2.0 + k3.B * 2.0 + k4.B) * w;
        for (auto& src : out.sources) src.pos = wrap_into_box(src.pos + src.vel * dt, grid());
        return out;
    }

    [[nodiscard]] EMState evolve(EMState s, double dt, int steps) const {
        if (steps < 0) throw InvalidArgument("evolve: negative step count");
        for (int n = 0; n < steps; ++n) s = step(s, dt);
        return s;
    }

    [[nodiscard]] const SpectralOps& ops() const { return ops_; }

private:
    struct Currents {
        VectorField je;
        VectorField jm;
    };

    static bool has_moving_sources(const std::vector<PointSource>& srcs) {
        for (const auto& s : srcs) {
            if (!(s.vel == Vec3{})) return true;
        }
        return false;
    }

    void check(const EMState& s, double dt) const {
        require_same_grid(grid(), s.fields.E.grid, "SymmetricMaxwell::step");
        require_same_grid(grid(), s.fields.B.grid, "SymmetricMaxwell::step");
        check_finite(dt, "dt");
        if (!(dt > 0.0)) throw InvalidArgument("SymmetricMaxwell::step: dt must be positive");
        if (dt > cfl_limit()) {
            throw CflViolation("SymmetricMaxwell::step: dt = " + std::to_string(dt) +
                               " exceeds the bound " + std::to_string(cfl_limit()));
        }
        check_finite(s.fields.E, "E");
        check_finite(s.fields.B, "B");
    }

    [[nodiscard]] std::optional<Currents> currents(const std::vector<PointSource>& srcs, double tau) const {
        std::vector<PointSource> moved = srcs;
        for (auto& s : moved) s.pos = wrap_into_box(s.pos + s.vel * tau, grid());
        SourceDensities d = deposit_sources(moved, grid(), u_);
        return Currents{std::move(d.j_e), std::move(d.j_m)};
    }

    static GridFieldPair axpy(const GridFieldPair& f, double a, const GridFieldPair& k) {
        return {f.E + k.E * a, f.B + k.B * a};
    }

    [[nodiscard]] GridFieldPair rhs(const GridFieldPair& f, const std::optional<Currents>& j) const {
        const double c = u_.c();
        VectorField dE = ops_.curl(f.B) * (c * c);
        VectorField dB = ops_.curl(f.E) * -1.0;
        if (j) {
            dE -= j->je * (1.0 / u_.eps0());
            dB -= j->jm;
        }
        return {std::move(dE), std::move(dB)};
    }

    UnitSystem u_;
    SpectralOps ops_;
};

inline EMState step_symmetric_maxwell(const EMState& s, double dt, const UnitSystem& u) {
    return SymmetricMaxwell(s.grid(), u).step(s, dt);
}

struct GaussResiduals {
    double rE{0.0};
    double rB{0.0};
};

namespace detail {

// ‖∇v‖ summed over all nine partial derivatives; the natural scale of ∇·v.
inline double gradient_norm(const VectorField& v, const SpectralOps& ops) {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
        const ScalarField c = v.component(d);
        for (int a = 0; a < 3; ++a) {
            const double n = l2_norm(ops.derivative(c, a));
            s += n * n;
        }
    }
    return std::sqrt(s);
}

inline double constraint_residual(const VectorField& v, const ScalarField& rhs,
                                  const SpectralOps& ops) {
    const ScalarField r = ops.divergence(v) - rhs;
    const double scale = l2_norm(rhs) + gradient_norm(v, ops);
    return scale == 0.0 ? 0.0 : l2_norm(r) / scale;
}

}  // namespace detail

/// Relative L2 residuals of ∇·Ẽ = ρ̃_e/ε₀ and ∇·B̃ = ρ̃_m. Densities are taken
/// against a uniform neutralising background; each residual is scaled by
/// ‖ρ‖ + ‖∇v‖ so source-free fields are measured against their own gradients.
inline GaussResiduals gauss_residuals(const EMState& s, const UnitSystem& u) {
    const Grid3& g = s.grid();
    require_same_grid(g, s.fields.B.grid, "gauss_residuals");
    const SpectralOps ops(g);
    SourceDensities d = deposit_sources(s.sources, g, u);
    ScalarField re = d.rho_e;
    ScalarField rm = d.rho_m;
    const double me = mean(re);
    const double mm = mean(rm);
    for (auto& v : re.data) v = (v - me) / u.eps0();
    for (auto& v : rm.data) v -= mm;
    return {detail::constraint_residual(s.fields.E, re, ops),
            detail::constraint_residual(s.fields.B, rm, ops)};
}

namespace detail {

inline double energy_norm(const GridFieldPair& f, const UnitSystem& u) {
    return std::sqrt(2.0 * field_energy(f, u));
}

}  // namespace detail

/// Relative distance between two states: the field difference in the energy
/// norm, and charge plus position differences in the (q̃_e, cε₀q̃_m) norm; the
/// larger of the two. `a` sets the scale.
inline double state_distance(const EMState& a, const EMState& b, const UnitSystem& u) {
    if (a.sources.size() != b.sources.size()) {
        throw InvalidArgument("state_distance: states carry different source counts");
    }
    const GridFieldPair diff{a.fields.E - b.fields.E, a.fields.B - b.fields.B};
    const double fnum = detail::energy_norm(diff, u);
    const double fden = detail::energy_norm(a.fields, u);
    const double field_rel = fden == 0.0 ? fnum : fnum / fden;

    double qnum = 0.0;
    double qden = 0.0;
    for (std::size_t i = 0; i < a.sources.size(); ++i) {
        const ChargePair dq{a.sources[i].charges.qe - b.sources[i].charges.qe,
                            a.sources[i].charges.qm - b.sources[i].charges.qm};
        qnum += std::pow(charge_norm(dq, u), 2);
        qden += std::pow(charge_norm(a.sources[i].charges, u), 2);
        qnum += dot(a.sources[i].pos - b.sources[i].pos, a.sources[i].pos - b.sources[i].pos);
    }
    const double charge_rel = qden == 0.0 ? std::sqrt(qnum) : std::sqrt(qnum / qden);
    return std::fmax(field_rel, charge_rel);
}

inline void require_shared_ratio(const EMState& s, const UnitSystem& u, const char* who) {
    if (!shares_charge_ratio(charges_of(s.sources), u)) {
        throw MixedChargeRatio(std::string(who) + ": sources do not share one q_m/q_e ratio");
    }
}

/// state_distance(to_symmetric(evolve(s)), evolve(to_symmetric(s))).
inline double dual_covariance_residual(const EMState& s, DualAngle th, int steps, double dt,
                                       const UnitSystem& u, bool require_shared = false) {
    if (require_shared) require_shared_ratio(s, u, "dual_covariance_residual");
    const SymmetricMaxwell solver(s.grid(), u);
    const EMState a = to_symmetric(solver.evolve(s, dt, steps), th, u);
    const EMState b = solver.evolve(to_symmetric(s, th, u), dt, steps);
    return state_distance(a, b, u);
}

/// Writes <stem>_E.bin, <stem>_B.bin and a key=value <stem>.txt header.
inline void write_snapshot(const std::filesystem::path& dir, const std::string& stem,
                           const EMState& s, double dt, const UnitSystem& u, DualAngle th) {
    std::filesystem::create_directories(dir);
    write_grid_binary((dir / (stem + "_E.bin")).string(), s.fields.E);
    write_grid_binary((dir / (stem + "_B.bin")).string(), s.fields.B);
    std::ofstream h(dir / (stem + ".txt"));
    if (!h) throw IoError("write_snapshot: cannot open header in " + dir.string());
    const Grid3& g = s.grid();
    h << std::setprecision(17);
    h << "t=" << s.t << "\n";
    h << "dt=" << dt << "\n";
    h << "grid=" << g.n(0) << " " << g.n(1) << " " << g.n(2) << " " << g.L(0) << " " << g.L(1)
      << " " << g.L(2) << "\n";
    h << "units=" << u.c() << " " << u.eps0() << "\n";
    h << "theta=" << th.radians() << "\n";
}

}  // namespace dualfield
