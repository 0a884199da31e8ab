#pragma once

// Symmetric Lorentz forces and a nonrelativistic RK4 particle pusher.
//
//   classical  F = q̃_e(Ẽ + v×B̃)   + cε₀q̃_m(cB̃ − v×Ẽ/c)
//   quantum    F = q̃_e(Ẽ + v×B̃_⊥) + cε₀q̃_m(cB̃ − v×Ẽ_⊥/c)
//
// The quantum law keeps the full fields in the direct terms and only the
// transverse parts in the velocity cross terms.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <iomanip>
#include <string>
#include <vector>

#include "dualfield/fields.hpp"

namespace dualfield {

struct ParticleState {
    Vec3 x;
    Vec3 v;
    ChargePair charges;
    double m{1.0};
    Vec3 p_mech;  ///< m·v in this pusher
};

inline ParticleState make_particle(const Vec3& x, const Vec3& v, const ChargePair& q, double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("particle mass must be positive");
    return {x, v, q, m, v * m};
}

enum class ForceModel { classical, quantum };

inline ForceModel parse_force_model(const std::string& s) {
    if (s == "classical") return ForceModel::classical;
    if (s == "quantum") return ForceModel::quantum;
    throw InvalidArgument("unknown force model '" + s + "'");
}

inline Vec3 classical_lorentz_force(const ParticleState& p, const FieldVecPair& f,
                                   const UnitSystem& u) {
    check_finite(p.v, "v");
    check_finite(p.charges.qe, "qe");
    check_finite(p.charges.qm, "qm");
    check_finite(f.E, "E");
    check_finite(f.B, "B");
    const double c = u.c();
    const double s = c * u.eps0();
    return (f.E + cross(p.v, f.B)) * p.charges.qe + (f.B * c - cross(p.v, f.E) / c) * (s * p.charges.qm);
}

inline Vec3 quantum_lorentz_force(const ParticleState& p, const FieldVecPair& full,
                                  const FieldVecPair& transverse, const UnitSystem& u) {
    check_finite(p.v, "v");
    check_finite(p.charges.qe, "qe");
    check_finite(p.charges.qm, "qm");
    check_finite(full.E, "E");
    check_finite(full.B, "B");
    check_finite(transverse.E, "E_perp");
    check_finite(transverse.B, "B_perp");
    const double c = u.c();
    const double s = c * u.eps0();
    return (full.E + cross(p.v, transverse.B)) * p.charges.qe +
           (full.B * c - cross(p.v, transverse.E) / c) * (s * p.charges.qm);
}

/// p̃ = p_mech + q̃_eÃ + ε₀q̃_mC̃ with Ã, C̃ sampled at the particle.
inline Vec3 canonical_momentum(const ParticleState& p, const Vec3& A, const Vec3& C,
                               const UnitSystem& u) {
    return p.p_mech + A * p.charges.qe + C * (u.eps0() * p.charges.qm);
}

// ---------------------------------------------------------------------------
// Field samplers

struct FieldSample {
    FieldVecPair full;
    FieldVecPair transverse;
};

/// Returns nullopt outside its domain.
using FieldSampler = std::function<std::optional<FieldSample>(const Vec3& x, double t)>;

/// Constant fields, declared transverse.
inline FieldSampler uniform_sampler(const FieldVecPair& f) {
    check_finite(f.E, "E");
    check_finite(f.B, "B");
    return [f](const Vec3&, double) { return std::optional<FieldSample>(FieldSample{f, f}); };
}

/// Static point charge at `pos`; its Coulomb-like field is curl-free, so the
/// transverse part is exactly zero. Domain: r_min ≤ |x − pos| ≤ r_max.
inline FieldSampler point_source_sampler(const Vec3& pos, const ChargePair& q, const UnitSystem& u,
                                         double r_min, double r_max) {
    check_finite(pos, "pos");
    if (!(r_min > 0.0) || !(r_max > r_min)) {
        throw InvalidArgument("point_source_sampler: need 0 < r_min < r_max");
    }
    return [=](const Vec3& x, double) -> std::optional<FieldSample> {
        const Vec3 d = x - pos;
        const double r = norm(d);
        if (r < r_min || r > r_max) return std::nullopt;
        FieldSample s;
        s.full = {point_electric_field(q.qe, d, u), point_magnetic_field(q.qm, d, u)};
        s.transverse = {Vec3{}, Vec3{}};
        return s;
    };
}

/// Sum of samplers; outside the domain if any part is.
inline FieldSampler superpose(std::vector<FieldSampler> parts) {
    return [parts = std::move(parts)](const Vec3& x, double t) -> std::optional<FieldSample> {
        FieldSample acc{{Vec3{}, Vec3{}}, {Vec3{}, Vec3{}}};
        for (const auto& p : parts) {
            const auto s = p(x, t);
            if (!s) return std::nullopt;
            acc.full.E += s->full.E;
            acc.full.B += s->full.B;
            acc.transverse.E += s->transverse.E;
            acc.transverse.B += s->transverse.B;
        }
        return acc;
    };
}

namespace detail {

// 4-point cubic Lagrange weights for nodes −1, 0, 1, 2 at offset s ∈ [0, 1).
inline std::array<double, 4> cubic_weights(double s) {
    return {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
}

}  // namespace detail

/// Periodic tricubic interpolation of gridded full and transverse fields.
class GridSampler {
public:
    /// Computes the transverse parts with the spectral projector.
    static GridSampler from_full(const GridFieldPair& full) {
        const SpectralOps ops(full.E.grid);
        require_same_grid(full.E.grid, full.B.grid, "GridSampler");
        GridFieldPair tr{helmholtz_decompose(full.E, ops).transverse,
                         helmholtz_decompose(full.B, ops).transverse};
        return GridSampler(full, std::move(tr));
    }

    /// Uses caller-supplied transverse parts after checking they are the
    /// projector's output for `full`.
    static GridSampler from_parts(const GridFieldPair& full, const GridFieldPair& transverse,
                                  double tol = 1e-10) {
        const Grid3& g = full.E.grid;
        require_same_grid(g, full.B.grid, "GridSampler");
        require_same_grid(g, transverse.E.grid, "GridSampler");
        require_same_grid(g, transverse.B.grid, "GridSampler");
        const SpectralOps ops(g);
        auto check = [&](const VectorField& f, const VectorField& t, const char* name) {
            const double scale = l2_norm(f);
            const double r = l2_norm(helmholtz_decompose(f, ops).transverse - t);
            if (r > tol * (scale == 0.0 ? 1.0 : scale)) {
                throw NotTransverse(std::string("GridSampler: ") + name +
                                    " transverse part does not match its projector residual");
            }
        };
        check(full.E, transverse.E, "E");
        check(full.B, transverse.B, "B");
        return GridSampler(full, transverse);
    }

    [[nodiscard]] FieldSample sample(const Vec3& x) const {
        return {{interp(full_.E, x), interp(full_.B, x)},
                {interp(tr_.E, x), interp(tr_.B, x)}};
    }

    [[nodiscard]] FieldSampler sampler() const {
        auto self = std::make_shared<GridSampler>(*this);
        return [self](const Vec3& x, double) { return std::optional<FieldSample>(self->sample(x)); };
    }

private:
    GridSampler(GridFieldPair full, GridFieldPair tr) : full_(std::move(full)), tr_(std::move(tr)) {}

    static Vec3 interp(const VectorField& f, const Vec3& x) {
        const Grid3& g = f.grid;
        std::array<std::array<int, 4>, 3> idx{};
        std::array<std::array<double, 4>, 3> w{};
        for (int d = 0; d < 3; ++d) {
            const double u = x[d] / g.dx(d);
            const double fl = std::floor(u);
            w[d] = detail::cubic_weights(u - fl);
            const int n = g.n(d);
            for (int a = 0; a < 4; ++a) {
                long m = (static_cast<long>(fl) - 1 + a) % n;
                if (m < 0) m += n;
                idx[d][a] = static_cast<int>(m);
            }
        }
        Vec3 out;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c) {
                    const double wt = w[0][a] * w[1][b] * w[2][c];
                    out += f.at(g.index(idx[0][a], idx[1][b], idx[2][c])) * wt;
                }
        return out;
    }

    GridFieldPair full_;
    GridFieldPair tr_;
};

// ---------------------------------------------------------------------------
// Pusher

struct TrajectorySample {
    double t;
    ParticleState state;
    Vec3 force;
};

enum class Termination { completed, left_domain, speed_limit };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::left_domain: return "left_domain";
        case Termination::speed_limit: return "speed_limit";
    }
    return "?";
}

struct Trajectory {
    std::vector<TrajectorySample> samples;
    Termination reason{Termination::completed};
};

inline std::optional<Vec3> force_at(const ParticleState& p, const FieldSampler& sampler,
                                    ForceModel model, double t, const UnitSystem& u) {
    const auto s = sampler(p.x, t);
    if (!s) return std::nullopt;
    return model == ForceModel::classical ? classical_lorentz_force(p, s->full, u)
                                          : quantum_lorentz_force(p, s->full, s->transverse, u);
}

/// RK4 on dx/dt = p/m, dp/dt = F. Stops early (keeping all completed samples)
/// if a stage leaves the sampler's domain or |v| exceeds 0.1c.
inline Trajectory push_particle(ParticleState p, const FieldSampler& sampler, ForceModel model,
                                double dt, int steps, const UnitSystem& u) {
    check_finite(p.x, "x");
    check_finite(p.v, "v");
    check_finite(dt, "dt");
    if (!(dt > 0.0)) throw InvalidArgument("push_particle: dt must be positive");
    if (steps < 0) throw InvalidArgument("push_particle: negative step count");
    if (!(p.m > 0.0)) throw InvalidArgument("push_particle: mass must be positive");
    const double vmax = 0.1 * u.c();
    if (norm(p.v) > vmax) throw InvalidArgument("push_particle: initial speed exceeds 0.1c");
    p.p_mech = p.v * p.m;

    Trajectory tr;
    double t = 0.0;
    auto f0 = force_at(p, sampler, model, t, u);
    if (!f0) {
        tr.reason = Termination::left_domain;
        return tr;
    }
    tr.samples.push_back({t, p, *f0});

    auto at = [&](const Vec3& x, const Vec3& mom) {
        ParticleState s = p;
        s.x = x;
        s.p_mech = mom;
        s.v = mom / p.m;
        return s;
    };

    for (int n = 0; n < steps; ++n) {
        const ParticleState s1 = p;
        const Vec3 a1 = tr.samples.back().force;
        const Vec3 x1 = s1.v;

        const ParticleState s2 = at(p.x + x1 * (0.5 * dt), p.p_mech + a1 * (0.5 * dt));
        const auto a2 = force_at(s2, sampler, model, t + 0.5 * dt, u);
        if (!a2) { tr.reason = Termination::left_domain; break; }

        const ParticleState s3 = at(p.x + s2.v * (0.5 * dt), p.p_mech + *a2 * (0.5 * dt));
        const auto a3 = force_at(s3, sampler, model, t + 0.5 * dt, u);
        if (!a3) { tr.reason = Termination::left_domain; break; }

        const ParticleState s4 = at(p.x + s3.v * dt, p.p_mech + *a3 * dt);
        const auto a4 = force_at(s4, sampler, model, t + dt, u);
        if (!a4) { tr.reason = Termination::left_domain; break; }

        const ParticleState next =
            at(p.x + (x1 + s2.v * 2.0 + s3.v * 2.0 + s4.v) * (dt / 6.0),
               p.p_mech + (a1 + *a2 * 2.0 + *a3 * 2.0 + *a4) * (dt / 6.0));
        if (norm(next.v) > vmax) { tr.reason = Termination::speed_limit; break; }
        const auto fn = force_at(next, sampler, model, t + dt, u);
        if (!fn) { tr.reason = Termination::left_domain; break; }

        p = next;
        t = tr.samples.front().t + (n + 1) * dt;
        tr.samples.push_back({t, p, *fn});
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Out-of-plane diagnostics

/// Unit normal of the plane spanned by the separation r − r' and the velocity.
inline Vec3 plane_normal(const Vec3& sep, const Vec3& v) {
    check_finite(sep, "sep");
    check_finite(v, "v");
    const Vec3 n = cross(sep, v);
    const double len = norm(n);
    if (!(len > 1e-12 * norm(sep) * norm(v)) || len == 0.0) {
        throw DegeneratePlane("plane_normal: separation and velocity are parallel");
    }
    return n / len;
}

struct OutOfPlaneSeries {
    std::vector<double> displacement;  ///< (x(t) − x(0))·n
    std::vector<double> force;         ///< F(t)·n
};

inline OutOfPlaneSeries out_of_plane_component(const Trajectory& tr, const Vec3& normal) {
    const double len = norm(normal);
    if (!(len > 0.0)) throw DegeneratePlane("out_of_plane_component: zero normal");
    const Vec3 n = normal / len;
    OutOfPlaneSeries out;
    if (tr.samples.empty()) return out;
    const Vec3 x0 = tr.samples.front().state.x;
    for (const auto& s : tr.samples) {
        out.displacement.push_back(dot(s.state.x - x0, n));
        out.force.push_back(dot(s.force, n));
    }
    return out;
}

/// Largest in-plane displacement from the start point.
inline double in_plane_span(const Trajectory& tr, const Vec3& normal) {
    const Vec3 n = normal / norm(normal);
    double span = 0.0;
    if (tr.samples.empty()) return span;
    const Vec3 x0 = tr.samples.front().state.x;
    for (const auto& s : tr.samples) {
        const Vec3 d = s.state.x - x0;
        span = std::fmax(span, norm(d - n * dot(d, n)));
    }
    return span;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const Vec3& normal) {
    const OutOfPlaneSeries oop = out_of_plane_component(tr, normal);
    out << "t,x,y,z,vx,vy,vz,Fx,Fy,Fz,out_of_plane_displacement\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        const auto& s = tr.samples[i];
        out << s.t << ',' << s.state.x.x << ',' << s.state.x.y << ',' << s.state.x.z << ','
            << s.state.v.x << ',' << s.state.v.y << ',' << s.state.v.z << ',' << s.force.x << ','
            << s.force.y << ',' << s.force.z << ',' << oop.displacement[i] << '\n';
    }
}

}  // namespace dualfield
