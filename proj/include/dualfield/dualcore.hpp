#pragma once

// Dual (electric–magnetic) rotation algebra.
//
// Two directions exist and every entry point below says which one it applies:
//
//   to_symmetric   asymmetric → symmetric representation
//                    Ẽ = E cosθ − cB sinθ,        B̃ = B cosθ + (E/c) sinθ
//                    q̃_e = q_e cosθ − cε₀q_m sinθ, q̃_m = q_m cosθ + q_e sinθ/(cε₀)
//                    Ã = A cosθ − (C/c) sinθ,     C̃ = C cosθ + cA sinθ
//
//   to_asymmetric  symmetric → asymmetric representation (the exact inverse)
//                    E = Ẽ cosθ + cB̃ sinθ,        B = B̃ cosθ − (Ẽ/c) sinθ
//                    q_e = q̃_e cosθ + cε₀q̃_m sinθ, q_m = q̃_m cosθ − q̃_e sinθ/(cε₀)
//                    A = Ã cosθ + (C̃/c) sinθ,     C = C̃ cosθ − cÃ sinθ
//
// In the scaled planes (E, cB), (q_e, cε₀q_m) and (A, C/c) to_symmetric is an
// SO(2) rotation by +θ and to_asymmetric by −θ. Quantities that must stay
// form-invariant (force law, Maxwell system, spin) need all their inputs moved
// in the same direction.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

#include "dualfield/errors.hpp"
#include "dualfield/units.hpp"
#include "dualfield/vec3.hpp"

namespace dualfield {

/// Rotation angle θ, kept reduced to [0, 2π).
class DualAngle {
public:
    DualAngle() = default;

    explicit DualAngle(double theta) {
        if (!std::isfinite(theta)) throw NonFiniteInput("DualAngle: theta is not finite");
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double r = std::fmod(theta, two_pi);
        if (r < 0.0) r += two_pi;
        if (r >= two_pi) r = 0.0;
        theta_ = r;
    }

    [[nodiscard]] double radians() const { return theta_; }
    [[nodiscard]] double cos() const { return std::cos(theta_); }
    [[nodiscard]] double sin() const { return std::sin(theta_); }

    friend DualAngle operator+(DualAngle a, DualAngle b) { return DualAngle(a.theta_ + b.theta_); }
    friend DualAngle operator-(DualAngle a) { return DualAngle(-a.theta_); }

private:
    double theta_{0.0};
};

template <class T>
struct BasicFieldPair {
    T E;
    T B;
};

template <class T>
struct BasicChargePair {
    T qe;
    T qm;
};

/// Four-potential pair (A^μ, C^μ), contravariant components μ = 0..3.
template <class T>
struct BasicPotentialPair {
    std::array<T, 4> A;
    std::array<T, 4> C;
};

using FieldVecPair = BasicFieldPair<Vec3>;
using ChargePair = BasicChargePair<double>;
using FourVector = std::array<double, 4>;
using PotentialPair = BasicPotentialPair<double>;

inline void check_finite(double v, std::string_view name) {
    if (!std::isfinite(v)) throw NonFiniteInput(std::string(name) + " is not finite");
}

inline void check_finite(const Vec3& v, std::string_view name) {
    static constexpr const char* axis = "xyz";
    for (int d = 0; d < 3; ++d) {
        if (!std::isfinite(v[d])) {
            throw NonFiniteInput(std::string(name) + "." + axis[d] + " is not finite");
        }
    }
}

namespace detail {

// alpha·a + beta·b for any linear value type.
template <class T>
T mix(const T& a, double alpha, const T& b, double beta) {
    return a * alpha + b * beta;
}

template <class T>
BasicFieldPair<T> rotate_field_pair(const BasicFieldPair<T>& f, double cs, double sn,
                                    const UnitSystem& u) {
    check_finite(f.E, "E");
    check_finite(f.B, "B");
    const double c = u.c();
    return {mix(f.E, cs, f.B, -c * sn), mix(f.B, cs, f.E, sn / c)};
}

template <class T>
BasicChargePair<T> rotate_charge_pair(const BasicChargePair<T>& q, double cs, double sn,
                                      const UnitSystem& u) {
    check_finite(q.qe, "qe");
    check_finite(q.qm, "qm");
    const double s = u.c() * u.eps0();
    return {mix(q.qe, cs, q.qm, -s * sn), mix(q.qm, cs, q.qe, sn / s)};
}

template <class T>
BasicPotentialPair<T> rotate_potential_pair(const BasicPotentialPair<T>& p, double cs, double sn,
                                            const UnitSystem& u) {
    static constexpr const char* a_names[] = {"A0", "A1", "A2", "A3"};
    static constexpr const char* c_names[] = {"C0", "C1", "C2", "C3"};
    for (int mu = 0; mu < 4; ++mu) {
        check_finite(p.A[mu], a_names[mu]);
        check_finite(p.C[mu], c_names[mu]);
    }
    const double c = u.c();
    auto a = [&](int mu) { return mix(p.A[mu], cs, p.C[mu], -sn / c); };
    auto cc = [&](int mu) { return mix(p.C[mu], cs, p.A[mu], c * sn); };
    return {{a(0), a(1), a(2), a(3)}, {cc(0), cc(1), cc(2), cc(3)}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Direction-explicit rotations

template <class T>
BasicFieldPair<T> to_symmetric(const BasicFieldPair<T>& f, DualAngle th, const UnitSystem& u) {
    return detail::rotate_field_pair(f, th.cos(), th.sin(), u);
}
template <class T>
BasicFieldPair<T> to_asymmetric(const BasicFieldPair<T>& f, DualAngle th, const UnitSystem& u) {
    return detail::rotate_field_pair(f, th.cos(), -th.sin(), u);
}

template <class T>
BasicChargePair<T> to_symmetric(const BasicChargePair<T>& q, DualAngle th, const UnitSystem& u) {
    return detail::rotate_charge_pair(q, th.cos(), th.sin(), u);
}
template <class T>
BasicChargePair<T> to_asymmetric(const BasicChargePair<T>& q, DualAngle th, const UnitSystem& u) {
    return detail::rotate_charge_pair(q, th.cos(), -th.sin(), u);
}

template <class T>
BasicPotentialPair<T> to_symmetric(const BasicPotentialPair<T>& p, DualAngle th,
                                   const UnitSystem& u) {
    return detail::rotate_potential_pair(p, th.cos(), th.sin(), u);
}
template <class T>
BasicPotentialPair<T> to_asymmetric(const BasicPotentialPair<T>& p, DualAngle th,
                                    const UnitSystem& u) {
    return detail::rotate_potential_pair(p, th.cos(), -th.sin(), u);
}

// ---------------------------------------------------------------------------
// Named operations. Fields rotate asymmetric → symmetric; charges and
// potentials rotate symmetric → asymmetric (the direction that removes q_m).

/// (E, B) → (Ẽ, B̃).
template <class T>
BasicFieldPair<T> rotate_fields(const BasicFieldPair<T>& f, DualAngle th, const UnitSystem& u) {
    return to_symmetric(f, th, u);
}

/// (Ẽ, B̃) → (E, B); exact inverse of rotate_fields.
template <class T>
BasicFieldPair<T> inverse_rotate_fields(const BasicFieldPair<T>& f, DualAngle th,
                                        const UnitSystem& u) {
    return to_asymmetric(f, th, u);
}

/// (q̃_e, q̃_m) → (q_e, q_m). Same map for densities and current components.
template <class T>
BasicChargePair<T> rotate_charges(const BasicChargePair<T>& q, DualAngle th, const UnitSystem& u) {
    return to_asymmetric(q, th, u);
}

template <class T>
BasicChargePair<T> inverse_rotate_charges(const BasicChargePair<T>& q, DualAngle th,
                                          const UnitSystem& u) {
    return to_symmetric(q, th, u);
}

/// (Ã^μ, C̃^μ) → (A^μ, C^μ).
template <class T>
BasicPotentialPair<T> rotate_potentials(const BasicPotentialPair<T>& p, DualAngle th,
                                        const UnitSystem& u) {
    return to_asymmetric(p, th, u);
}

template <class T>
BasicPotentialPair<T> inverse_rotate_potentials(const BasicPotentialPair<T>& p, DualAngle th,
                                                const UnitSystem& u) {
    return to_symmetric(p, th, u);
}

// ---------------------------------------------------------------------------
// Invariants

/// q = √(c²ε₀²q̃_m² + q̃_e²).
inline double charge_norm(const ChargePair& q, const UnitSystem& u) {
    return std::hypot(q.qe, u.c() * u.eps0() * q.qm);
}

/// Pointwise ε₀E² + B²/μ₀.
inline double energy_density(const FieldVecPair& f, const UnitSystem& u) {
    return u.eps0() * dot(f.E, f.E) + dot(f.B, f.B) / u.mu0();
}

/// Minkowski product with signature (+,−,−,−).
inline double minkowski(const FourVector& a, const FourVector& b) {
    return a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
}

/// ε₀(c²A_μA^μ + C_μC^μ).
inline double potential_form(const PotentialPair& p, const UnitSystem& u) {
    const double c = u.c();
    return u.eps0() * (c * c * minkowski(p.A, p.A) + minkowski(p.C, p.C));
}

/// θ with tanθ = cε₀q̃_m/q̃_e, chosen so rotate_charges(q, θ) = (+|q|, 0).
inline DualAngle asymmetrizing_angle(const ChargePair& q, const UnitSystem& u) {
    check_finite(q.qe, "qe");
    check_finite(q.qm, "qm");
    if (charge_norm(q, u) == 0.0) {
        throw ZeroChargeNorm("asymmetrizing_angle: zero charge pair has no defined angle");
    }
    return DualAngle(std::atan2(u.c() * u.eps0() * q.qm, q.qe));
}

/// max_μ |C̃^μ cosθ − cÃ^μ sinθ| normalised by max_μ max(|C̃^μ|, c|Ã^μ|); 0 when both vanish.
inline double subsidiary_residual(const PotentialPair& p, DualAngle th, const UnitSystem& u) {
    const double c = u.c();
    const double cs = th.cos();
    const double sn = th.sin();
    double worst = 0.0;
    double scale = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        worst = std::fmax(worst, std::fabs(p.C[mu] * cs - c * p.A[mu] * sn));
        scale = std::fmax(scale, std::fmax(std::fabs(p.C[mu]), c * std::fabs(p.A[mu])));
    }
    return scale == 0.0 ? 0.0 : worst / scale;
}

/// True when every nonzero pair lies on one line through the origin of the
/// (q̃_e, cε₀q̃_m) plane, i.e. all particles share one q̃_m/q̃_e ratio.
inline bool shares_charge_ratio(std::span<const ChargePair> charges, const UnitSystem& u,
                                double rel_tol = 1e-12) {
    const double s = u.c() * u.eps0();
    const ChargePair* ref = nullptr;
    for (const ChargePair& q : charges) {
        if (charge_norm(q, u) == 0.0) continue;
        if (ref == nullptr) {
            ref = &q;
            continue;
        }
        const double area = std::fabs(ref->qe * s * q.qm - q.qe * s * ref->qm);
        if (area > rel_tol * charge_norm(*ref, u) * charge_norm(q, u)) return false;
    }
    return true;
}

}  // namespace dualfield
