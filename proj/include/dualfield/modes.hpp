#pragma once

// Classical mode-amplitude picture of the gauge fields in a periodic cubic box.
//
// Wavevectors k = Δk·m, m ∈ ℤ³ \ {0}, |k| ≤ k_max, Δk = 2π/L. Box-normalised
// amplitudes: a_box = a_cont·Δk^{3/2}, so every mode carries the prefactor
// N_k = √(ħ/(2ε₀ω_kV)) with V = L³ and ω_k = c|k|.
//
// Polarisation tetrad: ε(k,0) = (1,0,0,0), ε(k,1) = ε1, ε(k,2) = ε2 = k̂×ε1,
// ε(k,3) = (0,k̂), with ε1 the normalised part of x̂ (or ŷ when k̂ is close to
// x̂) orthogonal to k̂. Positive helicity is (ε1 + iε2)/√2.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <istream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "dualfield/fields.hpp"

namespace dualfield {

using cplx = std::complex<double>;
using IntVec3 = std::array<int, 3>;

struct Mode {
    IntVec3 m;
    Vec3 k;
    double omega;
    std::array<Vec3, 3> eps;  ///< ε1, ε2, k̂
};

class ModeSet {
public:
    ModeSet(double L, double kmax, const UnitSystem& u = {}, double hbar = 1.0)
        : L_(L), kmax_(kmax), hbar_(hbar), u_(u) {
        if (!(std::isfinite(L) && L > 0.0)) throw InvalidArgument("ModeSet: box length must be positive");
        if (!(std::isfinite(kmax) && kmax > 0.0)) throw InvalidArgument("ModeSet: kmax must be positive");
        if (!(std::isfinite(hbar) && hbar > 0.0)) throw InvalidArgument("ModeSet: hbar must be positive");
    }

    [[nodiscard]] double L() const { return L_; }
    [[nodiscard]] double dk() const { return 2.0 * std::numbers::pi / L_; }
    [[nodiscard]] double kmax() const { return kmax_; }
    [[nodiscard]] double hbar() const { return hbar_; }
    [[nodiscard]] const UnitSystem& units() const { return u_; }
    [[nodiscard]] double volume() const { return L_ * L_ * L_; }
    [[nodiscard]] int max_index() const { return static_cast<int>(std::floor(kmax_ / dk())); }

    [[nodiscard]] bool contains(const IntVec3& m) const {
        if (m[0] == 0 && m[1] == 0 && m[2] == 0) return false;
        const double k2 = static_cast<double>(m[0]) * m[0] + static_cast<double>(m[1]) * m[1] +
                          static_cast<double>(m[2]) * m[2];
        return std::sqrt(k2) * dk() <= kmax_ * (1.0 + 1e-12);
    }

    [[nodiscard]] Mode mode(const IntVec3& m) const {
        if (!contains(m)) throw InvalidArgument("ModeSet: wavevector index outside the lattice");
        const Vec3 k{dk() * m[0], dk() * m[1], dk() * m[2]};
        const double kn = norm(k);
        const Vec3 kh = k / kn;
        const Vec3 ref = std::fabs(kh.x) >= 0.9 ? Vec3{0.0, 1.0, 0.0} : Vec3{1.0, 0.0, 0.0};
        Vec3 e1 = ref - kh * dot(ref, kh);
        e1 = e1 / norm(e1);
        const Vec3 e2 = cross(kh, e1);
        return {m, k, u_.c() * kn, {e1, e2, kh}};
    }

    /// Prefactor √(ħ/(2ε₀ωV)).
    [[nodiscard]] double normalization(double omega) const {
        return std::sqrt(hbar_ / (2.0 * u_.eps0() * omega * volume()));
    }

    /// Every lattice index, in lexicographic order. Only for small cutoffs.
    [[nodiscard]] std::vector<IntVec3> lattice() const {
        std::vector<IntVec3> out;
        const int M = max_index();
        for (int a = -M; a <= M; ++a)
            for (int b = -M; b <= M; ++b)
                for (int c = -M; c <= M; ++c)
                    if (contains({a, b, c})) out.push_back({a, b, c});
        return out;
    }

private:
    double L_;
    double kmax_;
    double hbar_;
    UnitSystem u_;
};

using ModeAmplitudes = std::array<cplx, 4>;

/// Sparse amplitude table: one row per listed wavevector. Family b is present
/// only for the two-field model.
struct ModeAmplitudeSet {
    std::vector<IntVec3> keys;
    std::vector<ModeAmplitudes> a;
    std::optional<std::vector<ModeAmplitudes>> b;

    [[nodiscard]] bool two_field() const { return b.has_value(); }
    [[nodiscard]] std::size_t size() const { return keys.size(); }

    void validate(const ModeSet& ms) const {
        if (a.size() != keys.size() || (b && b->size() != keys.size())) {
            throw InvalidArgument("ModeAmplitudeSet: amplitude rows do not match keys");
        }
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (!ms.contains(keys[i])) throw InvalidArgument("ModeAmplitudeSet: key outside the mode set");
            for (int l = 0; l < 4; ++l) {
                check_finite(a[i][l].real(), "a");
                check_finite(a[i][l].imag(), "a");
                if (b) {
                    check_finite((*b)[i][l].real(), "b");
                    check_finite((*b)[i][l].imag(), "b");
                }
            }
        }
    }
};

inline ModeAmplitudeSet zero_amplitudes(std::vector<IntVec3> keys, bool two_field = false) {
    ModeAmplitudeSet s;
    s.a.assign(keys.size(), ModeAmplitudes{});
    if (two_field) s.b = std::vector<ModeAmplitudes>(keys.size(), ModeAmplitudes{});
    s.keys = std::move(keys);
    return s;
}

/// a_{k,λ}(t) = a_{k,λ}(0)e^{−iω_k t}, same phase for both families.
inline ModeAmplitudeSet free_evolve_modes(const ModeAmplitudeSet& amp, double t, const ModeSet& ms) {
    check_finite(t, "t");
    ModeAmplitudeSet out = amp;
    for (std::size_t i = 0; i < amp.size(); ++i) {
        const cplx ph = std::polar(1.0, -ms.mode(amp.keys[i]).omega * t);
        for (int l = 0; l < 4; ++l) {
            out.a[i][l] *= ph;
            if (out.b) (*out.b)[i][l] *= ph;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Source transforms

struct ChargeFourierEntry {
    IntVec3 m;
    cplx rho_e;
    cplx rho_m;
    std::array<cplx, 3> j_e;
    std::array<cplx, 3> j_m;
    cplx xi_e0;  ///< box-normalised, like the amplitudes
    cplx xi_m0;
    std::array<cplx, 3> xi_e;
    std::array<cplx, 3> xi_m;
};

using ChargeFourier = std::vector<ChargeFourierEntry>;

/// ρ(k) = (2π)^{−3/2} Σ_j q_j e^{−ik·x_j} e^{−k²σ_j²/2}, j(k) likewise with q_j v_j.
inline ChargeFourier charge_fourier(std::span<const PointSource> srcs, std::span<const IntVec3> keys,
                                    const ModeSet& ms) {
    const UnitSystem& u = ms.units();
    const double c = u.c();
    const double e0 = u.eps0();
    const double hbar = ms.hbar();
    const double pre = std::pow(2.0 * std::numbers::pi, -1.5);
    const double box = std::pow(ms.dk(), 1.5);
    for (const auto& s : srcs) validate_source(s, u);

    ChargeFourier out;
    out.reserve(keys.size());
    for (const IntVec3& m : keys) {
        const Mode md = ms.mode(m);
        ChargeFourierEntry e{};
        e.m = m;
        for (const auto& s : srcs) {
            const double k2 = dot(md.k, md.k);
            const cplx ph = std::polar(pre * std::exp(-0.5 * k2 * s.sigma * s.sigma), -dot(md.k, s.pos));
            e.rho_e += s.charges.qe * ph;
            e.rho_m += s.charges.qm * ph;
            for (int d = 0; d < 3; ++d) {
                e.j_e[d] += s.charges.qe * s.vel[d] * ph;
                e.j_m[d] += s.charges.qm * s.vel[d] * ph;
            }
        }
        const double w = md.omega;
        const double root = std::sqrt(hbar / (2.0 * e0 * w)) * box;
        e.xi_e0 = (c / (hbar * w)) * root * e.rho_e;
        e.xi_m0 = (c * c * e0 / (hbar * w)) * root * e.rho_m;
        for (int d = 0; d < 3; ++d) {
            e.xi_e[d] = (1.0 / (hbar * w)) * root * e.j_e[d];
            e.xi_m[d] = (c * e0 / (hbar * w)) * root * e.j_m[d];
        }
        out.push_back(e);
    }
    return out;
}

inline ChargeFourier charge_fourier(std::span<const PointSource> srcs, const ModeSet& ms) {
    const auto keys = ms.lattice();
    return charge_fourier(srcs, keys, ms);
}

// ---------------------------------------------------------------------------
// Gupta–Bleuler condition

namespace detail {

inline const ChargeFourierEntry& find_entry(const ChargeFourier& cf, const IntVec3& m) {
    for (const auto& e : cf) {
        if (e.m == m) return e;
    }
    throw InvalidArgument("gupta_bleuler: charge transform lacks a listed wavevector");
}

}  // namespace detail

/// One field: max_k |a_{k,3} − a_{k,0} + ξ_{e,0}cosθ + ξ_{m,0}sinθ|.
/// Two fields: the a family against ξ_{e,0} and the b family against ξ_{m,0}.
inline double gupta_bleuler_residual(const ModeAmplitudeSet& amp, const ChargeFourier& cf,
                                     DualAngle th) {
    double worst = 0.0;
    for (std::size_t i = 0; i < amp.size(); ++i) {
        const auto& e = detail::find_entry(cf, amp.keys[i]);
        if (amp.two_field()) {
            worst = std::fmax(worst, std::abs(amp.a[i][3] - amp.a[i][0] + e.xi_e0));
            worst = std::fmax(worst, std::abs((*amp.b)[i][3] - (*amp.b)[i][0] + e.xi_m0));
        } else {
            worst = std::fmax(worst, std::abs(amp.a[i][3] - amp.a[i][0] + e.xi_e0 * th.cos() +
                                              e.xi_m0 * th.sin()));
        }
    }
    return worst;
}

/// Sets the scalar amplitudes so the condition holds exactly.
inline void impose_gupta_bleuler(ModeAmplitudeSet& amp, const ChargeFourier& cf, DualAngle th) {
    for (std::size_t i = 0; i < amp.size(); ++i) {
        const auto& e = detail::find_entry(cf, amp.keys[i]);
        if (amp.two_field()) {
            amp.a[i][0] = amp.a[i][3] + e.xi_e0;
            (*amp.b)[i][0] = (*amp.b)[i][3] + e.xi_m0;
        } else {
            amp.a[i][0] = amp.a[i][3] + e.xi_e0 * th.cos() + e.xi_m0 * th.sin();
        }
    }
}

// ---------------------------------------------------------------------------
// Synthesis

namespace detail {

inline std::array<cplx, 4> polarization_sum(const ModeAmplitudes& a, const Mode& md) {
    std::array<cplx, 4> v{a[0], 0.0, 0.0, 0.0};
    for (int l = 1; l <= 3; ++l)
        for (int d = 0; d < 3; ++d) v[1 + d] += a[l] * md.eps[l - 1][d];
    return v;
}

// Adds Σ_μ 2N·Re(w_μ e^{i(k·x − ωt)}) into `value` and its ∂_t into `rate`.
inline void add_mode(std::array<ScalarField, 4>& value, std::array<ScalarField, 4>& rate,
                     const std::array<cplx, 4>& w, const Mode& md, double scale, double t,
                     const Grid3& g) {
    std::array<std::vector<cplx>, 3> ph;
    for (int d = 0; d < 3; ++d) {
        ph[d].resize(g.n(d));
        for (int i = 0; i < g.n(d); ++i) {
            // k·x with commensurate k: phase 2π m i / n exactly representable.
            ph[d][i] = std::polar(1.0, 2.0 * std::numbers::pi * ((static_cast<long>(md.m[d]) * i) % g.n(d)) /
                                           g.n(d));
        }
    }
    const cplx tphase = std::polar(1.0, -md.omega * t);
    std::array<cplx, 4> wv;
    std::array<cplx, 4> wr;
    for (int mu = 0; mu < 4; ++mu) {
        wv[mu] = 2.0 * scale * w[mu] * tphase;
        wr[mu] = wv[mu] * cplx(0.0, -md.omega);
    }
    for (int i = 0; i < g.n(0); ++i)
        for (int j = 0; j < g.n(1); ++j) {
            const cplx pij = ph[0][i] * ph[1][j];
            for (int k = 0; k < g.n(2); ++k) {
                const cplx p = pij * ph[2][k];
                const std::size_t idx = g.index(i, j, k);
                for (int mu = 0; mu < 4; ++mu) {
                    value[mu][idx] += (wv[mu] * p).real();
                    rate[mu][idx] += (wr[mu] * p).real();
                }
            }
        }
}

}  // namespace detail

/// Real gridded Ã^μ, C̃^μ and their ∂_t at time t. One field: Ã carries the
/// cosθ weight and C̃ the c·sinθ weight of the same expansion. Two fields: Ã
/// from family a and C̃ = c × (family b expansion).
inline GriddedPotentials synthesize_potentials(const ModeAmplitudeSet& amp, const ModeSet& ms,
                                               DualAngle th, const Grid3& g, double t = 0.0) {
    amp.validate(ms);
    check_finite(t, "t");
    for (int d = 0; d < 3; ++d) {
        if (std::fabs(g.L(d) - ms.L()) > 1e-12 * ms.L()) {
            throw GridMismatch("synthesize_potentials: grid box differs from the mode-set box");
        }
    }
    const double c = ms.units().c();
    GriddedPotentials out = zero_gridded_potentials(g);
    std::array<ScalarField, 4> xv{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
    std::array<ScalarField, 4> xr = xv;
    std::array<ScalarField, 4> yv = xv;
    std::array<ScalarField, 4> yr = xv;
    for (std::size_t i = 0; i < amp.size(); ++i) {
        const Mode md = ms.mode(amp.keys[i]);
        for (int d = 0; d < 3; ++d) {
            if (2 * std::abs(md.m[d]) >= g.n(d)) {
                throw Aliasing("synthesize_potentials: mode at or above the grid Nyquist index");
            }
        }
        const double n = ms.normalization(md.omega);
        detail::add_mode(xv, xr, detail::polarization_sum(amp.a[i], md), md, n, t, g);
        if (amp.b) detail::add_mode(yv, yr, detail::polarization_sum((*amp.b)[i], md), md, n, t, g);
    }
    if (amp.two_field()) {
        for (int mu = 0; mu < 4; ++mu) {
            out.value.A[mu] = xv[mu];
            out.rate.A[mu] = xr[mu];
            out.value.C[mu] = yv[mu] * c;
            out.rate.C[mu] = yr[mu] * c;
        }
    } else {
        for (int mu = 0; mu < 4; ++mu) {
            out.value.A[mu] = xv[mu] * th.cos();
            out.rate.A[mu] = xr[mu] * th.cos();
            out.value.C[mu] = xv[mu] * (c * th.sin());
            out.rate.C[mu] = xr[mu] * (c * th.sin());
        }
    }
    return out;
}

/// Worst pointwise subsidiary residual over the grid.
inline double subsidiary_residual(const GridPotentialPair& p, DualAngle th, const UnitSystem& u) {
    const std::size_t n = p.A[0].data.size();
    const double c = u.c();
    double worst = 0.0;
    double scale = 0.0;
    for (int mu = 0; mu < 4; ++mu)
        for (std::size_t i = 0; i < n; ++i) {
            worst = std::fmax(worst, std::fabs(p.C[mu][i] * th.cos() - c * p.A[mu][i] * th.sin()));
            scale = std::fmax(scale, std::fmax(std::fabs(p.C[mu][i]), c * std::fabs(p.A[mu][i])));
        }
    return scale == 0.0 ? 0.0 : worst / scale;
}

// ---------------------------------------------------------------------------
// Dual Noether current and charge

namespace detail {

// ∂_μ X^ν on the grid (covariant index μ, ∂_0 = (1/c)∂_t).
inline std::array<std::array<ScalarField, 4>, 4> four_gradient(const GridPotentialPair& value,
                                                               const GridPotentialPair& rate,
                                                               bool c_family, const SpectralOps& ops,
                                                               double c) {
    const auto& v = c_family ? value.C : value.A;
    const auto& r = c_family ? rate.C : rate.A;
    std::array<std::array<ScalarField, 4>, 4> d{
        {{v[0], v[0], v[0], v[0]}, {v[0], v[0], v[0], v[0]}, {v[0], v[0], v[0], v[0]}, {v[0], v[0], v[0], v[0]}}};
    for (int nu = 0; nu < 4; ++nu) {
        d[0][nu] = r[nu] * (1.0 / c);
        for (int a = 0; a < 3; ++a) d[1 + a][nu] = ops.derivative(v[nu], a);
    }
    return d;
}

inline constexpr std::array<double, 4> kMetric{1.0, -1.0, -1.0, -1.0};

}  // namespace detail

struct NoetherCurrent {
    std::array<ScalarField, 4> f;  ///< covariant f_μ
    double scale;                  ///< max pointwise Σ of the absolute term magnitudes

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (const auto& x : f) m = std::fmax(m, dualfield::max_abs(x));
        return m;
    }
    [[nodiscard]] double relative() const { return scale == 0.0 ? 0.0 : max_abs() / scale; }
};

/// f_μ = −cε₀[(∂_μÃ^ν)C̃_ν − (∂_μC̃^ν)Ã_ν].
inline NoetherCurrent noether_dual_current(const GriddedPotentials& p, const UnitSystem& u) {
    const Grid3& g = p.grid();
    const SpectralOps ops(g);
    const double c = u.c();
    const double k = -c * u.eps0();
    const auto dA = detail::four_gradient(p.value, p.rate, false, ops, c);
    const auto dC = detail::four_gradient(p.value, p.rate, true, ops, c);
    NoetherCurrent out{{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)}, 0.0};
    for (int mu = 0; mu < 4; ++mu)
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = 0.0;
            double mag = 0.0;
            for (int nu = 0; nu < 4; ++nu) {
                const double t1 = dA[mu][nu][i] * detail::kMetric[nu] * p.value.C[nu][i];
                const double t2 = dC[mu][nu][i] * detail::kMetric[nu] * p.value.A[nu][i];
                s += t1 - t2;
                mag += std::fabs(t1) + std::fabs(t2);
            }
            out.f[mu][i] = k * s;
            out.scale = std::fmax(out.scale, std::fabs(k) * mag);
        }
    return out;
}

struct NoetherCharge {
    double value;
    double scale;  ///< ε₀ Σ dV of the absolute term magnitudes

    [[nodiscard]] double relative() const { return scale == 0.0 ? 0.0 : std::fabs(value) / scale; }
};

/// Λ_M = −ε₀∫[(∂₀Ã^ν)C̃_ν − (∂₀C̃^ν)Ã_ν] d³x.
inline NoetherCharge noether_dual_charge(const GriddedPotentials& p, const UnitSystem& u) {
    const Grid3& g = p.grid();
    const double c = u.c();
    const double dv = g.cell_volume();
    double s = 0.0;
    double mag = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (int nu = 0; nu < 4; ++nu) {
            const double t1 = p.rate.A[nu][i] / c * detail::kMetric[nu] * p.value.C[nu][i];
            const double t2 = p.rate.C[nu][i] / c * detail::kMetric[nu] * p.value.A[nu][i];
            s += t1 - t2;
            mag += std::fabs(t1) + std::fabs(t2);
        }
    return {-u.eps0() * s * dv, u.eps0() * mag * dv};
}

// ---------------------------------------------------------------------------
// Spin

/// S = ε₀∫(Ẽ_⊥×Ã_⊥ + B̃_⊥×C̃_⊥) d³x. Every input must be transverse.
inline Vec3 spin_observable(const VectorField& E, const VectorField& B, const VectorField& A,
                            const VectorField& C, const UnitSystem& u) {
    const Grid3& g = E.grid;
    for (const VectorField* f : {&B, &A, &C}) require_same_grid(g, f->grid, "spin_observable");
    const SpectralOps ops(g);
    require_transverse(E, ops, "E_perp");
    require_transverse(B, ops, "B_perp");
    require_transverse(A, ops, "A_perp");
    require_transverse(C, ops, "C_perp");
    return (integral(cross(E, A)) + integral(cross(B, C))) * u.eps0();
}

inline double helicity(const Vec3& S) { return norm(S); }

/// Transverse parts of the fields and vector potentials of `p`, ready for
/// spin_observable.
struct TransverseSet {
    VectorField E, B, A, C;
};

inline TransverseSet transverse_parts(const GriddedPotentials& p, const UnitSystem& u) {
    const SpectralOps ops(p.grid());
    const GridFieldPair f = fields_from_potentials(p, u, ops);
    const VectorField A(p.value.A[1], p.value.A[2], p.value.A[3]);
    const VectorField C(p.value.C[1], p.value.C[2], p.value.C[3]);
    return {helmholtz_decompose(f.E, ops).transverse, helmholtz_decompose(f.B, ops).transverse,
            helmholtz_decompose(A, ops).transverse, helmholtz_decompose(C, ops).transverse};
}

inline Vec3 spin_observable(const TransverseSet& t, const UnitSystem& u) {
    return spin_observable(t.E, t.B, t.A, t.C, u);
}

/// Amplitudes of a single circularly polarised mode: helicity +1 puts a/√2 in
/// λ=1 and ia/√2 in λ=2, helicity −1 uses −ia/√2.
inline ModeAmplitudes circular_amplitudes(cplx a, int helicity_sign) {
    const double s = 1.0 / std::sqrt(2.0);
    const cplx i(0.0, helicity_sign >= 0 ? 1.0 : -1.0);
    return {0.0, a * s, i * a * s, 0.0};
}

// ---------------------------------------------------------------------------
// Coulomb energies

/// Lattice-sum correction for the missing k = 0 cell: −πξΔk with ξ the
/// simple-cubic Madelung constant of the neutralising-background lattice sum.
inline constexpr double kCubicMadelung = -2.837297479480619;

namespace detail {

// Σ_{k≠0, |k|≤kmax} Δk³ cos(k·d) e^{−k²s2/2}/k² + w0, divided by (2π)³ε₀.
// For s2 → 0 and dense lattices this tends to 1/(4πε₀|d|).
inline std::vector<double> pair_kernels(const ModeSet& ms, const std::vector<Vec3>& seps,
                                        const std::vector<double>& s2) {
    const double dk = ms.dk();
    const int M = ms.max_index();
    const double kmax2 = ms.kmax() * ms.kmax() * (1.0 + 1e-12);
    const std::size_t P = seps.size();
    // Per-axis tables t[p][d][m+M] = e^{i k_d d_d − k_d² s2/2}.
    std::vector<std::array<std::vector<cplx>, 3>> tab(P);
    for (std::size_t p = 0; p < P; ++p)
        for (int d = 0; d < 3; ++d) {
            tab[p][d].resize(2 * M + 1);
            for (int m = -M; m <= M; ++m) {
                const double k = dk * m;
                tab[p][d][m + M] = std::polar(std::exp(-0.5 * k * k * s2[p]), k * seps[p][d]);
            }
        }
    std::vector<double> acc(P, 0.0);
    std::vector<cplx> pxy(P);
    for (int a = 0; a <= M; ++a) {
        for (int b = -M; b <= M; ++b) {
            if (a == 0 && b < 0) continue;
            const double kxy2 = dk * dk * (static_cast<double>(a) * a + static_cast<double>(b) * b);
            if (kxy2 > kmax2) continue;
            for (std::size_t p = 0; p < P; ++p) pxy[p] = tab[p][0][a + M] * tab[p][1][b + M];
            const int c0 = (a == 0 && b == 0) ? 1 : -M;
            for (int c = c0; c <= M; ++c) {
                const double k2 = kxy2 + dk * dk * static_cast<double>(c) * c;
                if (k2 > kmax2) continue;
                const double inv = 1.0 / k2;
                for (std::size_t p = 0; p < P; ++p) acc[p] += (pxy[p] * tab[p][2][c + M]).real() * inv;
            }
        }
    }
    const double e0 = ms.units().eps0();
    const double w0 = -std::numbers::pi * kCubicMadelung * dk;
    const double pre = 1.0 / (std::pow(2.0 * std::numbers::pi, 3) * e0);
    for (auto& v : acc) v = pre * (2.0 * v * dk * dk * dk + w0);
    return acc;
}

struct PairTable {
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    std::vector<double> kernel;
};

inline PairTable pair_table(std::span<const PointSource> srcs, const ModeSet& ms) {
    PairTable t;
    std::vector<Vec3> seps;
    std::vector<double> s2;
    for (const auto& s : srcs) validate_source(s, ms.units());
    for (std::size_t i = 0; i < srcs.size(); ++i)
        for (std::size_t j = i + 1; j < srcs.size(); ++j) {
            t.idx.emplace_back(i, j);
            seps.push_back(srcs[i].pos - srcs[j].pos);
            s2.push_back(srcs[i].sigma * srcs[i].sigma + srcs[j].sigma * srcs[j].sigma);
        }
    t.kernel = pair_kernels(ms, seps, s2);
    return t;
}

}  // namespace detail

/// Split of a mode-space pair energy into q̃_e–q̃_e, q̃_m–q̃_m and cross parts.
struct EnergyParts {
    double ee{0.0};
    double mm{0.0};
    double em{0.0};

    [[nodiscard]] double total() const { return ee + mm + em; }
};

/// One gauge family couples to w_e ρ̃_e + w_m cε₀ρ̃_m.
struct CouplingFamily {
    double w_e;
    double w_m;
};

inline EnergyParts coupled_pair_energy(std::span<const PointSource> srcs,
                                       std::span<const CouplingFamily> families, const ModeSet& ms) {
    const detail::PairTable t = detail::pair_table(srcs, ms);
    const double s = ms.units().c() * ms.units().eps0();
    EnergyParts e;
    for (std::size_t p = 0; p < t.idx.size(); ++p) {
        const auto& qi = srcs[t.idx[p].first].charges;
        const auto& qj = srcs[t.idx[p].second].charges;
        const double K = t.kernel[p];
        for (const auto& f : families) {
            e.ee += K * f.w_e * f.w_e * qi.qe * qj.qe;
            e.mm += K * f.w_m * f.w_m * s * s * qi.qm * qj.qm;
            e.em += K * f.w_e * f.w_m * s * (qi.qe * qj.qm + qi.qm * qj.qe);
        }
    }
    return e;
}

/// Pair part of Σ_k Δk³ |ρ̃_e cosθ + cε₀ρ̃_m sinθ|²/(2ε₀k²) (one gauge field).
inline double symmetric_charge_energy(std::span<const PointSource> srcs, DualAngle th,
                                      const ModeSet& ms) {
    const std::array<CouplingFamily, 1> f{{{th.cos(), th.sin()}}};
    return coupled_pair_energy(srcs, f, ms).total();
}

/// Two independent gauge families: Ã couples only to ρ̃_e, C̃ only to ρ̃_m.
/// The cross term em is zero by construction.
inline EnergyParts two_field_energy(std::span<const PointSource> srcs, const ModeSet& ms) {
    const std::array<CouplingFamily, 2> f{{{1.0, 0.0}, {0.0, 1.0}}};
    return coupled_pair_energy(srcs, f, ms);
}

/// Real-space pair energy Σ_{i<j} q_iq_j erf(r/√(2(σ_i²+σ_j²)))/(4πε₀r), with
/// q the asymmetric-representation electric charge (σ = 0 gives the point
/// formula). All sources must share one charge ratio.
inline double coulomb_energy_real(std::span<const PointSource> srcs, const UnitSystem& u) {
    if (srcs.size() < 2) throw InvalidArgument("coulomb_energy_real: need at least two sources");
    for (const auto& s : srcs) validate_source(s, u);
    const auto q = charges_of(srcs);
    if (!shares_charge_ratio(q, u)) {
        throw MixedChargeRatio("coulomb_energy_real: sources do not share one q_m/q_e ratio");
    }
    DualAngle th;
    for (const auto& c : q) {
        if (charge_norm(c, u) > 0.0) {
            th = asymmetrizing_angle(c, u);
            break;
        }
    }
    double e = 0.0;
    for (std::size_t i = 0; i < srcs.size(); ++i)
        for (std::size_t j = i + 1; j < srcs.size(); ++j) {
            const double r = norm(srcs[i].pos - srcs[j].pos);
            if (r == 0.0) throw CoincidentSources("coulomb_energy_real: two sources coincide");
            const double qi = to_asymmetric(q[i], th, u).qe;
            const double qj = to_asymmetric(q[j], th, u).qe;
            const double s2 = srcs[i].sigma * srcs[i].sigma + srcs[j].sigma * srcs[j].sigma;
            const double shape = s2 == 0.0 ? 1.0 : std::erf(r / std::sqrt(2.0 * s2));
            e += qi * qj * shape / (4.0 * std::numbers::pi * u.eps0() * r);
        }
    return e;
}

/// Cutoffs for the mode-space Coulomb sums: k_max·σ_min = 6, k_min·r_max = 0.3.
inline ModeSet coulomb_mode_set(std::span<const PointSource> srcs, const UnitSystem& u,
                                double hbar = 1.0) {
    if (srcs.size() < 2) throw InvalidArgument("coulomb_mode_set: need at least two sources");
    double smin = INFINITY;
    double rmax = 0.0;
    for (std::size_t i = 0; i < srcs.size(); ++i) {
        smin = std::fmin(smin, srcs[i].sigma);
        for (std::size_t j = i + 1; j < srcs.size(); ++j)
            rmax = std::fmax(rmax, norm(srcs[i].pos - srcs[j].pos));
    }
    if (!(smin > 0.0)) throw InvalidArgument("coulomb_mode_set: every source needs sigma > 0");
    if (rmax == 0.0) throw CoincidentSources("coulomb_mode_set: all sources coincide");
    const double dk = 0.3 / rmax;
    return ModeSet(2.0 * std::numbers::pi / dk, 6.0 / smin, u, hbar);
}

// ---------------------------------------------------------------------------
// Text table

inline void write_mode_table(std::ostream& out, const ModeSet& ms, const ModeAmplitudeSet& amp) {
    out << std::setprecision(17);
    out << "# L=" << ms.L() << " kmax=" << ms.kmax() << (amp.two_field() ? " families=2" : " families=1")
        << "\n";
    out << "# kx ky kz lambda re_a im_a" << (amp.two_field() ? " re_b im_b" : "") << "\n";
    for (std::size_t i = 0; i < amp.size(); ++i) {
        const Mode md = ms.mode(amp.keys[i]);
        for (int l = 0; l < 4; ++l) {
            out << md.k.x << ' ' << md.k.y << ' ' << md.k.z << ' ' << l << ' ' << amp.a[i][l].real()
                << ' ' << amp.a[i][l].imag();
            if (amp.b) out << ' ' << (*amp.b)[i][l].real() << ' ' << (*amp.b)[i][l].imag();
            out << '\n';
        }
    }
}

/// Reads rows written by write_mode_table back into amplitudes on `ms`.
inline ModeAmplitudeSet read_mode_table(std::istream& in, const ModeSet& ms) {
    ModeAmplitudeSet amp;
    bool two = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("families=2") != std::string::npos) {
                two = true;
                amp.b.emplace();
            }
            continue;
        }
        std::istringstream row(line);
        double kx, ky, kz, ra, ia, rb = 0.0, ib = 0.0;
        int l;
        if (!(row >> kx >> ky >> kz >> l >> ra >> ia) || (two && !(row >> rb >> ib)) || l < 0 || l > 3) {
            throw IoError("read_mode_table: malformed row '" + line + "'");
        }
        const IntVec3 m{static_cast<int>(std::lround(kx / ms.dk())), static_cast<int>(std::lround(ky / ms.dk())),
                        static_cast<int>(std::lround(kz / ms.dk()))};
        auto it = std::find(amp.keys.begin(), amp.keys.end(), m);
        std::size_t i = static_cast<std::size_t>(it - amp.keys.begin());
        if (it == amp.keys.end()) {
            amp.keys.push_back(m);
            amp.a.push_back({});
            if (two) amp.b->push_back({});
        }
        amp.a[i][l] = {ra, ia};
        if (two) (*amp.b)[i][l] = {rb, ib};
    }
    amp.validate(ms);
    return amp;
}

}  // namespace dualfield
