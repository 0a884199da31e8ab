// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here and printed next to each measurement.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dualfield/scenario.hpp"

using namespace dualfield;
using detail::SweepRng;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass{true};
    std::ostringstream detail;

    void measure(const std::string& name, double value, double bound, bool below = true) {
        const bool ok = below ? value < bound : value > bound;
        pass = pass && ok;
        detail << ' ' << name << '=' << value << (below ? "<" : ">") << bound << (ok ? "" : "!");
    }
    void require(const std::string& name, bool ok) {
        pass = pass && ok;
        detail << ' ' << name << '=' << (ok ? "yes" : "NO");
    }
    void note(const std::string& text) { detail << ' ' << text; }
};

int run(const char* id, const char* title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    o.detail << std::setprecision(3);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << title << ':' << o.detail.str() << " time="
              << std::fixed << std::setprecision(1) << secs << "s" << std::defaultfloat << std::endl;
    return o.pass ? 0 : 1;
}

UnitSystem random_units(SweepRng& r) { return {std::pow(10.0, r.uniform(-1, 1)), std::pow(10.0, r.uniform(-1, 1))}; }

// --------------------------------------------------------------------------

void ac1(Outcome& o) {
    SweepRng r(1001);
    constexpr int N = 10000;
    double group = 0, inverse = 0, norm_inv = 0, asym = 0;
    bool identity = true;
    const DualAngle zero(0.0);
    for (int i = 0; i < N; ++i) {
        const UnitSystem u = random_units(r);
        const DualAngle a = r.angle(), b = r.angle();
        const FieldVecPair f{r.vec(), r.vec()};
        const ChargePair q{r.scalar(), r.scalar()};
        const PotentialPair p{{r.scalar(), r.scalar(), r.scalar(), r.scalar()},
                              {r.scalar(), r.scalar(), r.scalar(), r.scalar()}};
        group = std::fmax(group, detail::rel_fields(rotate_fields(rotate_fields(f, a, u), b, u), rotate_fields(f, a + b, u), u));
        group = std::fmax(group, detail::rel_charges(rotate_charges(rotate_charges(q, a, u), b, u), rotate_charges(q, a + b, u), u));
        group = std::fmax(group, detail::rel_potentials(rotate_potentials(rotate_potentials(p, a, u), b, u),
                                                        rotate_potentials(p, a + b, u), u));
        inverse = std::fmax(inverse, detail::rel_fields(inverse_rotate_fields(rotate_fields(f, a, u), a, u), f, u));
        inverse = std::fmax(inverse, detail::rel_charges(inverse_rotate_charges(rotate_charges(q, a, u), a, u), q, u));
        inverse = std::fmax(inverse, detail::rel_potentials(inverse_rotate_potentials(rotate_potentials(p, a, u), a, u), p, u));
        norm_inv = std::fmax(norm_inv, detail::rel_diff(energy_density(rotate_fields(f, a, u), u), energy_density(f, u)));
        norm_inv = std::fmax(norm_inv, detail::rel_diff(charge_norm(rotate_charges(q, a, u), u), charge_norm(q, u)));
        double pos = 0.0;
        for (int mu = 0; mu < 4; ++mu) pos += u.c() * u.c() * p.A[mu] * p.A[mu] + p.C[mu] * p.C[mu];
        norm_inv = std::fmax(norm_inv, std::fabs(potential_form(rotate_potentials(p, a, u), u) - potential_form(p, u)) /
                                           (u.eps0() * pos));
        const auto fi = rotate_fields(f, zero, u);
        const auto qi = rotate_charges(q, zero, u);
        const auto pi0 = rotate_potentials(p, zero, u);
        identity = identity && fi.E == f.E && fi.B == f.B && qi.qe == q.qe && qi.qm == q.qm && pi0.A == p.A && pi0.C == p.C;
        const double n = charge_norm(q, u);
        const ChargePair rq = rotate_charges(q, asymmetrizing_angle(q, u), u);
        asym = std::fmax(asym, std::fabs(u.c() * u.eps0() * rq.qm) / n);
    }
    o.note("samples_per_type=" + std::to_string(N));
    o.measure("group_law", group, 1e-12);
    o.measure("inverse", inverse, 1e-12);
    o.measure("norm", norm_inv, 1e-12);
    o.require("identity_exact", identity);
    o.measure("asym_qm", asym, 1e-12);
}

void ac2(Outcome& o) {
    const UnitSystem u;
    const Grid3 g = Grid3::cubic(32, 8.0);
    const SymmetricMaxwell solver(g, u);
    const double dt = 0.9 * solver.cfl_limit();
    const std::vector<PointSource> shared{{{3.0, 4.0, 4.0}, {0.05, 0.0, 0.0}, {1.0, 0.5}, 0.6},
                                          {{5.0, 4.2, 3.8}, {-0.03, 0.02, 0.0}, {-0.6, -0.3}, 0.6}};
    const std::vector<PointSource> mixed{{{3.0, 4.0, 4.0}, {0.05, 0.0, 0.0}, {1.0, 0.0}, 0.6},
                                         {{5.0, 4.0, 4.5}, {-0.03, 0.02, 0.0}, {0.0, 0.5}, 0.6}};
    double worst = 0.0;
    int runs = 0;
    for (const auto* srcs : {&shared, &mixed}) {
        const EMState s = consistent_initial_state(g, *srcs, u);
        for (double th : {pi / 6, pi / 4, pi / 2, 3 * pi / 2}) {
            worst = std::fmax(worst, dual_covariance_residual(s, DualAngle(th), 100, dt, u, srcs == &shared));
            ++runs;
        }
    }
    o.note("grid=32^3 steps=100 runs=" + std::to_string(runs));
    o.measure("max_residual", worst, 1e-10);
}

void ac3(Outcome& o) {
    SweepRng r(1003);
    const double L = 2 * pi;
    const Grid3 g = Grid3::cubic(16, L);
    const std::vector<PointSource> src{{{1.0, 2.0, 3.0}, {0.01, 0.0, 0.0}, {0.4, 0.1}, 0.3}};
    double wq = 0.0, wf = 0.0;
    for (int n = 0; n < 50; ++n) {
        const UnitSystem u = random_units(r);
        const ModeSet ms(L, 7.0, u);
        const DualAngle th = r.angle();
        ModeAmplitudeSet amp = zero_amplitudes(detail::random_half_keys(r, 6, ms));
        for (auto& a : amp.a)
            for (auto& x : a) x = r.complex();
        impose_gupta_bleuler(amp, charge_fourier(src, amp.keys, ms), th);
        const GriddedPotentials p = synthesize_potentials(amp, ms, th, g, r.uniform(0, 10));
        wq = std::fmax(wq, noether_dual_charge(p, u).relative());
        wf = std::fmax(wf, noether_dual_current(p, u).relative());
    }
    const UnitSystem u;
    const ModeSet ms(L, 7.0, u);
    ModeAmplitudeSet bad = zero_amplitudes(detail::random_half_keys(r, 6, ms), true);
    for (std::size_t i = 0; i < bad.size(); ++i)
        for (int l = 0; l < 4; ++l) {
            bad.a[i][l] = r.complex();
            (*bad.b)[i][l] = r.complex();
        }
    const GriddedPotentials pv = synthesize_potentials(bad, ms, DualAngle(0.0), g);
    o.note("configs=50");
    o.measure("max_charge_rel", wq, 1e-10);
    o.measure("max_current_rel", wf, 1e-10);
    o.measure("violating_charge_rel", noether_dual_charge(pv, u).relative(), 1e-3, false);
}

// Random 2–4 source configurations sharing one charge ratio.
struct CoulombCase {
    std::string label;
    std::vector<PointSource> sources;
};

std::vector<CoulombCase> coulomb_cases() {
    SweepRng r(1004);
    auto make = [&](const std::string& label, int n, double qe_w, double qm_w) {
        std::vector<PointSource> s;
        while (static_cast<int>(s.size()) < n) {
            const Vec3 x{r.uniform(-0.7, 0.7), r.uniform(-0.7, 0.7), r.uniform(-0.7, 0.7)};
            bool ok = true;
            for (const auto& o : s) ok = ok && norm(o.pos - x) > 0.4;
            if (!ok) continue;
            const double q = r.uniform(0.4, 1.5) * (r.uniform(0, 1) < 0.5 ? -1.0 : 1.0);
            s.push_back({x, {}, {q * qe_w, q * qm_w}, r.uniform(0.15, 0.25)});
        }
        return CoulombCase{label, s};
    };
    return {make("electric2", 2, 1.0, 0.0), make("dual3", 3, 0.0, 1.0),   make("mixed4", 4, 0.6, 0.8),
            make("mixed3", 3, -0.3, 1.1),   make("dual2", 2, 0.0, -1.0), make("electric4", 4, 1.0, 0.0)};
}

void ac4(Outcome& o) {
    const UnitSystem u;
    const std::vector<PointSource> unit{{{0, 0, 0}, {}, {1, 0}, 0.15}, {{1, 0, 0}, {}, {1, 0}, 0.15}};
    const double ref = symmetric_charge_energy(unit, DualAngle(0), coulomb_mode_set(unit, u));
    o.measure("unit_pair_vs_1/(4pi)", detail::rel_diff(ref, 1.0 / (4 * pi)), 1e-2);
    double worst = 0.0;
    int count = 0;
    for (const auto& c : coulomb_cases()) {
        const DualAngle th = asymmetrizing_angle(c.sources.front().charges, u);
        const double mode = symmetric_charge_energy(c.sources, th, coulomb_mode_set(c.sources, u));
        worst = std::fmax(worst, detail::rel_diff(mode, coulomb_energy_real(c.sources, u)));
        ++count;
    }
    o.note("configs=" + std::to_string(count) + " cutoffs=kmax*sigma_min:6,kmin*r_max:0.3");
    o.measure("max_rel_error", worst, 1e-2);
    // One q̃_e-only and one q̃_m-only source: Coulomb-form cross term.
    const std::vector<PointSource> pair{{{0, 0, 0}, {}, {1, 0}, 0.2}, {{1.2, 0, 0}, {}, {0, 1}, 0.2}};
    const std::vector<PointSource> ref_pair{{{0, 0, 0}, {}, {1, 0}, 0.2}, {{1.2, 0, 0}, {}, {1, 0}, 0.2}};
    const DualAngle th(0.5);
    const double cross = symmetric_charge_energy(pair, th, coulomb_mode_set(pair, u));
    o.measure("cross_term_rel_error", detail::rel_diff(cross, th.cos() * th.sin() * coulomb_energy_real(ref_pair, u)), 1e-2);
}

void ac5(Outcome& o) {
    const UnitSystem u;
    const double s = u.c() * u.eps0();
    bool em_zero = true;
    double worst = 0.0;
    for (const auto& c : coulomb_cases()) {
        const ModeSet ms = coulomb_mode_set(c.sources, u);
        const EnergyParts e = two_field_energy(c.sources, ms);
        em_zero = em_zero && e.em == 0.0;
        std::vector<PointSource> el = c.sources, mirror = c.sources;
        for (auto& x : el) x.charges = {x.charges.qe, 0.0};
        for (auto& x : mirror) x.charges = {s * x.charges.qm, 0.0};
        worst = std::fmax(worst, detail::rel_diff(e.ee, coulomb_energy_real(el, u)));
        worst = std::fmax(worst, detail::rel_diff(e.mm, coulomb_energy_real(mirror, u)));
    }
    const std::vector<PointSource> pair{{{0, 0, 0}, {}, {1, 0}, 0.2}, {{1, 0, 0}, {}, {0, 1}, 0.2}};
    const EnergyParts p = two_field_energy(pair, coulomb_mode_set(pair, u));
    o.require("em_exactly_zero", em_zero && p.em == 0.0);
    o.require("electric_dual_pair_no_energy", p.ee == 0.0 && p.mm == 0.0);
    o.measure("max_ee_mm_rel_error", worst, 1e-2);
}

void ac6(Outcome& o) {
    ScenarioConfig cfg;
    cfg.name = "monopole-flyby";
    cfg.out_dir = std::filesystem::temp_directory_path() / "dualfield_acceptance_flyby";
    std::filesystem::create_directories(cfg.out_dir);
    const Summary s = detail::run_monopole_flyby(cfg);
    o.measure("classical_oop_rel", std::stod(*s.find("classical_out_of_plane_relative")), 1e-2, false);
    o.measure("quantum_oop_rel", std::stod(*s.find("quantum_out_of_plane_relative")), 1e-8);
    std::filesystem::remove_all(cfg.out_dir);
}

void ac7(Outcome& o) {
    SweepRng r(1007);
    const double L = 2 * pi;
    const Grid3 g = Grid3::cubic(16, L);
    {
        const UnitSystem u;
        const ModeSet ms(L, 7.0, u);
        auto single = [&](const ModeAmplitudes& a) {
            ModeAmplitudeSet amp = zero_amplitudes({{0, 0, 1}});
            amp.a[0] = a;
            return spin_observable(transverse_parts(synthesize_potentials(amp, ms, DualAngle(0), g), u), u);
        };
        const Vec3 right = single(circular_amplitudes(1.0, +1));
        const Vec3 left = single(circular_amplitudes(1.0, -1));
        o.require("circular_sign", right.z > 0 && left.z < 0);
        o.measure("circular_Sz_vs_hbar|a|^2", std::fabs(right.z - 1.0), 1e-12);
        o.measure("linear_S", norm(single({0.0, 1.0, 0.0, 0.0})), 1e-12);
    }
    double inv = 0.0, drift = 0.0;
    for (int n = 0; n < 10; ++n) {
        const UnitSystem u = random_units(r);
        const ModeSet ms(L, 7.0, u);
        const DualAngle th = r.angle();
        ModeAmplitudeSet amp = zero_amplitudes(detail::random_half_keys(r, 5, ms));
        for (auto& a : amp.a) a = circular_amplitudes(r.complex(), r.uniform(0, 1) < 0.5 ? -1 : 1);
        const GriddedPotentials p = synthesize_potentials(amp, ms, th, g);
        const Vec3 S0 = spin_observable(transverse_parts(p, u), u);
        const DualAngle rot = r.angle();
        const GriddedPotentials pr{to_symmetric(p.value, rot, u), to_symmetric(p.rate, rot, u)};
        inv = std::fmax(inv, norm(spin_observable(transverse_parts(pr, u), u) - S0) / norm(S0));
        for (double t : {0.7, 13.0, 400.0}) {
            const GriddedPotentials pt = synthesize_potentials(free_evolve_modes(amp, t, ms), ms, th, g);
            drift = std::fmax(drift, detail::rel_diff(helicity(spin_observable(transverse_parts(pt, u), u)), helicity(S0)));
        }
    }
    o.measure("dual_invariance", inv, 1e-12);
    o.measure("helicity_drift", drift, 1e-10);
}

void ac8(Outcome& o) {
    SweepRng r(1008);
    bool identical = true;
    double worst = 0.0;
    constexpr int N = 10000;
    for (int i = 0; i < N; ++i) {
        const UnitSystem u = random_units(r);
        const ParticleState p = make_particle(r.vec(), r.vec() * 1e-4, {r.scalar(), r.scalar()}, 1.0);
        const FieldVecPair f{r.vec(), r.vec()};
        const Vec3 Fc = classical_lorentz_force(p, f, u);
        identical = identical && quantum_lorentz_force(p, f, f, u) == Fc;
        const DualAngle th = r.angle();
        ParticleState pr = p;
        pr.charges = to_symmetric(p.charges, th, u);
        const Vec3 Fr = classical_lorentz_force(pr, to_symmetric(f, th, u), u);
        const double v = norm(p.v);
        const double scale = (norm(f.E) + v * norm(f.B) + u.c() * norm(f.B) + v * norm(f.E) / u.c()) *
                             charge_norm(p.charges, u);
        worst = std::fmax(worst, norm(Fr - Fc) / scale);
    }
    o.note("samples=" + std::to_string(N));
    o.require("quantum_equals_classical_on_transverse", identical);
    o.measure("classical_dual_invariance", worst, 1e-12);
}

}  // namespace

int main() {
    int failures = 0;
    failures += run("AC1", "dual-rotation algebra", ac1);
    failures += run("AC2", "representation equivalence", ac2);
    failures += run("AC3", "Noether triviality", ac3);
    failures += run("AC4", "Coulomb equivalence", ac4);
    failures += run("AC5", "two-field no cross interaction", ac5);
    failures += run("AC6", "out-of-plane discriminator", ac6);
    failures += run("AC7", "helicity and spin", ac7);
    failures += run("AC8", "quantum and classical force", ac8);
    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
