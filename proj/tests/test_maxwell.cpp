#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "dualfield/maxwell.hpp"
#include "support.hpp"

using namespace dualfield;
using testing_support::Gen;

namespace {

constexpr double pi = std::numbers::pi;

VectorField sample_vec(const Grid3& g, auto fn) {
    VectorField f(g);
    for (int i = 0; i < g.n(0); ++i)
        for (int j = 0; j < g.n(1); ++j)
            for (int k = 0; k < g.n(2); ++k) f.set(g.index(i, j, k), fn(g.position(i, j, k)));
    return f;
}

// Transverse band-limited field built from a few random low modes.
VectorField random_transverse(const Grid3& g, Gen& gen, int kmax) {
    std::vector<std::array<Vec3, 3>> terms;
    for (int n = 0; n < 8; ++n) {
        const Vec3 k{2 * pi / g.L(0) * gen.integer(-kmax, kmax), 2 * pi / g.L(1) * gen.integer(-kmax, kmax),
                     2 * pi / g.L(2) * gen.integer(-kmax, kmax)};
        terms.push_back({k, Vec3{gen.normal(), gen.normal(), gen.normal()}, Vec3{gen.normal(), gen.normal(), gen.normal()}});
    }
    const VectorField v = sample_vec(g, [&](const Vec3& x) {
        Vec3 s;
        for (const auto& t : terms) s += t[1] * std::cos(dot(t[0], x)) + t[2] * std::sin(dot(t[0], x));
        return s;
    });
    return helmholtz_decompose(v).transverse;
}

struct PlaneWave {
    Vec3 k, e0;
    double c;
    [[nodiscard]] GridFieldPair at(const Grid3& g, double t) const {
        const double w = c * norm(k);
        const Vec3 b0 = cross(k, e0) / w;
        return {sample_vec(g, [&](const Vec3& x) { return e0 * std::cos(dot(k, x) - w * t); }),
                sample_vec(g, [&](const Vec3& x) { return b0 * std::cos(dot(k, x) - w * t); })};
    }
};

double field_rel(const GridFieldPair& a, const GridFieldPair& b, const UnitSystem& u) {
    const GridFieldPair d{a.E - b.E, a.B - b.B};
    return std::sqrt(field_energy(d, u) / field_energy(b, u));
}

}  // namespace

TEST(Maxwell, ZeroStaysZero) {
    const Grid3 g = Grid3::cubic(8, 1.0);
    const UnitSystem u;
    const EMState s{0.0, zero_fields(g), {}};
    const EMState n = step_symmetric_maxwell(s, 0.01, u);
    EXPECT_EQ(max_abs(n.fields.E), 0.0);
    EXPECT_EQ(max_abs(n.fields.B), 0.0);
    EXPECT_DOUBLE_EQ(n.t, 0.01);
}

TEST(Maxwell, CflViolationRejected) {
    const Grid3 g = Grid3::cubic(16, 1.0);
    const UnitSystem u(2.0, 1.0);
    const SymmetricMaxwell m(g, u);
    EXPECT_DOUBLE_EQ(m.cfl_limit(), 0.5 / 16 / 2.0);
    const EMState s{0.0, zero_fields(g), {}};
    EXPECT_THROW(m.step(s, 0.02), CflViolation);
    EXPECT_NO_THROW(m.step(s, 0.015));
    EXPECT_THROW(m.step(s, -1e-3), InvalidArgument);
}

TEST(Maxwell, PlaneWavePhaseErrorPerPeriod) {
    const Grid3 g = Grid3::cubic(16, 1.0);
    const UnitSystem u(1.0, 1.0);
    const PlaneWave pw{{2 * pi, 0, 0}, {0, 0.8, 0}, u.c()};
    const double period = 2 * pi / (u.c() * norm(pw.k));
    const int steps = 640;  // ωdt ≈ 0.0098
    const SymmetricMaxwell m(g, u);
    const EMState end = m.evolve({0.0, pw.at(g, 0.0), {}}, period / steps, steps);
    EXPECT_LT(field_rel(end.fields, pw.at(g, period), u), 1e-8);
}

TEST(Maxwell, PlaneWaveTravelsAtC) {
    // Oblique wave, non-unit c: the field after a quarter period is the shifted wave.
    const Grid3 g({16, 16, 8}, {1.0, 1.0, 0.5});
    const UnitSystem u(3.0, 0.5);
    const PlaneWave pw{{2 * pi, -2 * pi, 4 * pi}, {1.0, 1.0, 0.0}, u.c()};
    const double w = u.c() * norm(pw.k);
    const double t = 0.25 * 2 * pi / w;
    const int steps = 200;
    const EMState end = SymmetricMaxwell(g, u).evolve({0.0, pw.at(g, 0.0), {}}, t / steps, steps);
    EXPECT_LT(field_rel(end.fields, pw.at(g, t), u), 1e-8);
}

TEST(Maxwell, EnergyConservedSourceFree) {
    const Grid3 g = Grid3::cubic(16, 1.0);
    const UnitSystem u;
    Gen gen(31);
    const GridFieldPair f{random_transverse(g, gen, 2), random_transverse(g, gen, 2)};
    const double kmax = 2 * pi * 2 * std::sqrt(3.0);
    const double dt = 0.01 / (u.c() * kmax);
    const SymmetricMaxwell m(g, u);
    const double e0 = field_energy(f, u);
    const EMState end = m.evolve({0.0, f, {}}, dt, 1000);
    EXPECT_LT(std::fabs(field_energy(end.fields, u) - e0) / e0, 1e-9);
}

TEST(Maxwell, Linearity) {
    const Grid3 g = Grid3::cubic(16, 1.0);
    const UnitSystem u;
    Gen gen(32);
    const GridFieldPair a{random_transverse(g, gen, 3), random_transverse(g, gen, 3)};
    const GridFieldPair b{random_transverse(g, gen, 3), random_transverse(g, gen, 3)};
    const SymmetricMaxwell m(g, u);
    const double dt = 0.01;
    const EMState sa = m.step({0.0, a, {}}, dt);
    const EMState sb = m.step({0.0, b, {}}, dt);
    const EMState sab = m.step({0.0, {a.E + b.E, a.B + b.B}, {}}, dt);
    const GridFieldPair sum{sa.fields.E + sb.fields.E, sa.fields.B + sb.fields.B};
    EXPECT_LT(field_rel(sab.fields, sum, u), 1e-12);
}

TEST(Maxwell, MagneticCurrentIsDualOfElectric) {
    const Grid3 g = Grid3::cubic(16, 2.0);
    const UnitSystem u(1.0, 1.0);
    const std::vector<PointSource> src{{{0.8, 1.0, 1.1}, {0.05, 0.02, 0.0}, {1.0, 0.0}, 0.4}};
    const EMState se = consistent_initial_state(g, src, u);
    const DualAngle quarter(pi / 2);
    const EMState sm = to_symmetric(se, quarter, u);
    EXPECT_NEAR(sm.sources[0].charges.qe, 0.0, 1e-15);
    EXPECT_NEAR(sm.sources[0].charges.qm, 1.0, 1e-15);
    const SymmetricMaxwell m(g, u);
    const EMState a = to_symmetric(m.evolve(se, 0.02, 20), quarter, u);
    const EMState b = m.evolve(sm, 0.02, 20);
    EXPECT_LT(field_rel(a.fields, b.fields, u), 1e-12);
}

TEST(Gauss, ConsistentInitialData) {
    const Grid3 g = Grid3::cubic(32, 4.0);
    const UnitSystem u(1.0, 0.8);
    const std::vector<PointSource> src{{{1.0, 2.0, 2.0}, {}, {1.0, 0.5}, 0.4},
                                       {{3.0, 2.2, 1.4}, {}, {-0.7, 0.2}, 0.4}};
    const auto r = gauss_residuals(consistent_initial_state(g, src, u), u);
    EXPECT_LT(r.rE, 1e-10);
    EXPECT_LT(r.rB, 1e-10);
}

TEST(Gauss, SourceFreeWave) {
    const Grid3 g = Grid3::cubic(16, 1.0);
    const UnitSystem u;
    const PlaneWave pw{{0, 2 * pi, 2 * pi}, {1.0, 0, 0}, u.c()};
    const auto r = gauss_residuals({0.0, pw.at(g, 0.0), {}}, u);
    EXPECT_LT(r.rE, 1e-12);
    EXPECT_LT(r.rB, 1e-12);
}

TEST(Gauss, InjectedGradientNoiseScales) {
    const Grid3 g = Grid3::cubic(16, 1.0);
    const UnitSystem u;
    const SpectralOps ops(g);
    const PlaneWave pw{{0, 2 * pi, 0}, {1.0, 0, 0}, u.c()};
    const GridFieldPair base = pw.at(g, 0.0);
    Gen gen(33);
    const ScalarField phi = random_transverse(g, gen, 3).component(1);
    const VectorField noise = ops.gradient(phi);
    std::vector<double> r;
    for (double eps : {1e-6, 2e-6, 4e-6}) {
        r.push_back(gauss_residuals({0.0, {base.E, base.B + noise * eps}, {}}, u).rB);
    }
    EXPECT_GT(r[0], 1e-9);
    EXPECT_NEAR(r[1] / r[0], 2.0, 1e-3);
    EXPECT_NEAR(r[2] / r[0], 4.0, 1e-3);
}

TEST(Gauss, PreservedWithMovingSources) {
    const Grid3 g = Grid3::cubic(16, 2.0);
    const UnitSystem u;
    const std::vector<PointSource> src{{{0.9, 1.0, 1.0}, {0.05, -0.03, 0.01}, {1.0, 0.4}, 0.4}};
    const EMState end = SymmetricMaxwell(g, u).evolve(consistent_initial_state(g, src, u), 0.02, 50);
    const auto r = gauss_residuals(end, u);
    EXPECT_LT(r.rE, 1e-8);
    EXPECT_LT(r.rB, 1e-8);
    EXPECT_NEAR(end.sources[0].pos.x, 0.9 + 0.05 * 1.0, 1e-12);
}

TEST(Covariance, ZeroAngleIsExact) {
    const Grid3 g = Grid3::cubic(16, 2.0);
    const UnitSystem u;
    const std::vector<PointSource> src{{{0.9, 1.0, 1.0}, {0.02, 0, 0}, {1.0, 0.4}, 0.4}};
    EXPECT_EQ(dual_covariance_residual(consistent_initial_state(g, src, u), DualAngle(0), 10, 0.02, u), 0.0);
}

TEST(Covariance, SourceFreeWaveAnyAngle) {
    const Grid3 g = Grid3::cubic(16, 1.0);
    const UnitSystem u(2.0, 0.5);
    Gen gen(34);
    const GridFieldPair f{random_transverse(g, gen, 3), random_transverse(g, gen, 3)};
    for (int n = 0; n < 3; ++n) {
        EXPECT_LT(dual_covariance_residual({0.0, f, {}}, gen.angle(), 100, 0.005, u), 1e-12);
    }
}

TEST(Covariance, StaticChargePair) {
    const Grid3 g = Grid3::cubic(16, 2.0);
    const UnitSystem u;
    const std::vector<PointSource> src{{{0.6, 1.0, 1.0}, {}, {1.0, 0.5}, 0.4},
                                       {{1.4, 1.0, 1.0}, {}, {-2.0, -1.0}, 0.4}};
    const EMState s = consistent_initial_state(g, src, u);
    EXPECT_LT(dual_covariance_residual(s, DualAngle(pi / 4), 100, 0.02, u, true), 1e-10);
}

TEST(Covariance, MixedRatioFlag) {
    const Grid3 g = Grid3::cubic(16, 2.0);
    const UnitSystem u;
    const std::vector<PointSource> src{{{0.6, 1.0, 1.0}, {}, {1.0, 0.0}, 0.4},
                                       {{1.4, 1.0, 1.0}, {}, {0.0, 1.0}, 0.4}};
    const EMState s = consistent_initial_state(g, src, u);
    EXPECT_THROW(dual_covariance_residual(s, DualAngle(0.3), 2, 0.02, u, true), MixedChargeRatio);
    EXPECT_LT(dual_covariance_residual(s, DualAngle(0.3), 20, 0.02, u, false), 1e-10);
}

TEST(Snapshot, WritesHeaderAndGrids) {
    const Grid3 g = Grid3::cubic(8, 1.0);
    const auto dir = std::filesystem::temp_directory_path() / "dualfield_snapshot_test";
    std::filesystem::remove_all(dir);
    write_snapshot(dir, "s0", {0.5, zero_fields(g), {}}, 0.01, UnitSystem{}, DualAngle(0.25));
    EXPECT_TRUE(std::filesystem::exists(dir / "s0_E.bin"));
    EXPECT_TRUE(read_vector_field((dir / "s0_B.bin").string()).grid == g);
    std::ifstream h(dir / "s0.txt");
    std::string all((std::istreambuf_iterator<char>(h)), {});
    EXPECT_NE(all.find("t=0.5\n"), std::string::npos);
    EXPECT_NE(all.find("theta=0.25\n"), std::string::npos);
    EXPECT_NE(all.find("grid=8 8 8 1 1 1\n"), std::string::npos);
    std::filesystem::remove_all(dir);
}
