#pragma once

// FFT-based differential operators on periodic grids.
//
// First derivatives use the wavenumber 2πm/L with the Nyquist index zeroed,
// so derivatives of real fields stay real. The transverse/longitudinal
// projectors use the same wavenumbers, which keeps ∇·P_T v = 0 and
// ∇×P_L v = 0 exact up to rounding; modes whose derivative wavenumber
// vanishes (k = 0 and the all-Nyquist corner) are assigned to the
// longitudinal part.

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "dualfield/grid.hpp"

namespace dualfield {

namespace detail {

// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const {
        if (p != nullptr) {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            fftw_destroy_plan(p);
        }
    }
};

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

/// Owns FFTW plans and scratch buffers for one grid. Not safe to share
/// between threads; create one instance per thread.
class SpectralOps {
public:
    using Complex = std::complex<double>;
    using Spectrum = std::vector<Complex>;

    explicit SpectralOps(const Grid3& g)
        : grid_(g), nzh_(g.n(2) / 2 + 1), kd_{axis_wavenumbers(g, 0), axis_wavenumbers(g, 1),
                                             axis_wavenumbers(g, 2)} {
        const std::size_t nspec = spectral_size();
        real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * g.size())));
        spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nspec)));
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fwd_.reset(fftw_plan_dft_r2c_3d(g.n(0), g.n(1), g.n(2), real_.get(), spec_.get(),
                                        FFTW_ESTIMATE));
        inv_.reset(fftw_plan_dft_c2r_3d(g.n(0), g.n(1), g.n(2), spec_.get(), real_.get(),
                                        FFTW_ESTIMATE));
    }

    [[nodiscard]] const Grid3& grid() const { return grid_; }
    [[nodiscard]] std::size_t spectral_size() const {
        return static_cast<std::size_t>(grid_.n(0)) * grid_.n(1) * nzh_;
    }

    /// Derivative wavevector for spectral index s (Nyquist components zeroed).
    [[nodiscard]] Vec3 wavevector(std::size_t s) const {
        const std::size_t k = s % nzh_;
        const std::size_t j = (s / nzh_) % grid_.n(1);
        const std::size_t i = s / (nzh_ * grid_.n(1));
        return {kd_[0][i], kd_[1][j], kd_[2][k]};
    }

    /// Unnormalised forward transform.
    [[nodiscard]] Spectrum forward(const ScalarField& f) const {
        require_same_grid(grid_, f.grid, "SpectralOps::forward");
        std::copy(f.data.begin(), f.data.end(), real_.get());
        fftw_execute(fwd_.get());
        Spectrum out(spectral_size());
        for (std::size_t s = 0; s < out.size(); ++s) out[s] = {spec_.get()[s][0], spec_.get()[s][1]};
        return out;
    }

    /// Inverse transform including the 1/N normalisation.
    [[nodiscard]] ScalarField inverse(const Spectrum& s) const {
        for (std::size_t i = 0; i < s.size(); ++i) {
            spec_.get()[i][0] = s[i].real();
            spec_.get()[i][1] = s[i].imag();
        }
        fftw_execute(inv_.get());
        ScalarField out(grid_);
        const double norm = 1.0 / static_cast<double>(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) out.data[i] = real_.get()[i] * norm;
        return out;
    }

    [[nodiscard]] ScalarField derivative(const ScalarField& f, int axis) const {
        Spectrum s = forward(f);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] *= Complex(0.0, wavevector(i)[axis]);
        return inverse(s);
    }

    [[nodiscard]] VectorField gradient(const ScalarField& f) const {
        const Spectrum s = forward(f);
        VectorField out(grid_);
        for (int d = 0; d < 3; ++d) {
            Spectrum t(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) t[i] = s[i] * Complex(0.0, wavevector(i)[d]);
            out.comp[d] = inverse(t).data;
        }
        return out;
    }

    [[nodiscard]] ScalarField divergence(const VectorField& v) const {
        Spectrum acc(spectral_size(), Complex(0.0, 0.0));
        for (int d = 0; d < 3; ++d) {
            const Spectrum s = forward(v.component(d));
            for (std::size_t i = 0; i < s.size(); ++i) acc[i] += s[i] * Complex(0.0, wavevector(i)[d]);
        }
        return inverse(acc);
    }

    [[nodiscard]] VectorField curl(const VectorField& v) const {
        const std::array<Spectrum, 3> s{forward(v.component(0)), forward(v.component(1)),
                                        forward(v.component(2))};
        VectorField out(grid_);
        const Complex I(0.0, 1.0);
        for (int d = 0; d < 3; ++d) {
            const int a = (d + 1) % 3;
            const int b = (d + 2) % 3;
            Spectrum t(spectral_size());
            for (std::size_t i = 0; i < t.size(); ++i) {
                const Vec3 k = wavevector(i);
                t[i] = I * (k[a] * s[b][i] - k[b] * s[a][i]);
            }
            out.comp[d] = inverse(t).data;
        }
        return out;
    }

    /// (transverse, longitudinal) parts of v.
    [[nodiscard]] std::pair<VectorField, VectorField> helmholtz(const VectorField& v) const {
        const std::array<Spectrum, 3> s{forward(v.component(0)), forward(v.component(1)),
                                        forward(v.component(2))};
        std::array<Spectrum, 3> lon{Spectrum(s[0].size()), Spectrum(s[0].size()),
                                    Spectrum(s[0].size())};
        for (std::size_t i = 0; i < s[0].size(); ++i) {
            const Vec3 k = wavevector(i);
            const double k2 = dot(k, k);
            if (k2 == 0.0) {
                for (int d = 0; d < 3; ++d) lon[d][i] = s[d][i];
                continue;
            }
            const Complex kv = k.x * s[0][i] + k.y * s[1][i] + k.z * s[2][i];
            for (int d = 0; d < 3; ++d) lon[d][i] = k[d] * kv / k2;
        }
        VectorField L(grid_);
        for (int d = 0; d < 3; ++d) L.comp[d] = inverse(lon[d]).data;
        VectorField T = v - L;
        return {std::move(T), std::move(L)};
    }

    /// φ with −∇²φ = f − mean(f) and zero mean (uniform neutralising background).
    [[nodiscard]] ScalarField inverse_laplacian(const ScalarField& f) const {
        Spectrum s = forward(f);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Vec3 k = wavevector(i);
            const double k2 = dot(k, k);
            s[i] = k2 == 0.0 ? Complex(0.0, 0.0) : s[i] / k2;
        }
        return inverse(s);
    }

private:
    static std::vector<double> axis_wavenumbers(const Grid3& g, int d) {
        const int n = g.n(d);
        const int count = d == 2 ? n / 2 + 1 : n;
        std::vector<double> k(count);
        const double dk = 2.0 * std::numbers::pi / g.L(d);
        for (int m = 0; m < count; ++m) {
            if (m == n / 2) {
                k[m] = 0.0;
            } else {
                k[m] = dk * (m < n / 2 ? m : m - n);
            }
        }
        return k;
    }

    Grid3 grid_;
    std::size_t nzh_;
    std::array<std::vector<double>, 3> kd_;
    std::unique_ptr<double, detail::FftwFree> real_;
    std::unique_ptr<fftw_complex, detail::FftwFree> spec_;
    std::unique_ptr<fftw_plan_s, detail::FftwPlanDeleter> fwd_;
    std::unique_ptr<fftw_plan_s, detail::FftwPlanDeleter> inv_;
};

}  // namespace dualfield
