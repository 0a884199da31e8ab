#pragma once

// Periodic Cartesian grids and the scalar/vector fields sampled on them.
//
// Cell (i, j, k) sits at x = (i·dx, j·dy, k·dz); the box is [0, Lx) × [0, Ly) × [0, Lz).
// Storage is row-major with k fastest: index = (i·ny + j)·nz + k.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dualfield/errors.hpp"
#include "dualfield/vec3.hpp"

namespace dualfield {

class Grid3 {
public:
    Grid3(std::array<int, 3> n, std::array<double, 3> L) : n_(n), L_(L) {
        for (int d = 0; d < 3; ++d) {
            if (n_[d] < 4 || n_[d] % 2 != 0) {
                throw InvalidGrid("Grid3: every axis needs an even cell count >= 4, axis " +
                                  std::to_string(d) + " has " + std::to_string(n_[d]));
            }
            if (!(std::isfinite(L_[d]) && L_[d] > 0.0)) {
                throw InvalidGrid("Grid3: box length on axis " + std::to_string(d) +
                                  " must be finite and positive");
            }
        }
    }

    static Grid3 cubic(int n, double L) { return Grid3({n, n, n}, {L, L, L}); }

    [[nodiscard]] int n(int d) const { return n_[d]; }
    [[nodiscard]] double L(int d) const { return L_[d]; }
    [[nodiscard]] const std::array<int, 3>& shape() const { return n_; }
    [[nodiscard]] const std::array<double, 3>& lengths() const { return L_; }
    [[nodiscard]] double dx(int d) const { return L_[d] / n_[d]; }
    [[nodiscard]] double min_dx() const { return std::fmin(dx(0), std::fmin(dx(1), dx(2))); }
    [[nodiscard]] double max_dx() const { return std::fmax(dx(0), std::fmax(dx(1), dx(2))); }
    [[nodiscard]] double cell_volume() const { return dx(0) * dx(1) * dx(2); }
    [[nodiscard]] double volume() const { return L_[0] * L_[1] * L_[2]; }
    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(n_[1]) *
               static_cast<std::size_t>(n_[2]);
    }
    [[nodiscard]] std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n_[1] + static_cast<std::size_t>(j)) * n_[2] +
               static_cast<std::size_t>(k);
    }
    [[nodiscard]] Vec3 position(int i, int j, int k) const {
        return {i * dx(0), j * dx(1), k * dx(2)};
    }
    [[nodiscard]] bool contains(const Vec3& x) const {
        return x.x >= 0.0 && x.x < L_[0] && x.y >= 0.0 && x.y < L_[1] && x.z >= 0.0 && x.z < L_[2];
    }

    friend bool operator==(const Grid3&, const Grid3&) = default;

private:
    std::array<int, 3> n_;
    std::array<double, 3> L_;
};

inline void require_same_grid(const Grid3& a, const Grid3& b, std::string_view what) {
    if (!(a == b)) {
        throw GridMismatch(std::string(what) + ": operands live on different grids");
    }
}

// ---------------------------------------------------------------------------
// ScalarField

struct ScalarField {
    Grid3 grid;
    std::vector<double> data;

    explicit ScalarField(const Grid3& g) : grid(g), data(g.size(), 0.0) {}
    ScalarField(const Grid3& g, std::vector<double> values) : grid(g), data(std::move(values)) {
        if (data.size() != grid.size()) {
            throw GridMismatch("ScalarField: value count does not match grid size");
        }
    }

    [[nodiscard]] double& operator[](std::size_t i) { return data[i]; }
    [[nodiscard]] double operator[](std::size_t i) const { return data[i]; }

    ScalarField& operator+=(const ScalarField& o) {
        require_same_grid(grid, o.grid, "ScalarField +=");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        require_same_grid(grid, o.grid, "ScalarField -=");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& v : data) v *= s;
        return *this;
    }
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(ScalarField a, double s) { return a *= s; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }
inline ScalarField operator/(ScalarField a, double s) { return a *= (1.0 / s); }
inline ScalarField operator-(ScalarField a) { return a *= -1.0; }

/// Volume-weighted integral Σ f dV.
inline double integral(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.data) s += v;
    return s * f.grid.cell_volume();
}

inline double mean(const ScalarField& f) { return integral(f) / f.grid.volume(); }

/// Volume-weighted L2 norm √(Σ f² dV).
inline double l2_norm(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.data) s += v * v;
    return std::sqrt(s * f.grid.cell_volume());
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.data) m = std::fmax(m, std::fabs(v));
    return m;
}

// ---------------------------------------------------------------------------
// VectorField

struct VectorField {
    Grid3 grid;
    std::array<std::vector<double>, 3> comp;

    explicit VectorField(const Grid3& g)
        : grid(g), comp{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0),
                        std::vector<double>(g.size(), 0.0)} {}

    VectorField(const ScalarField& x, const ScalarField& y, const ScalarField& z)
        : grid(x.grid), comp{x.data, y.data, z.data} {
        require_same_grid(x.grid, y.grid, "VectorField");
        require_same_grid(x.grid, z.grid, "VectorField");
    }

    [[nodiscard]] Vec3 at(std::size_t i) const { return {comp[0][i], comp[1][i], comp[2][i]}; }
    void set(std::size_t i, const Vec3& v) {
        comp[0][i] = v.x;
        comp[1][i] = v.y;
        comp[2][i] = v.z;
    }
    [[nodiscard]] ScalarField component(int d) const { return ScalarField(grid, comp[d]); }

    VectorField& operator+=(const VectorField& o) {
        require_same_grid(grid, o.grid, "VectorField +=");
        for (int d = 0; d < 3; ++d)
            for (std::size_t i = 0; i < comp[d].size(); ++i) comp[d][i] += o.comp[d][i];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        require_same_grid(grid, o.grid, "VectorField -=");
        for (int d = 0; d < 3; ++d)
            for (std::size_t i = 0; i < comp[d].size(); ++i) comp[d][i] -= o.comp[d][i];
        return *this;
    }
    VectorField& operator*=(double s) {
        for (auto& c : comp)
            for (double& v : c) v *= s;
        return *this;
    }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(VectorField a, double s) { return a *= s; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }
inline VectorField operator/(VectorField a, double s) { return a *= (1.0 / s); }
inline VectorField operator-(VectorField a) { return a *= -1.0; }

inline double l2_norm(const VectorField& f) {
    double s = 0.0;
    for (const auto& c : f.comp)
        for (double v : c) s += v * v;
    return std::sqrt(s * f.grid.cell_volume());
}

inline double max_abs(const VectorField& f) {
    double m = 0.0;
    for (const auto& c : f.comp)
        for (double v : c) m = std::fmax(m, std::fabs(v));
    return m;
}

/// Volume-weighted integral of a vector field.
inline Vec3 integral(const VectorField& f) {
    Vec3 s;
    for (int d = 0; d < 3; ++d)
        for (double v : f.comp[d]) s[d] += v;
    return s * f.grid.cell_volume();
}

/// Volume-weighted inner product Σ a·b dV.
inline double inner(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid, b.grid, "inner");
    double s = 0.0;
    for (int d = 0; d < 3; ++d)
        for (std::size_t i = 0; i < a.comp[d].size(); ++i) s += a.comp[d][i] * b.comp[d][i];
    return s * a.grid.cell_volume();
}

/// Pointwise a × b.
inline VectorField cross(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid, b.grid, "cross");
    VectorField out(a.grid);
    for (std::size_t i = 0; i < a.grid.size(); ++i) out.set(i, cross(a.at(i), b.at(i)));
    return out;
}

inline void check_finite(const ScalarField& f, std::string_view name) {
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        if (!std::isfinite(f.data[i])) {
            throw NonFiniteInput(std::string(name) + " is not finite at cell " + std::to_string(i));
        }
    }
}

inline void check_finite(const VectorField& f, std::string_view name) {
    static constexpr const char* axis = "xyz";
    for (int d = 0; d < 3; ++d) {
        for (std::size_t i = 0; i < f.comp[d].size(); ++i) {
            if (!std::isfinite(f.comp[d][i])) {
                throw NonFiniteInput(std::string(name) + "." + axis[d] + " is not finite at cell " +
                                     std::to_string(i));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization
//
// Binary layout (host byte order, little-endian on every supported target):
//   char[8]   magic "DFGRID01"
//   int64[3]  nx, ny, nz
//   int64     ncomp (1 for scalar, 3 for vector fields)
//   double[3] Lx, Ly, Lz
//   double[]  row-major cells, ncomp values per cell (components fastest)

inline constexpr char kGridMagic[8] = {'D', 'F', 'G', 'R', 'I', 'D', '0', '1'};

struct GridFile {
    Grid3 grid;
    int ncomp;
    std::vector<double> values;  // cell-major, ncomp per cell
};

namespace detail {

inline void write_grid_raw(const std::string& path, const Grid3& g, int ncomp,
                           const std::vector<double>& interleaved) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kGridMagic, sizeof(kGridMagic));
    for (int d = 0; d < 3; ++d) {
        const std::int64_t n = g.n(d);
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    }
    const std::int64_t nc = ncomp;
    out.write(reinterpret_cast<const char*>(&nc), sizeof(nc));
    for (int d = 0; d < 3; ++d) {
        const double L = g.L(d);
        out.write(reinterpret_cast<const char*>(&L), sizeof(L));
    }
    out.write(reinterpret_cast<const char*>(interleaved.data()),
              static_cast<std::streamsize>(interleaved.size() * sizeof(double)));
    if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace detail

inline void write_grid_binary(const std::string& path, const ScalarField& f) {
    detail::write_grid_raw(path, f.grid, 1, f.data);
}

inline void write_grid_binary(const std::string& path, const VectorField& f) {
    std::vector<double> buf(3 * f.grid.size());
    for (std::size_t i = 0; i < f.grid.size(); ++i)
        for (int d = 0; d < 3; ++d) buf[3 * i + d] = f.comp[d][i];
    detail::write_grid_raw(path, f.grid, 3, buf);
}

inline GridFile read_grid_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) {
        throw IoError("'" + path + "' is not a dualfield grid file");
    }
    std::array<std::int64_t, 3> n{};
    for (auto& v : n) in.read(reinterpret_cast<char*>(&v), sizeof(v));
    std::int64_t nc = 0;
    in.read(reinterpret_cast<char*>(&nc), sizeof(nc));
    std::array<double, 3> L{};
    for (auto& v : L) in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in || nc < 1 || nc > 16) throw IoError("corrupt header in '" + path + "'");
    Grid3 g({static_cast<int>(n[0]), static_cast<int>(n[1]), static_cast<int>(n[2])}, L);
    std::vector<double> values(g.size() * static_cast<std::size_t>(nc));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw IoError("truncated data in '" + path + "'");
    return {g, static_cast<int>(nc), std::move(values)};
}

inline VectorField read_vector_field(const std::string& path) {
    GridFile f = read_grid_binary(path);
    if (f.ncomp != 3) throw IoError("'" + path + "' does not hold a vector field");
    VectorField v(f.grid);
    for (std::size_t i = 0; i < f.grid.size(); ++i)
        for (int d = 0; d < 3; ++d) v.comp[d][i] = f.values[3 * i + d];
    return v;
}

inline ScalarField read_scalar_field(const std::string& path) {
    GridFile f = read_grid_binary(path);
    if (f.ncomp != 1) throw IoError("'" + path + "' does not hold a scalar field");
    return ScalarField(f.grid, std::move(f.values));
}

/// Comma-separated dump for small grids: i,j,k,x,y,z,vx,vy,vz.
inline void write_grid_csv(std::ostream& out, const VectorField& f) {
    const Grid3& g = f.grid;
    out << "i,j,k,x,y,z,vx,vy,vz\n" << std::setprecision(17);
    for (int i = 0; i < g.n(0); ++i)
        for (int j = 0; j < g.n(1); ++j)
            for (int k = 0; k < g.n(2); ++k) {
                const Vec3 x = g.position(i, j, k);
                const Vec3 v = f.at(g.index(i, j, k));
                out << i << ',' << j << ',' << k << ',' << x.x << ',' << x.y << ',' << x.z << ','
                    << v.x << ',' << v.y << ',' << v.z << '\n';
            }
}

inline void write_grid_csv(std::ostream& out, const ScalarField& f) {
    const Grid3& g = f.grid;
    out << "i,j,k,x,y,z,v\n" << std::setprecision(17);
    for (int i = 0; i < g.n(0); ++i)
        for (int j = 0; j < g.n(1); ++j)
            for (int k = 0; k < g.n(2); ++k) {
                const Vec3 x = g.position(i, j, k);
                out << i << ',' << j << ',' << k << ',' << x.x << ',' << x.y << ',' << x.z << ','
                    << f[g.index(i, j, k)] << '\n';
            }
}

}  // namespace dualfield
