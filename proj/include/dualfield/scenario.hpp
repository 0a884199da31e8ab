#pragma once

// Named scenarios behind the `dualfield run` command: INI configuration,
// validation, execution and key=value summaries.

#include <algorithm>
#include <charconv>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dualfield/dynamics.hpp"
#include "dualfield/maxwell.hpp"
#include "dualfield/modes.hpp"

namespace dualfield {

/// Malformed or inconsistent configuration. Deliberately not a dualfield::Error:
/// the CLI maps it to its own exit code.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"rotation-properties", "dual-covariance",
                                                "coulomb-equivalence", "two-field-cross",
                                                "noether-zero",        "helicity-conservation",
                                                "monopole-flyby"};
    return names;
}

struct ParticleSpec {
    Vec3 pos{-20.0, 1.0, 0.0};
    Vec3 vel{0.05, 0.0, 0.0};
    ChargePair charges{1.0, 0.0};
    double mass{1.0};
};

struct ScenarioConfig {
    enum class Theta { unset, value, automatic };

    std::string name;
    UnitSystem units;
    double hbar{1.0};
    int grid_n{32};
    double box{8.0};
    std::vector<PointSource> sources;
    Theta theta_mode{Theta::unset};
    double theta{0.0};
    std::optional<double> dt;
    std::optional<int> steps;
    std::uint64_t seed{42};
    int samples{10000};
    int configs{50};
    int modes{6};
    bool require_shared_ratio{false};
    double r_min{0.05};
    double r_max{100.0};
    ParticleSpec particle;
    std::filesystem::path out_dir{"dualfield_out"};
};

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + t + "' is not a number");
    }
    if (used != t.size()) throw ConfigError(key + ": '" + t + "' is not a number");
    if (!std::isfinite(v)) throw ConfigError(key + ": value must be finite");
    return v;
}

inline long long parse_integer(const std::string& text, const std::string& key) {
    const double v = parse_number(text, key);
    if (v != std::floor(v) || std::fabs(v) > 9.0e15) throw ConfigError(key + ": expected an integer");
    return static_cast<long long>(v);
}

inline Vec3 parse_vec(const std::string& text, const std::string& key) {
    std::string t = text;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream in(t);
    std::vector<std::string> parts;
    for (std::string w; in >> w;) parts.push_back(w);
    if (parts.size() != 3) throw ConfigError(key + ": expected three numbers");
    return {parse_number(parts[0], key), parse_number(parts[1], key), parse_number(parts[2], key)};
}

inline bool parse_bool(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(key + ": expected true or false");
}

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> k{
        {"scenario", {"name"}},
        {"units", {"c", "eps0", "hbar"}},
        {"grid", {"n", "L"}},
        {"run",
         {"theta", "dt", "steps", "seed", "samples", "configs", "modes", "require_shared_ratio", "r_min",
          "r_max"}},
        {"particle", {"pos", "vel", "qe", "qm", "mass"}},
        {"output", {"dir"}},
        {"source", {"pos", "vel", "qe", "qm", "sigma"}},
    };
    return k;
}

inline const std::regex& source_section() {
    static const std::regex re("source([0-9]+)");
    return re;
}

inline void check_keys(const ptree& pt) {
    for (const auto& [section, body] : pt) {
        std::smatch m;
        const bool is_source = std::regex_match(section, m, source_section());
        const auto it = known_keys().find(is_source ? std::string("source") : section);
        if (it == known_keys().end() || section == "source") {
            throw ConfigError("unknown section [" + section + "]");
        }
        if (!body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
        }
    }
}

inline std::optional<std::string> get(const ptree& pt, const std::string& path) {
    if (auto v = pt.get_optional<std::string>(ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
}

}  // namespace detail

/// Applies `section.key=value` overrides on top of a parsed tree.
inline void apply_overrides(boost::property_tree::ptree& pt, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + o + "' lacks '='");
        const std::string path = detail::trim(o.substr(0, eq));
        const auto dot = path.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == path.size() ||
            path.find('.', dot + 1) != std::string::npos) {
            throw ConfigError("override '" + o + "' must have the form section.key=value");
        }
        pt.put(path, detail::trim(o.substr(eq + 1)));
    }
}

inline ScenarioConfig config_from_tree(const boost::property_tree::ptree& pt) {
    using detail::get;
    using detail::parse_number;
    detail::check_keys(pt);
    ScenarioConfig cfg;

    const auto name = get(pt, "scenario.name");
    if (!name) throw ConfigError("scenario.name is required");
    if (std::find(scenario_names().begin(), scenario_names().end(), *name) == scenario_names().end()) {
        throw ConfigError("unknown scenario '" + *name + "'");
    }
    cfg.name = *name;

    double c = 1.0;
    double eps0 = 1.0;
    if (auto v = get(pt, "units.c")) c = parse_number(*v, "units.c");
    if (auto v = get(pt, "units.eps0")) eps0 = parse_number(*v, "units.eps0");
    if (!(c > 0.0) || !(eps0 > 0.0)) throw ConfigError("units.c and units.eps0 must be positive");
    cfg.units = UnitSystem(c, eps0);
    if (auto v = get(pt, "units.hbar")) cfg.hbar = parse_number(*v, "units.hbar");
    if (!(cfg.hbar > 0.0)) throw ConfigError("units.hbar must be positive");

    if (auto v = get(pt, "grid.n")) cfg.grid_n = static_cast<int>(detail::parse_integer(*v, "grid.n"));
    if (auto v = get(pt, "grid.L")) cfg.box = parse_number(*v, "grid.L");
    if (cfg.grid_n < 4 || cfg.grid_n % 2 != 0 || cfg.grid_n > 512) {
        throw ConfigError("grid.n must be an even count between 4 and 512");
    }
    if (!(cfg.box > 0.0)) throw ConfigError("grid.L must be positive");

    std::vector<std::pair<long long, std::string>> src_sections;
    for (const auto& [section, body] : pt) {
        std::smatch m;
        if (std::regex_match(section, m, detail::source_section())) {
            src_sections.emplace_back(std::stoll(m[1].str()), section);
        }
    }
    std::sort(src_sections.begin(), src_sections.end());
    for (const auto& [idx, section] : src_sections) {
        PointSource s;
        if (auto v = get(pt, section + ".pos")) s.pos = detail::parse_vec(*v, section + ".pos");
        else throw ConfigError(section + ".pos is required");
        if (auto v = get(pt, section + ".vel")) s.vel = detail::parse_vec(*v, section + ".vel");
        if (auto v = get(pt, section + ".qe")) s.charges.qe = parse_number(*v, section + ".qe");
        if (auto v = get(pt, section + ".qm")) s.charges.qm = parse_number(*v, section + ".qm");
        if (auto v = get(pt, section + ".sigma")) s.sigma = parse_number(*v, section + ".sigma");
        if (s.sigma < 0.0) throw ConfigError(section + ".sigma must be >= 0");
        if (!(norm(s.vel) < c)) throw ConfigError(section + ".vel must be slower than c");
        cfg.sources.push_back(s);
    }

    if (auto v = get(pt, "run.theta")) {
        if (*v == "auto") {
            cfg.theta_mode = ScenarioConfig::Theta::automatic;
        } else {
            cfg.theta_mode = ScenarioConfig::Theta::value;
            cfg.theta = parse_number(*v, "run.theta");
        }
    }
    if (auto v = get(pt, "run.dt")) {
        cfg.dt = parse_number(*v, "run.dt");
        if (!(*cfg.dt > 0.0)) throw ConfigError("run.dt must be positive");
    }
    if (auto v = get(pt, "run.steps")) {
        const long long n = detail::parse_integer(*v, "run.steps");
        if (n < 1 || n > 100000000) throw ConfigError("run.steps must be between 1 and 1e8");
        cfg.steps = static_cast<int>(n);
    }
    if (auto v = get(pt, "run.seed")) {
        const long long s = detail::parse_integer(*v, "run.seed");
        if (s < 0) throw ConfigError("run.seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    auto positive_int = [&](const char* key, int& out) {
        if (auto v = get(pt, key)) {
            const long long n = detail::parse_integer(*v, key);
            if (n < 1 || n > 100000000) throw ConfigError(std::string(key) + " must be a positive count");
            out = static_cast<int>(n);
        }
    };
    positive_int("run.samples", cfg.samples);
    positive_int("run.configs", cfg.configs);
    positive_int("run.modes", cfg.modes);
    if (auto v = get(pt, "run.require_shared_ratio")) {
        cfg.require_shared_ratio = detail::parse_bool(*v, "run.require_shared_ratio");
    }
    if (auto v = get(pt, "run.r_min")) cfg.r_min = parse_number(*v, "run.r_min");
    if (auto v = get(pt, "run.r_max")) cfg.r_max = parse_number(*v, "run.r_max");
    if (!(cfg.r_min > 0.0) || !(cfg.r_max > cfg.r_min)) throw ConfigError("need 0 < run.r_min < run.r_max");

    if (auto v = get(pt, "particle.pos")) cfg.particle.pos = detail::parse_vec(*v, "particle.pos");
    if (auto v = get(pt, "particle.vel")) cfg.particle.vel = detail::parse_vec(*v, "particle.vel");
    if (auto v = get(pt, "particle.qe")) cfg.particle.charges.qe = parse_number(*v, "particle.qe");
    if (auto v = get(pt, "particle.qm")) cfg.particle.charges.qm = parse_number(*v, "particle.qm");
    if (auto v = get(pt, "particle.mass")) cfg.particle.mass = parse_number(*v, "particle.mass");
    if (!(cfg.particle.mass > 0.0)) throw ConfigError("particle.mass must be positive");

    if (auto v = get(pt, "output.dir")) cfg.out_dir = *v;

    // Scenario-specific checks.
    if (cfg.theta_mode == ScenarioConfig::Theta::automatic) {
        const auto q = charges_of(cfg.sources);
        bool any = false;
        for (const auto& x : q) any = any || charge_norm(x, cfg.units) > 0.0;
        if (!any) throw ConfigError("run.theta = auto needs at least one charged source");
        if (!shares_charge_ratio(q, cfg.units)) {
            throw ConfigError("run.theta = auto needs every source to share one q_m/q_e ratio");
        }
    }
    if ((cfg.name == "coulomb-equivalence" || cfg.name == "two-field-cross") && cfg.sources.size() < 2) {
        throw ConfigError(cfg.name + " needs at least two [sourceN] sections");
    }
    if (cfg.name == "coulomb-equivalence") {
        for (std::size_t i = 0; i < cfg.sources.size(); ++i)
            if (!(cfg.sources[i].sigma > 0.0)) {
                throw ConfigError("coulomb-equivalence needs sigma > 0 on every source");
            }
    }
    if (cfg.name == "monopole-flyby" && cfg.sources.size() > 1) {
        throw ConfigError("monopole-flyby takes at most one source");
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
    boost::property_tree::ptree pt;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    apply_overrides(pt, overrides);
    return config_from_tree(pt);
}

// ---------------------------------------------------------------------------
// Summary

class Summary {
public:
    void add(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
    /// Shortest text that reads back to the same double.
    void add(const std::string& key, double value) {
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof buf, value);
        add(key, std::string(buf, r.ptr));
    }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }
    void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
    void add(const std::string& key, const char* value) { add(key, std::string(value)); }

    /// Records a residual together with its bound; false marks a failed check.
    void check(const std::string& key, double value, double bound, bool below = true) {
        add(key, value);
        add(key + "_bound", bound);
        if (below ? !(value < bound) : !(value > bound)) failed_.push_back(key);
    }

    void require(const std::string& key, bool ok) {
        add(key, ok);
        if (!ok) failed_.push_back(key);
    }

    void append(const Summary& o) {
        rows_.insert(rows_.end(), o.rows_.begin(), o.rows_.end());
        failed_.insert(failed_.end(), o.failed_.begin(), o.failed_.end());
    }

    [[nodiscard]] bool passed() const { return failed_.empty(); }
    [[nodiscard]] const std::vector<std::string>& failed() const { return failed_; }
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& rows() const { return rows_; }

    [[nodiscard]] std::optional<std::string> find(const std::string& key) const {
        for (const auto& [k, v] : rows_)
            if (k == key) return v;
        return std::nullopt;
    }

    void write(std::ostream& out) const {
        for (const auto& [k, v] : rows_) out << k << '=' << v << '\n';
        out << "failed_checks=";
        for (std::size_t i = 0; i < failed_.size(); ++i) out << (i ? "," : "") << failed_[i];
        out << '\n' << "status=" << (passed() ? "pass" : "fail") << '\n';
    }

private:
    std::vector<std::pair<std::string, std::string>> rows_;
    std::vector<std::string> failed_;
};

namespace detail {

class SweepRng {
public:
    explicit SweepRng(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double scalar() { return normal() * std::pow(10.0, uniform(-3.0, 3.0)); }
    Vec3 vec() { return {scalar(), scalar(), scalar()}; }
    DualAngle angle() { return DualAngle(uniform(-4.0 * std::numbers::pi, 4.0 * std::numbers::pi)); }
    cplx complex() { return {normal(), normal()}; }

private:
    std::mt19937_64 rng_;
};

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << std::setprecision(17);
    return out;
}

inline double rel_diff(double a, double b) {
    const double s = std::fmax(std::fabs(a), std::fabs(b));
    return s == 0.0 ? 0.0 : std::fabs(a - b) / s;
}

inline double rel_fields(const FieldVecPair& a, const FieldVecPair& b, const UnitSystem& u) {
    const double c = u.c();
    auto n = [c](const Vec3& E, const Vec3& B) { return std::sqrt(dot(E, E) + c * c * dot(B, B)); };
    const double s = n(a.E, a.B) + n(b.E, b.B);
    return s == 0.0 ? 0.0 : n(a.E - b.E, a.B - b.B) / s;
}

inline double rel_charges(const ChargePair& a, const ChargePair& b, const UnitSystem& u) {
    const double s = charge_norm(a, u) + charge_norm(b, u);
    return s == 0.0 ? 0.0 : charge_norm({a.qe - b.qe, a.qm - b.qm}, u) / s;
}

inline double rel_potentials(const PotentialPair& a, const PotentialPair& b, const UnitSystem& u) {
    const double c = u.c();
    double d = 0.0, sa = 0.0, sb = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        d += std::pow(a.A[mu] - b.A[mu], 2) + std::pow((a.C[mu] - b.C[mu]) / c, 2);
        sa += a.A[mu] * a.A[mu] + std::pow(a.C[mu] / c, 2);
        sb += b.A[mu] * b.A[mu] + std::pow(b.C[mu] / c, 2);
    }
    const double s = std::sqrt(sa) + std::sqrt(sb);
    return s == 0.0 ? 0.0 : std::sqrt(d) / s;
}

inline DualAngle resolve_theta(const ScenarioConfig& cfg, double fallback) {
    switch (cfg.theta_mode) {
        case ScenarioConfig::Theta::value: return DualAngle(cfg.theta);
        case ScenarioConfig::Theta::automatic:
            for (const auto& s : cfg.sources)
                if (charge_norm(s.charges, cfg.units) > 0.0) return asymmetrizing_angle(s.charges, cfg.units);
            break;
        case ScenarioConfig::Theta::unset: break;
    }
    return DualAngle(fallback);
}

// Half-space keys (m_z > 0) inside a cutoff that keeps every component below
// the grid Nyquist index, so no wavevector meets its own negative.
inline std::vector<IntVec3> random_half_keys(SweepRng& rng, int count, const ModeSet& ms) {
    std::vector<IntVec3> pool;
    for (const auto& m : ms.lattice())
        if (m[2] > 0) pool.push_back(m);
    if (pool.empty()) throw InvalidArgument("scenario: the grid admits no resolved wavevectors");
    std::vector<IntVec3> keys;
    const int want = std::min<int>(count, static_cast<int>(pool.size()));
    while (static_cast<int>(keys.size()) < want) {
        const IntVec3 m = pool[static_cast<std::size_t>(rng.integer(0, static_cast<int>(pool.size()) - 1))];
        if (std::find(keys.begin(), keys.end(), m) == keys.end()) keys.push_back(m);
    }
    return keys;
}

inline ModeSet grid_mode_set(const ScenarioConfig& cfg) {
    const double dk = 2.0 * std::numbers::pi / cfg.box;
    return ModeSet(cfg.box, dk * (cfg.grid_n / 2 - 1), cfg.units, cfg.hbar);
}

inline Grid3 scenario_grid(const ScenarioConfig& cfg) { return Grid3::cubic(cfg.grid_n, cfg.box); }

// ---------------------------------------------------------------------------
// Scenarios

inline Summary run_rotation_properties(const ScenarioConfig& cfg) {
    const UnitSystem& u = cfg.units;
    SweepRng rng(cfg.seed);
    double group = 0.0, inverse = 0.0, norm_inv = 0.0, asym = 0.0;
    int identity_mismatches = 0;
    std::ofstream csv = open_output(cfg.out_dir, "sweep.csv");
    csv << "sample,group_law,inverse,norm,asymmetrizing\n";
    const DualAngle zero(0.0);
    for (int i = 0; i < cfg.samples; ++i) {
        const DualAngle a = rng.angle(), b = rng.angle();
        const FieldVecPair f{rng.vec(), rng.vec()};
        const ChargePair q{rng.scalar(), rng.scalar()};
        const PotentialPair p{{rng.scalar(), rng.scalar(), rng.scalar(), rng.scalar()},
                              {rng.scalar(), rng.scalar(), rng.scalar(), rng.scalar()}};

        const double g = std::fmax(
            rel_fields(rotate_fields(rotate_fields(f, a, u), b, u), rotate_fields(f, a + b, u), u),
            std::fmax(rel_charges(rotate_charges(rotate_charges(q, a, u), b, u), rotate_charges(q, a + b, u), u),
                      rel_potentials(rotate_potentials(rotate_potentials(p, a, u), b, u),
                                     rotate_potentials(p, a + b, u), u)));
        const double inv = std::fmax(
            rel_fields(inverse_rotate_fields(rotate_fields(f, a, u), a, u), f, u),
            std::fmax(rel_charges(inverse_rotate_charges(rotate_charges(q, a, u), a, u), q, u),
                      rel_potentials(inverse_rotate_potentials(rotate_potentials(p, a, u), a, u), p, u)));
        double pos = 0.0;
        for (int mu = 0; mu < 4; ++mu) pos += u.c() * u.c() * p.A[mu] * p.A[mu] + p.C[mu] * p.C[mu];
        const double nrm = std::fmax(
            rel_diff(energy_density(rotate_fields(f, a, u), u), energy_density(f, u)),
            std::fmax(rel_diff(charge_norm(rotate_charges(q, a, u), u), charge_norm(q, u)),
                      std::fabs(potential_form(rotate_potentials(p, a, u), u) - potential_form(p, u)) /
                          (u.eps0() * pos)));
        const double n = charge_norm(q, u);
        const ChargePair r = rotate_charges(q, asymmetrizing_angle(q, u), u);
        const double as = std::fmax(std::fabs(u.c() * u.eps0() * r.qm), std::fabs(r.qe - n)) / n;

        const auto fi = rotate_fields(f, zero, u);
        const auto qi = rotate_charges(q, zero, u);
        if (!(fi.E == f.E) || !(fi.B == f.B) || qi.qe != q.qe || qi.qm != q.qm) ++identity_mismatches;

        group = std::fmax(group, g);
        inverse = std::fmax(inverse, inv);
        norm_inv = std::fmax(norm_inv, nrm);
        asym = std::fmax(asym, as);
        csv << i << ',' << g << ',' << inv << ',' << nrm << ',' << as << '\n';
    }
    Summary s;
    s.add("samples", cfg.samples);
    s.add("seed", std::to_string(cfg.seed));
    s.check("max_group_law_residual", group, 1e-12);
    s.check("max_inverse_residual", inverse, 1e-12);
    s.check("max_norm_residual", norm_inv, 1e-12);
    s.check("max_asymmetrizing_residual", asym, 1e-12);
    s.add("identity_mismatches", identity_mismatches);
    s.require("identity_exact", identity_mismatches == 0);
    return s;
}

inline Summary run_dual_covariance(const ScenarioConfig& cfg) {
    const UnitSystem& u = cfg.units;
    const Grid3 g = scenario_grid(cfg);
    const DualAngle th = resolve_theta(cfg, std::numbers::pi / 4);
    const SymmetricMaxwell solver(g, u);
    const double dt = cfg.dt.value_or(0.9 * solver.cfl_limit());
    const int steps = cfg.steps.value_or(100);
    EMState a = consistent_initial_state(g, cfg.sources, u);
    if (cfg.require_shared_ratio) require_shared_ratio(a, u, "dual-covariance");
    EMState b = to_symmetric(a, th, u);
    const double e0 = field_energy(a.fields, u);
    const GaussResiduals g0 = gauss_residuals(b, u);

    std::ofstream csv = open_output(cfg.out_dir, "covariance.csv");
    csv << "step,t,residual,energy,gauss_E,gauss_B\n";
    const int stride = std::max(1, steps / 20);
    double worst = 0.0;
    double energy_drift = 0.0;
    double gauss_worst = std::fmax(g0.rE, g0.rB);
    for (int n = 1; n <= steps; ++n) {
        a = solver.step(a, dt);
        b = solver.step(b, dt);
        const double r = state_distance(to_symmetric(a, th, u), b, u);
        worst = std::fmax(worst, r);
        if (n % stride == 0 || n == steps) {
            const double e = field_energy(b.fields, u);
            const GaussResiduals gr = gauss_residuals(b, u);
            gauss_worst = std::fmax(gauss_worst, std::fmax(gr.rE, gr.rB));
            energy_drift = std::fmax(energy_drift, rel_diff(e, e0));
            csv << n << ',' << b.t << ',' << r << ',' << e << ',' << gr.rE << ',' << gr.rB << '\n';
        }
    }
    write_snapshot(cfg.out_dir, "symmetric_final", b, dt, u, th);
    write_snapshot(cfg.out_dir, "asymmetric_final", a, dt, u, DualAngle(0.0));

    Summary s;
    s.add("theta", th.radians());
    s.add("grid_n", cfg.grid_n);
    s.add("box", cfg.box);
    s.add("dt", dt);
    s.add("steps", steps);
    s.add("sources", cfg.sources.size());
    s.add("shared_ratio", shares_charge_ratio(charges_of(cfg.sources), u));
    s.add("energy_initial", e0);
    s.add("energy_relative_change", energy_drift);
    s.add("gauss_residual_initial", std::fmax(g0.rE, g0.rB));
    s.add("gauss_residual_max", gauss_worst);
    s.check("covariance_residual", worst, 1e-10);
    return s;
}

inline Summary run_coulomb_equivalence(const ScenarioConfig& cfg) {
    const UnitSystem& u = cfg.units;
    ScenarioConfig resolved = cfg;
    if (resolved.theta_mode == ScenarioConfig::Theta::unset) resolved.theta_mode = ScenarioConfig::Theta::automatic;
    const DualAngle th = resolve_theta(resolved, 0.0);
    const double real = coulomb_energy_real(cfg.sources, u);
    const ModeSet ms = coulomb_mode_set(cfg.sources, u, cfg.hbar);
    const auto table = detail::pair_table(cfg.sources, ms);
    const double sc = u.c() * u.eps0();

    std::ofstream csv = open_output(cfg.out_dir, "pairs.csv");
    csv << "i,j,distance,mode_energy,real_energy\n";
    double mode = 0.0;
    const auto qa = charges_of(cfg.sources);
    for (std::size_t p = 0; p < table.idx.size(); ++p) {
        const auto [i, j] = table.idx[p];
        const auto& si = cfg.sources[i];
        const auto& sj = cfg.sources[j];
        const double wi = th.cos() * si.charges.qe + th.sin() * sc * si.charges.qm;
        const double wj = th.cos() * sj.charges.qe + th.sin() * sc * sj.charges.qm;
        const double e = table.kernel[p] * wi * wj;
        mode += e;
        const std::vector<PointSource> pair{si, sj};
        csv << i << ',' << j << ',' << norm(si.pos - sj.pos) << ',' << e << ','
            << coulomb_energy_real(pair, u) << '\n';
    }
    double smin = INFINITY, rmax = 0.0;
    for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
        smin = std::fmin(smin, cfg.sources[i].sigma);
        for (std::size_t j = i + 1; j < cfg.sources.size(); ++j)
            rmax = std::fmax(rmax, norm(cfg.sources[i].pos - cfg.sources[j].pos));
    }
    Summary s;
    s.add("theta", th.radians());
    s.add("sources", cfg.sources.size());
    s.add("dk", ms.dk());
    s.add("kmax", ms.kmax());
    s.add("kmax_sigma_min", ms.kmax() * smin);
    s.add("kmin_r_max", ms.dk() * rmax);
    s.add("mode_energy", mode);
    s.add("real_energy", real);
    s.check("relative_error", rel_diff(mode, real), 1e-2);
    return s;
}

inline Summary run_two_field_cross(const ScenarioConfig& cfg) {
    const UnitSystem& u = cfg.units;
    const double sc = u.c() * u.eps0();
    const ModeSet ms = coulomb_mode_set(cfg.sources, u, cfg.hbar);
    const EnergyParts e = two_field_energy(cfg.sources, ms);
    std::vector<PointSource> electric = cfg.sources;
    std::vector<PointSource> mirrored = cfg.sources;
    for (auto& x : electric) x.charges = {x.charges.qe, 0.0};
    for (auto& x : mirrored) x.charges = {sc * x.charges.qm, 0.0};
    const double ee_real = coulomb_energy_real(electric, u);
    const double mm_real = coulomb_energy_real(mirrored, u);

    const auto table = detail::pair_table(cfg.sources, ms);
    std::ofstream csv = open_output(cfg.out_dir, "pairs.csv");
    csv << "i,j,distance,ee,mm,em\n";
    for (std::size_t p = 0; p < table.idx.size(); ++p) {
        const auto [i, j] = table.idx[p];
        const auto& qi = cfg.sources[i].charges;
        const auto& qj = cfg.sources[j].charges;
        const double K = table.kernel[p];
        csv << i << ',' << j << ',' << norm(cfg.sources[i].pos - cfg.sources[j].pos) << ',' << K * qi.qe * qj.qe
            << ',' << K * sc * sc * qi.qm * qj.qm << ',' << 0.0 << '\n';
    }
    Summary s;
    s.add("sources", cfg.sources.size());
    s.add("dk", ms.dk());
    s.add("kmax", ms.kmax());
    s.add("ee", e.ee);
    s.add("mm", e.mm);
    s.add("ee_real", ee_real);
    s.add("mm_real", mm_real);
    s.add("em", e.em);
    s.require("em_exactly_zero", e.em == 0.0);
    s.check("ee_relative_error", rel_diff(e.ee, ee_real), 1e-2);
    s.check("mm_relative_error", rel_diff(e.mm, mm_real), 1e-2);
    return s;
}

inline Summary run_noether_zero(const ScenarioConfig& cfg) {
    const UnitSystem& u = cfg.units;
    SweepRng rng(cfg.seed);
    const ModeSet ms = grid_mode_set(cfg);
    const Grid3 g = scenario_grid(cfg);
    std::ofstream csv = open_output(cfg.out_dir, "noether.csv");
    csv << "config,theta,t,charge_relative,current_relative,gupta_bleuler,subsidiary\n";
    double worst_q = 0.0, worst_f = 0.0, worst_gb = 0.0, worst_sub = 0.0;
    for (int n = 0; n < cfg.configs; ++n) {
        const DualAngle th =
            cfg.theta_mode == ScenarioConfig::Theta::unset ? rng.angle() : resolve_theta(cfg, 0.0);
        ModeAmplitudeSet amp = zero_amplitudes(random_half_keys(rng, cfg.modes, ms));
        for (auto& a : amp.a)
            for (auto& x : a) x = rng.complex();
        const ChargeFourier cf = charge_fourier(cfg.sources, amp.keys, ms);
        impose_gupta_bleuler(amp, cf, th);
        const double t = rng.uniform(0.0, 10.0);
        const GriddedPotentials p = synthesize_potentials(amp, ms, th, g, t);
        const double q = noether_dual_charge(p, u).relative();
        const double f = noether_dual_current(p, u).relative();
        const double gb = gupta_bleuler_residual(amp, cf, th);
        const double sub = std::fmax(subsidiary_residual(p.value, th, u), subsidiary_residual(p.rate, th, u));
        worst_q = std::fmax(worst_q, q);
        worst_f = std::fmax(worst_f, f);
        worst_gb = std::fmax(worst_gb, gb);
        worst_sub = std::fmax(worst_sub, sub);
        csv << n << ',' << th.radians() << ',' << t << ',' << q << ',' << f << ',' << gb << ',' << sub << '\n';
    }
    // Two independent families break the subsidiary condition.
    ModeAmplitudeSet bad = zero_amplitudes(random_half_keys(rng, cfg.modes, ms), true);
    for (std::size_t i = 0; i < bad.size(); ++i)
        for (int l = 0; l < 4; ++l) {
            bad.a[i][l] = rng.complex();
            (*bad.b)[i][l] = rng.complex();
        }
    const GriddedPotentials pv = synthesize_potentials(bad, ms, DualAngle(0.0), g);
    const double vq = noether_dual_charge(pv, u).relative();
    const double vf = noether_dual_current(pv, u).relative();
    csv << "violating,," << 0.0 << ',' << vq << ',' << vf << ",,\n";

    Summary s;
    s.add("configs", cfg.configs);
    s.add("modes_per_config", cfg.modes);
    s.add("seed", std::to_string(cfg.seed));
    s.check("max_charge_relative", worst_q, 1e-10);
    s.check("max_current_relative", worst_f, 1e-10);
    s.check("max_gupta_bleuler_residual", worst_gb, 1e-12);
    s.check("max_subsidiary_residual", worst_sub, 1e-12);
    s.check("violating_charge_relative", vq, 1e-3, false);
    s.add("violating_current_relative", vf);
    return s;
}

inline Summary run_helicity_conservation(const ScenarioConfig& cfg) {
    const UnitSystem& u = cfg.units;
    SweepRng rng(cfg.seed);
    const ModeSet ms = grid_mode_set(cfg);
    const Grid3 g = scenario_grid(cfg);
    const DualAngle th = cfg.theta_mode == ScenarioConfig::Theta::unset ? rng.angle() : resolve_theta(cfg, 0.0);
    const double dt = cfg.dt.value_or(0.5);
    const int steps = cfg.steps.value_or(20);

    ModeAmplitudeSet amp = zero_amplitudes(random_half_keys(rng, cfg.modes, ms));
    Vec3 expect;
    for (std::size_t i = 0; i < amp.size(); ++i) {
        const int sign = rng.uniform(0.0, 1.0) < 0.5 ? -1 : 1;
        const cplx a = rng.complex();
        amp.a[i] = circular_amplitudes(a, sign);
        amp.a[i][0] = rng.complex();
        amp.a[i][3] = amp.a[i][0];
        const Mode md = ms.mode(amp.keys[i]);
        expect += md.eps[2] * (sign * cfg.hbar * std::norm(a));
    }
    auto spin_at = [&](const ModeAmplitudeSet& x) {
        return spin_observable(transverse_parts(synthesize_potentials(x, ms, th, g), u), u);
    };

    std::ofstream csv = open_output(cfg.out_dir, "helicity.csv");
    csv << "t,Sx,Sy,Sz,helicity\n";
    const Vec3 S0 = spin_at(amp);
    const double h0 = helicity(S0);
    double drift = 0.0;
    for (int n = 0; n <= steps; ++n) {
        const double t = n * dt;
        const Vec3 S = n == 0 ? S0 : spin_at(free_evolve_modes(amp, t, ms));
        drift = std::fmax(drift, rel_diff(helicity(S), h0));
        csv << t << ',' << S.x << ',' << S.y << ',' << S.z << ',' << helicity(S) << '\n';
    }

    // Jointly rotated fields and potentials.
    const DualAngle rot = rng.angle();
    const GriddedPotentials p = synthesize_potentials(amp, ms, th, g);
    const GriddedPotentials pr{to_symmetric(p.value, rot, u), to_symmetric(p.rate, rot, u)};
    const Vec3 Sr = spin_observable(transverse_parts(pr, u), u);

    // Single modes: circular and linear polarisation.
    ModeAmplitudeSet one = zero_amplitudes({amp.keys.front()});
    const cplx a1{0.6, -0.8};
    one.a[0] = circular_amplitudes(a1, +1);
    const Vec3 Sc = spin_at(one);
    const Vec3 khat = ms.mode(one.keys[0]).eps[2];
    const double unit = cfg.hbar * std::norm(a1);
    one.a[0] = {0.0, a1, 0.0, 0.0};
    const Vec3 Sl = spin_at(one);

    Summary s;
    s.add("theta", th.radians());
    s.add("modes", amp.size());
    s.add("dt", dt);
    s.add("steps", steps);
    s.add("helicity_initial", h0);
    s.add("spin_x", S0.x);
    s.add("spin_y", S0.y);
    s.add("spin_z", S0.z);
    s.check("spin_vs_mode_sum", norm(S0 - expect) / std::fmax(norm(expect), cfg.hbar), 1e-10);
    s.check("helicity_drift", drift, 1e-10);
    s.check("dual_rotation_residual", norm(Sr - S0) / std::fmax(norm(S0), cfg.hbar), 1e-12);
    s.check("circular_spin_residual", norm(Sc - khat * unit) / unit, 1e-12);
    s.add("circular_spin_along_k", dot(Sc, khat));
    s.check("linear_spin_relative", norm(Sl) / unit, 1e-12);
    return s;
}

inline Summary run_monopole_flyby(const ScenarioConfig& cfg) {
    const UnitSystem& u = cfg.units;
    const PointSource mono = cfg.sources.empty() ? PointSource{{}, {}, {0.0, 0.05}, 0.0} : cfg.sources.front();
    const double dt = cfg.dt.value_or(0.5);
    const int steps = cfg.steps.value_or(1600);
    const auto sampler = point_source_sampler(mono.pos, mono.charges, u, cfg.r_min, cfg.r_max);
    const ParticleState p = make_particle(cfg.particle.pos, cfg.particle.vel, cfg.particle.charges, cfg.particle.mass);
    const Vec3 n = plane_normal(p.x - mono.pos, p.v);
    const Trajectory cl = push_particle(p, sampler, ForceModel::classical, dt, steps, u);
    const Trajectory qu = push_particle(p, sampler, ForceModel::quantum, dt, steps, u);
    {
        std::ofstream out = open_output(cfg.out_dir, "trajectory_classical.csv");
        write_trajectory_csv(out, cl, n);
    }
    {
        std::ofstream out = open_output(cfg.out_dir, "trajectory_quantum.csv");
        write_trajectory_csv(out, qu, n);
    }
    auto worst = [](const OutOfPlaneSeries& s) {
        double w = 0.0;
        for (double d : s.displacement) w = std::fmax(w, std::fabs(d));
        return w;
    };
    const double cspan = in_plane_span(cl, n);
    const double qspan = in_plane_span(qu, n);
    const double cw = worst(out_of_plane_component(cl, n));
    const double qw = worst(out_of_plane_component(qu, n));
    const Vec3 nh = n / norm(n);
    const Vec3 sep = p.x - mono.pos;
    const double b = norm(sep - p.v * (dot(sep, p.v) / dot(p.v, p.v)));

    Summary s;
    s.add("dt", dt);
    s.add("steps", steps);
    s.add("classical_termination", to_string(cl.reason));
    s.add("quantum_termination", to_string(qu.reason));
    s.add("impact_parameter", b);
    s.add("classical_in_plane_span", cspan);
    s.add("quantum_in_plane_span", qspan);
    s.add("classical_out_of_plane_max", cw);
    s.add("quantum_out_of_plane_max", qw);
    s.add("classical_normal_velocity_change", dot(cl.samples.back().state.v - p.v, nh));
    s.add("impulse_estimate", p.charges.qe * mono.charges.qm / (2.0 * std::numbers::pi * p.m * b));
    s.check("classical_out_of_plane_relative", cspan == 0.0 ? 0.0 : cw / cspan, 1e-2, false);
    s.check("quantum_out_of_plane_relative", qspan == 0.0 ? 0.0 : qw / qspan, 1e-8);
    return s;
}

}  // namespace detail

struct ScenarioResult {
    Summary summary;
    std::filesystem::path summary_path;
};

/// Runs one named scenario, writing its data files and summary.txt into
/// cfg.out_dir.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    static const std::map<std::string, std::function<Summary(const ScenarioConfig&)>> table{
        {"rotation-properties", detail::run_rotation_properties},
        {"dual-covariance", detail::run_dual_covariance},
        {"coulomb-equivalence", detail::run_coulomb_equivalence},
        {"two-field-cross", detail::run_two_field_cross},
        {"noether-zero", detail::run_noether_zero},
        {"helicity-conservation", detail::run_helicity_conservation},
        {"monopole-flyby", detail::run_monopole_flyby},
    };
    const auto it = table.find(cfg.name);
    if (it == table.end()) throw ConfigError("unknown scenario '" + cfg.name + "'");
    std::filesystem::create_directories(cfg.out_dir);
    Summary s;
    s.add("scenario", cfg.name);
    s.add("units_c", cfg.units.c());
    s.add("units_eps0", cfg.units.eps0());
    s.add("units_hbar", cfg.hbar);
    s.append(it->second(cfg));
    std::ofstream out = detail::open_output(cfg.out_dir, "summary.txt");
    s.write(out);
    out.close();
    if (!out) throw IoError("cannot write " + (cfg.out_dir / "summary.txt").string());
    ScenarioResult r{std::move(s), cfg.out_dir / "summary.txt"};
    return r;
}

}  // namespace dualfield
