#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <valarray>
#include <vector>

#include "algebra.hpp"

namespace hmlab {

using Field = std::valarray<cplx>;

enum class Boundary { periodic, open };
enum class Axis { space, time };

struct GridSpec {
    std::size_t n_points{256};
    double half_length{std::numbers::pi};
    Boundary boundary{Boundary::periodic};
    Axis axis{Axis::space};

    double spacing() const {
        return boundary == Boundary::periodic ? 2.0 * half_length / static_cast<double>(n_points)
                                              : 2.0 * half_length / static_cast<double>(n_points - 1);
    }
    double coord(std::size_t i) const { return -half_length + spacing() * static_cast<double>(i); }

    void validate() const {
        if (n_points < 8) throw std::invalid_argument("grid needs at least 8 points");
        if (!(half_length > 0.0)) throw std::invalid_argument("grid half-length must be positive");
    }
};

struct SpinPoint {
    cplx s_plus{}, s_minus{}, s_z{};
};

struct DualPoint {
    SpinPoint spin{};
    cplx sigma_plus{}, sigma_minus{}, sigma_z{};
};

inline std::tuple<cplx, cplx, cplx> cartesian(const SpinPoint& p) {
    return {(p.s_plus + p.s_minus) / 2.0, (p.s_plus - p.s_minus) / (2.0 * I_unit), p.s_z};
}

inline SpinPoint from_cartesian(cplx x, cplx y, cplx z) { return {x + I_unit * y, x - I_unit * y, z}; }

inline cplx casimir(const SpinPoint& p) { return p.s_z * p.s_z + p.s_plus * p.s_minus; }

inline cplx dual_casimir(const DualPoint& p) {
    return 2.0 * p.spin.s_z * p.sigma_z + p.spin.s_plus * p.sigma_minus + p.spin.s_minus * p.sigma_plus;
}

// [[Sz, S-], [S+, -Sz]]
inline Mat2 spin_matrix(cplx sp, cplx sm, cplx sz) { return mat2(sz, sm, sp, -sz); }
inline Mat2 spin_matrix(const SpinPoint& p) { return spin_matrix(p.s_plus, p.s_minus, p.s_z); }

enum class FieldId { s_plus, s_minus, s_z, sigma_plus, sigma_minus, sigma_z };

struct SpinGrid {
    GridSpec spec{};
    cplx c{1.0};
    Field sp, sm, sz;

    std::size_t size() const { return spec.n_points; }
    SpinPoint point(std::size_t i) const { return {sp[i], sm[i], sz[i]}; }
    void set_point(std::size_t i, const SpinPoint& p) { sp[i] = p.s_plus; sm[i] = p.s_minus; sz[i] = p.s_z; }

    const Field& field(FieldId id) const {
        switch (id) {
            case FieldId::s_plus: return sp;
            case FieldId::s_minus: return sm;
            case FieldId::s_z: return sz;
            default: throw std::invalid_argument("field not present on a spin grid");
        }
    }

    double casimir_deviation() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(casimir(point(i)) - c * c));
        return m;
    }

    void allocate() {
        sp.resize(spec.n_points);
        sm.resize(spec.n_points);
        sz.resize(spec.n_points);
    }
};

struct DualGrid : SpinGrid {
    Field gp, gm, gz;

    DualPoint dual_point(std::size_t i) const { return {point(i), gp[i], gm[i], gz[i]}; }
    void set_dual_point(std::size_t i, const DualPoint& p) {
        set_point(i, p.spin);
        gp[i] = p.sigma_plus; gm[i] = p.sigma_minus; gz[i] = p.sigma_z;
    }

    const Field& field(FieldId id) const {
        switch (id) {
            case FieldId::sigma_plus: return gp;
            case FieldId::sigma_minus: return gm;
            case FieldId::sigma_z: return gz;
            default: return SpinGrid::field(id);
        }
    }

    double dual_casimir_deviation() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(dual_casimir(dual_point(i))));
        return m;
    }

    void allocate() {
        SpinGrid::allocate();
        gp.resize(spec.n_points);
        gm.resize(spec.n_points);
        gz.resize(spec.n_points);
    }
};

// ---- finite differences ------------------------------------------------

// 4th-order central differences; periodic wrap or one-sided 4th-order stencils at open ends
inline Field derivative(const Field& f, const GridSpec& spec, int order) {
    if (order != 1 && order != 2) throw std::invalid_argument("derivative order must be 1 or 2");
    const std::size_t n = f.size();
    if (n < 6) throw std::invalid_argument("grid too small for the derivative stencil");
    const double h = spec.spacing();
    Field d(n);
    if (spec.boundary == Boundary::periodic) {
        for (std::size_t i = 0; i < n; ++i) {
            const cplx fm2 = f[(i + n - 2) % n], fm1 = f[(i + n - 1) % n];
            const cplx fp1 = f[(i + 1) % n], fp2 = f[(i + 2) % n];
            if (order == 1)
                d[i] = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
            else
                d[i] = (-fm2 + 16.0 * fm1 - 30.0 * f[i] + 16.0 * fp1 - fp2) / (12.0 * h * h);
        }
        return d;
    }
    for (std::size_t i = 2; i + 2 < n; ++i) {
        if (order == 1)
            d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
        else
            d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h);
    }
    // one-sided stencils; the right end mirrors the left with sign (-1)^order
    auto ends = [&](auto at, double sgn, std::size_t i0, std::size_t i1) {
        if (order == 1) {
            d[i0] = sgn * (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
            d[i1] = sgn * (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h);
        } else {
            d[i0] = (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) + 61.0 * at(4) - 10.0 * at(5)) /
                    (12.0 * h * h);
            d[i1] = (10.0 * at(0) - 15.0 * at(1) - 4.0 * at(2) + 14.0 * at(3) - 6.0 * at(4) + at(5)) / (12.0 * h * h);
        }
    };
    ends([&](std::size_t k) { return f[k]; }, 1.0, 0, 1);
    ends([&](std::size_t k) { return f[n - 1 - k]; }, -1.0, n - 1, n - 2);
    return d;
}

inline Field derivative(const SpinGrid& g, FieldId id, int order) { return derivative(g.field(id), g.spec, order); }
inline Field derivative(const DualGrid& g, FieldId id, int order) { return derivative(g.field(id), g.spec, order); }

// trapezoid on periodic grids, composite Simpson (3/8 tail for even counts) on open grids
inline cplx integrate(const Field& f, const GridSpec& spec) {
    const std::size_t n = f.size();
    const double h = spec.spacing();
    if (spec.boundary == Boundary::periodic) return f.sum() * h;
    cplx s{};
    std::size_t m = n - 1;  // intervals
    std::size_t simpson_end = (m % 2 == 0) ? m : m - 3;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) s += (f[i] + 4.0 * f[i + 1] + f[i + 2]) * (h / 3.0);
    if (simpson_end != m) {
        const std::size_t i = simpson_end;
        s += (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]) * (3.0 * h / 8.0);
    }
    return s;
}

// 6-point Lagrange interpolation at coordinate x
inline cplx interpolate(const Field& f, const GridSpec& spec, double x) {
    const std::size_t n = f.size();
    const double h = spec.spacing();
    const double s = (x + spec.half_length) / h;
    long base = static_cast<long>(std::floor(s)) - 2;
    if (spec.boundary == Boundary::open) base = std::clamp(base, 0L, static_cast<long>(n) - 6);
    cplx r{};
    for (int k = 0; k < 6; ++k) {
        double w = 1.0;
        const double nk = static_cast<double>(base + k);
        for (int j = 0; j < 6; ++j)
            if (j != k) w *= (s - static_cast<double>(base + j)) / (nk - static_cast<double>(base + j));
        long idx = base + k;
        if (spec.boundary == Boundary::periodic) idx = ((idx % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n);
        r += w * f[static_cast<std::size_t>(idx)];
    }
    return r;
}

// ---- initial data ---------------------------------------------------------

enum class DataKind { north_pole, twist, fourier_random, bump };

inline DataKind parse_data_kind(const std::string& s) {
    if (s == "north_pole") return DataKind::north_pole;
    if (s == "twist") return DataKind::twist;
    if (s == "fourier_random") return DataKind::fourier_random;
    if (s == "bump") return DataKind::bump;
    throw std::invalid_argument("unknown data kind: " + s);
}

namespace detail {

struct Modes {
    // cos and sin amplitudes of a 3-vector for wavenumbers 1..3
    std::array<std::array<double, 3>, 3> a{}, b{};
};

inline Modes random_modes(std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Modes m;
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) {
            const double scale = 1.0 / static_cast<double>((k + 1) * (k + 1));
            m.a[k][j] = nd(rng) * scale;
            m.b[k][j] = nd(rng) * scale;
        }
    return m;
}

inline std::array<double, 3> eval_modes(const Modes& m, double phase) {
    std::array<double, 3> v{};
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
            v[j] += m.a[k][j] * std::cos((k + 1) * phase) + m.b[k][j] * std::sin((k + 1) * phase);
    return v;
}

inline void check_guard(const SpinGrid& g) {
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g.c + g.sz[i]) < 0.1 * std::abs(g.c))
            throw std::invalid_argument("initial data violates min|c+Sz| >= 0.1|c|");
}

}  // namespace detail

// smooth spin data on the sphere of radius c (c may be complex; the direction is real)
inline SpinGrid make_spin_data(const GridSpec& spec, cplx c, DataKind kind, unsigned long seed, double amplitude) {
    spec.validate();
    if (std::abs(c) == 0.0) throw std::invalid_argument("Casimir radius must be nonzero");
    SpinGrid g;
    g.spec = spec;
    g.c = c;
    g.allocate();
    const double L = spec.half_length;
    const double k = std::numbers::pi / L;
    std::mt19937_64 rng(seed);
    const detail::Modes modes = detail::random_modes(rng);
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        const double x = spec.coord(i);
        std::array<double, 3> v{0.0, 0.0, 1.0};
        switch (kind) {
            case DataKind::north_pole: break;
            case DataKind::twist: {
                const double th = std::numbers::pi / 2 - amplitude * std::cos(k * x);
                const double ph = k * x + amplitude * std::sin(k * x);
                v = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
                break;
            }
            case DataKind::fourier_random: {
                const auto d = detail::eval_modes(modes, k * x);
                for (int j = 0; j < 3; ++j) v[j] += amplitude * d[j];
                break;
            }
            case DataKind::bump: {
                // north pole outside a Gaussian bump centred in the interval
                const double w = L / 6.0;
                const double env = std::exp(-(x / w) * (x / w));
                const double th = amplitude * env;
                const double ph = 0.3 + 2.0 * k * x;
                v = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
                break;
            }
        }
        const double nrm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (nrm < 1e-8) throw std::invalid_argument("Casimir-unreachable parameters (zero direction)");
        g.set_point(i, from_cartesian(c * (v[0] / nrm), c * (v[1] / nrm), c * (v[2] / nrm)));
    }
    detail::check_guard(g);
    return g;
}

// Sigma -> Sigma - (S.Sigma / c^2) S in Cartesian components
inline DualPoint project_dual(const DualPoint& p, cplx c) {
    const auto [sx, sy, sz] = cartesian(p.spin);
    const auto [gx, gy, gz] = cartesian(SpinPoint{p.sigma_plus, p.sigma_minus, p.sigma_z});
    const cplx dot = (sx * gx + sy * gy + sz * gz) / (c * c);
    const SpinPoint q = from_cartesian(gx - dot * sx, gy - dot * sy, gz - dot * sz);
    return {p.spin, q.s_plus, q.s_minus, q.s_z};
}

inline DualGrid make_dual_data(const GridSpec& spec, cplx c, DataKind kind, unsigned long seed, double amplitude) {
    DualGrid g;
    static_cast<SpinGrid&>(g) = make_spin_data(spec, c, kind, seed, amplitude);
    g.gp.resize(spec.n_points);
    g.gm.resize(spec.n_points);
    g.gz.resize(spec.n_points);
    if (kind == DataKind::north_pole) return g;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const detail::Modes modes = detail::random_modes(rng);
    const double k = std::numbers::pi / spec.half_length;
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        const double x = spec.coord(i);
        auto d = detail::eval_modes(modes, k * x);
        double env = 1.0;
        if (kind == DataKind::bump) {
            const double w = spec.half_length / 6.0;
            env = std::exp(-(x / w) * (x / w));
        }
        for (auto& v : d) v *= amplitude * env;
        const SpinPoint s = from_cartesian(d[0], d[1], d[2]);
        g.set_dual_point(i, project_dual(DualPoint{g.point(i), s.s_plus, s.s_minus, s.s_z}, c));
    }
    return g;
}

// ---- CSV snapshots --------------------------------------------------------

inline std::string grid_csv_header(bool dual) {
    std::string h = "index,x,S+re,S+im,S-re,S-im,Szre,Szim";
    if (dual) h += ",Sig+re,Sig+im,Sig-re,Sig-im,Sigzre,Sigzim";
    return h;
}

namespace detail {
inline void write_rows(std::ostream& os, const SpinGrid& g, const DualGrid* d) {
    os << grid_csv_header(d != nullptr) << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < g.size(); ++i) {
        os << i << ',' << g.spec.coord(i);
        for (const cplx v : {g.sp[i], g.sm[i], g.sz[i]}) os << ',' << v.real() << ',' << v.imag();
        if (d)
            for (const cplx v : {d->gp[i], d->gm[i], d->gz[i]}) os << ',' << v.real() << ',' << v.imag();
        os << '\n';
    }
}

inline std::vector<std::vector<double>> read_rows(std::istream& is, bool dual) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty grid CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != grid_csv_header(dual)) throw std::runtime_error("grid CSV header mismatch: " + line);
    const std::size_t cols = dual ? 14 : 8;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
        if (r.size() != cols) throw std::runtime_error("grid CSV row has wrong column count");
        rows.push_back(std::move(r));
    }
    return rows;
}
}  // namespace detail

inline void write_grid_csv(std::ostream& os, const SpinGrid& g) { detail::write_rows(os, g, nullptr); }
inline void write_grid_csv(std::ostream& os, const DualGrid& g) { detail::write_rows(os, g, &g); }

inline SpinGrid read_spin_csv(std::istream& is, const GridSpec& spec, cplx c) {
    const auto rows = detail::read_rows(is, false);
    if (rows.size() != spec.n_points) throw std::runtime_error("grid CSV row count does not match spec");
    SpinGrid g;
    g.spec = spec;
    g.c = c;
    g.allocate();
    for (std::size_t i = 0; i < rows.size(); ++i)
        g.set_point(i, {{rows[i][2], rows[i][3]}, {rows[i][4], rows[i][5]}, {rows[i][6], rows[i][7]}});
    return g;
}

inline DualGrid read_dual_csv(std::istream& is, const GridSpec& spec, cplx c) {
    const auto rows = detail::read_rows(is, true);
    if (rows.size() != spec.n_points) throw std::runtime_error("grid CSV row count does not match spec");
    DualGrid g;
    g.spec = spec;
    g.c = c;
    g.allocate();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        g.set_dual_point(i, {{{r[2], r[3]}, {r[4], r[5]}, {r[6], r[7]}}, {r[8], r[9]}, {r[10], r[11]}, {r[12], r[13]}});
    }
    return g;
}

}  // namespace hmlab
