#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "algebra.hpp"
#include "fields.hpp"
#include "hierarchy.hpp"
#include "lax.hpp"
#include "parallel.hpp"

namespace hmlab {

enum class Scheme { midpoint, midpoint_richardson, magnus4 };

struct TransportOptions {
    Scheme scheme = Scheme::magnus4;
    int substeps = 0;  // 0: chosen from the generator size
    Convention convention = Convention::euclidean;
};

// product kept as mat * exp(log_scale) to survive exp(c L / lambda) growth
struct ScaledMatrix {
    Mat2 mat = Mat2::identity();
    double log_scale = 0.0;

    void renormalize() {
        const double m = mat.max_abs();
        if (m > 1e50 || (m < 1e-50 && m > 0.0)) {
            mat = mat * (1.0 / m);
            log_scale += std::log(m);
        }
    }
    Mat2 value() const { return mat * std::exp(log_scale); }
    cplx log_trace() const { return std::log(mat.trace()) + log_scale; }
};

namespace detail {

// fields sampled along the path; Sigma is zero for spin grids
struct PathData {
    GridSpec spec;
    cplx c{1.0};
    std::array<Field, 6> f;
    bool dual = false;

    DualPoint at(double x) const {
        return {{interpolate(f[0], spec, x), interpolate(f[1], spec, x), interpolate(f[2], spec, x)},
                dual ? interpolate(f[3], spec, x) : cplx{},
                dual ? interpolate(f[4], spec, x) : cplx{},
                dual ? interpolate(f[5], spec, x) : cplx{}};
    }
    DualPoint node(std::size_t i) const {
        const std::size_t k = i % f[0].size();
        return {{f[0][k], f[1][k], f[2][k]}, dual ? f[3][k] : cplx{}, dual ? f[4][k] : cplx{},
                dual ? f[5][k] : cplx{}};
    }
    std::size_t cells() const { return spec.boundary == Boundary::periodic ? spec.n_points : spec.n_points - 1; }
};

inline PathData path_data(const SpinGrid& g) {
    const Field z(cplx{}, g.size());
    return {g.spec, g.c, {g.sp, g.sm, g.sz, z, z, z}, false};
}
inline PathData path_data(const DualGrid& g) { return {g.spec, g.c, {g.sp, g.sm, g.sz, g.gp, g.gm, g.gz}, true}; }

struct Generator {
    Orientation orientation;
    cplx c;
    cplx inv_kappa;
    Mat2 operator()(const DualPoint& p, cplx lambda) const {
        if (orientation == Orientation::space) return u_hm(p.spin, lambda);
        return v_hm(p, c, lambda) * inv_kappa;
    }
};

inline int auto_substeps(const PathData& d, const Generator& gen, cplx lambda, int requested) {
    if (requested > 0) return requested;
    double m = 0.0;
    for (std::size_t i = 0; i < d.spec.n_points; ++i) m = std::max(m, gen(d.node(i), lambda).max_abs());
    const double hm = d.spec.spacing() * m;
    return std::clamp(static_cast<int>(std::ceil(hm / 0.05)), 1, 256);
}

// exponent of one cell [x, x + h] for the chosen scheme
inline Mat2 cell_exponent(const PathData& d, const Generator& gen, cplx lambda, double x, double h, Scheme s) {
    if (s == Scheme::magnus4) {
        const double r = std::sqrt(3.0) / 6.0;
        const Mat2 a1 = gen(d.at(x + (0.5 - r) * h), lambda), a2 = gen(d.at(x + (0.5 + r) * h), lambda);
        return (a1 + a2) * (h / 2.0) + commutator(a2, a1) * (std::sqrt(3.0) / 12.0 * h * h);
    }
    return gen(d.at(x + 0.5 * h), lambda) * h;
}

inline ScaledMatrix transport_path(const PathData& d, const Generator& gen, cplx lambda, std::size_t from,
                                   std::size_t to, Scheme scheme, int substeps, bool inverse_reversed = false) {
    ScaledMatrix t;
    const double h = d.spec.spacing() / substeps;
    for (std::size_t k = from; k < to; ++k) {
        const double x0 = d.spec.coord(0) + d.spec.spacing() * static_cast<double>(k);
        for (int s = 0; s < substeps; ++s) {
            const Mat2 omega = cell_exponent(d, gen, lambda, x0 + h * s, h, scheme);
            if (inverse_reversed)
                t.mat = t.mat * expm_traceless(-omega);
            else
                t.mat = expm_traceless(omega) * t.mat;
            t.renormalize();
        }
    }
    return t;
}

template <class Grid>
ScaledMatrix scaled_transport(const Grid& g, cplx lambda, std::size_t from, std::size_t to, Orientation o,
                              const TransportOptions& opt, bool inverse_reversed = false) {
    check_pole(lambda, "transport");
    const PathData d = path_data(g);
    if (from > to || to > d.cells()) throw std::out_of_range("transport indices must satisfy from <= to <= cells");
    if (o == Orientation::time && !d.dual) throw std::invalid_argument("time transport needs a dual grid");
    const Generator gen{o, g.c, 1.0 / time_scale(opt.convention)};
    const int sub = auto_substeps(d, gen, lambda, opt.substeps);
    if (opt.scheme != Scheme::midpoint_richardson)
        return transport_path(d, gen, lambda, from, to, opt.scheme, sub, inverse_reversed);
    const ScaledMatrix coarse = transport_path(d, gen, lambda, from, to, Scheme::midpoint, sub, inverse_reversed);
    const ScaledMatrix fine = transport_path(d, gen, lambda, from, to, Scheme::midpoint, 2 * sub, inverse_reversed);
    ScaledMatrix r;
    r.log_scale = fine.log_scale;
    r.mat = (fine.mat * 4.0 - coarse.mat * std::exp(coarse.log_scale - fine.log_scale)) * (1.0 / 3.0);
    return r;
}

}  // namespace detail

// path-ordered transport across cells [from, to); later cells multiply on the left
template <class Grid>
Mat2 transport(const Grid& g, cplx lambda, std::size_t from, std::size_t to, Orientation o,
               const TransportOptions& opt = {}) {
    return detail::scaled_transport(g, lambda, from, to, o, opt).value();
}

template <class Grid>
Mat2 full_transport(const Grid& g, cplx lambda, Orientation o, const TransportOptions& opt = {}) {
    return transport(g, lambda, 0, detail::path_data(g).cells(), o, opt);
}

template <class Grid>
cplx log_transfer(const Grid& g, cplx lambda, Orientation o, const TransportOptions& opt = {}) {
    return detail::scaled_transport(g, lambda, 0, detail::path_data(g).cells(), o, opt).log_trace();
}

template <class Grid>
cplx transfer(const Grid& g, cplx lambda, Orientation o, const TransportOptions& opt = {}) {
    return std::exp(log_transfer(g, lambda, o, opt));
}

// log tr[K+(l) T(l) K-(l) T^-1(-l)] with T^-1(-l) built from inverse cell propagators
template <class Grid>
cplx log_open_transfer(const Grid& g, cplx lambda, Orientation o, const BoundaryParams& kplus,
                       const BoundaryParams& kminus, const TransportOptions& opt = {}) {
    if (g.spec.boundary != Boundary::open) throw std::invalid_argument("open transfer needs an open grid");
    const std::size_t cells = detail::path_data(g).cells();
    const auto t = detail::scaled_transport(g, lambda, 0, cells, o, opt);
    TransportOptions inv = opt;
    if (inv.substeps == 0) {
        const detail::PathData d = detail::path_data(g);
        const detail::Generator gen{o, g.c, 1.0 / time_scale(opt.convention)};
        inv.substeps = detail::auto_substeps(d, gen, lambda, 0);
    }
    const auto ti = detail::scaled_transport(g, -lambda, 0, cells, o, inv, true);
    const Mat2 m = k_matrix(kplus, lambda) * t.mat * k_matrix(kminus, lambda) * ti.mat;
    return std::log(m.trace()) + t.log_scale + ti.log_scale;
}

template <class Grid>
cplx open_transfer(const Grid& g, cplx lambda, Orientation o, const BoundaryParams& kplus,
                   const BoundaryParams& kminus, const TransportOptions& opt = {}) {
    return std::exp(log_open_transfer(g, lambda, o, kplus, kminus, opt));
}

// |T - (I+W(end)) e^Z (I+W(start))^-1| / |T| with truncated series
template <class Grid>
double diagonalization_residual(const Grid& g, cplx lambda, Orientation o, int k_max, const TransportOptions& opt = {}) {
    WZSeries s;
    if constexpr (std::is_same_v<Grid, DualGrid>) {
        s = o == Orientation::time ? wz_recursion(g, k_max, opt.convention)
                                   : wz_recursion(static_cast<const SpinGrid&>(g), k_max);
    } else {
        if (o == Orientation::time) throw std::invalid_argument("time orientation needs a dual grid");
        s = wz_recursion(g, k_max);
    }
    const auto t = detail::scaled_transport(g, lambda, 0, detail::path_data(g).cells(), o, opt);
    const std::size_t n = g.size();
    const std::size_t i_start = 0, i_end = g.spec.boundary == Boundary::periodic ? 0 : n - 1;
    auto w_at = [&](std::size_t i) {
        Mat2 w = Mat2::identity();
        cplx lk = 1.0;
        for (int k = 0; k <= k_max; ++k) {
            w(0, 1) += lk * s.w_a[k][i];
            w(1, 0) += lk * s.w_b[k][i];
            lk *= lambda;
        }
        return w;
    };
    cplx z11{}, z22{};
    for (int j = -s.lag; j <= k_max; ++j) {
        const cplx lj = std::pow(lambda, j);
        z11 += lj * s.z11_at(j);
        z22 += lj * s.z22_at(j);
    }
    // scale both sides by exp(-log_scale) to compare without overflow
    const Mat2 ez = mat2(std::exp(z11 - t.log_scale), 0.0, 0.0, std::exp(z22 - t.log_scale));
    const Mat2 approx = w_at(i_end) * ez * inverse(w_at(i_start));
    return (t.mat - approx).max_abs() / t.mat.max_abs();
}

// ---- lambda scans -----------------------------------------------------------------

struct TransferScan {
    Orientation orientation{Orientation::space};
    bool open = false;
    std::vector<cplx> lambdas;
    std::vector<cplx> values;       // transfer values
    std::vector<cplx> log_values;   // logs, finite where the values overflow
};

// 8 log-spaced real samples plus 4 complex samples with Re(c / lambda) > 0
inline std::vector<cplx> default_scan_lambdas(Orientation o) {
    const double lo = o == Orientation::space ? 0.05 : 0.25, hi = 2.0;
    std::vector<cplx> l;
    for (int k = 0; k < 8; ++k) l.emplace_back(lo * std::pow(hi / lo, k / 7.0), 0.0);
    for (const double r : {0.6, 1.2})
        for (const double th : {0.3, -0.3}) l.push_back(std::polar(r, th));
    return l;
}

template <class Grid>
TransferScan transfer_scan(const Grid& g, Orientation o, const std::vector<cplx>& lambdas,
                           const TransportOptions& opt = {}, const BoundaryParams* kplus = nullptr,
                           const BoundaryParams* kminus = nullptr) {
    TransferScan s;
    s.orientation = o;
    s.open = kplus != nullptr;
    s.lambdas = lambdas;
    s.values.resize(lambdas.size());
    s.log_values.resize(lambdas.size());
    parallel_for(lambdas.size(), [&](std::size_t i) {
        s.log_values[i] = s.open ? log_open_transfer(g, lambdas[i], o, *kplus, *kminus, opt)
                                 : log_transfer(g, lambdas[i], o, opt);
        s.values[i] = std::exp(s.log_values[i]);
    });
    return s;
}

inline cplx complex_expm1(cplx z) {
    const double x = z.real(), y = z.imag(), sh = std::sin(0.5 * y);
    return {std::expm1(x) * std::cos(y) - 2.0 * sh * sh, std::exp(x) * std::sin(y)};
}

// max over samples of |t1 - t0| / |t0|, computed from logs
inline double relative_drift(const TransferScan& a, const TransferScan& b) {
    if (a.lambdas.size() != b.lambdas.size()) throw std::invalid_argument("scan sizes differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.lambdas.size(); ++i)
        worst = std::max(worst, std::abs(complex_expm1(b.log_values[i] - a.log_values[i])));
    return worst;
}

inline void write_scan_csv(std::ostream& os, const TransferScan& s) {
    os.precision(17);
    os << "lambda_re,lambda_im,t_re,t_im\n";
    for (std::size_t i = 0; i < s.lambdas.size(); ++i)
        os << s.lambdas[i].real() << ',' << s.lambdas[i].imag() << ',' << s.values[i].real() << ','
           << s.values[i].imag() << '\n';
}

}  // namespace hmlab
