#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <array>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "fields.hpp"
#include "jet.hpp"

namespace hmlab {

enum class Orientation { space, time };

enum class Convention { euclidean, real };

// d/dt = kappa d/dtau, dt = dtau / kappa
inline cplx time_scale(Convention conv) { return conv == Convention::euclidean ? cplx{1.0} : I_unit; }

// ---- generic recursion ----------------------------------------------------
//
// Lax matrix written as lambda^-lag (B0 + lambda B1) with B0 = S/2 and, for the
// time orientation, B1 = -Sigma S / (2 c^2). W = [[0, a], [b, 0]].

template <class F>
struct Block {
    F d1, d2, u12, u21;  // diagonal entries and off-diagonal entries
};

template <class F>
struct WZCoeffs {
    int lag = 1;
    std::vector<F> a, b;     // W^(k)
    std::vector<F> d11, d22; // densities of Z^(j - lag)
};

template <class F>
Block<F> spin_block(const F& sp, const F& sm, const F& sz) {
    return {sz * 0.5, sz * -0.5, sm * 0.5, sp * 0.5};
}

// -Sigma S / (2 c^2)
template <class F>
Block<F> sigma_block(const F& sp, const F& sm, const F& sz, const F& gp, const F& gm, const F& gz, cplx c) {
    const cplx f = -1.0 / (2.0 * c * c);
    return {(gz * sz + gm * sp) * f, (gp * sm + gz * sz) * f, (gz * sm - gm * sz) * f, (gp * sz - gz * sp) * f};
}

template <class F, class Deriv>
WZCoeffs<F> wz_coefficients(const std::vector<Block<F>>& blocks, const F& sp, const F& sm, const F& sz, cplx c,
                            int lag, int k_top, Deriv&& deriv) {
    const F zero = sz * 0.0;
    WZCoeffs<F> w;
    w.lag = lag;
    w.a.push_back(sm / (sz + c) * -1.0);
    w.b.push_back(sp / (sz + c));
    for (int k = 1; k <= k_top; ++k) {
        F r12 = zero, r21 = zero;
        if (k >= lag) {
            r12 = r12 + deriv(w.a[k - lag]);
            r21 = r21 + deriv(w.b[k - lag]);
        }
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const Block<F>& u = blocks[bi];
            if (bi == 0) {
                for (int i = 1; i < k; ++i) {
                    r12 = r12 + w.a[i] * u.u21 * w.a[k - i];
                    r21 = r21 + w.b[i] * u.u12 * w.b[k - i];
                }
                continue;
            }
            const int m = k - static_cast<int>(bi);
            if (m < 0) continue;
            r12 = r12 + w.a[m] * (u.d2 - u.d1);
            r21 = r21 + w.b[m] * (u.d1 - u.d2);
            for (int i = 0; i <= m; ++i) {
                r12 = r12 + w.a[i] * u.u21 * w.a[m - i];
                r21 = r21 + w.b[i] * u.u12 * w.b[m - i];
            }
            if (m == 0) {
                r12 = r12 - u.u12;
                r21 = r21 - u.u21;
            }
        }
        w.a.push_back(r12 / c);
        w.b.push_back(r21 / c * -1.0);
    }
    for (int k = 0; k <= k_top; ++k) {
        F e11 = zero, e22 = zero;
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const Block<F>& u = blocks[bi];
            const int m = k - static_cast<int>(bi);
            if (m == 0) {
                e11 = e11 + u.d1;
                e22 = e22 + u.d2;
            }
            if (m >= 0) {
                e11 = e11 + u.u12 * w.b[m];
                e22 = e22 + u.u21 * w.a[m];
            }
        }
        w.d11.push_back(e11);
        w.d22.push_back(e22);
    }
    return w;
}

// ---- grid recursion ----------------------------------------------------------

struct WZSeries {
    Orientation orientation{Orientation::space};
    int k_max = 2;
    int lag = 1;
    std::vector<Field> w_a, w_b;           // W^(0..)
    std::vector<Field> z_d11, z_d22;       // densities dZ^(j)/dxi, j = -lag..k_max
    std::vector<cplx> z11, z22;            // integrated coefficients, same indexing
    GridSpec spec{};

    cplx z11_at(int order) const { return z11.at(static_cast<std::size_t>(order + lag)); }
    cplx z22_at(int order) const { return z22.at(static_cast<std::size_t>(order + lag)); }
    const Field& density11(int order) const { return z_d11.at(static_cast<std::size_t>(order + lag)); }
    const Field& density22(int order) const { return z_d22.at(static_cast<std::size_t>(order + lag)); }
};

inline constexpr int max_k_order = 4;

namespace detail {
inline void check_branch(const SpinGrid& g) {
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g.c + g.sz[i]) < 1e-8 * std::abs(g.c))
            throw std::domain_error("branch singularity: c + Sz vanishes");
}

inline WZSeries finish(WZCoeffs<Field>&& w, Orientation o, int k_max, const GridSpec& spec, cplx measure) {
    WZSeries s;
    s.orientation = o;
    s.k_max = k_max;
    s.lag = w.lag;
    s.spec = spec;
    s.w_a = std::move(w.a);
    s.w_b = std::move(w.b);
    s.z_d11 = std::move(w.d11);
    s.z_d22 = std::move(w.d22);
    for (std::size_t j = 0; j < s.z_d11.size(); ++j) {
        s.z11.push_back(integrate(s.z_d11[j], spec) * measure);
        s.z22.push_back(integrate(s.z_d22[j], spec) * measure);
    }
    return s;
}
}  // namespace detail

// space orientation: U = S/(2 lambda)
inline WZSeries wz_recursion(const SpinGrid& g, int k_max = 2) {
    if (k_max < 0 || k_max > max_k_order) throw std::invalid_argument("k_max must lie in 0..4");
    detail::check_branch(g);
    std::vector<Block<Field>> blocks{spin_block(g.sp, g.sm, g.sz)};
    auto d = [&](const Field& f) -> Field { return derivative(f, g.spec, 1); };
    auto w = wz_coefficients(blocks, g.sp, g.sm, g.sz, g.c, 1, k_max + 1, d);
    return detail::finish(std::move(w), Orientation::space, k_max, g.spec, 1.0);
}

// time orientation: V = S/(2 lambda^2) - Sigma S/(2 c^2 lambda) along the grid axis
inline WZSeries wz_recursion(const DualGrid& g, int k_max = 2, Convention conv = Convention::euclidean) {
    if (k_max < 0 || k_max > max_k_order) throw std::invalid_argument("k_max must lie in 0..4");
    detail::check_branch(g);
    const cplx kappa = time_scale(conv);
    std::vector<Block<Field>> blocks{spin_block(g.sp, g.sm, g.sz),
                                     sigma_block(g.sp, g.sm, g.sz, g.gp, g.gm, g.gz, g.c)};
    auto d = [&](const Field& f) -> Field { return derivative(f, g.spec, 1) * kappa; };
    auto w = wz_coefficients(blocks, g.sp, g.sm, g.sz, g.c, 2, k_max + 2, d);
    return detail::finish(std::move(w), Orientation::time, k_max, g.spec, 1.0 / kappa);
}

// base system U = V = S/(2 lambda) read along the time axis of a spin grid
inline WZSeries wz_recursion_base(const SpinGrid& g, int k_max = 2) {
    WZSeries s = wz_recursion(g, k_max);
    s.orientation = Orientation::time;
    return s;
}

// ---- charges -----------------------------------------------------------------

struct ChargeSeries {
    Orientation orientation{Orientation::space};
    std::map<int, cplx> values;
    bool open = false;
    std::optional<std::pair<cplx, cplx>> boundary_terms;  // (plus, minus)
    bool uses_entry_11 = true;
};

// selects the diagonal entry whose leading coefficient has the larger real part
inline ChargeSeries charges(const WZSeries& s) {
    ChargeSeries q;
    q.orientation = s.orientation;
    const cplx lead11 = s.z11.front(), lead22 = s.z22.front();
    q.uses_entry_11 = lead11.real() >= lead22.real();
    for (std::size_t j = 0; j < s.z11.size(); ++j)
        q.values[static_cast<int>(j) - s.lag] = q.uses_entry_11 ? s.z11[j] : s.z22[j];
    return q;
}

inline ChargeSeries charges(const SpinGrid& g, int k_max = 2) { return charges(wz_recursion(g, k_max)); }
inline ChargeSeries charges(const DualGrid& g, int k_max = 2, Convention conv = Convention::euclidean) {
    return charges(wz_recursion(g, k_max, conv));
}

// closed-form charge densities, used as independent quadrature oracles
inline Field momentum_density(const SpinGrid& g) {
    const Field dp = derivative(g.sp, g.spec, 1), dm = derivative(g.sm, g.spec, 1);
    return (g.sp * dm - dp * g.sm) / (g.sz + g.c) / (4.0 * g.c);
}
inline Field energy_density(const SpinGrid& g) {
    const Field dp = derivative(g.sp, g.spec, 1), dm = derivative(g.sm, g.spec, 1), dz = derivative(g.sz, g.spec, 1);
    return (dp * dm + dz * dz) * (-1.0 / (4.0 * g.c * g.c * g.c));
}
// order-0 time charge density, (1,1) entry
inline Field time_charge_density(const DualGrid& g, Convention conv = Convention::euclidean) {
    const cplx k = time_scale(conv);
    const Field dz = derivative(g.sz, g.spec, 1) * k, dm = derivative(g.sm, g.spec, 1) * k;
    const cplx c = g.c;
    return (dz + (c - g.sz) * dm / g.sm - (g.gp * g.gm + g.gz * g.gz) / (2.0 * c * c)) / (2.0 * c);
}
// a (2,2) variant that is not the traceless partner of the (1,1) entry; kept to quantify the gap
inline Field time_charge_density22_alt(const DualGrid& g, Convention conv = Convention::euclidean) {
    const cplx k = time_scale(conv);
    const Field dz = derivative(g.sz, g.spec, 1) * k, dp = derivative(g.sp, g.spec, 1) * k;
    const cplx c = g.c;
    return (dz - (c - g.sz) * dp / g.sp + (g.gp * g.gm + g.gz * g.gz) / (2.0 * c * c)) / (2.0 * c);
}
// equal-space Hamiltonian density
inline Field time_hamiltonian_density(const DualGrid& g, Convention conv = Convention::euclidean) {
    const cplx k = time_scale(conv);
    const Field dp = derivative(g.sp, g.spec, 1) * k, dm = derivative(g.sm, g.spec, 1) * k;
    const cplx c = g.c;
    return ((dp * g.sm - g.sp * dm) / (g.sz + c) + (g.gp * g.gm + g.gz * g.gz) / (c * c)) * 0.5;
}

// lowest boundary coefficient of the time-like open generator, pole-free via S+S- = c^2 - Sz^2
inline cplx boundary_w1(const DualPoint& p, const BoundaryParams& k, Side side, cplx c) {
    const cplx sp = p.spin.s_plus, sm = p.spin.s_minus, sz = p.spin.s_z;
    if (side == Side::plus) {
        const cplx t_alpha = 2.0 * k.alpha / c * (sp * p.sigma_z / (sz + c) - p.sigma_plus);
        return (t_alpha - 2.0 * k.delta * sp - k.beta * sp * sp / (sz + c) + k.gamma * (c + sz)) / (2.0 * c);
    }
    const cplx t_alpha = -2.0 * k.alpha / c * (sm * p.sigma_z / (sz + c) - p.sigma_minus);
    return (t_alpha - 2.0 * k.delta * sm + k.beta * (c + sz) - k.gamma * sm * sm / (sz + c)) / (2.0 * c);
}

// log with the branch nearest to a previous value
inline cplx log_near(cplx z, std::optional<cplx> previous) {
    cplx l = std::log(z);
    if (previous) {
        const double two_pi = 2.0 * std::numbers::pi;
        const double k = std::round((previous->imag() - l.imag()) / two_pi);
        l += cplx{0.0, k * two_pi};
    }
    return l;
}

// open space charges: order -1, 0, 1
inline ChargeSeries open_space_charges(const SpinGrid& g, const BoundaryParams& kp, const BoundaryParams& km) {
    if (g.spec.boundary != Boundary::open) throw std::invalid_argument("open charges need an open grid");
    if (std::abs(kp.alpha) < pole_epsilon || std::abs(km.alpha) < pole_epsilon)
        throw std::domain_error("open space charges need alpha != 0");
    const cplx c = g.c;
    const std::size_t n = g.size();
    ChargeSeries q;
    q.orientation = Orientation::space;
    q.open = true;
    q.values[-1] = 2.0 * c * g.spec.half_length;
    q.values[0] = std::log(kp.alpha) + std::log(km.alpha);
    const cplx bulk = integrate(energy_density(g), g.spec) * 2.0;
    const cplx bp = (2.0 * kp.delta * g.sz[n - 1] + kp.beta * g.sp[n - 1] + kp.gamma * g.sm[n - 1]) / (2.0 * kp.alpha * c);
    const cplx bm = (2.0 * km.delta * g.sz[0] + km.beta * g.sp[0] + km.gamma * g.sm[0]) / (2.0 * km.alpha * c);
    q.values[1] = bulk + bp + bm;
    q.boundary_terms = std::make_pair(bp, bm);
    return q;
}

// open time charges: order -2, -1, 0; log branches continued from `previous` when given
inline ChargeSeries open_time_charges(const DualGrid& g, const BoundaryParams& kp, const BoundaryParams& km,
                                      Convention conv = Convention::euclidean,
                                      std::optional<std::pair<cplx, cplx>> previous = std::nullopt) {
    if (g.spec.boundary != Boundary::open) throw std::invalid_argument("open charges need an open grid");
    const cplx c = g.c;
    const cplx k = time_scale(conv);
    const std::size_t n = g.size();
    const Field dp = derivative(g.sp, g.spec, 1) * k, dm = derivative(g.sm, g.spec, 1) * k;
    const Field dens = ((g.sp * dm - dp * g.sm) / (g.sz + c) - (g.gp * g.gm + g.gz * g.gz) / (c * c)) / (2.0 * c);
    const cplx wp = boundary_w1(g.dual_point(n - 1), kp, Side::plus, c);
    const cplx wm = boundary_w1(g.dual_point(0), km, Side::minus, c);
    if (std::abs(wp) < 1e-14 || std::abs(wm) < 1e-14)
        throw std::domain_error("boundary-degenerate configuration: W+- coefficient vanishes");
    const cplx lp = log_near(wp, previous ? std::optional<cplx>(previous->first) : std::nullopt);
    const cplx lm = log_near(wm, previous ? std::optional<cplx>(previous->second) : std::nullopt);
    ChargeSeries q;
    q.orientation = Orientation::time;
    q.open = true;
    q.values[-2] = 2.0 * c * g.spec.half_length / k;
    q.values[-1] = 0.0;
    q.values[0] = integrate(dens, g.spec) / k + lp + lm;
    q.boundary_terms = std::make_pair(lp, lm);
    return q;
}

// ---- mu-series of 2x2 matrices --------------------------------------------------

using MatSeries = std::vector<Mat2>;
using ScalarSeries = std::vector<cplx>;

inline MatSeries series_mul(const MatSeries& x, const MatSeries& y) {
    const std::size_t n = std::min(x.size(), y.size());
    MatSeries r(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; i + j < n; ++j) r[i + j] += x[i] * y[j];
    return r;
}

inline MatSeries series_scale(const ScalarSeries& s, const MatSeries& x) {
    const std::size_t n = std::min(s.size(), x.size());
    MatSeries r(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; i + j < n; ++j) r[i + j] += x[j] * s[i];
    return r;
}

inline MatSeries series_add(const MatSeries& x, const MatSeries& y) {
    MatSeries r(std::min(x.size(), y.size()));
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = x[i] + y[i];
    return r;
}

inline MatSeries series_inverse(const MatSeries& x) {
    const Mat2 x0i = inverse(x.at(0));
    MatSeries r(x.size());
    r[0] = x0i;
    for (std::size_t n = 1; n < x.size(); ++n) {
        Mat2 s;
        for (std::size_t k = 1; k <= n; ++k) s += x[k] * r[n - k];
        r[n] = -(x0i * s);
    }
    return r;
}

inline ScalarSeries scalar_inverse(const ScalarSeries& s) {
    if (std::abs(s.at(0)) == 0.0) throw std::domain_error("series inversion failure");
    ScalarSeries r(s.size());
    r[0] = 1.0 / s[0];
    for (std::size_t n = 1; n < s.size(); ++n) {
        cplx t{};
        for (std::size_t k = 1; k <= n; ++k) t += s[k] * r[n - k];
        r[n] = -t / s[0];
    }
    return r;
}

inline MatSeries constant_series(const Mat2& m, std::size_t n) {
    MatSeries r(n);
    r[0] = m;
    return r;
}

// 1/(2(mu - lambda)) for sign = +1, 1/(2(mu + lambda)) for sign = -1
inline ScalarSeries pole_series(cplx lambda, int sign, std::size_t n) {
    check_pole(lambda, "generator");
    ScalarSeries r(n);
    const cplx l = lambda * static_cast<double>(sign);
    for (std::size_t k = 0; k < n; ++k) r[k] = -1.0 / (2.0 * l) * std::pow(1.0 / l, static_cast<double>(k));
    return r;
}

// I + W(sign * mu) from pointwise coefficients
inline MatSeries identity_plus_w(const std::vector<cplx>& a, const std::vector<cplx>& b, int sign, std::size_t n) {
    MatSeries r(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = (sign < 0 && k % 2 == 1) ? -1.0 : 1.0;
        const cplx ak = k < a.size() ? a[k] : cplx{}, bk = k < b.size() ? b[k] : cplx{};
        r[k] = mat2(0.0, ak * s, bk * s, 0.0);
    }
    r[0] += Mat2::identity();
    return r;
}

inline MatSeries k_series(const BoundaryParams& p, std::size_t n) {
    MatSeries r(n);
    r[0] = Mat2::identity() * p.alpha;
    if (n > 1) r[1] = mat2(p.delta, p.beta, p.gamma, -p.delta);
    return r;
}

// (I+W(sign mu)) e_ij (I+W(sign' mu))^-1
inline MatSeries sandwich(const MatSeries& left, std::size_t i, std::size_t j, const MatSeries& right) {
    return series_mul(series_mul(left, constant_series(Mat2::unit(i, j), left.size())), series_inverse(right));
}

struct PointW {
    std::vector<cplx> a, b;  // W^(k) entries at one grid point
};

inline PointW point_w(const WZSeries& s, std::size_t idx) {
    PointW p;
    for (const auto& f : s.w_a) p.a.push_back(f[idx]);
    for (const auto& f : s.w_b) p.b.push_back(f[idx]);
    return p;
}

// periodic generator 1/(2(mu-lambda)) (I+W(mu)) e11 (I+W(mu))^-1 as a mu-series
inline MatSeries periodic_generator_series(const PointW& w, cplx lambda, std::size_t n) {
    const MatSeries ip = identity_plus_w(w.a, w.b, +1, n);
    return series_scale(pole_series(lambda, +1, n), sandwich(ip, 0, 0, ip));
}

inline MatSeries open_bulk_generator_series(const PointW& w, cplx lambda, Orientation o, std::size_t n) {
    const MatSeries ip = identity_plus_w(w.a, w.b, +1, n);
    const MatSeries im = identity_plus_w(w.a, w.b, -1, n);
    const std::size_t e = (o == Orientation::space) ? 0 : 1;
    return series_add(series_scale(pole_series(lambda, +1, n), sandwich(ip, 0, 0, ip)),
                      series_scale(pole_series(lambda, -1, n), sandwich(im, e, e, im)));
}

// boundary generators reduced with the dominant-exponential limits; W taken at the boundary point
inline MatSeries open_boundary_generator_series(const PointW& w, const BoundaryParams& k, Side side, cplx lambda,
                                                Orientation o, std::size_t n) {
    const std::size_t m = n + 1;
    const MatSeries ip = identity_plus_w(w.a, w.b, +1, m);
    const MatSeries im = identity_plus_w(w.a, w.b, -1, m);
    const MatSeries kk = k_series(k, m);
    const ScalarSeries pm = pole_series(lambda, +1, m), pp = pole_series(lambda, -1, m);
    MatSeries x, body;
    ScalarSeries wbb(m);
    if (o == Orientation::space) {
        if (side == Side::plus) {
            x = sandwich(ip, 0, 0, im);
            const MatSeries t = series_mul(series_mul(series_inverse(im), kk), ip);
            for (std::size_t i = 0; i < m; ++i) wbb[i] = t[i](0, 0);
            body = series_add(series_scale(pm, series_mul(x, kk)), series_scale(pp, series_mul(kk, x)));
        } else {
            x = sandwich(im, 0, 0, ip);
            const MatSeries t = series_mul(series_mul(series_inverse(ip), kk), im);
            for (std::size_t i = 0; i < m; ++i) wbb[i] = t[i](0, 0);
            body = series_add(series_scale(pm, series_mul(kk, x)), series_scale(pp, series_mul(x, kk)));
        }
        MatSeries r = series_scale(scalar_inverse(wbb), body);
        r.resize(n);
        return r;
    }
    if (side == Side::plus) {
        x = sandwich(ip, 0, 1, im);
        const MatSeries t = series_mul(series_mul(series_inverse(im), kk), ip);
        for (std::size_t i = 0; i < m; ++i) wbb[i] = t[i](1, 0);
        body = series_add(series_scale(pm, series_mul(x, kk)), series_scale(pp, series_mul(kk, x)));
    } else {
        x = sandwich(im, 1, 0, ip);
        const MatSeries t = series_mul(series_mul(series_inverse(ip), kk), im);
        for (std::size_t i = 0; i < m; ++i) wbb[i] = t[i](0, 1);
        body = series_add(series_scale(pm, series_mul(kk, x)), series_scale(pp, series_mul(x, kk)));
    }
    // both series start at mu^1; body already carries 1/2 from the pole series, the prefactor is 1/(2 W)
    ScalarSeries ws(wbb.begin() + 1, wbb.end());
    MatSeries bs(body.begin() + 1, body.end());
    if (std::abs(ws.at(0)) < 1e-14) throw std::domain_error("boundary-degenerate configuration: W coefficient vanishes");
    MatSeries r = series_scale(scalar_inverse(ws), bs);
    r.resize(n);
    return r;
}

// ---- closed forms ----------------------------------------------------------------

inline cplx spin_square(const SpinPoint& p) { return p.s_z * p.s_z + p.s_plus * p.s_minus; }

namespace closed {

inline Mat2 S(const SpinPoint& p) { return spin_matrix(p); }

// periodic V-generator coefficients; s1, s2: first and second x-derivatives
inline Mat2 space_coeff(int order, const SpinPoint& s, const SpinPoint& s1, const SpinPoint& s2, cplx c, cplx l) {
    const Mat2 I2 = Mat2::identity(), Sm = S(s), S1 = S(s1), S2 = S(s2);
    const Mat2 base = I2 * (-1.0 / (4.0 * std::pow(l, order + 1))) - Sm * (1.0 / (4.0 * c * std::pow(l, order + 1)));
    if (order == 0) return base;
    Mat2 r = base + S1 * Sm * (1.0 / (4.0 * c * c * c * std::pow(l, order)));
    if (order == 1) return r;
    if (order != 2) throw std::invalid_argument("closed forms available for orders 0..2");
    return r - S2 * (1.0 / (4.0 * c * c * c * l)) - Sm * (3.0 * spin_square(s1) / (8.0 * std::pow(c, 5) * l));
}

// periodic U-generator coefficients for the dual picture; sdot: time derivative
inline Mat2 time_coeff(int order, const SpinPoint& s, const SpinPoint& sigma, const SpinPoint& sdot, cplx c, cplx l) {
    const Mat2 I2 = Mat2::identity(), Sm = S(s), G = S(sigma), D = S(sdot);
    const Mat2 base = I2 * (-1.0 / (4.0 * std::pow(l, order + 1))) - Sm * (1.0 / (4.0 * c * std::pow(l, order + 1)));
    if (order == 0) return base;
    Mat2 r = base + G * Sm * (1.0 / (4.0 * c * c * c * std::pow(l, order)));
    if (order == 1) return r;
    if (order != 2) throw std::invalid_argument("closed forms available for orders 0..2");
    return r + D * Sm * (1.0 / (4.0 * c * c * c * l)) - Sm * (spin_square(sigma) / (8.0 * std::pow(c, 5) * l));
}

// base-system U-generator; the order-2 coefficient follows the recursion (3/8)
inline Mat2 base_coeff(int order, const SpinPoint& s, const SpinPoint& sdot, const SpinPoint& sddot, cplx c, cplx l) {
    return space_coeff(order, s, sdot, sddot, c, l);
}

// order-2 base coefficient with 1/8 in place of 3/8; kept to quantify the gap
inline Mat2 base_coeff2_alt(const SpinPoint& s, const SpinPoint& sdot, const SpinPoint& sddot, cplx c, cplx l) {
    const Mat2 Sm = S(s);
    return space_coeff(2, s, sdot, sddot, c, l) + Sm * (2.0 * spin_square(sdot) / (8.0 * std::pow(c, 5) * l));
}

inline Mat2 space_open_bulk_coeff(const SpinPoint& s, const SpinPoint& s1, cplx c, cplx l) {
    const Mat2 Sm = S(s);
    return Mat2::identity() * (-1.0 / (2.0 * l * l)) - Sm * (1.0 / (2.0 * c * l * l)) +
           S(s1) * Sm * (1.0 / (2.0 * c * c * c * l));
}

inline Mat2 space_open_boundary_coeff(const SpinPoint& s, const BoundaryParams& k, Side side, cplx c, cplx l) {
    const double sg = side == Side::plus ? 1.0 : -1.0;
    const cplx sp = s.s_plus, sm = s.s_minus, sz = s.s_z;
    const Mat2 m = mat2(k.beta * sp - k.gamma * sm, 2.0 * (k.delta * sm - k.beta * sz),
                        2.0 * (k.gamma * sz - k.delta * sp), k.gamma * sm - k.beta * sp);
    return Mat2::identity() * (-1.0 / (2.0 * l * l)) - S(s) * (1.0 / (2.0 * c * l * l)) +
           m * (sg / (4.0 * k.alpha * c * l));
}

inline Mat2 u_open_bulk(const SpinPoint& s, cplx c, cplx l) { return S(s) * (-1.0 / (2.0 * c * l)); }

namespace detail {
inline Mat2 plus_alpha_block(const SpinPoint& s, cplx c) {
    const cplx A = c + s.s_z, sp = s.s_plus;
    return mat2(sp * A, -A * A, sp * sp, -sp * A);
}
inline Mat2 plus_lambda_block(const SpinPoint& s, const BoundaryParams& k, cplx c) {
    const cplx A = c + s.s_z, sp = s.s_plus;
    return mat2(-k.beta * sp * sp - k.gamma * A * A, 2.0 * A * (k.delta * A + k.beta * sp),
                2.0 * sp * (k.delta * sp - k.gamma * A), k.beta * sp * sp + k.gamma * A * A);
}
}  // namespace detail

// plus-boundary U matrix with the lambda^-1 block sign that follows from its generator
inline Mat2 u_open_plus(const DualPoint& p, const BoundaryParams& k, cplx c, cplx l) {
    const cplx A = c + p.spin.s_z;
    const cplx w1 = boundary_w1(p, k, Side::plus, c);
    return (detail::plus_alpha_block(p.spin, c) * (k.alpha / (l * l)) +
            detail::plus_lambda_block(p.spin, k, c) * (1.0 / (2.0 * l))) *
           (1.0 / (2.0 * c * A * w1));
}

// plus-boundary time generator with the opposite 1/lambda sign; kept to quantify the gap
inline Mat2 u_open_plus_alt(const DualPoint& p, const BoundaryParams& k, cplx c, cplx l) {
    const cplx A = c + p.spin.s_z;
    const cplx w1 = boundary_w1(p, k, Side::plus, c);
    return (detail::plus_alpha_block(p.spin, c) * (k.alpha / (l * l)) -
            detail::plus_lambda_block(p.spin, k, c) * (1.0 / (2.0 * l))) *
           (1.0 / (2.0 * c * A * w1));
}

inline Mat2 u_open_minus(const DualPoint& p, const BoundaryParams& k, cplx c, cplx l) {
    const cplx A = c + p.spin.s_z, sm = p.spin.s_minus;
    const cplx w1 = boundary_w1(p, k, Side::minus, c);
    const Mat2 ma = mat2(sm * A, sm * sm, -A * A, -sm * A);
    const Mat2 mb = mat2(k.beta * A * A + k.gamma * sm * sm, -2.0 * sm * (k.delta * sm - k.beta * A),
                         -2.0 * A * (k.delta * A + k.gamma * sm), -k.beta * A * A - k.gamma * sm * sm);
    return (ma * (k.alpha / (l * l)) - mb * (1.0 / (2.0 * l))) * (1.0 / (2.0 * c * A * w1));
}

}  // namespace closed

// ---- grid-level generator comparisons ----------------------------------------------

struct GeneratorComparison {
    std::vector<Mat2> series;
    std::vector<Mat2> closed;
    double max_residual() const {
        double m = 0.0;
        for (std::size_t i = 0; i < series.size(); ++i) m = std::max(m, (series[i] - closed[i]).max_abs());
        return m;
    }
};

inline SpinPoint derivative_point(const SpinGrid& g, std::size_t idx, int order, cplx scale = 1.0) {
    return {derivative(g.sp, g.spec, order)[idx] * scale, derivative(g.sm, g.spec, order)[idx] * scale,
            derivative(g.sz, g.spec, order)[idx] * scale};
}

inline GeneratorComparison v_generator_coeffs(const SpinGrid& g, std::size_t idx, cplx lambda, int max_order = 2) {
    const WZSeries s = wz_recursion(g, std::max(max_order, 1));
    const MatSeries ser = periodic_generator_series(point_w(s, idx), lambda, static_cast<std::size_t>(max_order + 1));
    GeneratorComparison r;
    const SpinPoint p = g.point(idx), d1 = derivative_point(g, idx, 1), d2 = derivative_point(g, idx, 2);
    for (int k = 0; k <= max_order; ++k) {
        r.series.push_back(ser[k]);
        r.closed.push_back(closed::space_coeff(k, p, d1, d2, g.c, lambda));
    }
    return r;
}

inline GeneratorComparison u_generator_coeffs(const DualGrid& g, std::size_t idx, cplx lambda, int max_order = 2,
                                              Convention conv = Convention::euclidean) {
    const WZSeries s = wz_recursion(g, std::max(max_order, 1), conv);
    const MatSeries ser = periodic_generator_series(point_w(s, idx), lambda, static_cast<std::size_t>(max_order + 1));
    GeneratorComparison r;
    const DualPoint p = g.dual_point(idx);
    const SpinPoint sigma{p.sigma_plus, p.sigma_minus, p.sigma_z};
    const SpinPoint sdot = derivative_point(g, idx, 1, time_scale(conv));
    for (int k = 0; k <= max_order; ++k) {
        r.series.push_back(ser[k]);
        r.closed.push_back(closed::time_coeff(k, p.spin, sigma, sdot, g.c, lambda));
    }
    return r;
}

// spin grid laid along the time axis of the base system
inline GeneratorComparison base_u_generator_coeffs(const SpinGrid& g, std::size_t idx, cplx lambda, int max_order = 2) {
    const WZSeries s = wz_recursion_base(g, std::max(max_order, 1));
    const MatSeries ser = periodic_generator_series(point_w(s, idx), lambda, static_cast<std::size_t>(max_order + 1));
    GeneratorComparison r;
    const SpinPoint p = g.point(idx), d1 = derivative_point(g, idx, 1), d2 = derivative_point(g, idx, 2);
    for (int k = 0; k <= max_order; ++k) {
        r.series.push_back(ser[k]);
        r.closed.push_back(closed::base_coeff(k, p, d1, d2, g.c, lambda));
    }
    return r;
}

enum class Region { bulk, plus, minus };

// space: order-mu^1 matrices; time: order-mu^0 matrices
inline GeneratorComparison open_generator_coeffs(const DualGrid& g, Orientation o, Region region, std::size_t idx,
                                                 cplx lambda, const BoundaryParams& k,
                                                 Convention conv = Convention::euclidean) {
    GeneratorComparison r;
    const std::size_t n = g.size();
    const std::size_t at = region == Region::plus ? n - 1 : region == Region::minus ? 0 : idx;
    const Side side = region == Region::minus ? Side::minus : Side::plus;
    if (o == Orientation::space) {
        const WZSeries s = wz_recursion(static_cast<const SpinGrid&>(g), 2);
        const PointW w = point_w(s, at);
        const MatSeries ser = region == Region::bulk ? open_bulk_generator_series(w, lambda, o, 3)
                                                     : open_boundary_generator_series(w, k, side, lambda, o, 3);
        r.series.push_back(ser[1]);
        if (region == Region::bulk)
            r.closed.push_back(closed::space_open_bulk_coeff(g.point(at), derivative_point(g, at, 1), g.c, lambda));
        else
            r.closed.push_back(closed::space_open_boundary_coeff(g.point(at), k, side, g.c, lambda));
        return r;
    }
    const WZSeries s = wz_recursion(g, 2, conv);
    const PointW w = point_w(s, at);
    const MatSeries ser = region == Region::bulk ? open_bulk_generator_series(w, lambda, o, 3)
                                                 : open_boundary_generator_series(w, k, side, lambda, o, 3);
    r.series.push_back(ser[0]);
    if (region == Region::bulk)
        r.closed.push_back(closed::u_open_bulk(g.point(at), g.c, lambda));
    else if (region == Region::plus)
        r.closed.push_back(closed::u_open_plus(g.dual_point(at), k, g.c, lambda));
    else
        r.closed.push_back(closed::u_open_minus(g.dual_point(at), k, g.c, lambda));
    return r;
}

// ---- exact point evaluation ----------------------------------------------------------

// fields as truncated Taylor series along the grid axis around one point
using AxisJet = Jet<8>;

struct PointJets {
    AxisJet sp, sm, sz, gp, gm, gz;

    SpinPoint spin_derivative(std::size_t order, cplx scale = 1.0) const {
        const cplx f = std::pow(scale, static_cast<double>(order));
        return {sp.deriv(order) * f, sm.deriv(order) * f, sz.deriv(order) * f};
    }
    DualPoint value() const { return {spin_derivative(0), gp.value(), gm.value(), gz.value()}; }
};

// random smooth data at a point: S on the sphere of radius c, Sigma tangent to it
inline PointJets sample_point_jets(std::mt19937_64& rng, cplx c, double amplitude = 0.5) {
    std::normal_distribution<double> nd(0.0, 1.0);
    auto vec = [&](double lead) {
        std::array<AxisJet, 3> v;
        for (int j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 8; ++k) v[j].c[k] = amplitude * nd(rng) / static_cast<double>((k + 1) * (k + 1));
        v[2].c[0] += lead;
        return v;
    };
    auto s = vec(1.0);
    const AxisJet nrm = sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
    for (auto& x : s) x = x * c / nrm;
    auto g = vec(0.0);
    const AxisJet dot = (s[0] * g[0] + s[1] * g[1] + s[2] * g[2]) / (c * c);
    for (int j = 0; j < 3; ++j) g[j] = g[j] - dot * s[j];
    return {s[0] + s[1] * I_unit, s[0] - s[1] * I_unit, s[2], g[0] + g[1] * I_unit, g[0] - g[1] * I_unit, g[2]};
}

// W^(0..k_top) at the expansion point with exact derivatives; kappa scales the time axis
inline PointW point_w_exact(const PointJets& p, cplx c, Orientation o, int k_top, cplx kappa = 1.0) {
    std::vector<Block<AxisJet>> blocks{spin_block(p.sp, p.sm, p.sz)};
    if (o == Orientation::time) blocks.push_back(sigma_block(p.sp, p.sm, p.sz, p.gp, p.gm, p.gz, c));
    const int lag = o == Orientation::space ? 1 : 2;
    auto d = [&](const AxisJet& f) -> AxisJet { return derivative(f) * kappa; };
    const auto w = wz_coefficients(blocks, p.sp, p.sm, p.sz, c, lag, k_top, d);
    PointW r;
    for (const auto& x : w.a) r.a.push_back(x.value());
    for (const auto& x : w.b) r.b.push_back(x.value());
    return r;
}

enum class GeneratorKind {
    space_periodic,  // V generator, orders 0..2
    time_periodic,   // U generator of the dual picture, orders 0..2
    base_periodic,   // U generator of the base system, orders 0..2
    space_open_bulk, space_open_plus, space_open_minus,  // order mu^1
    time_open_bulk, time_open_plus, time_open_minus      // order mu^0
};

inline GeneratorComparison generator_coeffs_exact(const PointJets& p, cplx c, GeneratorKind kind, cplx lambda,
                                                  const BoundaryParams& k = {}, Convention conv = Convention::euclidean) {
    using GK = GeneratorKind;
    GeneratorComparison r;
    const cplx kappa = time_scale(conv);
    const DualPoint v = p.value();
    const SpinPoint sigma{v.sigma_plus, v.sigma_minus, v.sigma_z};
    switch (kind) {
        case GK::space_periodic:
        case GK::base_periodic: {
            const MatSeries ser = periodic_generator_series(point_w_exact(p, c, Orientation::space, 3), lambda, 3);
            for (int n = 0; n <= 2; ++n) {
                r.series.push_back(ser[n]);
                r.closed.push_back(kind == GK::space_periodic
                                       ? closed::space_coeff(n, v.spin, p.spin_derivative(1), p.spin_derivative(2), c, lambda)
                                       : closed::base_coeff(n, v.spin, p.spin_derivative(1), p.spin_derivative(2), c, lambda));
            }
            return r;
        }
        case GK::time_periodic: {
            const MatSeries ser = periodic_generator_series(point_w_exact(p, c, Orientation::time, 4, kappa), lambda, 3);
            for (int n = 0; n <= 2; ++n) {
                r.series.push_back(ser[n]);
                r.closed.push_back(closed::time_coeff(n, v.spin, sigma, p.spin_derivative(1, kappa), c, lambda));
            }
            return r;
        }
        case GK::space_open_bulk:
        case GK::space_open_plus:
        case GK::space_open_minus: {
            const PointW w = point_w_exact(p, c, Orientation::space, 3);
            if (kind == GK::space_open_bulk) {
                r.series.push_back(open_bulk_generator_series(w, lambda, Orientation::space, 3)[1]);
                r.closed.push_back(closed::space_open_bulk_coeff(v.spin, p.spin_derivative(1), c, lambda));
            } else {
                const Side side = kind == GK::space_open_plus ? Side::plus : Side::minus;
                r.series.push_back(open_boundary_generator_series(w, k, side, lambda, Orientation::space, 3)[1]);
                r.closed.push_back(closed::space_open_boundary_coeff(v.spin, k, side, c, lambda));
            }
            return r;
        }
        default: {
            const PointW w = point_w_exact(p, c, Orientation::time, 4, kappa);
            if (kind == GK::time_open_bulk) {
                r.series.push_back(open_bulk_generator_series(w, lambda, Orientation::time, 3)[0]);
                r.closed.push_back(closed::u_open_bulk(v.spin, c, lambda));
            } else if (kind == GK::time_open_plus) {
                r.series.push_back(open_boundary_generator_series(w, k, Side::plus, lambda, Orientation::time, 3)[0]);
                r.closed.push_back(closed::u_open_plus(v, k, c, lambda));
            } else {
                r.series.push_back(open_boundary_generator_series(w, k, Side::minus, lambda, Orientation::time, 3)[0]);
                r.closed.push_back(closed::u_open_minus(v, k, c, lambda));
            }
            return r;
        }
    }
}

// ---- boundary constraints ------------------------------------------------------------

// three bilinear space-like relations at one boundary point
inline std::array<cplx, 3> space_bc_terms(const SpinPoint& s, const SpinPoint& d, const BoundaryParams& k, Side side,
                                          cplx c) {
    const double sg = side == Side::plus ? 1.0 : -1.0;
    const cplx c2 = c * c;
    return {k.alpha * (s.s_plus * d.s_minus - d.s_plus * s.s_minus) - sg * c2 * (k.beta * s.s_plus - k.gamma * s.s_minus),
            k.alpha * (s.s_plus * d.s_z - d.s_plus * s.s_z) - sg * c2 * (k.delta * s.s_plus - k.gamma * s.s_z),
            k.alpha * (s.s_minus * d.s_z - d.s_minus * s.s_z) - sg * c2 * (k.delta * s.s_minus - k.beta * s.s_z)};
}

inline double space_bc_residual(const SpinPoint& s, const SpinPoint& d, const BoundaryParams& k, Side side, cplx c) {
    double m = 0.0;
    for (const cplx v : space_bc_terms(s, d, k, side, c)) m = std::max(m, std::abs(v));
    return m;
}

inline double time_bc_residual(const SpinPoint& s, const BoundaryParams& k) {
    return std::max(std::abs(k.alpha), std::abs(k.beta * s.s_plus + k.gamma * s.s_minus + 2.0 * k.delta * s.s_z));
}

inline double boundary_residual(const SpinGrid& g, Orientation o, Side side, const BoundaryParams& k) {
    if (g.spec.boundary != Boundary::open) throw std::invalid_argument("boundary residual needs an open grid");
    const std::size_t at = side == Side::plus ? g.size() - 1 : 0;
    if (o == Orientation::time) return time_bc_residual(g.point(at), k);
    return space_bc_residual(g.point(at), derivative_point(g, at, 1), k, side, g.c);
}

// |U_side - U_bulk| split into its lambda^-2 and lambda^-1 blocks, identity parts dropped;
// both blocks vanish exactly on time-like compatible data (alpha = 0 and the linear constraint)
struct MatchingMismatch {
    double order_m2 = 0.0, order_m1 = 0.0;
    double total() const { return std::max(order_m2, order_m1); }
};

inline MatchingMismatch boundary_matching_mismatch(const DualPoint& p, const BoundaryParams& k, Side side, cplx c) {
    auto diff = [&](cplx l) {
        const Mat2 u = side == Side::plus ? closed::u_open_plus(p, k, c, l) : closed::u_open_minus(p, k, c, l);
        Mat2 d = u - closed::u_open_bulk(p.spin, c, l);
        return d - Mat2::identity() * (d.trace() / 2.0);
    };
    // M(l) = A / l^2 + B / l from two samples
    const Mat2 m1 = diff(1.0), m2 = diff(2.0);
    const Mat2 a = (m1 - m2 * 2.0) * 2.0;
    return {a.max_abs(), (m1 - a).max_abs()};
}

}  // namespace hmlab
