#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "fields.hpp"
#include "hierarchy.hpp"

namespace hmlab {

// Sigma^2 = (Sz^2 + S+ S-) I for a traceless spin-like matrix
inline cplx square_scalar(const SpinPoint& p) { return casimir(p); }

inline SpinPoint sigma_part(const DualPoint& p) { return {p.sigma_plus, p.sigma_minus, p.sigma_z}; }

inline Mat2 u_hm(const SpinPoint& p, cplx lambda) {
    check_pole(lambda, "u_hm");
    return spin_matrix(p) * (1.0 / (2.0 * lambda));
}

// S/(2 l^2) - Sigma S/(2 c^2 l)
inline Mat2 v_hm(const DualPoint& p, cplx c, cplx lambda) {
    check_pole(lambda, "v_hm");
    const Mat2 s = spin_matrix(p.spin), g = spin_matrix(sigma_part(p));
    return s * (1.0 / (2.0 * lambda * lambda)) - g * s * (1.0 / (2.0 * c * c * lambda));
}

inline Mat2 u2_dual(const DualPoint& p, const SpinPoint& sdot, cplx c, cplx lambda) {
    check_pole(lambda, "u2_dual");
    const Mat2 s = spin_matrix(p.spin), g = spin_matrix(sigma_part(p)), d = spin_matrix(sdot);
    const cplx c2 = c * c;
    return s * (1.0 / (2.0 * lambda * lambda * lambda)) - g * s * (1.0 / (2.0 * c2 * lambda * lambda)) -
           d * s * (1.0 / (2.0 * c2 * lambda)) + s * (square_scalar(sigma_part(p)) / (4.0 * c2 * c2 * lambda));
}

inline std::pair<Mat2, Mat2> base_lax(const SpinPoint& p, cplx lambda) {
    const Mat2 u = u_hm(p, lambda);
    return {u, u};
}

struct ExtendedPoint {
    SpinPoint spin{};
    cplx p_plus{}, p_minus{}, p_z{};
    cplx pp_plus{}, pp_minus{}, pp_z{};

    SpinPoint first() const { return {p_plus, p_minus, p_z}; }
    SpinPoint second() const { return {pp_plus, pp_minus, pp_z}; }
};

inline Mat2 u2_comm(const ExtendedPoint& e, cplx c, cplx lambda) {
    check_pole(lambda, "u2_comm");
    const Mat2 s = spin_matrix(e.spin), p = spin_matrix(e.first()), pp = spin_matrix(e.second());
    const cplx c2 = c * c;
    return s * (1.0 / (2.0 * lambda * lambda * lambda)) - p * s * (1.0 / (2.0 * c2 * lambda * lambda)) +
           pp * (1.0 / (2.0 * c2 * lambda)) + s * (3.0 * square_scalar(e.first()) / (4.0 * c2 * c2 * lambda));
}

inline Mat2 v1_comm(const ExtendedPoint& e, cplx c, cplx lambda) {
    check_pole(lambda, "v1_comm");
    const Mat2 s = spin_matrix(e.spin), p = spin_matrix(e.first());
    return s * (1.0 / (2.0 * lambda * lambda)) - p * s * (1.0 / (2.0 * c * c * lambda));
}

// second proxy fixed by the first: S Sdot - P^2 S / c^2, read back into components
inline SpinPoint redundant_second_proxy(const SpinPoint& s, const SpinPoint& p, const SpinPoint& sdot, cplx c) {
    const Mat2 m = spin_matrix(s) * spin_matrix(sdot) - spin_matrix(s) * (square_scalar(p) / (c * c));
    return {m(1, 0), m(0, 1), m(0, 0)};
}

// ---- space-time patches ------------------------------------------------------------

// rows are grids along one axis, stacked with a uniform step along the other axis
struct Patch {
    Axis row_axis{Axis::time};
    double row_step = 0.0;
    std::vector<DualGrid> rows;

    std::size_t n_rows() const { return rows.size(); }
};

// hm patch from time snapshots of spatial grids: Sigma is filled with the x-derivative
inline Patch hm_patch(const std::vector<SpinGrid>& snapshots, double dt) {
    Patch p;
    p.row_axis = Axis::time;
    p.row_step = dt;
    for (const SpinGrid& g : snapshots) {
        DualGrid d;
        static_cast<SpinGrid&>(d) = g;
        d.gp = derivative(g.sp, g.spec, 1);
        d.gm = derivative(g.sm, g.spec, 1);
        d.gz = derivative(g.sz, g.spec, 1);
        p.rows.push_back(std::move(d));
    }
    return p;
}

enum class PairKind { hm, dual, higher, comm, base };

using MatField = std::array<Field, 4>;  // entries (0,0), (0,1), (1,0), (1,1)

namespace detail {

inline Field stack_derivative(const std::vector<const Field*>& f, std::size_t j, double h) {
    return (*f[j - 2] - 8.0 * *f[j - 1] + 8.0 * *f[j + 1] - *f[j + 2]) / (12.0 * h);
}

inline MatField mat_field_derivative(const std::vector<MatField>& rows, std::size_t j, double h) {
    MatField r;
    for (std::size_t e = 0; e < 4; ++e) {
        std::vector<const Field*> col;
        for (const auto& m : rows) col.push_back(&m[e]);
        r[e] = stack_derivative(col, j, h);
    }
    return r;
}

inline MatField mat_field_along(const MatField& m, const GridSpec& spec) {
    MatField r;
    for (std::size_t e = 0; e < 4; ++e) r[e] = derivative(m[e], spec, 1);
    return r;
}

inline Mat2 at(const MatField& m, std::size_t i) { return mat2(m[0][i], m[1][i], m[2][i], m[3][i]); }

inline MatField allocate_mat_field(std::size_t n) {
    return {Field(cplx{}, n), Field(cplx{}, n), Field(cplx{}, n), Field(cplx{}, n)};
}

inline bool needs_time_derivative(PairKind k) { return k == PairKind::higher || k == PairKind::comm; }

}  // namespace detail

// d/dtau of the spin fields at every row where it is available; cross-row rows outside [2, n-3] stay empty
inline std::vector<std::array<Field, 3>> patch_time_derivative(const Patch& p) {
    std::vector<std::array<Field, 3>> out(p.n_rows());
    for (std::size_t j = 0; j < p.n_rows(); ++j) {
        const DualGrid& g = p.rows[j];
        if (p.row_axis == Axis::space) {
            out[j] = {derivative(g.sp, g.spec, 1), derivative(g.sm, g.spec, 1), derivative(g.sz, g.spec, 1)};
            continue;
        }
        if (j < 2 || j + 2 >= p.n_rows()) continue;
        std::array<Field, 3> d;
        for (int f = 0; f < 3; ++f) {
            std::vector<const Field*> col;
            for (const auto& r : p.rows) col.push_back(f == 0 ? &r.sp : f == 1 ? &r.sm : &r.sz);
            d[f] = detail::stack_derivative(col, j, p.row_step);
        }
        out[j] = std::move(d);
    }
    return out;
}

// max over interior samples of |kappa d_tau U - d_x V + [U, V]|, kappa = 1 (euclidean) or i (real);
// time derivatives inside the matrices are kappa d_tau as well
inline double zero_curvature_residual(const Patch& p, PairKind kind, cplx lambda, Convention conv = Convention::euclidean) {
    const std::size_t nr = p.n_rows();
    const bool cross_dot = detail::needs_time_derivative(kind) && p.row_axis == Axis::time;
    const std::size_t margin = cross_dot ? 4 : 2;
    if (nr < 2 * margin + 1) throw std::invalid_argument("patch too small for 4th-order differencing");
    if (p.row_step <= 0.0) throw std::invalid_argument("patch row step must be positive");
    const cplx kappa = time_scale(conv);
    const cplx c = p.rows.front().c;
    const std::size_t n = p.rows.front().size();

    std::vector<std::array<Field, 3>> sdot;
    if (detail::needs_time_derivative(kind)) sdot = patch_time_derivative(p);

    const std::size_t lo = margin - 2, hi = nr - (margin - 2);  // rows where U, V are built
    std::vector<MatField> um(nr), vm(nr);
    for (std::size_t j = lo; j < hi; ++j) {
        const DualGrid& g = p.rows[j];
        um[j] = detail::allocate_mat_field(n);
        vm[j] = detail::allocate_mat_field(n);
        for (std::size_t i = 0; i < n; ++i) {
            const DualPoint d = g.dual_point(i);
            Mat2 u, v;
            switch (kind) {
                case PairKind::hm:
                case PairKind::dual:
                    u = u_hm(d.spin, lambda);
                    v = v_hm(d, c, lambda);
                    break;
                case PairKind::base:
                    std::tie(u, v) = base_lax(d.spin, lambda);
                    break;
                case PairKind::higher: {
                    const SpinPoint sd{sdot[j][0][i] * kappa, sdot[j][1][i] * kappa, sdot[j][2][i] * kappa};
                    u = u2_dual(d, sd, c, lambda);
                    v = v_hm(d, c, lambda);
                    break;
                }
                case PairKind::comm: {
                    const SpinPoint sd{sdot[j][0][i] * kappa, sdot[j][1][i] * kappa, sdot[j][2][i] * kappa};
                    const SpinPoint pp = redundant_second_proxy(d.spin, sigma_part(d), sd, c);
                    const ExtendedPoint e{d.spin, d.sigma_plus, d.sigma_minus, d.sigma_z,
                                          pp.s_plus, pp.s_minus, pp.s_z};
                    u = u2_comm(e, c, lambda);
                    v = v1_comm(e, c, lambda);
                    break;
                }
            }
            for (std::size_t e = 0; e < 4; ++e) {
                um[j][e][i] = u.a[e];
                vm[j][e][i] = v.a[e];
            }
        }
    }

    double worst = 0.0;
    for (std::size_t j = margin; j + margin < nr; ++j) {
        const GridSpec& spec = p.rows[j].spec;
        MatField du, dv;
        if (p.row_axis == Axis::time) {
            du = detail::mat_field_derivative(um, j, p.row_step);
            dv = detail::mat_field_along(vm[j], spec);
        } else {
            du = detail::mat_field_along(um[j], spec);
            dv = detail::mat_field_derivative(vm, j, p.row_step);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Mat2 u = detail::at(um[j], i), v = detail::at(vm[j], i);
            const Mat2 r = detail::at(du, i) * kappa - detail::at(dv, i) + commutator(u, v);
            worst = std::max(worst, r.max_abs());
        }
    }
    return worst;
}

}  // namespace hmlab
