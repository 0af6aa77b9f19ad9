#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <type_traits>
#include <stdexcept>
#include <vector>

#include "algebra.hpp"
#include "fields.hpp"
#include "jet.hpp"

namespace hmlab {

inline constexpr std::size_t n_local_fields = 6;  // S+, S-, Sz, Sig+, Sig-, Sigz
using LocalVector = std::array<cplx, n_local_fields>;

inline LocalVector local_vector(const SpinPoint& p) { return {p.s_plus, p.s_minus, p.s_z, 0.0, 0.0, 0.0}; }
inline LocalVector local_vector(const DualPoint& p) {
    return {p.spin.s_plus, p.spin.s_minus, p.spin.s_z, p.sigma_plus, p.sigma_minus, p.sigma_z};
}

// ---- sparse polynomials in the six local fields ------------------------------

class Polynomial {
public:
    using Exponents = std::array<int, n_local_fields>;

    Polynomial() = default;
    static Polynomial constant(cplx v) {
        Polynomial p;
        p.add({}, v);
        return p;
    }
    static Polynomial variable(std::size_t i) {
        Exponents e{};
        e.at(i) = 1;
        Polynomial p;
        p.add(e, 1.0);
        return p;
    }

    void add(const Exponents& e, cplx v) {
        terms_[e] += v;
        if (terms_[e] == cplx{}) terms_.erase(e);
    }

    cplx operator()(const LocalVector& u) const {
        cplx s{};
        for (const auto& [e, v] : terms_) {
            cplx t = v;
            for (std::size_t i = 0; i < n_local_fields; ++i)
                for (int k = 0; k < e[i]; ++k) t *= u[i];
            s += t;
        }
        return s;
    }

    Polynomial partial(std::size_t i) const {
        Polynomial r;
        for (const auto& [e, v] : terms_) {
            if (e[i] == 0) continue;
            Exponents f = e;
            f[i] -= 1;
            r.add(f, v * static_cast<double>(e[i]));
        }
        return r;
    }

    bool empty() const { return terms_.empty(); }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) {
        for (const auto& [e, v] : b.terms_) a.add(e, v);
        return a;
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        Polynomial r;
        for (const auto& [ea, va] : a.terms_)
            for (const auto& [eb, vb] : b.terms_) {
                Exponents e;
                for (std::size_t i = 0; i < n_local_fields; ++i) e[i] = ea[i] + eb[i];
                r.add(e, va * vb);
            }
        return r;
    }
    friend Polynomial operator*(cplx s, Polynomial a) {
        for (auto& [e, v] : a.terms_) v *= s;
        return a;
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + cplx{-1.0} * b; }

private:
    std::map<Exponents, cplx> terms_;
};

// ---- bracket tables ----------------------------------------------------------------

enum class BracketKind { equal_time, equal_space };

struct BracketTable {
    BracketKind kind{BracketKind::equal_time};
    std::size_t n_vars = 3;
    std::array<std::array<Polynomial, n_local_fields>, n_local_fields> entry{};

    // sets {u_i, u_j} and its antisymmetric partner
    void set(std::size_t i, std::size_t j, const Polynomial& p) {
        entry.at(i).at(j) = p;
        entry.at(j).at(i) = cplx{-1.0} * p;
    }
    // adds p to {u_i, u_j}; used for sensitivity checks
    BracketTable perturbed(std::size_t i, std::size_t j, const Polynomial& p) const {
        BracketTable t = *this;
        t.set(i, j, entry.at(i).at(j) + p);
        return t;
    }

    cplx operator()(std::size_t i, std::size_t j, const LocalVector& u) const {
        if (i >= n_vars || j >= n_vars) throw std::invalid_argument("unknown field pair for this bracket table");
        return entry[i][j](u);
    }
};

namespace detail {
inline Polynomial var(std::size_t i) { return Polynomial::variable(i); }
}  // namespace detail

// {S+, Sz} = S+, {S-, Sz} = -S-, {S+, S-} = -2 Sz
inline BracketTable equal_time_table() {
    using detail::var;
    BracketTable t;
    t.kind = BracketKind::equal_time;
    t.n_vars = 3;
    t.set(0, 2, var(0));
    t.set(1, 2, cplx{-1.0} * var(1));
    t.set(0, 1, cplx{-2.0} * var(2));
    return t;
}

inline BracketTable equal_space_table() {
    using detail::var;
    BracketTable t;
    t.kind = BracketKind::equal_space;
    t.n_vars = 6;
    const Polynomial sp = var(0), sm = var(1), sz = var(2), gp = var(3), gm = var(4), gz = var(5);
    t.set(0, 5, sp * sz);
    t.set(1, 5, sm * sz);
    t.set(2, 3, sp * sz);
    t.set(2, 4, sm * sz);
    t.set(2, 5, cplx{-1.0} * (sp * sm));
    t.set(0, 3, sp * sp);
    t.set(1, 4, sm * sm);
    const Polynomial mixed = cplx{-1.0} * (cplx{2.0} * (sz * sz) + sp * sm);
    t.set(0, 4, mixed);
    t.set(1, 3, mixed);
    t.set(3, 5, sp * gz - gp * sz);
    t.set(4, 5, sm * gz - gm * sz);
    t.set(3, 4, sp * gm - gp * sm);
    return t;
}

inline BracketTable bracket_table(BracketKind k) {
    return k == BracketKind::equal_time ? equal_time_table() : equal_space_table();
}

// linear combination of local fields, e.g. Cartesian components
using LinearField = std::array<cplx, n_local_fields>;

enum class Component { s_x, s_y, s_z, sigma_x, sigma_y, sigma_z };

inline LinearField linear_field(FieldId id) {
    LinearField f{};
    f.at(static_cast<std::size_t>(id)) = 1.0;
    return f;
}

inline LinearField linear_field(Component c) {
    LinearField f{};
    const std::size_t o = (c == Component::sigma_x || c == Component::sigma_y || c == Component::sigma_z) ? 3 : 0;
    switch (c) {
        case Component::s_x:
        case Component::sigma_x: f[o] = 0.5; f[o + 1] = 0.5; break;
        case Component::s_y:
        case Component::sigma_y: f[o] = 1.0 / (2.0 * I_unit); f[o + 1] = -1.0 / (2.0 * I_unit); break;
        default: f[o + 2] = 1.0; break;
    }
    return f;
}

// delta-stripped structure function at a point
inline cplx point_bracket(const BracketTable& t, const LinearField& f, const LinearField& g, const LocalVector& u) {
    cplx s{};
    for (std::size_t i = 0; i < n_local_fields; ++i)
        for (std::size_t j = 0; j < n_local_fields; ++j) {
            if (f[i] == cplx{} || g[j] == cplx{}) continue;
            s += f[i] * g[j] * t(i, j, u);
        }
    return s;
}

inline cplx point_bracket(const BracketTable& t, FieldId f, FieldId g, const LocalVector& u) {
    return t(static_cast<std::size_t>(f), static_cast<std::size_t>(g), u);
}

template <class P>
cplx point_bracket(const BracketTable& t, const LinearField& f, const LinearField& g, const P& p) {
    return point_bracket(t, f, g, local_vector(p));
}

template <class P>
cplx point_bracket(const BracketTable& t, FieldId f, FieldId g, const P& p) {
    return point_bracket(t, f, g, local_vector(p));
}

inline double jacobi_residual(const BracketTable& t, const LocalVector& u) {
    const std::size_t n = t.n_vars;
    std::vector<std::vector<std::vector<cplx>>> dj(n, std::vector<std::vector<cplx>>(n, std::vector<cplx>(n)));
    std::vector<std::vector<cplx>> j(n, std::vector<cplx>(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            j[a][b] = t.entry[a][b](u);
            for (std::size_t l = 0; l < n; ++l) dj[a][b][l] = t.entry[a][b].partial(l)(u);
        }
    double worst = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            for (std::size_t c = b + 1; c < n; ++c) {
                cplx s{};
                for (std::size_t l = 0; l < n; ++l)
                    s += dj[a][b][l] * j[l][c] + dj[b][c][l] * j[l][a] + dj[c][a][l] * j[l][b];
                worst = std::max(worst, std::abs(s));
            }
    return worst;
}

template <class P>
double jacobi_residual(const BracketTable& t, const P& p) {
    return jacobi_residual(t, local_vector(p));
}

// ---- brackets of point functions by forward-mode differentiation --------------

using PointJet = Jet<2>;
using JetVector = std::array<PointJet, n_local_fields>;

template <class F>
LocalVector point_gradient(F&& f, const LocalVector& u, std::size_t n_vars) {
    LocalVector g{};
    for (std::size_t v = 0; v < n_vars; ++v) {
        JetVector x;
        for (std::size_t i = 0; i < n_local_fields; ++i) x[i] = PointJet(u[i]);
        x[v] = PointJet::variable(u[v]);
        g[v] = f(x).deriv(1);
    }
    return g;
}

template <class F, class G>
cplx point_function_bracket(const BracketTable& t, F&& f, G&& g, const LocalVector& u) {
    const LocalVector df = point_gradient(f, u, t.n_vars), dg = point_gradient(g, u, t.n_vars);
    cplx s{};
    for (std::size_t i = 0; i < t.n_vars; ++i)
        for (std::size_t j = 0; j < t.n_vars; ++j) s += df[i] * t(i, j, u) * dg[j];
    return s;
}

// ---- canonical coordinates ----------------------------------------------------

struct CanonicalPoint {
    cplx psi1, psi2, phi1, phi2;
};

// (psi1, psi2, phi1, phi2)
template <class T>
std::array<T, 4> canonical_values(const std::array<T, n_local_fields>& u, cplx c) {
    const T sx = (u[0] + u[1]) * 0.5, sy = (u[0] - u[1]) * (1.0 / (2.0 * I_unit)), sz = u[2];
    const T gx = (u[3] + u[4]) * 0.5, gy = (u[3] - u[4]) * (1.0 / (2.0 * I_unit)), gz = u[5];
    const cplx k = 1.0 / (2.0 * c * c);
    return {sx * sx, sy * sy, (gz / sz - gx / sx) * k, (gz / sz - gy / sy) * k};
}

inline void check_canonical_chart(const LocalVector& u, double eps = 1e-6) {
    const cplx sx = (u[0] + u[1]) * 0.5, sy = (u[0] - u[1]) / (2.0 * I_unit);
    if (std::abs(sx) < eps || std::abs(sy) < eps || std::abs(u[2]) < eps)
        throw std::domain_error("canonical coordinate singularity: a Cartesian spin component vanishes");
}

inline CanonicalPoint canonical_coords(const DualPoint& p, cplx c) {
    const LocalVector u = local_vector(p);
    check_canonical_chart(u);
    const auto v = canonical_values(u, c);
    return {v[0], v[1], v[2], v[3]};
}

// matrix of {q_a, q_b} with q = (psi1, psi2, phi1, phi2), equal-space table
inline std::array<std::array<cplx, 4>, 4> canonical_bracket_matrix(const DualPoint& p, cplx c,
                                                                    const BracketTable& t = equal_space_table()) {
    const LocalVector u = local_vector(p);
    check_canonical_chart(u);
    std::array<LocalVector, 4> grads;
    for (std::size_t a = 0; a < 4; ++a)
        grads[a] = point_gradient([&](const JetVector& x) { return canonical_values(x, c)[a]; }, u, t.n_vars);
    std::array<std::array<cplx, 4>, 4> m{};
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t i = 0; i < t.n_vars; ++i)
                for (std::size_t j = 0; j < t.n_vars; ++j) m[a][b] += grads[a][i] * t(i, j, u) * grads[b][j];
    return m;
}

// ---- functional brackets on grids ---------------------------------------------

namespace detail {
inline Field& nodal(SpinGrid& g, std::size_t v) {
    switch (v) {
        case 0: return g.sp;
        case 1: return g.sm;
        case 2: return g.sz;
        default: throw std::invalid_argument("field not present on a spin grid");
    }
}
inline Field& nodal(DualGrid& g, std::size_t v) {
    switch (v) {
        case 3: return g.gp;
        case 4: return g.gm;
        case 5: return g.gz;
        default: return nodal(static_cast<SpinGrid&>(g), v);
    }
}
template <class Grid>
LocalVector local_at(const Grid& g, std::size_t n) {
    if constexpr (std::is_same_v<Grid, DualGrid>) return local_vector(g.dual_point(n));
    else return local_vector(g.point(n));
}
}  // namespace detail

struct GradientOptions {
    double relative_step = 1e-4;  // scaled by the largest nodal magnitude
};

// dF/du_i(n) for each local field i and node n, by Richardson-extrapolated central differences
template <class Grid, class F>
std::vector<Field> nodal_gradient(F&& functional, const Grid& g, std::size_t n_vars, GradientOptions opt = {}) {
    if constexpr (!std::is_same_v<Grid, DualGrid>)
        if (n_vars > 3) throw std::invalid_argument("equal-space brackets need a dual grid");
    Grid work = g;
    double scale = 0.0;
    for (std::size_t v = 0; v < n_vars; ++v)
        for (const cplx z : detail::nodal(work, v)) scale = std::max(scale, std::abs(z));
    const double h = opt.relative_step * std::max(scale, 1.0);
    auto eval = [&]() {
        const cplx r = functional(static_cast<const Grid&>(work));
        if (!std::isfinite(r.real()) || !std::isfinite(r.imag()))
            throw std::runtime_error("non-finite functional value");
        return r;
    };
    std::vector<Field> grad(n_vars, Field(cplx{}, g.size()));
    for (std::size_t v = 0; v < n_vars; ++v) {
        Field& f = detail::nodal(work, v);
        for (std::size_t n = 0; n < g.size(); ++n) {
            const cplx keep = f[n];
            auto central = [&](double step) {
                f[n] = keep + step;
                const cplx up = eval();
                f[n] = keep - step;
                const cplx down = eval();
                f[n] = keep;
                return (up - down) / (2.0 * step);
            };
            const cplx d1 = central(h), d2 = central(h / 2.0);
            grad[v][n] = (4.0 * d2 - d1) / 3.0;
        }
    }
    return grad;
}

// {F, G} = sum_n dF/du_i(n) J_ij(u_n) dG/du_j(n) / spacing
template <class Grid, class F, class G>
cplx functional_bracket(F&& lhs, G&& rhs, const Grid& g, const BracketTable& t, GradientOptions opt = {}) {
    const auto a = nodal_gradient(lhs, g, t.n_vars, opt);
    const auto b = nodal_gradient(rhs, g, t.n_vars, opt);
    const double dx = g.spec.spacing();
    cplx s{};
    for (std::size_t n = 0; n < g.size(); ++n) {
        const LocalVector u = detail::local_at(g, n);
        for (std::size_t i = 0; i < t.n_vars; ++i)
            for (std::size_t j = 0; j < t.n_vars; ++j) {
                const cplx tij = t.entry[i][j].empty() ? cplx{} : t(i, j, u);
                if (tij != cplx{}) s += a[i][n] * tij * b[j][n];
            }
    }
    return s / dx;
}

// {F, u_j(n)} for every field j and node n
template <class Grid, class F>
std::vector<Field> hamiltonian_flow(F&& charge, const Grid& g, const BracketTable& t, GradientOptions opt = {}) {
    const auto a = nodal_gradient(charge, g, t.n_vars, opt);
    const double dx = g.spec.spacing();
    std::vector<Field> flow(t.n_vars, Field(cplx{}, g.size()));
    for (std::size_t n = 0; n < g.size(); ++n) {
        const LocalVector u = detail::local_at(g, n);
        for (std::size_t i = 0; i < t.n_vars; ++i)
            for (std::size_t j = 0; j < t.n_vars; ++j)
                if (!t.entry[i][j].empty()) flow[j][n] += a[i][n] * t(i, j, u) / dx;
    }
    return flow;
}

template <class Grid, class F>
double hamilton_flow_residual(F&& charge, const Grid& g, const std::vector<Field>& rhs, const BracketTable& t,
                              GradientOptions opt = {}) {
    const auto flow = hamiltonian_flow(charge, g, t, opt);
    if (rhs.size() < t.n_vars) throw std::invalid_argument("rhs must supply every bracket field");
    double worst = 0.0;
    for (std::size_t j = 0; j < t.n_vars; ++j)
        for (std::size_t n = 0; n < g.size(); ++n) worst = std::max(worst, std::abs(flow[j][n] - rhs[j][n]));
    return worst;
}

// integrated Casimirs, usable as functionals
inline cplx casimir_functional(const SpinGrid& g) { return integrate(g.sz * g.sz + g.sp * g.sm, g.spec); }
inline cplx dual_casimir_functional(const DualGrid& g) {
    return integrate(2.0 * g.sz * g.gz + g.sp * g.gm + g.sm * g.gp, g.spec);
}

}  // namespace hmlab
