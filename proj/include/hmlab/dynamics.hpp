#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "algebra.hpp"
#include "fields.hpp"
#include "hierarchy.hpp"
#include "lax.hpp"
#include "monodromy.hpp"

namespace hmlab {

using Increments = std::vector<Field>;  // 3 (spin) or 6 (spin + Sigma) fields

// ---- vector algebra in (+, -, z) components ------------------------------------

struct PMZ {
    Field p, m, z;
};

inline PMZ cross(const PMZ& a, const PMZ& b) {
    return {I_unit * (a.z * b.p - a.p * b.z), -I_unit * (a.z * b.m - a.m * b.z),
            0.5 * I_unit * (a.p * b.m - a.m * b.p)};
}
inline Field dot(const PMZ& a, const PMZ& b) { return a.z * b.z + 0.5 * (a.p * b.m + a.m * b.p); }
inline PMZ operator+(const PMZ& a, const PMZ& b) { return {a.p + b.p, a.m + b.m, a.z + b.z}; }
inline PMZ operator-(const PMZ& a, const PMZ& b) { return {a.p - b.p, a.m - b.m, a.z - b.z}; }
inline PMZ operator*(const PMZ& a, cplx s) { return {a.p * s, a.m * s, a.z * s}; }
inline PMZ operator*(const PMZ& a, const Field& s) { return {a.p * s, a.m * s, a.z * s}; }

inline PMZ spin_of(const SpinGrid& g) { return {g.sp, g.sm, g.sz}; }
inline PMZ sigma_of(const DualGrid& g) { return {g.gp, g.gm, g.gz}; }
inline PMZ along(const PMZ& v, const GridSpec& spec, int order, cplx scale = 1.0) {
    return {derivative(v.p, spec, order) * scale, derivative(v.m, spec, order) * scale,
            derivative(v.z, spec, order) * scale};
}

// ---- space-like open boundary closure -------------------------------------------

struct ClosureSide {
    SpinPoint slope{};          // (S+', S-', Sz') at the boundary point
    double condition = 0.0;     // singular-value ratio of the stacked system
    double residual = 0.0;      // post-solve violation of the three bilinear relations
};

struct BoundaryClosure {
    ClosureSide minus, plus;
};

// boundary slopes solving the bilinear relations plus Casimir tangency, least squares via SVD
inline ClosureSide closure_side(const SpinPoint& s, const BoundaryParams& k, Side side, cplx c) {
    if (std::abs(k.alpha) < pole_epsilon) throw std::domain_error("space-like closure needs alpha != 0");
    const double sg = side == Side::plus ? 1.0 : -1.0;
    const cplx c2 = c * c, a = k.alpha, sp = s.s_plus, sm = s.s_minus, sz = s.s_z;
    Eigen::Matrix<cplx, 4, 3> m;
    Eigen::Matrix<cplx, 4, 1> r;
    m << -a * sm, a * sp, 0.0,
         -a * sz, 0.0, a * sp,
         0.0, -a * sz, a * sm,
         sm / 2.0, sp / 2.0, sz;
    r << sg * c2 * (k.beta * sp - k.gamma * sm), sg * c2 * (k.delta * sp - k.gamma * sz),
        sg * c2 * (k.delta * sm - k.beta * sz), 0.0;
    Eigen::JacobiSVD<Eigen::Matrix<cplx, 4, 3>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix<cplx, 3, 1> x = svd.solve(r);
    ClosureSide out;
    out.slope = {x(0), x(1), x(2)};
    const auto sv = svd.singularValues();
    out.condition = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
    out.residual = space_bc_residual(s, out.slope, k, side, c);
    return out;
}

inline BoundaryClosure open_boundary_closure(const SpinGrid& g, const BoundaryParams& kplus,
                                             const BoundaryParams& kminus) {
    if (g.spec.boundary != Boundary::open) throw std::invalid_argument("closure needs an open grid");
    return {closure_side(g.point(0), kminus, Side::minus, g.c),
            closure_side(g.point(g.size() - 1), kplus, Side::plus, g.c)};
}

// second derivative with known end slopes: f''(0) ~ (-415/72 f0 + 8 f1 - 3 f2 + 8/9 f3 - 1/8 f4)/h^2 - 25/6 f'(0)/h
inline Field second_derivative_with_slopes(const Field& f, const GridSpec& spec, cplx left, cplx right) {
    Field d = derivative(f, spec, 2);
    const double h = spec.spacing();
    const std::size_t n = f.size();
    auto end = [&](auto at, cplx slope) {
        return (-415.0 / 72.0 * at(0) + 8.0 * at(1) - 3.0 * at(2) + 8.0 / 9.0 * at(3) - 0.125 * at(4)) / (h * h) -
               25.0 / 6.0 * slope / h;
    };
    d[0] = end([&](std::size_t k) { return f[k]; }, left);
    d[n - 1] = end([&](std::size_t k) { return f[n - 1 - k]; }, -right);
    return d;
}

// ---- flows -------------------------------------------------------------------------

// component equations; the real convention divides by kappa = i
inline Increments hm_time_rhs(const SpinGrid& g, Convention conv = Convention::real,
                              const std::optional<std::pair<BoundaryParams, BoundaryParams>>& open_k = std::nullopt) {
    Field dpp, dmm, dzz;
    if (g.spec.boundary == Boundary::open && open_k) {
        const BoundaryClosure cl = open_boundary_closure(g, open_k->first, open_k->second);
        dpp = second_derivative_with_slopes(g.sp, g.spec, cl.minus.slope.s_plus, cl.plus.slope.s_plus);
        dmm = second_derivative_with_slopes(g.sm, g.spec, cl.minus.slope.s_minus, cl.plus.slope.s_minus);
        dzz = second_derivative_with_slopes(g.sz, g.spec, cl.minus.slope.s_z, cl.plus.slope.s_z);
    } else {
        dpp = derivative(g.sp, g.spec, 2);
        dmm = derivative(g.sm, g.spec, 2);
        dzz = derivative(g.sz, g.spec, 2);
    }
    const cplx f = 1.0 / (g.c * g.c * time_scale(conv));
    return {(g.sp * dzz - dpp * g.sz) * f, (g.sm * dzz - dmm * g.sz) * (-f), (dpp * g.sm - g.sp * dmm) * (0.5 * f)};
}

namespace detail {

// S' = Sigma with Sigma' from the dual equations; `dot` is the derivative across the grid
inline Increments dual_core(const DualGrid& g, const PMZ& sdot) {
    const cplx c2 = g.c * g.c;
    const Field q = (g.gp * g.gm + g.gz * g.gz) / c2;
    return {g.gp, g.gm, g.gz, (g.sp * sdot.z - sdot.p * g.sz) - g.sp * q, -(g.sm * sdot.z - sdot.m * g.sz) - g.sm * q,
            0.5 * (sdot.p * g.sm - g.sp * sdot.m) - g.sz * q};
}

inline Increments higher_core(const DualGrid& g, const PMZ& sd, const PMZ& sdd, const PMZ& gd) {
    const cplx c = g.c, c2 = c * c, c4 = c2 * c2, c6 = c4 * c2;
    const Field q = g.gz * g.gz + g.gp * g.gm;
    const Field sdot2 = sd.z * sd.z + sd.p * sd.m;
    const Field common = sdot2 / c2 - q * q / (2.0 * c6);
    const Field xp = sd.p * g.sm - g.sp * sd.m;  // (Sdot+ S- - S+ Sdot-)
    Increments r(6);
    r[0] = (g.sp * gd.z - g.sz * gd.p) / c2 + q * g.gp / (2.0 * c4);
    r[1] = (g.sz * gd.m - g.sm * gd.z) / c2 + q * g.gm / (2.0 * c4);
    r[2] = (g.sm * gd.p - g.sp * gd.m) / (2.0 * c2) + q * g.gz / (2.0 * c4);
    r[3] = (g.gp * gd.z - gd.p * g.gz) / c2 + sdd.p + g.sp * common +
           (g.gz * g.gz * (sd.p * g.sz - g.sp * sd.z) + g.gp * g.gp * (sd.m * g.sz - g.sm * sd.z) + g.gp * g.gz * xp) /
               (2.0 * c4);
    r[4] = (gd.m * g.gz - g.gm * gd.z) / c2 + sdd.m + g.sm * common +
           (g.gz * g.gz * (g.sm * sd.z - sd.m * g.sz) + g.gm * g.gm * (g.sp * sd.z - sd.p * g.sz) + g.gm * g.gz * xp) /
               (2.0 * c4);
    r[5] = (gd.p * g.gm - g.gp * gd.m) / (2.0 * c2) + sdd.z + g.sz * common +
           (g.gm * g.gz * (g.sp * sd.z - sd.p * g.sz) + g.gp * g.gz * (sd.m * g.sz - g.sm * sd.z) +
            0.5 * (g.gz * g.gz - g.gp * g.gm) * xp) /
               (2.0 * c4);
    return r;
}

inline Increments scaled(Increments r, cplx s) {
    for (auto& f : r) f *= s;
    return r;
}

}  // namespace detail

// x-evolution of a grid laid along the time axis; overdots are kappa d/dtau
inline Increments dual_space_rhs(const DualGrid& g, Convention conv = Convention::euclidean) {
    return detail::dual_core(g, along(spin_of(g), g.spec, 1, time_scale(conv)));
}

inline Increments higher_space_rhs(const DualGrid& g, Convention conv = Convention::euclidean) {
    const cplx k = time_scale(conv);
    return detail::higher_core(g, along(spin_of(g), g.spec, 1, k), along(spin_of(g), g.spec, 2, k * k),
                               along(sigma_of(g), g.spec, 1, k));
}

// compact vector form of the higher flow, used as an independent cross-check
inline Increments higher_space_rhs_vector(const PMZ& s, const PMZ& g, const PMZ& sd, const PMZ& sdd, const PMZ& gd,
                                          cplx c) {
    const cplx c2 = c * c, c4 = c2 * c2, c6 = c4 * c2;
    const Field q = dot(g, g);
    const PMZ sxsd = cross(s, sd);
    const PMZ ds = cross(s, gd) * (I_unit / c2) + g * (q / (2.0 * c4));
    const PMZ dg = cross(g, gd) * (I_unit / c2) - sxsd * (q * (I_unit / (2.0 * c4))) + sdd +
                   s * (dot(sd, sd) / c2 - q * q / (2.0 * c6)) + g * (dot(g, sxsd) * (I_unit / c4));
    return {ds.p, ds.m, ds.z, dg.p, dg.m, dg.z};
}

// compact vector form of the dual flow: S'' = i S x Sdot - S |S'|^2 / c^2
inline PMZ dual_space_second_derivative(const PMZ& s, const PMZ& sprime, const PMZ& sd, cplx c) {
    return cross(s, sd) * I_unit - s * (dot(sprime, sprime) / (c * c));
}

enum class SwappedKind { tevo_dual, tevo_higher };

// space and time exchanged: a grid along x evolved in t, primes in place of overdots
inline Increments swapped_flows(const DualGrid& g, SwappedKind which, Convention conv = Convention::euclidean) {
    const cplx inv_k = 1.0 / time_scale(conv);
    if (which == SwappedKind::tevo_dual) return detail::scaled(detail::dual_core(g, along(spin_of(g), g.spec, 1)), inv_k);
    return detail::scaled(detail::higher_core(g, along(spin_of(g), g.spec, 1), along(spin_of(g), g.spec, 2),
                                              along(sigma_of(g), g.spec, 1)),
                          inv_k);
}

// ---- evolution -----------------------------------------------------------------

enum class FlowKind { hm, dual, higher, tevo_dual, tevo_higher };

inline FlowKind parse_flow_kind(const std::string& s) {
    if (s == "hm") return FlowKind::hm;
    if (s == "dual") return FlowKind::dual;
    if (s == "higher") return FlowKind::higher;
    if (s == "tevo_dual") return FlowKind::tevo_dual;
    if (s == "tevo_higher") return FlowKind::tevo_higher;
    throw std::invalid_argument("unknown flow kind: " + s);
}

inline std::string to_string(FlowKind k) {
    switch (k) {
        case FlowKind::hm: return "hm";
        case FlowKind::dual: return "dual";
        case FlowKind::higher: return "higher";
        case FlowKind::tevo_dual: return "tevo_dual";
        case FlowKind::tevo_higher: return "tevo_higher";
    }
    return "?";
}

inline bool flow_has_sigma(FlowKind k) { return k != FlowKind::hm; }

using BoundaryPair = std::pair<BoundaryParams, BoundaryParams>;  // (plus, minus)

struct EvolutionConfig {
    FlowKind flow = FlowKind::hm;
    double step = 0.0;  // 0: flow default
    long n_steps = 100;
    Convention convention = Convention::real;
    long monitor_stride = 0;  // 0: start and end only
    bool monitor_casimirs = true, monitor_charges = true, monitor_transfer = true, monitor_boundary = true;
    int charge_k_max = 2;
    std::vector<cplx> scan_lambdas;  // empty: defaults for the monitored orientation
    std::optional<BoundaryPair> boundary;
    double rhs_perturbation = 0.0;  // sensitivity hook: added to the last increment field
    bool keep_trajectory = false;
    double bc_tolerance = 1e-8;
    TransportOptions transport{};
};

// step <= 0.2 dx^2 for second-order flows
inline double default_step(FlowKind k, const GridSpec& spec) {
    const double h = spec.spacing();
    switch (k) {
        case FlowKind::hm: return 0.1 * h * h;
        case FlowKind::dual:
        case FlowKind::tevo_dual: return 0.1 * h;
        default: return 0.05 * h * h;
    }
}

struct BoundaryViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    long step = 0;
    double time = 0.0;
    double casimir_deviation = 0.0;
    double dual_casimir_deviation = 0.0;
    std::map<int, cplx> charges;
    std::vector<cplx> scan_log_values;
    std::optional<std::pair<double, double>> boundary_residuals;  // (plus, minus)
    std::optional<std::pair<cplx, cplx>> log_branches;
};

struct ConservationReport {
    std::string flow;
    std::string convention;
    double step = 0.0;
    long n_steps = 0;
    std::vector<cplx> scan_lambdas;
    std::vector<Checkpoint> checkpoints;

    double casimir_drift() const {
        double m = 0.0;
        for (const auto& c : checkpoints) m = std::max(m, c.casimir_deviation);
        return m;
    }
    double dual_casimir_drift() const {
        double m = 0.0;
        for (const auto& c : checkpoints) m = std::max(m, c.dual_casimir_deviation);
        return m;
    }
    // max_t |G(t) - G(0)| / max(|G(0)|, 1)
    std::map<int, double> charge_drifts() const {
        std::map<int, double> d;
        if (checkpoints.empty()) return d;
        for (const auto& [k, g0] : checkpoints.front().charges) {
            double m = 0.0;
            for (const auto& c : checkpoints) m = std::max(m, std::abs(c.charges.at(k) - g0) / std::max(std::abs(g0), 1.0));
            d[k] = m;
        }
        return d;
    }
    double charge_drift(int k) const { return charge_drifts().at(k); }
    double transfer_drift() const {
        double m = 0.0;
        if (checkpoints.empty()) return m;
        const auto& a = checkpoints.front().scan_log_values;
        for (const auto& c : checkpoints)
            for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(complex_expm1(c.scan_log_values[i] - a[i])));
        return m;
    }
    std::optional<double> boundary_residual_max() const {
        std::optional<double> m;
        for (const auto& c : checkpoints)
            if (c.boundary_residuals)
                m = std::max(m.value_or(0.0), std::max(c.boundary_residuals->first, c.boundary_residuals->second));
        return m;
    }

    nlohmann::json to_json() const {
        using nlohmann::json;
        auto cj = [](cplx z) { return json::array({z.real(), z.imag()}); };
        json j;
        j["flow"] = flow;
        j["convention"] = convention;
        j["step"] = step;
        j["n_steps"] = n_steps;
        j["casimir_drift"] = {{"spin", casimir_drift()}, {"dual", dual_casimir_drift()}};
        json ch = json::object();
        const auto drifts = charge_drifts();
        for (const auto& [k, d] : drifts) {
            json series = json::array();
            for (const auto& c : checkpoints) series.push_back(cj(c.charges.at(k)));
            ch[std::to_string(k)] = {{"relative_drift", d}, {"values", series}};
        }
        j["charges"] = ch;
        json ts;
        ts["lambdas"] = json::array();
        for (const cplx l : scan_lambdas) ts["lambdas"].push_back(cj(l));
        ts["log_values"] = json::array();
        for (const auto& c : checkpoints) {
            json row = json::array();
            for (const cplx v : c.scan_log_values) row.push_back(cj(v));
            ts["log_values"].push_back(row);
        }
        ts["relative_drift"] = transfer_drift();
        j["transfer_scan"] = ts;
        json br;
        if (const auto m = boundary_residual_max()) {
            br["max"] = *m;
            br["values"] = json::array();
            for (const auto& c : checkpoints)
                if (c.boundary_residuals)
                    br["values"].push_back({{"plus", c.boundary_residuals->first}, {"minus", c.boundary_residuals->second}});
        } else {
            br = nullptr;
        }
        j["boundary_residuals"] = br;
        json times = json::array();
        for (const auto& c : checkpoints) times.push_back(c.time);
        j["checkpoint_times"] = times;
        return j;
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DualGrid> states;
};

struct EvolutionResult {
    DualGrid final_state;
    Trajectory trajectory;
    ConservationReport report;
};

namespace detail {

inline Increments flow_rhs(const DualGrid& g, const EvolutionConfig& cfg) {
    Increments r;
    switch (cfg.flow) {
        case FlowKind::hm: r = hm_time_rhs(g, cfg.convention, cfg.boundary); break;
        case FlowKind::dual: r = dual_space_rhs(g, cfg.convention); break;
        case FlowKind::higher: r = higher_space_rhs(g, cfg.convention); break;
        case FlowKind::tevo_dual: r = swapped_flows(g, SwappedKind::tevo_dual, cfg.convention); break;
        case FlowKind::tevo_higher: r = swapped_flows(g, SwappedKind::tevo_higher, cfg.convention); break;
    }
    if (cfg.rhs_perturbation != 0.0) r.back() += cfg.rhs_perturbation;
    return r;
}

inline std::array<Field*, 6> slots(DualGrid& g) { return {&g.sp, &g.sm, &g.sz, &g.gp, &g.gm, &g.gz}; }

inline DualGrid axpy(const DualGrid& g, const Increments& k, double h) {
    DualGrid r = g;
    auto s = slots(r);
    for (std::size_t i = 0; i < k.size(); ++i) *s[i] += k[i] * h;
    return r;
}

inline bool finite(const DualGrid& g, std::size_t nf) {
    auto s = slots(const_cast<DualGrid&>(g));
    for (std::size_t i = 0; i < nf; ++i)
        for (const cplx z : *s[i])
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

// orientation whose transfer matrix the flow conserves, and the convention used along the grid
inline Orientation monitored_orientation(FlowKind k) { return k == FlowKind::hm ? Orientation::space : Orientation::time; }
inline Convention grid_convention(const EvolutionConfig& cfg) {
    return (cfg.flow == FlowKind::dual || cfg.flow == FlowKind::higher) ? cfg.convention : Convention::euclidean;
}

}  // namespace detail

inline Checkpoint measure(const DualGrid& g, const EvolutionConfig& cfg, const std::vector<cplx>& lambdas,
                          const std::optional<std::pair<cplx, cplx>>& branches) {
    Checkpoint cp;
    const bool dual = flow_has_sigma(cfg.flow);
    const Orientation o = detail::monitored_orientation(cfg.flow);
    const bool open = g.spec.boundary == Boundary::open;
    const Convention gc = detail::grid_convention(cfg);
    if (cfg.monitor_casimirs) {
        cp.casimir_deviation = g.casimir_deviation();
        if (dual) cp.dual_casimir_deviation = g.dual_casimir_deviation();
    }
    if (cfg.monitor_charges) {
        if (!open) {
            cp.charges = (o == Orientation::space) ? charges(static_cast<const SpinGrid&>(g), cfg.charge_k_max).values
                                                   : charges(g, cfg.charge_k_max, gc).values;
        } else if (cfg.boundary) {
            if (o == Orientation::space) {
                if (std::abs(cfg.boundary->first.alpha) > pole_epsilon && std::abs(cfg.boundary->second.alpha) > pole_epsilon)
                    cp.charges = open_space_charges(g, cfg.boundary->first, cfg.boundary->second).values;
            } else {
                const ChargeSeries q = open_time_charges(g, cfg.boundary->first, cfg.boundary->second, gc, branches);
                cp.charges = q.values;
                cp.log_branches = q.boundary_terms;
            }
        }
    }
    if (cfg.monitor_transfer && !lambdas.empty()) {
        TransportOptions topt = cfg.transport;
        topt.convention = gc;
        const TransferScan s = open && cfg.boundary
                                   ? transfer_scan(g, o, lambdas, topt, &cfg.boundary->first, &cfg.boundary->second)
                                   : transfer_scan(g, o, lambdas, topt);
        cp.scan_log_values = s.log_values;
    }
    if (cfg.monitor_boundary && open && cfg.boundary) {
        cp.boundary_residuals = std::make_pair(boundary_residual(g, o, Side::plus, cfg.boundary->first),
                                               boundary_residual(g, o, Side::minus, cfg.boundary->second));
    }
    return cp;
}

inline EvolutionResult evolve(const DualGrid& initial, const EvolutionConfig& cfg) {
    initial.spec.validate();
    if (cfg.n_steps < 0) throw std::invalid_argument("n_steps must be non-negative");
    const double h = cfg.step > 0.0 ? cfg.step : default_step(cfg.flow, initial.spec);
    const std::size_t nf = flow_has_sigma(cfg.flow) ? 6 : 3;
    const bool open = initial.spec.boundary == Boundary::open;
    const Orientation o = detail::monitored_orientation(cfg.flow);
    if (open && cfg.boundary) {
        const double r = std::max(boundary_residual(initial, o, Side::plus, cfg.boundary->first),
                                  boundary_residual(initial, o, Side::minus, cfg.boundary->second));
        if (r > cfg.bc_tolerance)
            throw BoundaryViolation("initial data violate the boundary conditions: residual " + std::to_string(r));
    }
    std::vector<cplx> lambdas = cfg.scan_lambdas.empty() ? default_scan_lambdas(o) : cfg.scan_lambdas;

    EvolutionResult res;
    res.report.flow = to_string(cfg.flow);
    res.report.convention = cfg.convention == Convention::real ? "real" : "euclidean";
    res.report.step = h;
    res.report.n_steps = cfg.n_steps;
    res.report.scan_lambdas = cfg.monitor_transfer ? lambdas : std::vector<cplx>{};

    DualGrid g = initial;
    std::optional<std::pair<cplx, cplx>> branches;
    auto checkpoint = [&](long step) {
        Checkpoint cp = measure(g, cfg, lambdas, branches);
        cp.step = step;
        cp.time = h * static_cast<double>(step);
        if (cp.log_branches) branches = cp.log_branches;
        res.report.checkpoints.push_back(std::move(cp));
        if (cfg.keep_trajectory) {
            res.trajectory.times.push_back(h * static_cast<double>(step));
            res.trajectory.states.push_back(g);
        }
    };
    checkpoint(0);
    for (long s = 1; s <= cfg.n_steps; ++s) {
        const Increments k1 = detail::flow_rhs(g, cfg);
        const Increments k2 = detail::flow_rhs(detail::axpy(g, k1, h / 2.0), cfg);
        const Increments k3 = detail::flow_rhs(detail::axpy(g, k2, h / 2.0), cfg);
        const Increments k4 = detail::flow_rhs(detail::axpy(g, k3, h), cfg);
        auto sl = detail::slots(g);
        for (std::size_t i = 0; i < nf; ++i) *sl[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        if (!detail::finite(g, nf))
            throw InstabilityError("non-finite state at step " + std::to_string(s) + " (t = " +
                                   std::to_string(h * static_cast<double>(s)) + "); reduce the step size");
        const bool last = s == cfg.n_steps;
        if (last || (cfg.monitor_stride > 0 && s % cfg.monitor_stride == 0)) checkpoint(s);
    }
    res.final_state = std::move(g);
    return res;
}

// a spin grid lifted to a dual grid with zero Sigma
inline DualGrid lift(const SpinGrid& g) {
    DualGrid d;
    static_cast<SpinGrid&>(d) = g;
    d.gp = Field(cplx{}, g.size());
    d.gm = Field(cplx{}, g.size());
    d.gz = Field(cplx{}, g.size());
    return d;
}

// ---- patches from evolution ----------------------------------------------------------

// n_rows snapshots spaced by row_step; grids along x give time rows and vice versa
inline Patch evolved_patch(const DualGrid& initial, FlowKind flow, Convention conv, double row_step, std::size_t n_rows,
                           double rhs_perturbation = 0.0) {
    if (n_rows < 2 || !(row_step > 0.0)) throw std::invalid_argument("patch needs >= 2 rows and a positive row step");
    const long sub = std::max(1L, static_cast<long>(std::ceil(row_step / default_step(flow, initial.spec))));
    EvolutionConfig cfg;
    cfg.flow = flow;
    cfg.convention = conv;
    cfg.step = row_step / static_cast<double>(sub);
    cfg.n_steps = sub * static_cast<long>(n_rows - 1);
    cfg.monitor_stride = sub;
    cfg.monitor_casimirs = cfg.monitor_charges = cfg.monitor_transfer = cfg.monitor_boundary = false;
    cfg.keep_trajectory = true;
    cfg.rhs_perturbation = rhs_perturbation;
    EvolutionResult r = evolve(initial, cfg);
    Patch p;
    p.row_axis = initial.spec.axis == Axis::space ? Axis::time : Axis::space;
    p.row_step = row_step;
    p.rows = std::move(r.trajectory.states);
    if (flow == FlowKind::hm)
        for (DualGrid& g : p.rows) {
            g.gp = derivative(g.sp, g.spec, 1);
            g.gm = derivative(g.sm, g.spec, 1);
            g.gz = derivative(g.sz, g.spec, 1);
        }
    return p;
}

// |S'' - (i S x Sdot - S |S'|^2 / c^2)| on a time-row patch of spatial grids, Sdot = kappa d_tau S
inline double duality_residual(const Patch& p, Convention conv) {
    if (p.row_axis != Axis::time) throw std::invalid_argument("duality check expects rows stacked in time");
    const auto sdot = patch_time_derivative(p);
    const cplx kappa = time_scale(conv);
    double worst = 0.0;
    for (std::size_t j = 2; j + 2 < p.n_rows(); ++j) {
        const DualGrid& g = p.rows[j];
        const PMZ s = spin_of(g);
        const PMZ sd{sdot[j][0] * kappa, sdot[j][1] * kappa, sdot[j][2] * kappa};
        const PMZ r = along(s, g.spec, 2) - dual_space_second_derivative(s, along(s, g.spec, 1), sd, g.c);
        for (const Field* f : {&r.p, &r.m, &r.z})
            for (const cplx z : *f) worst = std::max(worst, std::abs(z));
    }
    return worst;
}

}  // namespace hmlab
