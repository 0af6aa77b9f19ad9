#include <gtest/gtest.h>

#include <random>

#include <hmlab/dynamics.hpp>

using namespace hmlab;

namespace {

GridSpec grid(std::size_t n, Axis a = Axis::space, Boundary b = Boundary::periodic) {
    GridSpec s;
    s.n_points = n;
    s.axis = a;
    s.boundary = b;
    return s;
}

PMZ pmz(double x, double y, double z) {
    const SpinPoint p = from_cartesian(x, y, z);
    return {Field(p.s_plus, 1), Field(p.s_minus, 1), Field(p.s_z, 1)};
}

}  // namespace

TEST(Dynamics, CrossProductInLadderComponents) {
    // e_x x e_y = e_z
    const PMZ r = cross(pmz(1, 0, 0), pmz(0, 1, 0));
    const PMZ e = pmz(0, 0, 1);
    EXPECT_LT(std::abs(r.p[0] - e.p[0]) + std::abs(r.m[0] - e.m[0]) + std::abs(r.z[0] - e.z[0]), 1e-15);
    const PMZ a = pmz(0.3, -1.2, 0.7), b = pmz(2.0, 0.1, -0.4);
    EXPECT_LT(std::abs(dot(cross(a, b), a)[0]), 1e-15);
    EXPECT_LT(std::abs(dot(a, b)[0] - (0.6 - 0.12 - 0.28)), 1e-15);
}

TEST(Dynamics, HigherFlowComponentAndVectorFormsAgree) {
    const DualGrid d = make_dual_data(grid(64, Axis::time), cplx{0.9, 0.1}, DataKind::fourier_random, 9, 0.3);
    for (Convention conv : {Convention::euclidean, Convention::real}) {
        const cplx k = time_scale(conv);
        const Increments a = higher_space_rhs(d, conv);
        const Increments b = higher_space_rhs_vector(spin_of(d), sigma_of(d), along(spin_of(d), d.spec, 1, k),
                                                     along(spin_of(d), d.spec, 2, k * k), along(sigma_of(d), d.spec, 1, k), d.c);
        for (std::size_t f = 0; f < 6; ++f)
            for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LT(std::abs(a[f][i] - b[f][i]), 1e-10);
    }
}

TEST(Dynamics, FlowsPreserveTheCasimirsPointwise) {
    const DualGrid d = make_dual_data(grid(64, Axis::time), 1.0, DataKind::fourier_random, 10, 0.3);
    for (const Increments& r : {dual_space_rhs(d), higher_space_rhs(d)}) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            // d/dx S.S = 2 S.S'
            EXPECT_LT(std::abs(2.0 * d.sz[i] * r[2][i] + d.sp[i] * r[1][i] + d.sm[i] * r[0][i]), 1e-12);
        }
    }
}

TEST(Dynamics, HmRunConservesCasimirAndCharges) {
    const SpinGrid g = make_spin_data(grid(64), 1.0, DataKind::twist, 11, 0.2);
    EvolutionConfig cfg;
    cfg.n_steps = 200;
    cfg.monitor_stride = 50;
    const EvolutionResult r = evolve(lift(g), cfg);
    EXPECT_EQ(r.report.checkpoints.size(), 5u);
    EXPECT_LT(r.report.casimir_drift(), 1e-10);
    EXPECT_LT(r.report.charge_drift(0), 1e-6);
    EXPECT_LT(r.report.transfer_drift(), 1e-5);
}

TEST(Dynamics, ReportJsonLayout) {
    const SpinGrid g = make_spin_data(grid(32), 1.0, DataKind::twist, 12, 0.1);
    EvolutionConfig cfg;
    cfg.n_steps = 4;
    const nlohmann::json j = evolve(lift(g), cfg).report.to_json();
    for (const char* key : {"casimir_drift", "charges", "transfer_scan", "boundary_residuals", "checkpoint_times", "flow"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j["boundary_residuals"].is_null());
    EXPECT_EQ(j["checkpoint_times"].size(), 2u);
    EXPECT_TRUE(j["charges"].contains("0"));
}

TEST(Dynamics, IncompatibleOpenDataRaiseBoundaryViolation) {
    const SpinGrid g = make_spin_data(grid(65, Axis::space, Boundary::open), 1.0, DataKind::twist, 13, 0.1);
    EvolutionConfig cfg;
    cfg.n_steps = 2;
    cfg.boundary = BoundaryPair{{1.0, 0.5, 0.0, 0.0, Side::plus}, {1.0, 0.0, 0.3, 0.0, Side::minus}};
    EXPECT_THROW(evolve(lift(g), cfg), BoundaryViolation);
}

TEST(Dynamics, OversizedStepsRaiseInstability) {
    const SpinGrid g = make_spin_data(grid(64), 1.0, DataKind::fourier_random, 14, 0.3);
    EvolutionConfig cfg;
    cfg.step = 1.0;
    cfg.n_steps = 2000;
    cfg.monitor_charges = cfg.monitor_transfer = false;
    EXPECT_THROW(evolve(lift(g), cfg), InstabilityError);
}

TEST(Dynamics, SpaceClosureSolvesTheBoundaryRelations) {
    std::mt19937_64 rng(15);
    std::normal_distribution<double> n;
    for (int i = 0; i < 50; ++i) {
        const SpinPoint s = sample_point_jets(rng, 1.0).value().spin;
        const BoundaryParams k{{1.0 + 0.2 * n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}};
        for (Side side : {Side::plus, Side::minus}) EXPECT_LT(closure_side(s, k, side, 1.0).residual, 1e-10);
    }
    EXPECT_THROW(closure_side(from_cartesian(0, 0, 1), BoundaryParams{0.0}, Side::plus, 1.0), std::domain_error);
}

TEST(Dynamics, HmPatchesSatisfyTheDualEquations) {
    auto residual = [](std::size_t n) {
        const SpinGrid g = make_spin_data(grid(n), 1.0, DataKind::twist, 16, 0.3);
        const double h = g.spec.spacing();
        return duality_residual(evolved_patch(lift(g), FlowKind::hm, Convention::real, h / 2.0, 7), Convention::real);
    };
    const double a = residual(32), b = residual(64);
    EXPECT_GT(std::log2(a / b), 3.0);
}

TEST(Dynamics, FlowNames) {
    EXPECT_EQ(parse_flow_kind("higher"), FlowKind::higher);
    EXPECT_EQ(to_string(FlowKind::tevo_dual), "tevo_dual");
    EXPECT_THROW(parse_flow_kind("sideways"), std::invalid_argument);
    EXPECT_THROW(evolved_patch(lift(make_spin_data(grid(32), 1.0, DataKind::twist, 1, 0.1)), FlowKind::hm,
                               Convention::euclidean, 0.0, 5),
                 std::invalid_argument);
}
