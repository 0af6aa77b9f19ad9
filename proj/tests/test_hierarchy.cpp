#include <gtest/gtest.h>

#include <random>

#include <hmlab/hierarchy.hpp>

using namespace hmlab;

namespace {

GridSpec grid(std::size_t n, Axis a = Axis::space) {
    GridSpec s;
    s.n_points = n;
    s.axis = a;
    return s;
}

BoundaryParams random_k(std::mt19937_64& rng, Side side) {
    std::normal_distribution<double> n;
    return {{n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}, side};
}

}  // namespace

TEST(Hierarchy, NorthPoleChargesAreExact) {
    const cplx c{0.7, 0.2};
    const SpinGrid g = make_spin_data(grid(64), c, DataKind::north_pole, 1, 0.0);
    const ChargeSeries q = charges(g, 2);
    EXPECT_LT(std::abs(q.values.at(-1) - c * g.spec.half_length), 1e-13);
    EXPECT_LT(std::abs(q.values.at(0)), 1e-13);
    EXPECT_LT(std::abs(q.values.at(1)), 1e-13);
}

TEST(Hierarchy, SpaceSeriesMatchesMomentumAndEnergy) {
    const SpinGrid g = make_spin_data(grid(256), 1.0, DataKind::twist, 20240611, 0.1);
    const WZSeries s = wz_recursion(g, 2);
    EXPECT_LT(std::abs(s.z11_at(0) - integrate(momentum_density(g), g.spec)), 1e-8);
    EXPECT_LT(std::abs(s.z11_at(1) - integrate(energy_density(g), g.spec)), 1e-8);
}

TEST(Hierarchy, TimeSeriesMatchesItsDensityAndIsTraceless) {
    const DualGrid d = make_dual_data(grid(256, Axis::time), 1.0, DataKind::twist, 20240613, 0.1);
    const WZSeries s = wz_recursion(d, 2, Convention::euclidean);
    EXPECT_LT(std::abs(s.z11_at(0) - integrate(time_charge_density(d), d.spec)), 1e-8);
    EXPECT_LT(std::abs(s.z11_at(0) + s.z22_at(0)), 1e-8);
    const ChargeSeries q = charges(s);
    EXPECT_LT(std::abs(q.values.at(-2) - d.c * d.spec.half_length), 1e-12);
    EXPECT_LT(std::abs(q.values.at(-1)), 1e-12);
    // the (2,2) variant is not the traceless partner
    EXPECT_GT(std::abs(s.z22_at(0) - integrate(time_charge_density22_alt(d), d.spec)), 1e-3);
}

TEST(Hierarchy, KMaxIsBounded) {
    const SpinGrid g = make_spin_data(grid(32), 1.0, DataKind::twist, 1, 0.1);
    EXPECT_THROW(wz_recursion(g, 5), std::invalid_argument);
    EXPECT_THROW(wz_recursion(g, -1), std::invalid_argument);
}

TEST(Hierarchy, GeneratorSeriesMatchClosedFormsAtRandomPoints) {
    using GK = GeneratorKind;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.3, 1.5), ph(-3.0, 3.0);
    for (int i = 0; i < 30; ++i) {
        const cplx c = i % 2 ? cplx{0.8, 0.3} : cplx{1.0};
        const PointJets p = sample_point_jets(rng, c);
        const cplx lambda = std::polar(u(rng), ph(rng));
        const Convention conv = i % 3 == 0 ? Convention::real : Convention::euclidean;
        for (GK kind : {GK::space_periodic, GK::time_periodic, GK::base_periodic, GK::space_open_bulk, GK::space_open_plus,
                        GK::space_open_minus, GK::time_open_bulk, GK::time_open_plus, GK::time_open_minus}) {
            const Side side = kind == GK::space_open_minus || kind == GK::time_open_minus ? Side::minus : Side::plus;
            const double r = generator_coeffs_exact(p, c, kind, lambda, random_k(rng, side), conv).max_residual();
            EXPECT_LT(r, 1e-10) << "kind " << static_cast<int>(kind) << " sample " << i;
        }
    }
}

TEST(Hierarchy, GridGeneratorsAgreeToDiscretizationAccuracy) {
    const SpinGrid g = make_spin_data(grid(256), 1.0, DataKind::twist, 4, 0.2);
    EXPECT_LT(v_generator_coeffs(g, 17, cplx{0.9, 0.2}).max_residual(), 1e-6);
}

TEST(Hierarchy, AlternativeFormsAreDetected) {
    std::mt19937_64 rng(32);
    double plus = 0.0;
    for (int i = 0; i < 20; ++i) {
        const DualPoint p = sample_point_jets(rng, 1.0).value();
        const BoundaryParams k = random_k(rng, Side::plus);
        plus = std::max(plus, (closed::u_open_plus_alt(p, k, 1.0, 0.7) - closed::u_open_plus(p, k, 1.0, 0.7)).max_abs());
    }
    EXPECT_GT(plus, 1e-2);
}

TEST(Hierarchy, BoundaryMatchingVanishesOnCompatibleDataAndIsLinearInAlpha) {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> n;
    for (int i = 0; i < 10; ++i) {
        const DualPoint p = sample_point_jets(rng, 1.0).value();
        for (Side side : {Side::plus, Side::minus}) {
            BoundaryParams k{0.0, {n(rng), n(rng)}, {n(rng), n(rng)}, 0.0, side};
            k.delta = -(k.beta * p.spin.s_plus + k.gamma * p.spin.s_minus) / (2.0 * p.spin.s_z);
            EXPECT_LT(boundary_matching_mismatch(p, k, side, 1.0).total(), 1e-12);
            EXPECT_LT(time_bc_residual(p.spin, k), 1e-12);
            k.alpha = 1e-3;
            const double a = boundary_matching_mismatch(p, k, side, 1.0).total();
            k.alpha = 1e-4;
            const double b = boundary_matching_mismatch(p, k, side, 1.0).total();
            EXPECT_NEAR(std::log10(a / b), 1.0, 0.05);
        }
    }
}

TEST(Hierarchy, OpenChargesNeedOpenGrids) {
    const SpinGrid g = make_spin_data(grid(32), 1.0, DataKind::twist, 1, 0.1);
    EXPECT_THROW(open_space_charges(g, BoundaryParams{}, BoundaryParams{}), std::invalid_argument);
}
