#include <gtest/gtest.h>

#include <cmath>

#include <hmlab/lax.hpp>

using namespace hmlab;

namespace {

// spin wave S(x + tau): a solution of the chiral base system d_tau S = d_x S
Patch travelling_patch(std::size_t n, double dt, std::size_t rows) {
    Patch p;
    p.row_axis = Axis::time;
    p.row_step = dt;
    GridSpec s;
    s.n_points = n;
    for (std::size_t j = 0; j < rows; ++j) {
        DualGrid g;
        g.spec = s;
        g.c = 1.0;
        g.allocate();
        const double tau = dt * static_cast<double>(j);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = s.coord(i) + tau;
            const double th = 1.2 + 0.3 * std::cos(x), ph = x + 0.2 * std::sin(2.0 * x);
            g.set_point(i, from_cartesian(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
        }
        g.gp = derivative(g.sp, s, 1);
        g.gm = derivative(g.sm, s, 1);
        g.gz = derivative(g.sz, s, 1);
        p.rows.push_back(std::move(g));
    }
    return p;
}

}  // namespace

TEST(Lax, HmSpatialGeneratorIsTracelessWithFixedDeterminant) {
    const SpinPoint s = from_cartesian(0.6, 0.0, 0.8);
    const Mat2 u = u_hm(s, 0.5);
    EXPECT_LT(std::abs(u.trace()), 1e-15);
    // det(S) = -S.S
    EXPECT_LT(std::abs(det(u) + 1.0), 1e-14);
    EXPECT_THROW(u_hm(s, 0.0), PoleError);
}

TEST(Lax, BasePairIsFlatOnTravellingWaves) {
    const double coarse = zero_curvature_residual(travelling_patch(64, 0.7 * 2.0 * std::numbers::pi / 64, 9), PairKind::base, 0.7);
    const double fine = zero_curvature_residual(travelling_patch(128, 0.7 * 2.0 * std::numbers::pi / 128, 9), PairKind::base, 0.7);
    EXPECT_LT(fine, 1e-5);
    EXPECT_GT(std::log2(coarse / fine), 3.5);
}

TEST(Lax, HmPairIsNotFlatOnTheWrongDynamics) {
    EXPECT_GT(zero_curvature_residual(travelling_patch(64, 0.05, 9), PairKind::hm, 0.7), 1e-2);
}

TEST(Lax, PatchesAreValidated) {
    EXPECT_THROW(zero_curvature_residual(travelling_patch(32, 0.1, 4), PairKind::hm, 0.7), std::invalid_argument);
    Patch p = travelling_patch(32, 0.1, 9);
    p.row_step = 0.0;
    EXPECT_THROW(zero_curvature_residual(p, PairKind::hm, 0.7), std::invalid_argument);
}

TEST(Lax, RedundantProxyReproducesTheCommutingPair) {
    // the commuting pair reduces to (u2_dual, v_hm) when the second proxy is eliminated
    const SpinPoint s = from_cartesian(0.6, 0.0, 0.8), g = from_cartesian(0.0, 0.3, 0.0), sd = from_cartesian(0.1, -0.2, 0.05);
    const DualPoint d{s, g.s_plus, g.s_minus, g.s_z};
    const SpinPoint pp = redundant_second_proxy(s, g, sd, 1.0);
    const ExtendedPoint e{s, g.s_plus, g.s_minus, g.s_z, pp.s_plus, pp.s_minus, pp.s_z};
    EXPECT_TRUE(approx_equal(v1_comm(e, 1.0, 0.9), v_hm(d, 1.0, 0.9), 1e-14));
}
