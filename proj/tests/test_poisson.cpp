#include <gtest/gtest.h>

#include <random>

#include <hmlab/hierarchy.hpp>
#include <hmlab/poisson.hpp>

using namespace hmlab;

namespace {

std::vector<DualPoint> valid_points(int n, cplx c, unsigned long seed) {
    std::mt19937_64 rng(seed);
    std::vector<DualPoint> v;
    for (int i = 0; i < n; ++i) v.push_back(sample_point_jets(rng, c).value());
    return v;
}

// S^2 and 2 S.Sigma in the local-vector layout
PointJet casimir_jet(const JetVector& u) { return u[2] * u[2] + u[0] * u[1]; }
PointJet dual_casimir_jet(const JetVector& u) { return 2.0 * u[2] * u[5] + u[0] * u[4] + u[1] * u[3]; }

}  // namespace

TEST(Poisson, JacobiHoldsForBothTables) {
    for (const auto& p : valid_points(100, cplx{0.9, 0.2}, 21)) {
        EXPECT_LT(jacobi_residual(equal_time_table(), p), 1e-12);
        EXPECT_LT(jacobi_residual(equal_space_table(), p), 1e-12);
    }
}

TEST(Poisson, PerturbedTableBreaksJacobi) {
    const BracketTable t = equal_time_table().perturbed(0, 2, cplx{1e-3} * (Polynomial::variable(0) * Polynomial::variable(1)));
    double worst = 0.0;
    for (const auto& p : valid_points(20, 1.0, 22)) worst = std::max(worst, jacobi_residual(t, p));
    EXPECT_GT(worst, 1e-4);
}

TEST(Poisson, TablesAreAntisymmetric) {
    for (const BracketTable& t : {equal_time_table(), equal_space_table()})
        for (const auto& p : valid_points(5, 1.0, 23)) {
            const LocalVector u = local_vector(p);
            for (std::size_t i = 0; i < t.n_vars; ++i)
                for (std::size_t j = 0; j < t.n_vars; ++j) EXPECT_LT(std::abs(t(i, j, u) + t(j, i, u)), 1e-15);
        }
    EXPECT_THROW(equal_time_table()(0, 4, LocalVector{}), std::invalid_argument);
}

TEST(Poisson, CasimirsAreCentral) {
    for (const auto& p : valid_points(30, cplx{1.1, -0.3}, 24)) {
        const LocalVector u = local_vector(p);
        for (std::size_t f = 0; f < 6; ++f) {
            auto coord = [f](const JetVector& x) { return x[f]; };
            if (f < 3) EXPECT_LT(std::abs(point_function_bracket(equal_time_table(), casimir_jet, coord, u)), 1e-12);
            EXPECT_LT(std::abs(point_function_bracket(equal_space_table(), casimir_jet, coord, u)), 1e-12);
            EXPECT_LT(std::abs(point_function_bracket(equal_space_table(), dual_casimir_jet, coord, u)), 1e-12);
        }
    }
}

TEST(Poisson, CanonicalCoordinatesAreDarboux) {
    std::mt19937_64 rng(25);
    int tested = 0;
    while (tested < 50) {
        const DualPoint p = sample_point_jets(rng, 1.0).value();
        const auto [sx, sy, sz] = cartesian(p.spin);
        if (std::abs(sx) < 0.05 || std::abs(sy) < 0.05 || std::abs(sz) < 0.05) continue;
        ++tested;
        const auto m = canonical_bracket_matrix(p, 1.0);
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b) {
                cplx expected{};
                if (b == a + 2) expected = 1.0;
                if (a == b + 2) expected = -1.0;
                EXPECT_LT(std::abs(m[a][b] - expected), 1e-10) << a << "," << b;
            }
    }
}

TEST(Poisson, CanonicalChartSingularityIsReported) {
    const DualPoint pole{{0.0, 0.0, 1.0}, 0.0, 0.0, 0.0};
    EXPECT_THROW(canonical_coords(pole, 1.0), std::domain_error);
}

TEST(Poisson, FunctionalBracketIsAntisymmetricAndCasimirCentral) {
    GridSpec s;
    s.n_points = 32;
    const SpinGrid g = make_spin_data(s, 1.0, DataKind::twist, 3, 0.3);
    auto g0 = [](const SpinGrid& x) { return charges(x, 2).values.at(0); };
    auto g1 = [](const SpinGrid& x) { return charges(x, 2).values.at(1); };
    const cplx ab = functional_bracket(g0, g1, g, equal_time_table());
    const cplx ba = functional_bracket(g1, g0, g, equal_time_table());
    EXPECT_LT(std::abs(ab + ba), 1e-8);
    auto cas = [](const SpinGrid& x) { return casimir_functional(x); };
    EXPECT_LT(std::abs(functional_bracket(cas, g1, g, equal_time_table())), 1e-8);
}

TEST(Poisson, ChargesInvolutionImprovesUnderRefinement) {
    auto bracket = [](std::size_t n) {
        GridSpec s;
        s.n_points = n;
        const SpinGrid g = make_spin_data(s, 1.0, DataKind::twist, 3, 0.3);
        auto g0 = [](const SpinGrid& x) { return charges(x, 2).values.at(0); };
        auto g1 = [](const SpinGrid& x) { return charges(x, 2).values.at(1); };
        return std::abs(functional_bracket(g0, g1, g, equal_time_table()));
    };
    const double coarse = bracket(32), fine = bracket(64);
    EXPECT_GT(std::log2(coarse / fine), 2.0);
}
