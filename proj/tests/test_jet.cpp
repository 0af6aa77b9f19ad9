#include <gtest/gtest.h>

#include <hmlab/jet.hpp>

using hmlab::Jet;
using cplx = std::complex<double>;

TEST(Jet, DerivativesOfComposedFunctions) {
    const double x0 = 0.4;
    const auto x = Jet<5>::variable(x0);
    const auto f = exp(sin(x));
    // d/dx e^{sin x} = cos x e^{sin x}; second: (cos^2 x - sin x) e^{sin x}
    const double e = std::exp(std::sin(x0));
    EXPECT_NEAR(std::abs(f.deriv(0) - e), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(f.deriv(1) - std::cos(x0) * e), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(f.deriv(2) - (std::cos(x0) * std::cos(x0) - std::sin(x0)) * e), 0.0, 1e-13);
}

TEST(Jet, SquareRootAndReciprocal) {
    const cplx x0{1.5, 0.3};
    const auto x = Jet<6>::variable(x0);
    const auto r = sqrt(x) * sqrt(x) - x;
    for (std::size_t k = 0; k < 6; ++k) EXPECT_LT(std::abs(r.c[k]), 1e-14);
    const auto q = x * (cplx{1.0} / x);
    EXPECT_LT(std::abs(q.c[0] - 1.0), 1e-15);
    for (std::size_t k = 1; k < 6; ++k) EXPECT_LT(std::abs(q.c[k]), 1e-14);
    // d^3/dx^3 x^{-1} = -6 x^{-4}
    EXPECT_LT(std::abs((cplx{1.0} / x).deriv(3) + 6.0 / std::pow(x0, 4)), 1e-12);
}

TEST(Jet, DerivativeShiftsCoefficients) {
    const auto x = Jet<4>::variable(2.0);
    const auto cube = x * x * x;
    const auto d = derivative(cube);
    EXPECT_NEAR(d.value().real(), 12.0, 1e-14);
    EXPECT_NEAR(d.deriv(1).real(), 12.0, 1e-14);
    EXPECT_NEAR(d.deriv(2).real(), 6.0, 1e-14);
    EXPECT_EQ(d.deriv(3), cplx{});
}

TEST(Jet, TrigIdentity) {
    const auto x = Jet<8>::variable(cplx{0.2, -0.7});
    const auto one = sin(x) * sin(x) + cos(x) * cos(x);
    EXPECT_LT(std::abs(one.c[0] - 1.0), 1e-14);
    for (std::size_t k = 1; k < 8; ++k) EXPECT_LT(std::abs(one.c[k]), 1e-13);
}
