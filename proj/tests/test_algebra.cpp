#include <gtest/gtest.h>

#include <random>

#include <hmlab/algebra.hpp>

using namespace hmlab;

namespace {

cplx random_spectral(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.2, 2.0), ph(-3.14159, 3.14159);
    return std::polar(mag(rng), ph(rng));
}

cplx gauss(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return {n(rng), n(rng)};
}

}  // namespace

TEST(Algebra, ClassicalYangBaxterHoldsOnRandomPairs) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const cplx l = random_spectral(rng), m = random_spectral(rng);
        if (std::abs(l - m) < 0.05) continue;
        EXPECT_LT(cybe_residual(l, m), 1e-12);
    }
}

TEST(Algebra, ReflectionEquationHoldsForGeneralBoundaryMatrices) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        const BoundaryParams p{gauss(rng), gauss(rng), gauss(rng), gauss(rng), Side::plus};
        const cplx l = random_spectral(rng), m = random_spectral(rng);
        if (std::abs(l - m) < 0.05 || std::abs(l + m) < 0.05) continue;
        EXPECT_LT(reflection_residual(p, l, m), 1e-12);
    }
}

TEST(Algebra, PushThroughHoldsForArbitraryMatrices) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 100; ++i) {
        const Mat2 m = mat2(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        EXPECT_LT(push_through_residual(m, random_spectral(rng)), 1e-13);
    }
}

TEST(Algebra, PerturbedRMatrixBreaksTheIdentities) {
    Mat4 bump = Mat4::unit(0, 1);
    auto bad = [&](cplx l) { return r_matrix(l) + bump * 1e-3; };
    EXPECT_GT(cybe_residual(0.7, cplx{0.3, 0.4}, bad), 1e-4);
    EXPECT_GT(push_through_residual(mat2(1.0, 2.0, 3.0, 4.0), 0.9, bad), 1e-4);
}

TEST(Algebra, PolesAreRejected) {
    EXPECT_THROW(r_matrix(0.0), PoleError);
    EXPECT_THROW(cybe_residual(0.5, 0.5), PoleError);
    EXPECT_THROW(reflection_residual(BoundaryParams{}, 0.5, -0.5), PoleError);
}

TEST(Algebra, RMatrixIsScaledPermutation) {
    const Mat4 r = r_matrix(0.25);
    EXPECT_TRUE(approx_equal(r, swap_matrix() * 2.0, 1e-15));
    // P (A x B) P = B x A
    const Mat2 a = mat2(1.0, 2.0, 3.0, 4.0), b = mat2(0.5, -1.0, 2.0, cplx{0.0, 1.0});
    EXPECT_TRUE(approx_equal(swap_matrix() * kron(a, b) * swap_matrix(), kron(b, a), 1e-14));
}

TEST(Algebra, PartialTraceOfKroneckerProduct) {
    const Mat2 a = mat2(1.0, 2.0, 3.0, cplx{4.0, 1.0}), b = mat2(0.5, -1.0, 2.0, 7.0);
    EXPECT_TRUE(approx_equal(partial_trace_first(kron(a, b)), b * a.trace(), 1e-14));
}

TEST(Algebra, EmbeddingsActOnTheRightLegs) {
    const Mat2 a = mat2(1.0, 2.0, 3.0, 4.0), b = mat2(0.0, 1.0, -1.0, 2.0), I2 = Mat2::identity();
    const Mat4 ab = kron(a, b);
    EXPECT_TRUE(approx_equal(embed(ab, LegPair::ab), kron(ab, I2), 1e-15));
    EXPECT_TRUE(approx_equal(embed(ab, LegPair::bc), kron(I2, ab), 1e-15));
    EXPECT_TRUE(approx_equal(embed(ab, LegPair::ac), kron(kron(a, I2), b), 1e-15));
}

TEST(Algebra, TracelessExponentialHasUnitDeterminant) {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 50; ++i) {
        const cplx a = gauss(rng), b = gauss(rng), c = gauss(rng);
        const Mat2 x = mat2(a, b, c, -a);
        const Mat2 e = expm_traceless(x);
        EXPECT_NEAR(std::abs(det(e) - 1.0), 0.0, 1e-12);
        EXPECT_TRUE(approx_equal(e * expm_traceless(x * -1.0), Mat2::identity(), 1e-11));
    }
    // small-argument branch against the Taylor series
    const Mat2 x = mat2(1e-5, 2e-5, -1e-5, -1e-5);
    const Mat2 taylor = Mat2::identity() + x + x * x * 0.5 + x * x * x * (1.0 / 6.0);
    EXPECT_TRUE(approx_equal(expm_traceless(x), taylor, 1e-15));
}

TEST(Algebra, KMatrixAtZeroIsScalar) {
    const BoundaryParams p{2.0, 1.0, -1.0, 0.5, Side::minus};
    EXPECT_TRUE(approx_equal(k_matrix(p, 0.0), Mat2::identity() * 2.0, 0.0));
    EXPECT_NEAR(std::abs(k_matrix(p, 1.0).trace() - 4.0), 0.0, 1e-15);
}

TEST(Algebra, InverseOfSingularMatrixThrows) {
    EXPECT_THROW(inverse(mat2(1.0, 2.0, 2.0, 4.0)), std::domain_error);
    const Mat2 m = mat2(1.0, 2.0, 3.0, 4.0);
    EXPECT_TRUE(approx_equal(m * inverse(m), Mat2::identity(), 1e-14));
}
