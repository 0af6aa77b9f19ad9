#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <hmlab/fields.hpp>

using namespace hmlab;

namespace {

GridSpec grid(std::size_t n, Boundary b = Boundary::periodic) {
    GridSpec s;
    s.n_points = n;
    s.boundary = b;
    return s;
}

double derivative_error(std::size_t n, Boundary b, int order) {
    const GridSpec s = grid(n, b);
    Field f(n), exact(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = s.coord(i);
        f[i] = std::exp(std::sin(x));
        exact[i] = order == 1 ? std::cos(x) * std::exp(std::sin(x))
                              : (std::cos(x) * std::cos(x) - std::sin(x)) * std::exp(std::sin(x));
    }
    const Field d = derivative(f, s, order);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(d[i] - exact[i]));
    return e;
}

}  // namespace

TEST(Fields, PeriodicDerivativesConvergeAtFourthOrder) {
    for (int order : {1, 2}) {
        const double e1 = derivative_error(64, Boundary::periodic, order), e2 = derivative_error(128, Boundary::periodic, order);
        EXPECT_GT(std::log2(e1 / e2), 3.7) << "order " << order;
    }
}

TEST(Fields, OpenDerivativesConverge) {
    for (int order : {1, 2}) {
        const double e1 = derivative_error(65, Boundary::open, order), e2 = derivative_error(129, Boundary::open, order);
        EXPECT_GT(std::log2(e1 / e2), 3.0) << "order " << order;
    }
}

TEST(Fields, DerivativeRejectsBadOrders) {
    Field f(cplx{1.0}, 16);
    EXPECT_THROW(derivative(f, grid(16), 3), std::invalid_argument);
}

TEST(Fields, IntegrationRules) {
    // periodic trapezoid is spectrally accurate for smooth periodic data
    const GridSpec p = grid(64);
    Field f(64);
    for (std::size_t i = 0; i < 64; ++i) f[i] = std::exp(std::cos(p.coord(i)));
    EXPECT_NEAR(integrate(f, p).real(), 2.0 * std::numbers::pi * std::cyl_bessel_i(0.0, 1.0), 1e-12);
    // open Simpson, both parities of the interval count
    for (std::size_t n : {65u, 66u}) {
        const GridSpec o = grid(n, Boundary::open);
        Field g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(o.coord(i), 2);
        EXPECT_NEAR(integrate(g, o).real(), 2.0 * std::pow(std::numbers::pi, 3) / 3.0, 1e-9);
    }
}

TEST(Fields, GeneratedDataLiesOnTheSphere) {
    for (DataKind k : {DataKind::north_pole, DataKind::twist, DataKind::fourier_random, DataKind::bump}) {
        const SpinGrid g = make_spin_data(grid(64), cplx{0.8, 0.3}, k, 5, 0.3);
        EXPECT_LT(g.casimir_deviation(), 1e-13);
        const DualGrid d = make_dual_data(grid(64), cplx{0.8, 0.3}, k, 5, 0.3);
        EXPECT_LT(d.dual_casimir_deviation(), 1e-13);
    }
}

TEST(Fields, GuardRejectsDataNearTheSouthPole) {
    EXPECT_THROW(make_spin_data(grid(64), 1.0, DataKind::bump, 1, 3.0), std::invalid_argument);
    EXPECT_THROW(make_spin_data(grid(64), 0.0, DataKind::twist, 1, 0.1), std::invalid_argument);
    EXPECT_THROW(make_spin_data(grid(4), 1.0, DataKind::twist, 1, 0.1), std::invalid_argument);
}

TEST(Fields, DataKindNames) {
    EXPECT_EQ(parse_data_kind("twist"), DataKind::twist);
    EXPECT_THROW(parse_data_kind("swirl"), std::invalid_argument);
}

TEST(Fields, CsvRoundTripIsExact) {
    const GridSpec s = grid(32);
    const DualGrid d = make_dual_data(s, cplx{1.0, 0.2}, DataKind::fourier_random, 9, 0.4);
    std::stringstream ss;
    write_grid_csv(ss, d);
    const DualGrid back = read_dual_csv(ss, s, d.c);
    for (std::size_t i = 0; i < s.n_points; ++i) {
        EXPECT_EQ(back.sp[i], d.sp[i]);
        EXPECT_EQ(back.gz[i], d.gz[i]);
    }
    std::stringstream spin;
    write_grid_csv(spin, static_cast<const SpinGrid&>(d));
    const SpinGrid s2 = read_spin_csv(spin, s, d.c);
    EXPECT_EQ(s2.sm[7], d.sm[7]);
}

TEST(Fields, CsvRejectsMalformedInput) {
    const GridSpec s = grid(8);
    std::stringstream wrong_header("index,x,foo\n");
    EXPECT_THROW(read_spin_csv(wrong_header, s, 1.0), std::runtime_error);
    std::stringstream empty;
    EXPECT_THROW(read_spin_csv(empty, s, 1.0), std::runtime_error);
    const SpinGrid g = make_spin_data(grid(16), 1.0, DataKind::twist, 1, 0.1);
    std::stringstream too_many;
    write_grid_csv(too_many, g);
    EXPECT_THROW(read_spin_csv(too_many, s, 1.0), std::runtime_error);
    std::stringstream short_row(grid_csv_header(false) + "\n0,1,2\n");
    EXPECT_THROW(read_spin_csv(short_row, s, 1.0), std::runtime_error);
}
