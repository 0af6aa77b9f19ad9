#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace hmlab {

using cplx = std::complex<double>;
inline constexpr cplx I_unit{0.0, 1.0};

// spectral-parameter denominators below this magnitude are rejected
inline constexpr double pole_epsilon = 1e-9;

struct PoleError : std::domain_error {
    using std::domain_error::domain_error;
};

inline void check_pole(cplx z, const char* what) {
    if (std::abs(z) < pole_epsilon)
        throw PoleError(std::string("spectral pole: ") + what);
}

// dense N x N complex matrix, row-major
template <std::size_t N>
struct Matrix {
    std::array<cplx, N * N> a{};

    static constexpr std::size_t size = N;

    cplx& operator()(std::size_t i, std::size_t j) { return a[i * N + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a[i * N + j]; }

    static Matrix identity() {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }
    static Matrix unit(std::size_t i, std::size_t j) {
        Matrix m;
        m(i, j) = 1.0;
        return m;
    }

    Matrix& operator+=(const Matrix& o) {
        for (std::size_t k = 0; k < N * N; ++k) a[k] += o.a[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        for (std::size_t k = 0; k < N * N; ++k) a[k] -= o.a[k];
        return *this;
    }
    Matrix& operator*=(cplx s) {
        for (auto& v : a) v *= s;
        return *this;
    }
    friend Matrix operator+(Matrix x, const Matrix& y) { return x += y; }
    friend Matrix operator-(Matrix x, const Matrix& y) { return x -= y; }
    friend Matrix operator-(Matrix x) { return x *= -1.0; }
    friend Matrix operator*(Matrix x, cplx s) { return x *= s; }
    friend Matrix operator*(cplx s, Matrix x) { return x *= s; }
    friend Matrix operator*(double s, Matrix x) { return x *= s; }
    friend Matrix operator*(Matrix x, double s) { return x *= s; }
    friend Matrix operator/(Matrix x, cplx s) { return x *= (1.0 / s); }
    friend Matrix operator*(const Matrix& x, const Matrix& y) {
        Matrix r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < N; ++k) {
                const cplx xik = x(i, k);
                if (xik == cplx{}) continue;
                for (std::size_t j = 0; j < N; ++j) r(i, j) += xik * y(k, j);
            }
        return r;
    }

    cplx trace() const {
        cplx t{};
        for (std::size_t i = 0; i < N; ++i) t += (*this)(i, i);
        return t;
    }
    double max_abs() const {
        double m = 0.0;
        for (const auto& v : a) m = std::max(m, std::abs(v));
        return m;
    }
    bool finite() const {
        return std::all_of(a.begin(), a.end(), [](cplx v) {
            return std::isfinite(v.real()) && std::isfinite(v.imag());
        });
    }
};

using Mat2 = Matrix<2>;
using Mat4 = Matrix<4>;
using Mat8 = Matrix<8>;

template <std::size_t N>
double max_norm(const Matrix<N>& m) { return m.max_abs(); }

template <std::size_t N>
bool approx_equal(const Matrix<N>& x, const Matrix<N>& y, double tol) {
    return (x - y).max_abs() <= tol;
}

template <std::size_t N>
Matrix<N> commutator(const Matrix<N>& x, const Matrix<N>& y) { return x * y - y * x; }

inline Mat2 mat2(cplx m00, cplx m01, cplx m10, cplx m11) {
    Mat2 m;
    m(0, 0) = m00; m(0, 1) = m01; m(1, 0) = m10; m(1, 1) = m11;
    return m;
}

inline cplx det(const Mat2& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

inline Mat2 inverse(const Mat2& m) {
    const cplx d = det(m);
    if (std::abs(d) == 0.0) throw std::domain_error("singular 2x2 matrix");
    return mat2(m(1, 1) / d, -m(0, 1) / d, -m(1, 0) / d, m(0, 0) / d);
}

// exp of a traceless 2x2 matrix: cosh(q) I + sinh(q)/q X with q^2 = -det X
inline Mat2 expm_traceless(const Mat2& x) {
    const cplx q = std::sqrt(-det(x));
    const cplx ch = std::cosh(q);
    cplx sh_q;
    if (std::abs(q) < 1e-4) {
        const cplx q2 = q * q;
        sh_q = 1.0 + q2 / 6.0 + q2 * q2 / 120.0 + q2 * q2 * q2 / 5040.0;
    } else {
        sh_q = std::sinh(q) / q;
    }
    return Mat2::identity() * ch + x * sh_q;
}

// leg a is the slow (row-block) index: (A (x) B)(2i+k, 2j+l) = A(i,j) B(k,l)
template <std::size_t N, std::size_t M>
Matrix<N * M> kron(const Matrix<N>& x, const Matrix<M>& y) {
    Matrix<N * M> r;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t k = 0; k < M; ++k)
                for (std::size_t l = 0; l < M; ++l) r(i * M + k, j * M + l) = x(i, j) * y(k, l);
    return r;
}

inline Mat4 swap_matrix() {
    Mat4 p;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) p(i * 2 + j, j * 2 + i) = 1.0;
    return p;
}

inline Mat2 partial_trace_first(const Mat4& m) {
    Mat2 r;
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < 2; ++i) r(k, l) += m(i * 2 + k, i * 2 + l);
    return r;
}

// operators on V_a (x) V_b (x) V_c built from a two-leg operator
enum class LegPair { ab, ac, bc };

inline Mat8 embed(const Mat4& m, LegPair legs) {
    Mat8 r;
    for (std::size_t row = 0; row < 8; ++row)
        for (std::size_t col = 0; col < 8; ++col) {
            const std::size_t a = row >> 2, b = (row >> 1) & 1, c = row & 1;
            const std::size_t a2 = col >> 2, b2 = (col >> 1) & 1, c2 = col & 1;
            switch (legs) {
                case LegPair::ab:
                    if (c == c2) r(row, col) = m(a * 2 + b, a2 * 2 + b2);
                    break;
                case LegPair::ac:
                    if (b == b2) r(row, col) = m(a * 2 + c, a2 * 2 + c2);
                    break;
                case LegPair::bc:
                    if (a == a2) r(row, col) = m(b * 2 + c, b2 * 2 + c2);
                    break;
            }
        }
    return r;
}

inline Mat4 r_matrix(cplx lambda) {
    check_pole(lambda, "r-matrix");
    return swap_matrix() * (1.0 / (2.0 * lambda));
}

enum class Side { plus, minus };

struct BoundaryParams {
    cplx alpha{1.0};
    cplx beta{};
    cplx gamma{};
    cplx delta{};
    Side side{Side::plus};
};

// alpha I + lambda [[delta, beta], [gamma, -delta]]
inline Mat2 k_matrix(const BoundaryParams& p, cplx lambda) {
    return mat2(p.alpha + lambda * p.delta, lambda * p.beta, lambda * p.gamma,
                p.alpha - lambda * p.delta);
}

struct RMatrixFn {
    Mat4 operator()(cplx lambda) const { return r_matrix(lambda); }
};

template <class RFn = RMatrixFn>
double cybe_residual(cplx lambda, cplx mu, RFn r = {}) {
    check_pole(lambda, "cybe lambda");
    check_pole(mu, "cybe mu");
    check_pole(lambda - mu, "cybe lambda-mu");
    const Mat8 ab = embed(r(lambda - mu), LegPair::ab);
    const Mat8 ac = embed(r(lambda), LegPair::ac);
    const Mat8 bc = embed(r(mu), LegPair::bc);
    return (commutator(ab, ac) + commutator(ab, bc) + commutator(ac, bc)).max_abs();
}

struct KMatrixFn {
    BoundaryParams p;
    Mat2 operator()(cplx lambda) const { return k_matrix(p, lambda); }
};

template <class KFn, class RFn = RMatrixFn>
double reflection_residual_with(KFn k, cplx lambda, cplx mu, RFn r = {}) {
    check_pole(lambda - mu, "reflection lambda-mu");
    check_pole(lambda + mu, "reflection lambda+mu");
    const Mat2 I2 = Mat2::identity();
    const Mat4 ka = kron(k(lambda), I2);
    const Mat4 kb = kron(I2, k(mu));
    const Mat4 rm = r(lambda - mu);
    const Mat4 rp = r(lambda + mu);
    return (commutator(rm, ka * kb) + ka * rp * kb - kb * rp * ka).max_abs();
}

inline double reflection_residual(const BoundaryParams& p, cplx lambda, cplx mu) {
    return reflection_residual_with(KMatrixFn{p}, lambda, mu);
}

template <class RFn = RMatrixFn>
double push_through_residual(const Mat2& m, cplx lambda, RFn r = {}) {
    check_pole(lambda, "push-through");
    const Mat2 I2 = Mat2::identity();
    const Mat4 rr = r(lambda);
    return (rr * kron(m, I2) - kron(I2, m) * rr).max_abs();
}

}  // namespace hmlab
