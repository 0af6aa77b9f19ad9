#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace hmlab {

// truncated Taylor series in one variable; c[k] = f^(k)(x0) / k!
template <std::size_t D>
struct Jet {
    std::array<std::complex<double>, D> c{};

    Jet() = default;
    Jet(std::complex<double> v) { c[0] = v; }
    Jet(double v) { c[0] = v; }

    static Jet variable(std::complex<double> x0) {
        Jet j(x0);
        if constexpr (D > 1) j.c[1] = 1.0;
        return j;
    }

    std::complex<double> value() const { return c[0]; }
    // n-th derivative at the expansion point
    std::complex<double> deriv(std::size_t n) const {
        double f = 1.0;
        for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
        return n < D ? c[n] * f : std::complex<double>{};
    }

    Jet& operator+=(const Jet& o) { for (std::size_t k = 0; k < D; ++k) c[k] += o.c[k]; return *this; }
    Jet& operator-=(const Jet& o) { for (std::size_t k = 0; k < D; ++k) c[k] -= o.c[k]; return *this; }
    Jet& operator*=(std::complex<double> s) { for (auto& v : c) v *= s; return *this; }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) { return a *= -1.0; }
    friend Jet operator*(Jet a, std::complex<double> s) { return a *= s; }
    friend Jet operator*(std::complex<double> s, Jet a) { return a *= s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, std::complex<double> s) { a.c[0] += s; return a; }
    friend Jet operator+(std::complex<double> s, Jet a) { a.c[0] += s; return a; }
    friend Jet operator-(Jet a, std::complex<double> s) { a.c[0] -= s; return a; }
    friend Jet operator-(std::complex<double> s, Jet a) { a *= -1.0; a.c[0] += s; return a; }
    friend Jet operator/(Jet a, std::complex<double> s) { return a *= (1.0 / s); }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (std::size_t i = 0; i < D; ++i) {
            if (a.c[i] == std::complex<double>{}) continue;
            for (std::size_t j = 0; i + j < D; ++j) r.c[i + j] += a.c[i] * b.c[j];
        }
        return r;
    }
    Jet reciprocal() const {
        Jet r;
        r.c[0] = 1.0 / c[0];
        for (std::size_t n = 1; n < D; ++n) {
            std::complex<double> s{};
            for (std::size_t k = 1; k <= n; ++k) s += c[k] * r.c[n - k];
            r.c[n] = -s / c[0];
        }
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }
    friend Jet operator/(std::complex<double> s, const Jet& b) { return b.reciprocal() * s; }
};

// d/dx; the top coefficient is lost
template <std::size_t D>
Jet<D> derivative(const Jet<D>& j) {
    Jet<D> r;
    for (std::size_t k = 0; k + 1 < D; ++k) r.c[k] = j.c[k + 1] * static_cast<double>(k + 1);
    return r;
}

template <std::size_t D>
Jet<D> exp(const Jet<D>& a) {
    Jet<D> r;
    r.c[0] = std::exp(a.c[0]);
    for (std::size_t n = 1; n < D; ++n) {
        std::complex<double> s{};
        for (std::size_t k = 1; k <= n; ++k) s += static_cast<double>(k) * a.c[k] * r.c[n - k];
        r.c[n] = s / static_cast<double>(n);
    }
    return r;
}

template <std::size_t D>
Jet<D> sin(const Jet<D>& a) {
    const std::complex<double> i{0.0, 1.0};
    return (exp(a * i) - exp(a * -i)) * (1.0 / (2.0 * i));
}

template <std::size_t D>
Jet<D> cos(const Jet<D>& a) {
    const std::complex<double> i{0.0, 1.0};
    return (exp(a * i) + exp(a * -i)) * 0.5;
}

template <std::size_t D>
Jet<D> sqrt(const Jet<D>& a) {
    Jet<D> r;
    r.c[0] = std::sqrt(a.c[0]);
    for (std::size_t n = 1; n < D; ++n) {
        std::complex<double> s = a.c[n];
        for (std::size_t k = 1; k < n; ++k) s -= r.c[k] * r.c[n - k];
        r.c[n] = s / (2.0 * r.c[0]);
    }
    return r;
}

}  // namespace hmlab
