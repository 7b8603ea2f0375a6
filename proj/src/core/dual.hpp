#pragma once

// Forward-mode automatic differentiation with a fixed number of gradient slots.
// Likelihoods are written once as templates over the scalar type and evaluated
// either with `double` (value only) or `Dual<N>` (value + gradient).

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace risknet::ad {

template <std::size_t N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly

    static Dual variable(double value, std::size_t slot) {
        Dual x(value);
        x.d[slot] = 1.0;
        return x;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (std::size_t i = 0; i < N; ++i) d[i] = v * o.d[i] + d[i] * o.v;
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        const double inv = 1.0 / o.v;
        const double q = v * inv;
        for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
        v = q;
        return *this;
    }
    Dual& operator+=(double c) {
        v += c;
        return *this;
    }
    Dual& operator-=(double c) {
        v -= c;
        return *this;
    }
    Dual& operator*=(double c) {
        v *= c;
        for (auto& x : d) x *= c;
        return *this;
    }
    Dual& operator/=(double c) { return *this *= (1.0 / c); }
};

template <class T>
struct is_dual : std::false_type {};
template <std::size_t N>
struct is_dual<Dual<N>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) { return x.v; }

// Builds f(x) from f(x.v) and f'(x.v).
template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double f, double df) {
    Dual<N> r(f);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = df * x.d[i];
    return r;
}

template <std::size_t N>
Dual<N> operator-(const Dual<N>& a) {
    Dual<N> r(-a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
}

template <std::size_t N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <std::size_t N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <std::size_t N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <std::size_t N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <std::size_t N> Dual<N> operator+(Dual<N> a, double b) { return a += b; }
template <std::size_t N> Dual<N> operator-(Dual<N> a, double b) { return a -= b; }
template <std::size_t N> Dual<N> operator*(Dual<N> a, double b) { return a *= b; }
template <std::size_t N> Dual<N> operator/(Dual<N> a, double b) { return a /= b; }
template <std::size_t N> Dual<N> operator+(double a, Dual<N> b) { return b += a; }
template <std::size_t N> Dual<N> operator*(double a, Dual<N> b) { return b *= a; }
template <std::size_t N> Dual<N> operator-(double a, const Dual<N>& b) { return -b + a; }
template <std::size_t N>
Dual<N> operator/(double a, const Dual<N>& b) {
    const double inv = 1.0 / b.v;
    return chain(b, a * inv, -a * inv * inv);
}

template <std::size_t N> bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <std::size_t N> bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <std::size_t N> bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <std::size_t N> bool operator>(const Dual<N>& a, double b) { return a.v > b; }
template <std::size_t N> bool operator<=(const Dual<N>& a, double b) { return a.v <= b; }
template <std::size_t N> bool operator>=(const Dual<N>& a, double b) { return a.v >= b; }

template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
    const double e = std::exp(x.v);
    return chain(x, e, e);
}
template <std::size_t N>
Dual<N> log(const Dual<N>& x) {
    return chain(x, std::log(x.v), 1.0 / x.v);
}
template <std::size_t N>
Dual<N> log1p(const Dual<N>& x) {
    return chain(x, std::log1p(x.v), 1.0 / (1.0 + x.v));
}
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
    const double s = std::sqrt(x.v);
    return chain(x, s, 0.5 / s);
}
template <std::size_t N>
Dual<N> abs(const Dual<N>& x) {
    return x.v < 0.0 ? -x : x;
}
template <std::size_t N>
Dual<N> tanh(const Dual<N>& x) {
    const double t = std::tanh(x.v);
    return chain(x, t, 1.0 - t * t);
}
template <std::size_t N>
Dual<N> pow(const Dual<N>& x, double p) {
    const double y = std::pow(x.v, p);
    return chain(x, y, p * std::pow(x.v, p - 1.0));
}
template <std::size_t N>
Dual<N> lgamma(const Dual<N>& x) {
    return chain(x, boost::math::lgamma(x.v), boost::math::digamma(x.v));
}
template <std::size_t N>
bool isfinite(const Dual<N>& x) {
    return std::isfinite(x.v);
}

// Plain-double counterparts so templates can call `lgamma(x)` uniformly.
inline double lgamma(double x) { return boost::math::lgamma(x); }

}  // namespace risknet::ad
