#pragma once

// Forward-mode dual numbers with a runtime number of directions.
//
// Dual<T> carries a value and a vector of directional derivatives. Nesting
// (Dual<Dual<double>>) gives exact second derivatives; a third level gives
// third derivatives. An empty derivative vector means "all zero", so constants
// cost one scalar and mix freely with seeded variables of any direction count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace jmlab {

template <class T>
class Dual {
public:
    T val{};
    std::vector<T> d;

    Dual() = default;
    Dual(double v) : val(v) {}  // NOLINT(google-explicit-constructor)
    template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
    Dual(const T& v) : val(v) {}  // NOLINT(google-explicit-constructor)
    Dual(T v, std::vector<T> derivs) : val(std::move(v)), d(std::move(derivs)) {}

    /// Variable seeded in direction `index` out of `count`.
    static Dual variable(T v, std::size_t count, std::size_t index) {
        Dual r(std::move(v));
        r.d.assign(count, T(0.0));
        r.d[index] = T(1.0);
        return r;
    }

    std::size_t size() const { return d.size(); }
    const T& deriv(std::size_t i) const {
        static const T zero(0.0);
        return i < d.size() ? d[i] : zero;
    }

    Dual& operator+=(const Dual& o) {
        val += o.val;
        if (d.size() < o.d.size()) d.resize(o.d.size(), T(0.0));
        for (std::size_t i = 0; i < o.d.size(); ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        val -= o.val;
        if (d.size() < o.d.size()) d.resize(o.d.size(), T(0.0));
        for (std::size_t i = 0; i < o.d.size(); ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        std::size_t m = std::max(d.size(), o.d.size());
        std::vector<T> r(m, T(0.0));
        for (std::size_t i = 0; i < d.size(); ++i) r[i] = d[i] * o.val;
        for (std::size_t i = 0; i < o.d.size(); ++i) r[i] += val * o.d[i];
        val *= o.val;
        d = std::move(r);
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        T q = val / o.val;
        std::size_t m = std::max(d.size(), o.d.size());
        std::vector<T> r(m, T(0.0));
        for (std::size_t i = 0; i < d.size(); ++i) r[i] = d[i];
        for (std::size_t i = 0; i < o.d.size(); ++i) r[i] -= q * o.d[i];
        for (auto& x : r) x /= o.val;
        val = std::move(q);
        d = std::move(r);
        return *this;
    }
    Dual operator-() const {
        Dual r(-val);
        r.d.reserve(d.size());
        for (const auto& x : d) r.d.push_back(-x);
        return r;
    }

    Dual& operator+=(double s) { val += s; return *this; }
    Dual& operator-=(double s) { val -= s; return *this; }
    Dual& operator*=(double s) {
        val *= s;
        for (auto& x : d) x *= s;
        return *this;
    }
    Dual& operator/=(double s) {
        val /= s;
        for (auto& x : d) x /= s;
        return *this;
    }
};

template <class T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <class T> Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <class T> Dual<T> operator+(Dual<T> a, double s) { return a += s; }
template <class T> Dual<T> operator+(double s, Dual<T> a) { return a += s; }
template <class T> Dual<T> operator-(Dual<T> a, double s) { return a -= s; }
template <class T> Dual<T> operator-(double s, const Dual<T>& a) { return -a + s; }
template <class T> Dual<T> operator*(Dual<T> a, double s) { return a *= s; }
template <class T> Dual<T> operator*(double s, Dual<T> a) { return a *= s; }
template <class T> Dual<T> operator/(Dual<T> a, double s) { return a /= s; }
template <class T> Dual<T> operator/(double s, const Dual<T>& a) { return Dual<T>(s) / a; }

namespace detail {
// r = f(a.val) with derivative fprime applied to every direction.
template <class T>
Dual<T> chain(const Dual<T>& a, T fval, const T& fprime) {
    Dual<T> r(std::move(fval));
    r.d.reserve(a.d.size());
    for (const auto& x : a.d) r.d.push_back(fprime * x);
    return r;
}
}  // namespace detail

template <class T> Dual<T> sin(const Dual<T>& a) {
    using std::cos;
    using std::sin;
    return detail::chain(a, T(sin(a.val)), T(cos(a.val)));
}
template <class T> Dual<T> cos(const Dual<T>& a) {
    using std::cos;
    using std::sin;
    return detail::chain(a, T(cos(a.val)), T(-sin(a.val)));
}
template <class T> Dual<T> exp(const Dual<T>& a) {
    using std::exp;
    T e = exp(a.val);
    return detail::chain(a, e, e);
}
template <class T> Dual<T> log(const Dual<T>& a) {
    using std::log;
    return detail::chain(a, T(log(a.val)), T(1.0 / a.val));
}
template <class T> Dual<T> sqrt(const Dual<T>& a) {
    using std::sqrt;
    T s = sqrt(a.val);
    return detail::chain(a, s, T(0.5 / s));
}
template <class T> Dual<T> pow(const Dual<T>& a, double p) {
    using std::pow;
    if (p == 0.0) return Dual<T>(1.0);
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return detail::chain(a, T(pow(a.val, p)), T(p * pow(a.val, p - 1.0)));
}

inline double value_of(double x) { return x; }
template <class T> double value_of(const Dual<T>& x) { return value_of(x.val); }

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};

}  // namespace jmlab
