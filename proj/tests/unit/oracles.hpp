#pragma once

// Independent test oracles: finite differences and brute-force helpers that
// never call into the library's differentiation code.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Fn = std::function<double(const std::vector<double>&)>;

inline double central_diff(const Fn& f, std::vector<double> p, int i, double h = 1e-5) {
    double c = p[i];
    p[i] = c + h;
    double fp = f(p);
    p[i] = c - h;
    double fm = f(p);
    return (fp - fm) / (2.0 * h);
}

inline double second_diff(const Fn& f, std::vector<double> p, int i, int j, double h = 1e-4) {
    auto at = [&](double di, double dj) {
        auto q = p;
        q[i] += di;
        q[j] += dj;
        return f(q);
    };
    return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
}

inline double third_diff(const Fn& f, std::vector<double> p, int i, int j, int k, double h = 2e-3) {
    auto at = [&](double a, double b, double c) {
        auto q = p;
        q[i] += a;
        q[j] += b;
        q[k] += c;
        return f(q);
    };
    double s = 0.0;
    for (int a = -1; a <= 1; a += 2)
        for (int b = -1; b <= 1; b += 2)
            for (int c = -1; c <= 1; c += 2) s += a * b * c * at(a * h, b * h, c * h);
    return s / (8.0 * h * h * h);
}

// Geodesic coefficients of a Lagrangian F^2(z), z = (x, v), from
// G = 1/4 g^{-1} (d2F2/dv dx v - dF2/dx) with every derivative by finite
// differences.
inline std::vector<double> fd_spray(const Fn& f, const std::vector<double>& z, int n) {
    Eigen::MatrixXd g(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = 0.5 * second_diff(f, z, n + i, n + j);
    for (int l = 0; l < n; ++l) {
        double acc = -central_diff(f, z, l);
        for (int k = 0; k < n; ++k) acc += second_diff(f, z, n + l, k) * z[n + k];
        b[l] = acc;
    }
    Eigen::VectorXd G = 0.25 * g.ldlt().solve(b);
    return {G.data(), G.data() + n};
}

// Random expression source text over n variables x1..xn, built from the
// grammar with arguments kept inside every function's domain.
class ExprGen {
public:
    ExprGen(int n, unsigned seed) : n_(n), rng_(seed) {}

    std::string gen(int depth) {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
        switch (pick(rng_)) {
            case 0: return var();
            case 1: return constant();
            case 2: return "(" + gen(depth - 1) + " + " + gen(depth - 1) + ")";
            case 3: return "(" + gen(depth - 1) + " - " + gen(depth - 1) + ")";
            case 4: return "(" + gen(depth - 1) + " * " + gen(depth - 1) + ")";
            case 5: return "(" + gen(depth - 1) + " / (2.5 + sin(" + gen(depth - 1) + ")))";
            case 6: return "sin(" + gen(depth - 1) + ")";
            case 7: return "cos(" + gen(depth - 1) + ")";
            case 8: return "exp(0.3*sin(" + gen(depth - 1) + "))";
            default: {
                std::uniform_int_distribution<int> which(0, 2);
                switch (which(rng_)) {
                    case 0: return "log(1.5 + cos(" + gen(depth - 1) + "))";
                    case 1: return "sqrt(2 + sin(" + gen(depth - 1) + "))";
                    default: return "(1.2 + cos(" + gen(depth - 1) + "))^1.5";
                }
            }
        }
    }

    std::vector<double> point(double lo = -1.0, double hi = 1.0) {
        std::uniform_real_distribution<double> u(lo, hi);
        std::vector<double> p(n_);
        for (auto& c : p) c = u(rng_);
        return p;
    }

private:
    std::string var() {
        std::uniform_int_distribution<int> k(1, n_);
        return "x" + std::to_string(k(rng_));
    }
    std::string constant() {
        std::uniform_real_distribution<double> u(0.1, 2.0);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", u(rng_));
        return buf;
    }
    int n_;
    std::mt19937 rng_;
};

}  // namespace oracle
