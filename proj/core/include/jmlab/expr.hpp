#pragma once

// Scalar expressions over chart coordinates x1..xn and velocities v1..vn.
//
// Grammar (whitespace-insensitive):
//   expr    := term (("+" | "-") term)*
//   term    := unary (("*" | "/") unary)*
//   unary   := "-" unary | power
//   power   := primary ("^" exponent)?
//   primary := number | ident | "(" expr ")" | func primary
//   func    := "sin" | "cos" | "exp" | "log" | "sqrt"
//   exponent:= ["-"|"+"] number | "(" ["-"|"+"] number ")"
// so "-x1^2" is -(x1^2). Exponents are real constants only.

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jmlab/dual.hpp"
#include "jmlab/errors.hpp"

namespace jmlab {

enum class Op { Constant, Variable, Neg, Sin, Cos, Exp, Log, Sqrt, Add, Sub, Mul, Div, Pow };

struct ExprNode {
    Op op = Op::Constant;
    double value = 0.0;  // constant value, or exponent for Pow
    int index = 0;       // Variable: 0..n-1 are x, n..2n-1 are v
    std::shared_ptr<const ExprNode> lhs;
    std::shared_ptr<const ExprNode> rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

/// Immutable expression bound to a dimension n; cheap to copy and safe to
/// share between threads.
class Expr {
public:
    Expr() = default;
    Expr(NodePtr root, int dimension) : root_(std::move(root)), dim_(dimension) {}

    const ExprNode& root() const { return *root_; }
    const NodePtr& node() const { return root_; }
    int dimension() const { return dim_; }
    bool empty() const { return !root_; }

    /// True when no v-variable occurs.
    bool position_only() const;
    /// True when the tree is a single constant.
    bool is_constant() const;

    static Expr constant(double c, int dimension);
    static Expr x(int i, int dimension);  // zero-based
    static Expr v(int i, int dimension);  // zero-based

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);

private:
    NodePtr root_;
    int dim_ = 0;
};

Expr parse(std::string_view source, int dimension);

/// Fully parenthesized text that parses back to a structurally equal tree.
std::string print(const Expr& e);
std::string print(const ExprNode& n, int dimension);

bool structurally_equal(const ExprNode& a, const ExprNode& b);
inline bool structurally_equal(const Expr& a, const Expr& b) {
    return a.dimension() == b.dimension() && structurally_equal(a.root(), b.root());
}

namespace detail {
[[noreturn]] void throw_domain(const ExprNode& n, const char* what);
// Dimension used to name variables in domain-error messages.
extern thread_local int error_dimension;
}

/// Evaluate with any scalar type closed under the arithmetic and elementary
/// functions (double, Dual<double>, nested duals). `vars` holds the 2n values
/// (x1..xn, v1..vn); a position-only caller may pass just n.
template <class T>
T evaluate(const ExprNode& n, std::span<const T> vars) {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::sqrt;
    switch (n.op) {
        case Op::Constant:
            return T(n.value);
        case Op::Variable:
            if (static_cast<std::size_t>(n.index) >= vars.size())
                detail::throw_domain(n, "variable not supplied");
            return vars[n.index];
        case Op::Neg:
            return -evaluate(*n.lhs, vars);
        case Op::Sin:
            return sin(evaluate(*n.lhs, vars));
        case Op::Cos:
            return cos(evaluate(*n.lhs, vars));
        case Op::Exp:
            return exp(evaluate(*n.lhs, vars));
        case Op::Log: {
            T a = evaluate(*n.lhs, vars);
            if (!(value_of(a) > 0.0)) detail::throw_domain(n, "log of non-positive value");
            return log(a);
        }
        case Op::Sqrt: {
            T a = evaluate(*n.lhs, vars);
            double av = value_of(a);
            if (av < 0.0) detail::throw_domain(n, "sqrt of negative value");
            if (av == 0.0 && is_dual<T>::value) detail::throw_domain(n, "sqrt not differentiable at 0");
            return sqrt(a);
        }
        case Op::Add:
            return evaluate(*n.lhs, vars) + evaluate(*n.rhs, vars);
        case Op::Sub:
            return evaluate(*n.lhs, vars) - evaluate(*n.rhs, vars);
        case Op::Mul:
            return evaluate(*n.lhs, vars) * evaluate(*n.rhs, vars);
        case Op::Div: {
            T b = evaluate(*n.rhs, vars);
            if (value_of(b) == 0.0) detail::throw_domain(n, "division by zero");
            return evaluate(*n.lhs, vars) / b;
        }
        case Op::Pow: {
            T a = evaluate(*n.lhs, vars);
            double av = value_of(a);
            double p = n.value;
            bool integral = std::floor(p) == p;
            if (av < 0.0 && !integral) detail::throw_domain(n, "negative base with fractional exponent");
            if (av == 0.0 && p < 0.0) detail::throw_domain(n, "zero base with negative exponent");
            if (av == 0.0 && p < 1.0 && p != 0.0 && is_dual<T>::value)
                detail::throw_domain(n, "power not differentiable at 0");
            return pow(a, p);
        }
    }
    detail::throw_domain(n, "unknown node");
}

template <class T>
T evaluate(const Expr& e, std::span<const T> vars) {
    detail::error_dimension = e.dimension();
    return evaluate(e.root(), vars);
}

double evaluate(const Expr& e, std::span<const double> vars);

/// Value with first and (optionally) second partial derivatives with respect
/// to a chosen subset of the 2n variables.
struct DualScalar {
    double value = 0.0;
    std::vector<double> first;
    std::vector<double> second;  // row-major k x k, empty unless order 2
    std::size_t directions() const { return first.size(); }
    double hessian(std::size_t i, std::size_t j) const { return second[i * first.size() + j]; }
};

DualScalar eval_dual(const Expr& e, std::span<const double> point, std::span<const int> directions,
                     int order);

}  // namespace jmlab
