#include "jmlab/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace jmlab {

namespace {

NodePtr make_node(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0,
                  int index = 0) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->value = value;
    n->index = index;
    return n;
}

class Parser {
public:
    Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

    NodePtr parse_all() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    std::string_view src_;
    int dim_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make_node(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = make_node(Op::Sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_node(Op::Mul, lhs, unary());
            else if (accept('/'))
                lhs = make_node(Op::Div, lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_node(Op::Neg, unary());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (!accept('^')) return base;
        std::size_t at = pos_;
        bool paren = accept('(');
        double sign = 1.0;
        if (accept('-'))
            sign = -1.0;
        else
            accept('+');
        skip_ws();
        if (pos_ >= src_.size() || !(std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
            pos_ = at;
            skip_ws();
            fail("expression exponent rejected: exponent must be a real constant");
        }
        double p = sign * number();
        if (paren && !accept(')')) fail("expected ')' after exponent");
        if (peek() == '^') fail("chained exponent rejected: parenthesize the base");
        return make_node(Op::Pow, base, nullptr, p);
    }

    double number() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ == start || (pos_ == start + 1 && src_[start] == '.')) {
            pos_ = start;
            fail("malformed number");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            std::size_t digits = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (pos_ == digits) pos_ = save;  // 'e' belongs to something else
        }
        std::string text(src_.substr(start, pos_ - start));
        char* end = nullptr;
        double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) {
            pos_ = start;
            fail("malformed number");
        }
        return v;
    }

    NodePtr primary() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return make_node(Op::Constant, nullptr, nullptr, number());
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            std::string_view id = src_.substr(start, pos_ - start);
            if (id == "sin") return make_node(Op::Sin, primary());
            if (id == "cos") return make_node(Op::Cos, primary());
            if (id == "exp") return make_node(Op::Exp, primary());
            if (id == "log") return make_node(Op::Log, primary());
            if (id == "sqrt") return make_node(Op::Sqrt, primary());
            if (id.size() == 2 && (id[0] == 'x' || id[0] == 'v') && id[1] >= '1' && id[1] <= '9') {
                int k = id[1] - '1';
                if (k >= dim_) {
                    pos_ = start;
                    fail("variable '" + std::string(id) + "' out of range for dimension " +
                         std::to_string(dim_));
                }
                return make_node(Op::Variable, nullptr, nullptr, 0.0, id[0] == 'x' ? k : dim_ + k);
            }
            pos_ = start;
            fail("unknown identifier '" + std::string(id) + "'");
        }
        if (c == '\0') fail("unexpected end of input");
        fail("unexpected character '" + std::string(1, c) + "'");
    }
};

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void print_into(const ExprNode& n, int dim, std::string& out) {
    auto unary = [&](const char* name) {
        out += name;
        out += '(';
        print_into(*n.lhs, dim, out);
        out += ')';
    };
    auto binary = [&](char op) {
        out += '(';
        print_into(*n.lhs, dim, out);
        out += ' ';
        out += op;
        out += ' ';
        print_into(*n.rhs, dim, out);
        out += ')';
    };
    switch (n.op) {
        case Op::Constant:
            if (n.value < 0.0) {
                out += "(0.0 - " + format_number(-n.value) + ")";
            } else {
                out += format_number(n.value);
            }
            return;
        case Op::Variable:
            out += n.index < dim ? 'x' : 'v';
            out += std::to_string((n.index < dim ? n.index : n.index - dim) + 1);
            return;
        case Op::Neg:
            out += "(-";
            print_into(*n.lhs, dim, out);
            out += ')';
            return;
        case Op::Sin: unary("sin"); return;
        case Op::Cos: unary("cos"); return;
        case Op::Exp: unary("exp"); return;
        case Op::Log: unary("log"); return;
        case Op::Sqrt: unary("sqrt"); return;
        case Op::Add: binary('+'); return;
        case Op::Sub: binary('-'); return;
        case Op::Mul: binary('*'); return;
        case Op::Div: binary('/'); return;
        case Op::Pow:
            out += '(';
            print_into(*n.lhs, dim, out);
            out += ")^";
            out += n.value < 0.0 ? "(" + format_number(n.value) + ")" : format_number(n.value);
            return;
    }
}

bool any_velocity(const ExprNode& n, int dim) {
    if (n.op == Op::Variable) return n.index >= dim;
    return (n.lhs && any_velocity(*n.lhs, dim)) || (n.rhs && any_velocity(*n.rhs, dim));
}

Expr combine(Op op, const Expr& a, const Expr& b) {
    if (a.dimension() != b.dimension()) throw Error("expression dimension mismatch");
    return Expr(make_node(op, a.node(), b.node()), a.dimension());
}

}  // namespace

namespace detail {
thread_local int error_dimension = 9;
void throw_domain(const ExprNode& n, const char* what) { throw DomainError(what, print(n, error_dimension)); }
}  // namespace detail

bool Expr::position_only() const { return !root_ || !any_velocity(*root_, dim_); }
bool Expr::is_constant() const { return root_ && root_->op == Op::Constant; }

Expr Expr::constant(double c, int dimension) {
    return Expr(make_node(Op::Constant, nullptr, nullptr, c), dimension);
}
Expr Expr::x(int i, int dimension) {
    return Expr(make_node(Op::Variable, nullptr, nullptr, 0.0, i), dimension);
}
Expr Expr::v(int i, int dimension) {
    return Expr(make_node(Op::Variable, nullptr, nullptr, 0.0, dimension + i), dimension);
}

Expr operator+(const Expr& a, const Expr& b) { return combine(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return combine(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return combine(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return combine(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr(make_node(Op::Neg, a.node()), a.dimension()); }

Expr parse(std::string_view source, int dimension) {
    if (dimension < 1 || dimension > 9) throw ParseError("dimension must be in 1..9", 0);
    return Expr(Parser(source, dimension).parse_all(), dimension);
}

std::string print(const ExprNode& n, int dimension) {
    std::string out;
    print_into(n, dimension, out);
    return out;
}

std::string print(const Expr& e) { return print(e.root(), e.dimension()); }

bool structurally_equal(const ExprNode& a, const ExprNode& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
        case Op::Constant:
            return a.value == b.value;
        case Op::Variable:
            return a.index == b.index;
        case Op::Pow:
            return a.value == b.value && structurally_equal(*a.lhs, *b.lhs);
        default:
            break;
    }
    if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
    if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
    if (a.lhs && !structurally_equal(*a.lhs, *b.lhs)) return false;
    if (a.rhs && !structurally_equal(*a.rhs, *b.rhs)) return false;
    return true;
}

double evaluate(const Expr& e, std::span<const double> vars) { return evaluate<double>(e, vars); }

DualScalar eval_dual(const Expr& e, std::span<const double> point, std::span<const int> directions,
                     int order) {
    const std::size_t nvar = static_cast<std::size_t>(2 * e.dimension());
    if (point.size() != nvar) throw PreconditionError("eval_dual: point must have 2n entries");
    for (double p : point)
        if (!std::isfinite(p)) throw PreconditionError("eval_dual: point must be finite");
    const std::size_t k = directions.size();
    std::vector<int> slot(nvar, -1);
    for (std::size_t i = 0; i < k; ++i) {
        int d = directions[i];
        if (d < 0 || static_cast<std::size_t>(d) >= nvar)
            throw PreconditionError("eval_dual: direction index out of range");
        slot[d] = static_cast<int>(i);
    }
    DualScalar out;
    if (order == 1) {
        std::vector<Dual<double>> vars(nvar);
        for (std::size_t i = 0; i < nvar; ++i)
            vars[i] = slot[i] >= 0 ? Dual<double>::variable(point[i], k, slot[i]) : Dual<double>(point[i]);
        Dual<double> r = evaluate<Dual<double>>(e, std::span<const Dual<double>>(vars));
        out.value = r.val;
        out.first.resize(k);
        for (std::size_t i = 0; i < k; ++i) out.first[i] = r.deriv(i);
        return out;
    }
    if (order != 2) throw PreconditionError("eval_dual: order must be 1 or 2");
    using D2 = Dual<Dual<double>>;
    std::vector<D2> vars(nvar);
    for (std::size_t i = 0; i < nvar; ++i) {
        if (slot[i] >= 0) {
            D2 x(Dual<double>::variable(point[i], k, slot[i]));
            x.d.assign(k, Dual<double>(0.0));
            x.d[slot[i]] = Dual<double>(1.0);
            vars[i] = std::move(x);
        } else {
            vars[i] = D2(point[i]);
        }
    }
    D2 r = evaluate<D2>(e, std::span<const D2>(vars));
    out.value = r.val.val;
    out.first.resize(k);
    out.second.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        out.first[i] = r.val.deriv(i);
        const Dual<double>& row = r.deriv(i);
        for (std::size_t j = 0; j < k; ++j) out.second[i * k + j] = row.deriv(j);
    }
    return out;
}

}  // namespace jmlab
