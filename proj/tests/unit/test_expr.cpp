#include <cmath>
#include <vector>

#include "doctest.h"
#include "jmlab/expr.hpp"
#include "oracles.hpp"

using namespace jmlab;

namespace {
double eval_at(const Expr& e, std::vector<double> vars) {
    vars.resize(2 * e.dimension(), 0.0);
    return evaluate(e, std::span<const double>(vars));
}
}  // namespace

TEST_CASE("parse builds the expected tree for a sum of squares") {
    Expr e = parse("x1^2 + x2^2", 2);
    const ExprNode& r = e.root();
    REQUIRE(r.op == Op::Add);
    CHECK(r.lhs->op == Op::Pow);
    CHECK(r.lhs->value == 2.0);
    CHECK(r.lhs->lhs->op == Op::Variable);
    CHECK(r.lhs->lhs->index == 0);
    CHECK(r.rhs->lhs->index == 1);
    CHECK(eval_at(e, {3.0, 4.0}) == 25.0);
}

TEST_CASE("velocity variables bind after the positions") {
    Expr e = parse("0.5*(v1^2+v2^2)", 2);
    CHECK(eval_at(e, {0, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK_FALSE(e.position_only());
    CHECK(parse("x1*x2", 2).position_only());
}

TEST_CASE("precedence: power binds tighter than unary minus") {
    CHECK(eval_at(parse("-x1^2", 1), {3.0}) == -9.0);
    CHECK(eval_at(parse("2*-x1", 1), {3.0}) == -6.0);
    CHECK(eval_at(parse("1 - 2 - 3", 1), {0.0}) == -4.0);
    CHECK(eval_at(parse("8 / 4 / 2", 1), {0.0}) == 1.0);
    CHECK(eval_at(parse("x1^-1", 1), {4.0}) == 0.25);
    CHECK(eval_at(parse("x1^(-2)", 1), {2.0}) == 0.25);
    CHECK(eval_at(parse("sin x1", 1), {0.0}) == 0.0);
    CHECK(eval_at(parse("1.5e1 + 2E-1", 1), {0.0}) == doctest::Approx(15.2));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_WITH_AS(parse("x1^x2", 2), doctest::Contains("exponent"), ParseError);
    CHECK_THROWS_AS(parse("x3", 2), ParseError);
    CHECK_THROWS_AS(parse("v1 + y", 2), ParseError);
    CHECK_THROWS_AS(parse("tan(x1)", 1), ParseError);
    CHECK_THROWS_AS(parse("(x1", 1), ParseError);
    CHECK_THROWS_AS(parse("x1 +", 1), ParseError);
    CHECK_THROWS_AS(parse("x1^2^3", 1), ParseError);
    CHECK_THROWS_AS(parse("x1 x2", 2), ParseError);
    try {
        parse("x1 + $", 1);
        FAIL("expected throw");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 5);
    }
}

TEST_CASE("domain errors name the offending node") {
    Expr e = parse("1 + log(x1)", 1);
    try {
        eval_at(e, {-1.0});
        FAIL("expected throw");
    } catch (const DomainError& err) {
        CHECK(err.node() == "log(x1)");
    }
    CHECK_THROWS_AS(eval_at(parse("sqrt(x1 - 2)", 1), {1.0}), DomainError);
    CHECK_THROWS_AS(eval_at(parse("1/x1", 1), {0.0}), DomainError);
    CHECK_THROWS_AS(eval_at(parse("x1^0.5", 1), {-1.0}), DomainError);
    CHECK(eval_at(parse("x1^3", 1), {-2.0}) == -8.0);
    try {
        eval_at(parse("log(v2)", 2), {1, 1, 1, -1});
        FAIL("expected throw");
    } catch (const DomainError& err) {
        CHECK(err.node() == "log(v2)");
    }
}

TEST_CASE("eval_dual first derivatives: small closed cases") {
    int d0[] = {0};
    std::vector<double> p{0.0, 0.0};
    auto r = eval_dual(parse("sin(x1)", 1), p, d0, 1);
    CHECK(r.value == 0.0);
    CHECK(r.first[0] == 1.0);

    int d01[] = {0, 1};
    std::vector<double> q{2.0, 3.0, 0.0, 0.0};
    auto s = eval_dual(parse("x1*x2", 2), q, d01, 1);
    CHECK(s.value == 6.0);
    CHECK(s.first[0] == 3.0);
    CHECK(s.first[1] == 2.0);
}

TEST_CASE("eval_dual matches a central difference for exp(x1^2)") {
    Expr e = parse("exp(x1^2)", 1);
    std::vector<double> p{0.7, 0.0};
    int d0[] = {0};
    auto r = eval_dual(e, p, d0, 1);
    double fd = oracle::central_diff([&](const std::vector<double>& q) { return eval_at(e, q); }, p, 0);
    CHECK(std::abs(r.first[0] - fd) / std::abs(fd) < 1e-6);
}

TEST_CASE("eval_dual second order gives a symmetric hessian matching differences") {
    Expr e = parse("sin(x1*x2) + v1^2*exp(x2) + sqrt(1 + v2^2)", 2);
    std::vector<double> p{0.3, -0.4, 0.8, 1.1};
    int all[] = {0, 1, 2, 3};
    auto r = eval_dual(e, p, all, 2);
    auto f = [&](const std::vector<double>& q) { return eval_at(e, q); };
    for (int i = 0; i < 4; ++i) {
        CHECK(r.first[i] == doctest::Approx(oracle::central_diff(f, p, i)).epsilon(1e-8));
        for (int j = 0; j < 4; ++j) {
            CHECK(r.hessian(i, j) == doctest::Approx(r.hessian(j, i)).epsilon(1e-14));
            CHECK(r.hessian(i, j) == doctest::Approx(oracle::second_diff(f, p, i, j)).epsilon(1e-5));
        }
    }
    CHECK(r.value == f(p));
}

TEST_CASE("eval_dual on a subset of directions") {
    Expr e = parse("x1*v2 + x2^2", 2);
    std::vector<double> p{2.0, 3.0, 5.0, 7.0};
    int dirs[] = {3, 1};
    auto r = eval_dual(e, p, dirs, 1);
    CHECK(r.first[0] == 2.0);
    CHECK(r.first[1] == 6.0);
    CHECK_THROWS_AS(eval_dual(e, p, std::vector<int>{4}, 1), PreconditionError);
    CHECK_THROWS_AS(eval_dual(e, std::vector<double>{1, 2}, dirs, 1), PreconditionError);
}

TEST_CASE("property: random expressions differentiate like central differences") {
    const int n = 3;
    oracle::ExprGen gen(n, 1234);
    int dirs[] = {0, 1, 2};
    int checked = 0;
    for (int s = 0; s < 200; ++s) {
        Expr e = parse(gen.gen(4), n);
        std::vector<double> p = gen.point();
        p.resize(2 * n, 0.0);
        auto r = eval_dual(e, p, dirs, 1);
        CHECK(r.value == eval_at(e, p));
        auto f = [&](const std::vector<double>& q) { return eval_at(e, q); };
        for (int i = 0; i < n; ++i) {
            double fd = oracle::central_diff(f, p, i);
            CHECK(std::abs(r.first[i] - fd) <= 1e-6 * (1.0 + std::abs(r.value)));
        }
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("property: print then parse reproduces the tree") {
    oracle::ExprGen gen(2, 99);
    for (int s = 0; s < 200; ++s) {
        Expr e = parse(gen.gen(5), 2);
        Expr back = parse(print(e), 2);
        CHECK(structurally_equal(e, back));
    }
    Expr odd = parse("-(x1)^-2.5 + v2 * 1e-7 - 3", 2);
    CHECK(structurally_equal(odd, parse(print(odd), 2)));
}

TEST_CASE("composition through operators") {
    Expr a = parse("x1^2", 2);
    Expr b = Expr::v(1, 2);
    Expr c = (a + b) * Expr::constant(2.0, 2) - (-a) / Expr::x(1, 2);
    CHECK(eval_at(c, {3.0, 2.0, 0.0, 1.0}) == doctest::Approx(2 * (9 + 1) + 9.0 / 2.0));
    CHECK_THROWS_AS(a + parse("x1", 1), Error);
}
