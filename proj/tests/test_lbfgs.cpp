/// Optimizer oracles: quadratics with known minimizers, Rosenbrock, descent
/// invariants, rejection handling, and determinism.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fiml/errors.hpp"
#include "fiml/lbfgs.hpp"

using namespace fiml;

namespace {

LbfgsProblem quadratic(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    LbfgsProblem p;
    p.value_and_gradient = [a, b](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = a * x - b;
        return 0.5 * x.dot(a * x) - b.dot(x);
    };
    return p;
}

LbfgsProblem rosenbrock() {
    LbfgsProblem p;
    p.value_and_gradient = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double f = 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
        g.resize(2);
        g[0] = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
        g[1] = 200.0 * (x[1] - x[0] * x[0]);
        return f;
    };
    return p;
}

void check_strict_decrease(const LbfgsResult& res) {
    for (std::size_t i = 1; i < res.history.size(); ++i)
        CHECK(res.history[i].objective < res.history[i - 1].objective);
}

} // namespace

TEST_CASE("well-conditioned quadratic converges to the known minimizer") {
    Eigen::MatrixXd a(3, 3);
    a << 4, 1, 0, 1, 3, 1, 0, 1, 5;
    Eigen::VectorXd b(3);
    b << 1, -2, 3;
    const Eigen::VectorXd x_star = a.ldlt().solve(b);

    LbfgsConfig cfg;
    const LbfgsResult res = lbfgs_minimize(quadratic(a, b), Eigen::VectorXd::Zero(3), cfg);
    CHECK(res.stop == LbfgsStop::gradient_tolerance);
    CHECK((res.x - x_star).norm() < 1e-7);
    check_strict_decrease(res);
}

TEST_CASE("ill-conditioned diagonal quadratic still reaches tolerance") {
    const int n = 50;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = std::pow(10.0, 4.0 * i / (n - 1)); // cond 1e4
    Eigen::VectorXd b = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd x_star = a.diagonal().cwiseInverse();

    // backtracking-only line search gives a linear rate here, and the smallest
    // representable strict decrease near the minimum bounds the reachable
    // gradient norm at about sqrt(eps |f| a_max) ~ 3e-6, so ask for 1e-5
    LbfgsConfig cfg;
    cfg.max_iterations = 3000;
    cfg.grad_tol = 1e-5;
    const LbfgsResult res = lbfgs_minimize(quadratic(a, b), Eigen::VectorXd::Zero(n), cfg);
    CHECK(res.stop == LbfgsStop::gradient_tolerance);
    CHECK((res.x - x_star).norm() < 1e-4);
    check_strict_decrease(res);
}

TEST_CASE("rosenbrock from the classic start reaches the global minimum") {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    LbfgsConfig cfg;
    cfg.max_iterations = 500;
    cfg.grad_tol = 1e-10;
    const LbfgsResult res = lbfgs_minimize(rosenbrock(), x0, cfg);
    CHECK(res.objective < 1e-12);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-5);
    CHECK(std::abs(res.x[1] - 1.0) < 1e-5);
    check_strict_decrease(res);
}

TEST_CASE("an already-optimal start terminates with only the initial history row") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
    const LbfgsResult res = lbfgs_minimize(quadratic(a, b), Eigen::VectorXd::Zero(4),
                                           LbfgsConfig{});
    CHECK(res.stop == LbfgsStop::gradient_tolerance);
    CHECK(res.history.size() == 1);
    CHECK(res.history[0].grad_norm == 0.0);
    CHECK(res.objective == 0.0);
}

TEST_CASE("an inconsistent gradient is reported as an error at the first iteration") {
    LbfgsProblem p;
    p.value_and_gradient = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = -2.0 * x; // wrong sign: claims descent uphill
        return x.squaredNorm();
    };
    Eigen::VectorXd x0(1);
    x0 << 3.0;
    CHECK_THROWS_AS(lbfgs_minimize(p, x0, LbfgsConfig{}), NumericalError);
}

TEST_CASE("a throwing trial evaluation is treated as a rejected step") {
    // value refuses any point outside |x| <= 2.5; the first full step from 2
    // toward 0 overshoots that region only if scaled badly, so force a reject
    // by refusing x < 0.5 as well and watch the optimizer still converge to
    // the constrained-feasible minimum at 1
    LbfgsProblem p;
    auto f = [](const Eigen::VectorXd& x) { return (x[0] - 1.0) * (x[0] - 1.0); };
    p.value = [f](const Eigen::VectorXd& x) {
        if (x[0] < 0.5 || x[0] > 2.5) throw ConvergenceError("outside the trusted region");
        return f(x);
    };
    p.value_and_gradient = [f](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g.resize(1);
        g[0] = 2.0 * (x[0] - 1.0);
        return f(x);
    };
    Eigen::VectorXd x0(1);
    x0 << 2.4;
    LbfgsConfig cfg;
    cfg.grad_tol = 1e-12;
    const LbfgsResult res = lbfgs_minimize(p, x0, cfg);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-6);
    check_strict_decrease(res);
}

TEST_CASE("two runs with identical inputs produce identical histories") {
    Eigen::MatrixXd a(3, 3);
    a << 6, 2, 1, 2, 5, 2, 1, 2, 4;
    Eigen::VectorXd b(3);
    b << -1, 0, 2;
    Eigen::VectorXd x0(3);
    x0 << 10, -10, 4;
    const LbfgsResult r1 = lbfgs_minimize(quadratic(a, b), x0, LbfgsConfig{});
    const LbfgsResult r2 = lbfgs_minimize(quadratic(a, b), x0, LbfgsConfig{});
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].objective == r2.history[i].objective);
        CHECK(r1.history[i].grad_norm == r2.history[i].grad_norm);
        CHECK(r1.history[i].step == r2.history[i].step);
    }
    CHECK(r1.x == r2.x);
}

TEST_CASE("configuration validation") {
    LbfgsConfig bad;
    bad.memory = 0;
    CHECK_THROWS_AS(
        lbfgs_minimize(rosenbrock(), Eigen::VectorXd::Zero(2), bad), ConfigError);
    LbfgsProblem empty;
    CHECK_THROWS_AS(
        lbfgs_minimize(empty, Eigen::VectorXd::Zero(2), LbfgsConfig{}), ConfigError);
}
