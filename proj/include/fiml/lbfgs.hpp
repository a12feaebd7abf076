/// @file lbfgs.hpp
/// @brief Limited-memory BFGS with a backtracking Armijo line search.
///
/// The caller provides value and value-plus-gradient callbacks. Trial points
/// in the line search only need values; gradients are evaluated at accepted
/// iterates. A trial evaluation may throw ConvergenceError or NumericalError
/// (an inner solve that refuses the point); the line search treats that as a
/// rejected step and backtracks.

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace fiml {

struct LbfgsConfig {
    int memory = 10;
    int max_iterations = 200;
    double grad_tol = 1e-8;     // on the gradient 2-norm
    double armijo_c = 1e-4;
    int max_backtracks = 40;
};

struct LbfgsProblem {
    /// f(x). May be empty, in which case value_and_gradient is used with the
    /// gradient discarded.
    std::function<double(const Eigen::VectorXd&)> value;
    /// f(x) with the gradient written to the second argument.
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> value_and_gradient;
};

/// One row per iterate, starting with the initial point at iteration 0.
struct LbfgsIterate {
    int iteration = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;      // accepted line-search step (0 for the initial row)
    int evaluations = 0;    // cumulative objective evaluations
};

enum class LbfgsStop { gradient_tolerance, max_iterations, line_search_failure };

const char* to_string(LbfgsStop stop);

struct LbfgsResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd gradient;
    std::vector<LbfgsIterate> history;
    LbfgsStop stop = LbfgsStop::max_iterations;
};

/// Minimize starting from x0. Accepted iterates strictly decrease the
/// objective (Armijo with c > 0). Throws NumericalError if no descent is
/// achievable at the very first iteration: the search direction is the raw
/// negative gradient there, so failure means the gradient itself is wrong.
/// Later line-search failures terminate normally with the best point found.
LbfgsResult lbfgs_minimize(const LbfgsProblem& problem, const Eigen::VectorXd& x0,
                           const LbfgsConfig& cfg);

} // namespace fiml
