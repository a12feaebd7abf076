#include "fiml/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "fiml/errors.hpp"

namespace fiml {

const char* to_string(LbfgsStop stop) {
    switch (stop) {
        case LbfgsStop::gradient_tolerance: return "gradient_tolerance";
        case LbfgsStop::max_iterations: return "max_iterations";
        case LbfgsStop::line_search_failure: return "line_search_failure";
    }
    return "unknown";
}

namespace {

struct Pair {
    Eigen::VectorXd s, y;
    double rho;
};

/// Two-loop recursion; H0 is the standard s'y/y'y scaling of the identity.
Eigen::VectorXd search_direction(const Eigen::VectorXd& grad, const std::deque<Pair>& pairs) {
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
        alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
        q -= alpha[i] * pairs[i].y;
    }
    if (!pairs.empty()) {
        const Pair& last = pairs.back();
        q *= last.s.dot(last.y) / last.y.dot(last.y);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double b = pairs[i].rho * pairs[i].y.dot(q);
        q += (alpha[i] - b) * pairs[i].s;
    }
    return -q;
}

} // namespace

LbfgsResult lbfgs_minimize(const LbfgsProblem& problem, const Eigen::VectorXd& x0,
                           const LbfgsConfig& cfg) {
    if (!problem.value_and_gradient)
        throw ConfigError("lbfgs_minimize: value_and_gradient callback is required");
    if (cfg.memory < 1 || cfg.max_iterations < 0 || !(cfg.armijo_c > 0.0) ||
        cfg.max_backtracks < 1)
        throw ConfigError("lbfgs_minimize: invalid optimizer configuration");

    int evals = 0;
    auto eval_value = [&](const Eigen::VectorXd& x) {
        ++evals;
        if (problem.value) return problem.value(x);
        Eigen::VectorXd unused;
        return problem.value_and_gradient(x, unused);
    };
    auto eval_both = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        ++evals;
        return problem.value_and_gradient(x, g);
    };

    LbfgsResult res;
    res.x = x0;
    res.objective = eval_both(res.x, res.gradient);
    res.history.push_back({0, res.objective, res.gradient.norm(), 0.0, evals});

    std::deque<Pair> pairs;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        if (res.gradient.norm() <= cfg.grad_tol) {
            res.stop = LbfgsStop::gradient_tolerance;
            return res;
        }

        const Eigen::VectorXd d = search_direction(res.gradient, pairs);
        const double slope = res.gradient.dot(d);
        // the two-loop direction is a descent direction whenever the curvature
        // pairs are; a nonnegative slope means stale curvature, so fall back
        const Eigen::VectorXd dir = slope < 0.0 ? d : Eigen::VectorXd(-res.gradient);
        const double dir_slope = slope < 0.0 ? slope : -res.gradient.squaredNorm();

        // unit step once the metric is calibrated; a length-capped first step
        double alpha = pairs.empty() ? 1.0 / std::max(1.0, dir.norm()) : 1.0;
        double f_trial = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x_trial;
        bool accepted = false;
        for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
            x_trial = res.x + alpha * dir;
            bool rejected = false;
            try {
                f_trial = eval_value(x_trial);
            } catch (const ConvergenceError&) {
                rejected = true;
            } catch (const NumericalError&) {
                rejected = true;
            }
            // strict decrease on top of the Armijo bound: at the floating
            // point floor the bound degenerates to f_trial <= f and would
            // accept zero-progress steps forever
            if (!rejected && std::isfinite(f_trial) && f_trial < res.objective &&
                f_trial <= res.objective + cfg.armijo_c * alpha * dir_slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }

        if (!accepted) {
            if (it == 1) {
                std::ostringstream msg;
                msg << "no descent along the negative gradient after " << cfg.max_backtracks
                    << " backtracks; the gradient is inconsistent with the objective";
                throw NumericalError(msg.str());
            }
            res.stop = LbfgsStop::line_search_failure;
            return res;
        }

        Eigen::VectorXd grad_new;
        const double f_new = eval_both(x_trial, grad_new);

        Pair p;
        p.s = x_trial - res.x;
        p.y = grad_new - res.gradient;
        const double sy = p.s.dot(p.y);
        if (sy > 1e-10 * p.s.norm() * p.y.norm()) { // curvature guard
            p.rho = 1.0 / sy;
            pairs.push_back(std::move(p));
            if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
        }

        res.x = std::move(x_trial);
        res.objective = f_new;
        res.gradient = std::move(grad_new);
        res.history.push_back({it, res.objective, res.gradient.norm(), alpha, evals});
    }

    res.stop = res.gradient.norm() <= cfg.grad_tol ? LbfgsStop::gradient_tolerance
                                                   : LbfgsStop::max_iterations;
    return res;
}

} // namespace fiml
