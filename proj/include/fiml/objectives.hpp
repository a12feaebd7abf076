/// @file objectives.hpp
/// @brief Observation functionals for the inverse problem: a scalar
///        skin-friction datum or a velocity-profile datum set, plus the
///        Tikhonov term pulling beta toward 1.
///
/// J(beta) = sum_j w_j (G_exp,j - G_j(U(beta)))^2 + lambda * sum_n (beta_n - 1)^2
///
/// The data term reaches beta only through the converged state, so its state
/// derivative dJ/dU is what the adjoint solve consumes; the regularization
/// derivative 2 lambda (beta - 1) enters the gradient directly.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fiml/channel_solver.hpp"

namespace fiml {

enum class ObservationKind { scalar_cf, velocity_profile };

/// One profile measurement tied to a grid node.
struct ProfileDatum {
    int node = 0;
    double value = 0.0;
    double weight = 1.0;
};

struct Observation {
    ObservationKind kind = ObservationKind::scalar_cf;
    // scalar kind
    double cf_target = 0.0;
    double cf_weight = 1.0;
    // profile kind
    std::vector<ProfileDatum> profile;

    /// Throws ConfigError unless there is at least one datum with nonnegative
    /// weights, not all zero, and profile nodes lie inside [0, n).
    void validate(Eigen::Index n_nodes) const;
};

struct ObjectiveParts {
    double value = 0.0;
    double data_misfit = 0.0;
    double reg_term = 0.0;
};

/// Misfit and regularization evaluated at a converged state.
ObjectiveParts objective_parts(const FlowState& state, const Eigen::VectorXd& beta,
                               const Observation& obs, double lambda, const Grid1D& grid,
                               const ChannelCase& cs, const SAConstants& constants);

/// dJ_data/dU over the interleaved 2n state (the regularization term does not
/// touch U).
Eigen::VectorXd objective_state_derivative(const FlowState& state, const Observation& obs,
                                           const Grid1D& grid, const ChannelCase& cs,
                                           const SAConstants& constants);

/// dJ_reg/dbeta = 2 lambda (beta - 1), the direct beta dependence.
Eigen::VectorXd objective_beta_derivative(const Eigen::VectorXd& beta, double lambda);

} // namespace fiml
