/// @file adjoint.hpp
/// @brief Discrete adjoint of the channel solver: transpose-Jacobian solve and
///        the objective gradient with respect to the production correction.
///
/// With the residual convention R(U; beta) = 0 at convergence and the adjoint
/// defined by [dR/dU]^T psi = -[dJ/dU]^T, the chain rule gives
///
///   dJ/dbeta_i = dJ_direct/dbeta_i + psi_nt,i * P_i
///
/// since dR_nt,i/dbeta_i = P_i (production enters the transport residual as
/// +beta_i P_i). The finite-difference oracle in the tests pins this sign.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiml/banded.hpp"
#include "fiml/channel_solver.hpp"
#include "fiml/objectives.hpp"

namespace fiml {

/// dR/dU at (state, beta), every entry checked finite. Throws NumericalError
/// naming the node and equation of a bad entry.
BandedMatrix assemble_jacobian(const FlowState& state, const Eigen::VectorXd& beta,
                               const Grid1D& grid, const ChannelCase& cs,
                               const SAConstants& constants);

struct AdjointSolution {
    Eigen::VectorXd psi; // full 2n vector, interleaved like the state

    /// The transport-equation subvector psi_nt, the part the beta gradient
    /// consumes.
    Eigen::VectorXd psi_nu_tilde() const;
};

/// Solve [dR/dU]^T psi = -dJdU by banded LU with iterative refinement until
/// the relative residual drops below 1e-12 (throws NumericalError with the
/// pivot ratio if refinement stalls).
AdjointSolution solve_adjoint(const BandedMatrix& jacobian, const Eigen::VectorXd& dJdU);

/// dJ/dbeta_i = dJdBeta_direct_i + psi_nt,i * production_i.
Eigen::VectorXd beta_gradient(const AdjointSolution& adj, const Eigen::VectorXd& production,
                              const Eigen::VectorXd& dJdBeta_direct);

/// Adjoint gradient of the full objective at beta, from one forward solve,
/// one adjoint solve, and the production profile.
struct GradientResult {
    Eigen::VectorXd gradient;
    ForwardSolution forward;
    ObjectiveParts objective;
};
GradientResult objective_gradient(const Eigen::VectorXd& beta, const Observation& obs,
                                  double lambda, const Grid1D& grid, const ChannelCase& cs,
                                  const SAConstants& constants, const SolverConfig& cfg,
                                  const FlowState* warm_start = nullptr);

// ============================================================================
// Finite-difference verification
// ============================================================================

struct GradCheckRow {
    int node = 0;
    double adjoint = 0.0;
    double fd = 0.0;
    double rel_err = 0.0; // |adjoint - fd| / max|fd| over the checked nodes
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    double max_rel_err = 0.0;
    double fd_scale = 0.0; // max|fd|
};

/// Central differences dJ/dbeta_i ~ (J(beta + h e_i) - J(beta - h e_i)) / 2h
/// with each probe re-converged from the base state at 1/100 of the solver
/// tolerance. Relative errors are measured against the largest FD component,
/// so near-zero gradient nodes do not blow up the ratio.
GradCheckReport gradient_check(const Eigen::VectorXd& beta, const Observation& obs,
                               double lambda, const Grid1D& grid, const ChannelCase& cs,
                               const SAConstants& constants, const SolverConfig& cfg,
                               const std::vector<int>& nodes, double fd_step = 1e-6);

/// Columns: node, adjoint, fd, rel_err.
void export_gradcheck_csv(const std::string& path, const GradCheckReport& report);

} // namespace fiml
