/// @file channel_solver.hpp
/// @brief Steady fully developed turbulent channel flow with a per-node
///        production correction.
///
/// Unknowns are the streamwise velocity u(y) and the working viscosity
/// nu_tilde(y) on a wall-normal grid, driven by a constant pressure gradient
/// dP/dx = -u_tau^2 / h (per unit density). The transport equation's
/// production term is multiplied by a spatial field beta(y); beta == 1 is the
/// baseline model.
///
/// The residual vector interleaves the two equations per node,
/// [R_u0, R_nt0, R_u1, R_nt1, ...], which keeps dR/dU banded with bandwidth 3.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiml/banded.hpp"
#include "fiml/grid.hpp"
#include "fiml/sa_closure.hpp"

namespace fiml {

/// Flow condition. The friction Reynolds number fixes the forcing through the
/// nominal friction velocity u_tau = Re_tau * nu / h.
struct ChannelCase {
    std::string label = "case";
    double re_tau = 550.0;
    double nu = 1.0 / 550.0;
    double h = 1.0;

    double u_tau() const { return re_tau * nu / h; }
    double dpdx() const { return -u_tau() * u_tau() / h; }
};

/// Pseudo-time marching controls. The step starts at dt_init, grows by
/// dt_growth while the residual falls or rises only mildly, and halves when
/// it jumps; at large dt the scheme is Newton's method on the steady residual.
struct SolverConfig {
    double tol = 1e-10;
    int max_steps = 20000;
    double dt_init = 1e-4;
    double dt_growth = 2.0;
    double dt_max = 1e12;
    double initial_nu_tilde_factor = 3.0;
};

struct FlowState {
    Eigen::VectorXd u;
    Eigen::VectorXd nu_tilde;
};

/// Volume-weighted L2 norms of the residual (the discrete integral norm, so
/// clustered near-wall cells are not over-counted), non-dimensionalized by
/// u_tau^2/h (momentum) and u_tau^2 (transport) so tolerances mean the same
/// thing across cases.
struct ResidualNorms {
    double momentum = 0.0;
    double transport = 0.0;
    double max_norm() const { return momentum > transport ? momentum : transport; }
};

struct ForwardSolution {
    FlowState state;
    int iterations = 0;
    ResidualNorms final_residual;
    std::vector<ResidualNorms> history;
};

// ============================================================================
// Assembly
// ============================================================================

/// Steady residual R(U; beta) and, when requested, the exact Jacobian dR/dU.
/// Wall rows carry the Dirichlet conditions as R = -(value); interior rows are
/// conservative second-order differences; the half-channel centerline row is a
/// half-cell balance with zero symmetry flux.
void assemble_residual(const FlowState& state, const Eigen::VectorXd& beta,
                       const Grid1D& grid, const ChannelCase& cs,
                       const SAConstants& constants, Eigen::VectorXd& residual,
                       BandedMatrix* jacobian = nullptr);

/// Production P_i = cb1 * Omega_tilde_i * nt_i per node (zero on wall rows),
/// evaluated exactly as the residual assembly does. dR_nt_i/dbeta_i = P_i.
Eigen::VectorXd production_profile(const FlowState& state, const Grid1D& grid,
                                   const ChannelCase& cs, const SAConstants& constants);

ResidualNorms residual_norms(const Eigen::VectorXd& residual, const Grid1D& grid,
                             const ChannelCase& cs);

// ============================================================================
// Forward solve
// ============================================================================

/// Quiescent start: u = 0, nu_tilde = factor * nu in the interior, walls pinned.
FlowState initial_state(const Grid1D& grid, const ChannelCase& cs, const SolverConfig& cfg);

/// Implicit backward-Euler pseudo-time marching to the steady state. Throws
/// ConvergenceError (with the residual history) on NaN or step exhaustion.
ForwardSolution solve_forward(const Grid1D& grid, const ChannelCase& cs,
                              const SAConstants& constants, const SolverConfig& cfg,
                              const Eigen::VectorXd& beta,
                              const FlowState* warm_start = nullptr);

/// One implicit step at a time for callers that change beta between steps.
/// Owns the adaptive step-size controller and the residual history, so the
/// baseline solve and the network-in-the-loop solve march with identical
/// mechanics. Holds references to its constructor arguments.
class PseudoTimeStepper {
public:
    PseudoTimeStepper(const Grid1D& grid, const ChannelCase& cs,
                      const SAConstants& constants, const SolverConfig& cfg);

    /// Assemble residual and Jacobian at (state, beta), append the norms to
    /// the history, and return them. Throws ConvergenceError carrying the
    /// history when the residual turns non-finite.
    ResidualNorms evaluate(const FlowState& state, const Eigen::VectorXd& beta);

    /// Advance state by one backward-Euler step from the residual of the last
    /// evaluate call; each advance must be preceded by its own evaluate.
    void advance(FlowState& state);

    const std::vector<ResidualNorms>& history() const { return history_; }
    std::vector<double> history_max_norms() const;

private:
    const Grid1D& grid_;
    const ChannelCase& case_;
    const SAConstants& constants_;
    const SolverConfig& config_;
    Eigen::VectorXd residual_;
    BandedMatrix jacobian_;
    std::vector<ResidualNorms> history_;
    double dt_;
    double prev_norm_ = 0.0;
    bool advanced_once_ = false;
    bool residual_current_ = false;
};

// ============================================================================
// Diagnostics
// ============================================================================

/// du/dy at the y = 0 wall from the one-sided second-order three-point stencil.
double wall_velocity_gradient(const FlowState& state, const Grid1D& grid);

/// du/dy at every node from the same stencils the assembly uses (one-sided at
/// walls, central in the interior, identically zero at a symmetry centerline).
Eigen::VectorXd velocity_gradient_profile(const FlowState& state, const Grid1D& grid);

/// Wall shear stress consistent with the conservative discretization: the
/// first face flux plus the forcing carried by the wall half-cell. At a
/// converged state this equals -dP/dx * h to solver tolerance, free of the
/// truncation error a one-sided gradient stencil would add.
double wall_shear(const FlowState& state, const Grid1D& grid, const ChannelCase& cs,
                  const SAConstants& constants);

double bulk_velocity(const FlowState& state, const Grid1D& grid);

struct SkinFriction {
    double cf = 0.0;
    double tau_wall = 0.0;
    double u_bulk = 0.0;
};

/// C_f = 2 tau_w / U_b^2 with the conservative tau_w. Errors on a degenerate
/// (zero bulk velocity) state.
SkinFriction skin_friction(const FlowState& state, const Grid1D& grid, const ChannelCase& cs,
                           const SAConstants& constants);

struct WallUnits {
    Eigen::VectorXd y_plus;
    Eigen::VectorXd u_plus;
    double u_tau = 0.0; // from the converged state's wall shear, not the nominal forcing
};

WallUnits wall_units(const FlowState& state, const Grid1D& grid, const ChannelCase& cs,
                     const SAConstants& constants);

/// Acceleration parameter (displacement thickness / tau_w) * dP/dx. Zero for
/// zero forcing or zero displacement thickness; errors on a zero centerline
/// velocity with nonzero forcing.
double pressure_gradient_parameter(const FlowState& state, const Grid1D& grid,
                                   const ChannelCase& cs, const SAConstants& constants);

// ============================================================================
// Artifacts
// ============================================================================

/// Columns: y, y_plus, u, u_plus, nu_tilde, nu_t, beta.
void export_state_csv(const std::string& path, const FlowState& state,
                      const Grid1D& grid, const ChannelCase& cs,
                      const SAConstants& constants, const Eigen::VectorXd& beta);

/// Columns: iteration, res_momentum, res_nu_tilde.
void export_history_csv(const std::string& path, const std::vector<ResidualNorms>& history);

} // namespace fiml
