/// @file inversion.hpp
/// @brief Regularized field inversion: minimize the observation misfit plus a
///        Tikhonov pull toward beta = 1 over the per-node production
///        correction, and the twin-experiment harness that verifies recovery
///        of a known correction field from synthetic data.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fiml/adjoint.hpp"
#include "fiml/channel_solver.hpp"
#include "fiml/lbfgs.hpp"
#include "fiml/objectives.hpp"

namespace fiml {

struct InversionConfig {
    double lambda = 4e-4;
    LbfgsConfig optimizer;
    /// Nodes count as identifiable when |dJ/dbeta_i| at beta = 1 exceeds this
    /// fraction of the largest component.
    double sensitivity_threshold = 0.01;
};

struct InversionResult {
    Eigen::VectorXd beta_opt;
    ObjectiveParts initial;           // at beta = 1
    ObjectiveParts final;             // at beta_opt
    Eigen::VectorXd initial_gradient; // dJ/dbeta at beta = 1
    std::vector<LbfgsIterate> history;
    LbfgsStop stop = LbfgsStop::max_iterations;
    ForwardSolution solution;         // converged at beta_opt
};

/// Minimize J(beta) from beta = 1 with warm-started forward solves: each
/// objective evaluation restarts from the most recent converged state, which
/// only changes cost, not the converged answers.
InversionResult invert(const Observation& obs, const InversionConfig& inv,
                       const Grid1D& grid, const ChannelCase& cs,
                       const SAConstants& constants, const SolverConfig& solver);

/// Indices with |gradient_i| > threshold * max|gradient|. Empty when the
/// gradient is identically zero.
std::vector<int> sensitive_nodes(const Eigen::VectorXd& gradient, double threshold);

// ============================================================================
// Twin experiments
// ============================================================================

/// The bump family used throughout verification:
/// beta(y) = 1 + amplitude * exp(-((y_plus - center)/width)^2) with y_plus
/// from the nominal friction velocity.
Eigen::VectorXd gaussian_bump_beta(const Grid1D& grid, const ChannelCase& cs,
                                   double amplitude = -0.3, double center_plus = 30.0,
                                   double width_plus = 15.0);

/// Synthetic observation from a converged truth solve. Weights follow a
/// measurement-noise reading: unit variance at a 1 percent standard deviation
/// of the skin friction (scalar) or of the bulk velocity (profile, all
/// off-wall nodes).
Observation synthesize_observation(ObservationKind kind, const ForwardSolution& truth,
                                   const Grid1D& grid, const ChannelCase& cs,
                                   const SAConstants& constants);

struct TwinReport {
    Eigen::VectorXd beta_true;
    Eigen::VectorXd beta_opt;
    double cf_truth = 0.0;
    double cf_baseline = 0.0;  // beta = 1
    double cf_recovered = 0.0; // beta_opt
    double misfit_initial = 0.0;
    double misfit_final = 0.0;
    double misfit_reduction_percent = 0.0;
    /// Volume-weighted RMS of u - u_truth over the channel, as a percentage of
    /// the truth bulk velocity.
    double u_rms_baseline_percent = 0.0;
    double u_rms_recovered_percent = 0.0;
    std::vector<int> sensitive;
    double beta_rms_sensitive = 0.0; // RMS of beta_opt - beta_true over `sensitive`
    ForwardSolution truth_solution;
    InversionResult inversion;
};

/// Generate data at beta_true, invert from beta = 1, report recovery quality.
TwinReport twin_experiment(const Eigen::VectorXd& beta_true, ObservationKind kind,
                           const InversionConfig& inv, const Grid1D& grid,
                           const ChannelCase& cs, const SAConstants& constants,
                           const SolverConfig& solver);

/// Volume-weighted relative RMS between two velocity profiles, in percent of
/// the reference bulk velocity.
double profile_rms_percent(const Eigen::VectorXd& u, const Eigen::VectorXd& u_ref,
                           const Grid1D& grid);

struct EquivalenceReport {
    TwinReport scalar_run;
    TwinReport profile_run;
    double u_rms_between_percent = 0.0;     // recovered profiles against each other
    double beta_rms_between_sensitive = 0.0; // over the intersection of sensitive sets
    std::vector<int> common_sensitive;
};

/// Invert the same twin case under both observation kinds and compare the
/// recovered solutions.
EquivalenceReport objective_equivalence_study(const Eigen::VectorXd& beta_true,
                                              const InversionConfig& inv, const Grid1D& grid,
                                              const ChannelCase& cs,
                                              const SAConstants& constants,
                                              const SolverConfig& solver);

struct LambdaSweepEntry {
    double lambda = 0.0;
    double cf_recovered = 0.0;
    double beta_distance = 0.0; // ||beta_opt - 1||_2
    double misfit_reduction_percent = 0.0;
};

/// Rerun a twin inversion across regularization weights.
std::vector<LambdaSweepEntry> lambda_sweep(const Eigen::VectorXd& beta_true,
                                           ObservationKind kind,
                                           const std::vector<double>& lambdas,
                                           const InversionConfig& base, const Grid1D& grid,
                                           const ChannelCase& cs, const SAConstants& constants,
                                           const SolverConfig& solver);

} // namespace fiml
