/// @file augment.hpp
/// @brief The predictive closed-loop solver: every pseudo-time step advances
///        the flow, re-extracts features from the current iterate, queries the
///        correction network, and relaxes the per-node correction toward the
///        clamped output, until flow and correction are mutually converged.
///
/// The correction starts at the neutral value 1 and each update blends in a
/// fraction of the clamped network suggestion, so every iterate is a convex
/// combination of 1 and in-bounds values: the field never leaves the clamp
/// interval. A network that returns exactly 1 leaves the correction untouched
/// and the march reproduces the baseline solve bit for bit.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiml/channel_solver.hpp"
#include "fiml/errors.hpp"
#include "fiml/features.hpp"
#include "fiml/neuralnet.hpp"
#include "fiml/objectives.hpp"

namespace fiml {

struct AugmentConfig {
    double beta_lo = 0.0;    // negative production destabilizes the closure
    double beta_hi = 2.0;
    double relaxation = 0.3; // fraction of the suggestion blended in per step
    double beta_tol = 1e-8;  // convergence threshold on the inf-norm change
    FeatureConfig features;  // eps and cap; the mask is the network scaler's

    /// Bounds ordered and containing 1 (the starting field), relaxation in
    /// (0, 1], positive tolerance.
    void validate() const;
};

struct AugmentedRun {
    FlowState state;
    Eigen::VectorXd beta; // final relaxed-and-clamped correction field
    int iterations = 0;
    ResidualNorms final_residual;
    std::vector<ResidualNorms> history;
    std::vector<double> beta_change; // inf-norm step after each network update
    AugmentConfig config;            // as run, with the scaler's feature mask

    // query-cost accounting; seconds are wall clock, for logs only, never for
    // artifacts that must reproduce byte for byte
    long long network_queries = 0;
    long long network_samples = 0;
    double network_seconds = 0.0;
};

/// Augmented solve failure; carries the flow residual history (base class)
/// and the correction-change history.
class AugmentedConvergenceError : public ConvergenceError {
public:
    AugmentedConvergenceError(const std::string& msg, std::vector<double> residuals,
                              std::vector<double> beta_changes)
        : ConvergenceError(msg, std::move(residuals)),
          beta_change_history(std::move(beta_changes)) {}
    std::vector<double> beta_change_history;
};

/// March to a state consistent with the network: advance one implicit step,
/// extract features, blend the clamped prediction into the correction field,
/// repeat until the flow residual and the correction change are both below
/// tolerance. Throws AugmentedConvergenceError on step exhaustion.
AugmentedRun solve_augmented(const MlpNetwork& net, const Grid1D& grid, const ChannelCase& cs,
                             const SAConstants& constants, const SolverConfig& solver,
                             const AugmentConfig& cfg = {});

// ============================================================================
// Comparison against the baseline model
// ============================================================================

/// Weighted RMS of u minus the datum values over a velocity-profile
/// observation, as a percentage of the data's own weighted RMS level. Scalar
/// observations carry no profile and are refused.
double observation_rms_percent(const Eigen::VectorXd& u, const Observation& obs);

struct AugmentComparison {
    ForwardSolution baseline; // beta = 1
    AugmentedRun augmented;
    SkinFriction cf_baseline;
    SkinFriction cf_augmented;
    double misfit_baseline = 0.0; // pure data misfit against the observation
    double misfit_augmented = 0.0;
    double u_rms_baseline_percent = 0.0; // zero for a scalar observation
    double u_rms_augmented_percent = 0.0;
    int iterations_baseline = 0;
    int iterations_augmented = 0;
    double iteration_ratio = 0.0; // augmented over baseline
};

/// Cold-start both solves and score them against the same observation.
AugmentComparison compare_with_baseline(const MlpNetwork& net, const Observation& truth,
                                        const Grid1D& grid, const ChannelCase& cs,
                                        const SAConstants& constants,
                                        const SolverConfig& solver,
                                        const AugmentConfig& cfg = {});

// ============================================================================
// Ensemble prediction
// ============================================================================

struct EnsembleMember {
    std::size_t index = 0; // position in the input collection
    bool converged = false;
    std::string error; // failure text when not converged
    double cf = 0.0;
    int iterations = 0;
    Eigen::VectorXd u;
    Eigen::VectorXd beta;
    long long network_queries = 0;
};

struct EnsembleReport {
    std::vector<EnsembleMember> members; // input order
    int survivors = 0;
    double cf_min = 0.0;
    double cf_max = 0.0;
    double cf_mean = 0.0;
    Eigen::VectorXd u_min; // nodewise over the surviving members
    Eigen::VectorXd u_max;
    Eigen::VectorXd u_mean;
};

/// Run solve_augmented once per network, members concurrently with isolated
/// state. A member failure is recorded in its slot and the run continues; at
/// least 2 networks in and 2 survivors out are required (ConfigError and
/// ConvergenceError respectively).
EnsembleReport ensemble_predict(const std::vector<MlpNetwork>& nets, const Grid1D& grid,
                                const ChannelCase& cs, const SAConstants& constants,
                                const SolverConfig& solver, const AugmentConfig& cfg = {});

} // namespace fiml
