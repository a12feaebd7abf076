/// @file features.hpp
/// @brief Locally non-dimensional flow features for the correction model.
///
/// Every feature is built from quantities available at a single node during a
/// running solve, made dimensionless with local scales, so a model trained on
/// one case carries over to any dynamically similar one. The canonical column
/// order is fixed; a boolean mask selects the subset a model actually uses.

#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiml/channel_solver.hpp"

namespace fiml {

inline constexpr int feature_count = 5;

/// Canonical feature ordering. s_over_omega is the strain-to-vorticity ratio,
/// identically 1 in parallel shear; it stays computable but is off by default.
enum class Feature : int {
    chi = 0,       // nu_tilde / nu
    omega_bar,     // d^2 Omega / (nu_tilde + nu)
    s_over_omega,  // S / Omega
    p_over_d,      // nondimensional production / destruction
    tau_ratio,     // nu_t |du/dy| / tau_wall
};

const char* feature_name(Feature f);

using FeatureMask = std::array<bool, feature_count>;

inline constexpr FeatureMask default_feature_mask = {true, true, false, true, true};

struct FeatureConfig {
    double eps = 1e-30;  // floor applied to denominators
    double cap = 1e4;    // upper clamp on every feature value
    FeatureMask active = default_feature_mask;
};

/// Per-node feature values in canonical column order plus the active mask.
struct FeatureTable {
    Eigen::MatrixXd values;  // n_nodes x feature_count
    FeatureMask active{};

    int active_count() const;
    std::vector<std::string> active_names() const;
    /// Active columns only, canonical order preserved.
    Eigen::MatrixXd active_values() const;
};

/// Extract all features from a flow state. The wall shear used by tau_ratio is
/// nu * du/dy at the y = 0 wall; a non-positive value means the state carries
/// no wall-bounded shear yet and extraction refuses it. Values are clamped to
/// [0, cap] after the eps floors.
FeatureTable extract_features(const FlowState& state, const Grid1D& grid,
                              const ChannelCase& cs, const SAConstants& constants,
                              const FeatureConfig& cfg = {});

/// Min-max map of active feature columns onto [0, 1], fit on training samples
/// and persisted with the network so prediction scales inputs identically.
struct FeatureScaler {
    FeatureMask active{};     // mask after constant-feature drops
    Eigen::VectorXd minimum;  // per active column, canonical order
    Eigen::VectorXd maximum;

    /// Scale the active columns of a full canonical-order value matrix.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& values) const;
};

/// Fit on stacked canonical-order samples (>= 2 rows). A requested feature
/// with zero spread carries no information: it is dropped from the mask and a
/// warning naming it is appended. All features constant is an error.
FeatureScaler fit_scaler(const Eigen::MatrixXd& samples, const FeatureMask& requested,
                         std::vector<std::string>* warnings = nullptr);

/// CSV with one column per active feature, named by the canonical header.
void export_feature_csv(const std::string& path, const FeatureTable& table);

} // namespace fiml
