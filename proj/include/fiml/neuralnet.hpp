/// @file neuralnet.hpp
/// @brief Feed-forward network mapping scaled flow features to a production
///        correction, with from-scratch training and JSON persistence.
///
/// The network is small and dense: sigmoid hidden layers, a linear scalar
/// output (the correction exceeds 1 in parts of the channel, so a saturating
/// output would be wrong), and the feature scaler embedded so a saved model
/// file is self-contained.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiml/features.hpp"

namespace fiml {

enum class Activation { sigmoid, linear };

const char* activation_name(Activation a);

struct MlpNetwork {
    std::vector<int> layer_sizes;          // [inputs, hidden..., 1]
    std::vector<Eigen::MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
    std::vector<Eigen::VectorXd> biases;   // biases[l]: sizes[l+1]
    std::vector<Activation> activations;   // one per non-input layer
    FeatureScaler scaler;                  // maps canonical feature values to inputs

    // training provenance
    unsigned seed = 0;
    int epochs_trained = 0;
    double train_sse = 0.0;
    double validation_sse = 0.0;

    /// Shape consistency; throws ConfigError on a malformed network.
    void validate() const;

    /// Evaluate scaled inputs, one sample per row; scalar output per sample.
    Eigen::VectorXd forward(const Eigen::MatrixXd& scaled_rows) const;
    double forward_one(const Eigen::VectorXd& scaled) const;

    /// Apply the embedded scaler to canonical-order feature values, then
    /// evaluate. This is the path a predictive solve uses.
    Eigen::VectorXd predict(const Eigen::MatrixXd& canonical_values) const;
};

/// Seeded construction: weights uniform in +-1/sqrt(fan-in), biases zero.
MlpNetwork make_network(const std::vector<int>& layer_sizes, unsigned seed);

// ============================================================================
// Training data
// ============================================================================

/// Pooled (features, beta) samples from one or more inversions. Feature values
/// are raw (pre-scaler) in canonical column order; inactive columns are zero.
struct TrainingSet {
    Eigen::MatrixXd features; // n x feature_count
    FeatureMask active = default_feature_mask;
    Eigen::VectorXd beta;
    std::vector<std::string> case_labels;

    Eigen::Index size() const { return beta.size(); }
};

/// Append one case's nodes. The first append fixes the active mask; later
/// appends must match it.
void append_case(TrainingSet& set, const FeatureTable& table, const Eigen::VectorXd& beta,
                 const std::string& label);

/// CSV with the active feature columns, then beta, then the case label.
void write_training_csv(const std::string& path, const TrainingSet& set);
TrainingSet read_training_csv(const std::string& path);

// ============================================================================
// Training
// ============================================================================

enum class TrainAlgorithm { rprop, sgd_momentum };

struct TrainConfig {
    std::vector<int> hidden = {100, 100, 100};
    TrainAlgorithm algorithm = TrainAlgorithm::rprop;
    int max_epochs = 5000;
    int patience = 500;              // epochs without validation improvement
    double validation_fraction = 0.2;
    unsigned seed = 1;

    // sign-based adaptive steps (full-batch)
    double rprop_step0 = 0.01;
    double rprop_step_min = 1e-9;
    double rprop_step_max = 1.0;
    double rprop_grow = 1.2;
    double rprop_shrink = 0.5;

    // gradient descent alternative (full-batch)
    double learning_rate = 1e-3;
    double momentum = 0.9;
};

struct EpochStats {
    int epoch = 0; // 1-based, after that epoch's update
    double train_sse = 0.0;
    double validation_sse = 0.0;
};

struct TrainResult {
    MlpNetwork network; // weight snapshot with the lowest validation SSE
    std::vector<EpochStats> history;
    std::vector<std::string> warnings; // dropped-feature notes from the scaler fit
};

/// Full-batch training on an internally held-out validation split (seeded,
/// disjoint, exhaustive). The scaler is fit on the training split and embedded
/// in the returned network. Throws NumericalError naming the epoch if the
/// loss turns non-finite.
TrainResult train_network(const TrainingSet& set, const TrainConfig& cfg);

/// Analytic SSE weight gradients against central finite differences over every
/// weight and bias; returns the max error relative to the largest finite
/// difference magnitude.
double backprop_gradcheck(const MlpNetwork& net, const Eigen::MatrixXd& scaled_rows,
                          const Eigen::VectorXd& targets);

// ============================================================================
// Persistence
// ============================================================================

/// Versioned JSON; numbers round-trip bit-exactly.
void save_network(const std::string& path, const MlpNetwork& net);
MlpNetwork load_network(const std::string& path);

} // namespace fiml
