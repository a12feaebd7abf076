/// @file config.hpp
/// @brief One TOML file describing a complete run: case, grid, solver, closure
///        constants, observation, inversion, training, features, augmentation,
///        gradient check, output root.
///
/// Loading is strict: unknown keys anywhere in the file are collected and
/// rejected in a single error, so a typo cannot silently fall back to a
/// default. Rendering writes every resolved value back out in canonical form;
/// reloading the rendered text reproduces the config exactly, which is what
/// lets a run directory's embedded config replay the run byte for byte.

#pragma once

#include <string>
#include <vector>

#include "fiml/augment.hpp"
#include "fiml/channel_solver.hpp"
#include "fiml/dataset.hpp"
#include "fiml/features.hpp"
#include "fiml/grid.hpp"
#include "fiml/inversion.hpp"
#include "fiml/neuralnet.hpp"
#include "fiml/objectives.hpp"

namespace fiml {

enum class ObservationSource { twin, file };

// Schema spellings of the enums, shared by the loader, the renderer, and the
// run summaries.
const char* observation_kind_name(ObservationKind kind);
const char* observation_source_name(ObservationSource source);
const char* profile_units_name(ProfileUnits units);
const char* train_algorithm_name(TrainAlgorithm algorithm);

/// What the inversion assimilates: either a synthetic observation generated
/// from the Gaussian-bump correction family, or an external CSV dataset.
struct ObservationSpec {
    ObservationKind kind = ObservationKind::scalar_cf;
    ObservationSource source = ObservationSource::twin;

    // twin source: beta_true(y) = 1 + amplitude * exp(-((y+ - center)/width)^2)
    double amplitude = -0.3;
    double center_plus = 30.0;
    double width_plus = 15.0;

    // file source
    std::string path;
    ProfileUnits units = ProfileUnits::physical;
    std::string scalar_label; // row selector for scalar datasets; empty: case label
};

struct TrainingSpec {
    TrainConfig config;
    std::vector<std::string> data; // training CSVs pooled into one set
};

/// Augmentation knobs plus where the network(s) come from. The solve-time
/// FeatureConfig is assembled from the shared [features] section so training
/// and prediction extract features identically.
struct AugmentSpec {
    double beta_lo = 0.0;
    double beta_hi = 2.0;
    double relaxation = 0.3;
    double beta_tol = 1e-8;
    std::string network;               // predict: one model file
    std::vector<std::string> networks; // ensemble: member model files

    AugmentConfig make_config(const FeatureConfig& features) const;
};

struct GradCheckSpec {
    std::vector<int> nodes; // probe nodes; empty picks a spread across the grid
    double step = 1e-6;     // central-difference step on beta
    double tolerance = 1e-5;
};

/// Everything a run needs, one struct field per TOML key.
struct RunConfig {
    ChannelCase channel;
    int grid_n = 129;
    double grid_stretch = 3.0;
    bool half_channel = true;
    SolverConfig solver;
    SAConstants constants;
    ObservationSpec observation;
    InversionConfig inversion;
    TrainingSpec training;
    FeatureConfig features;
    AugmentSpec augment;
    GradCheckSpec gradcheck;
    std::string output_root = "runs";

    Grid1D make_grid() const;

    /// Cross-field sanity beyond per-key type checks; throws ConfigError on
    /// the first violation.
    void validate() const;
};

/// Parse, apply defaults, and validate. nu defaults to h / re_tau so the
/// nominal friction velocity is 1 unless overridden.
RunConfig parse_run_config(const std::string& text, const std::string& source_name);
RunConfig load_run_config(const std::string& path);

/// Canonical TOML with every value resolved and explicit. Reloading the
/// rendered text yields a config equal to `cfg` field for field.
std::string render_run_config(const RunConfig& cfg);

} // namespace fiml
