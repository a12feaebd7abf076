/// @file dataset.hpp
/// @brief External truth data: scalar skin-friction records or velocity
///        profiles read from CSV, validated, converted to physical units, and
///        mapped onto grid-node observations for the inverse problem.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiml/channel_solver.hpp"
#include "fiml/objectives.hpp"

namespace fiml {

/// Units of a profile file: wall units (y_plus, u_plus) are converted with the
/// case's nominal friction velocity and viscosity; physical files are taken
/// as-is.
enum class ProfileUnits { plus, physical };

struct ScalarRecord {
    std::string label;
    double re_tau = 0.0;
    double cf = 0.0;
};

struct TruthDataset {
    ObservationKind kind = ObservationKind::velocity_profile;
    std::string provenance; // free-form note; defaults to the source path

    // profile records, physical units after ingestion
    Eigen::VectorXd y;
    Eigen::VectorXd u;

    // scalar records
    std::vector<ScalarRecord> scalars;
};

/// Read a profile CSV whose header names a wall-normal column (y or y_plus)
/// and a velocity column (u or u_plus); either column may be in wall units
/// independently of the other. Rows must be finite, y nonnegative and strictly
/// increasing; violations raise ParseError with the file and 1-based line
/// number of the first offending row.
TruthDataset ingest_profile(const std::string& path, ProfileUnits units,
                            const ChannelCase& cs);

/// Read scalar records with columns (label, re_tau, cf); re_tau must be
/// positive and cf finite and positive.
TruthDataset ingest_scalars(const std::string& path);

/// Map a profile dataset onto grid nodes: each datum goes to its nearest node,
/// collisions keep the closer datum, and wall-node data are dropped (the
/// no-slip value carries no information). Weights follow the 1 percent
/// measurement-noise convention, 1/(0.01 u_ref)^2 with u_ref the RMS of the
/// surviving datum values.
Observation observation_from_profile(const TruthDataset& data, const Grid1D& grid);

/// Scalar observation from the record whose label matches the case label,
/// weighted 1/(0.01 cf)^2. Missing label lists the available ones.
Observation observation_from_scalar(const TruthDataset& data, const std::string& case_label);

} // namespace fiml
