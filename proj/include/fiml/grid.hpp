/// @file grid.hpp
/// @brief One-dimensional wall-normal grid with tanh clustering.

#pragma once

#include <Eigen/Dense>

namespace fiml {

/// Node coordinates for a channel of half-width h. Half-channel grids span
/// [0, h] with the last node on the centerline; full-channel grids span
/// [0, 2h] with walls at both ends. d holds the distance to the nearest wall.
struct Grid1D {
    Eigen::VectorXd y;
    Eigen::VectorXd d;
    double h = 1.0;
    bool half_channel = true;

    Eigen::Index n() const { return y.size(); }
};

/// Build a grid with n nodes. stretch = 1 gives uniform spacing; larger values
/// cluster nodes at the wall(s) via y ~ tanh((stretch - 1) * xi). Requires
/// n >= 3 and stretch >= 1.
Grid1D build_grid(int n, double h, double stretch, bool half_channel = true);

/// First off-wall node in wall units, y_1 * u_tau / nu = y_1 * Re_tau / h.
double first_spacing_plus(const Grid1D& grid, double re_tau);

/// Throws ConfigError naming the required node count when the first off-wall
/// spacing fails y1+ < 1 at the given friction Reynolds number.
void check_wall_resolution(const Grid1D& grid, double re_tau, double stretch);

} // namespace fiml
