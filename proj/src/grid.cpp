#include "fiml/grid.hpp"

#include <cmath>
#include <sstream>

#include "fiml/errors.hpp"

namespace fiml {

namespace {

// Clustered coordinate on [0,1] with xi in [0,1]; s = 0 degrades to identity.
double cluster_wall(double xi, double s) {
    if (s < 1e-12) return xi;
    return 1.0 - std::tanh(s * (1.0 - xi)) / std::tanh(s);
}

double cluster_both(double xi, double s) {
    if (s < 1e-12) return xi;
    return 0.5 * (1.0 + std::tanh(s * (2.0 * xi - 1.0)) / std::tanh(s));
}

} // namespace

Grid1D build_grid(int n, double h, double stretch, bool half_channel) {
    if (n < 3) throw ConfigError("build_grid: need at least 3 nodes");
    if (!(h > 0.0)) throw ConfigError("build_grid: half-width must be positive");
    if (!(stretch >= 1.0)) throw ConfigError("build_grid: stretch must be >= 1");
    const double s = stretch - 1.0;

    Grid1D g;
    g.h = h;
    g.half_channel = half_channel;
    g.y.resize(n);
    g.d.resize(n);
    const double span = half_channel ? h : 2.0 * h;
    for (int j = 0; j < n; ++j) {
        const double xi = static_cast<double>(j) / (n - 1);
        g.y[j] = span * (half_channel ? cluster_wall(xi, s) : cluster_both(xi, s));
    }
    g.y[0] = 0.0;
    g.y[n - 1] = span;
    for (int j = 0; j < n; ++j)
        g.d[j] = half_channel ? g.y[j] : std::min(g.y[j], 2.0 * h - g.y[j]);
    for (int j = 1; j < n; ++j)
        if (!(g.y[j] > g.y[j - 1]))
            throw ConfigError("build_grid: node ordering collapsed (stretch too large for n)");
    return g;
}

double first_spacing_plus(const Grid1D& grid, double re_tau) {
    return grid.y[1] * re_tau / grid.h;
}

void check_wall_resolution(const Grid1D& grid, double re_tau, double stretch) {
    const double y1p = first_spacing_plus(grid, re_tau);
    if (y1p < 1.0) return;
    // find the node count that would resolve the wall with the same stretching
    int n_req = static_cast<int>(grid.n());
    while (n_req < 1 << 20) {
        n_req *= 2;
        Grid1D trial = build_grid(n_req, grid.h, stretch, grid.half_channel);
        if (first_spacing_plus(trial, re_tau) < 1.0) break;
    }
    std::ostringstream msg;
    msg << "grid under-resolves the wall: y1+ = " << y1p << " at Re_tau = " << re_tau
        << " (need y1+ < 1; increase n to about " << n_req
        << " or raise the stretch factor)";
    throw ConfigError(msg.str());
}

} // namespace fiml
