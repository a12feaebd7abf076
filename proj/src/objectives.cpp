#include "fiml/objectives.hpp"

#include <cmath>

#include "fiml/errors.hpp"

namespace fiml {

void Observation::validate(Eigen::Index n_nodes) const {
    if (kind == ObservationKind::scalar_cf) {
        if (!(cf_weight > 0.0)) throw ConfigError("scalar observation needs a positive weight");
        return;
    }
    if (profile.empty()) throw ConfigError("profile observation has no data");
    double wsum = 0.0;
    for (const auto& d : profile) {
        if (d.node < 0 || d.node >= n_nodes)
            throw ConfigError("profile datum node " + std::to_string(d.node) +
                              " is outside the grid");
        if (d.weight < 0.0) throw ConfigError("profile datum weights must be nonnegative");
        wsum += d.weight;
    }
    if (wsum == 0.0) throw ConfigError("profile observation weights are all zero");
}

namespace {

// trapezoidal weight of node i in the bulk-velocity integral, divided by span
double bulk_weight(const Grid1D& grid, int i) {
    const int n = static_cast<int>(grid.n());
    const double span = grid.half_channel ? grid.h : 2.0 * grid.h;
    double w = 0.0;
    if (i > 0) w += 0.5 * (grid.y[i] - grid.y[i - 1]);
    if (i < n - 1) w += 0.5 * (grid.y[i + 1] - grid.y[i]);
    return w / span;
}

} // namespace

ObjectiveParts objective_parts(const FlowState& state, const Eigen::VectorXd& beta,
                               const Observation& obs, double lambda, const Grid1D& grid,
                               const ChannelCase& cs, const SAConstants& constants) {
    obs.validate(grid.n());
    ObjectiveParts parts;
    if (obs.kind == ObservationKind::scalar_cf) {
        const double cf = skin_friction(state, grid, cs, constants).cf;
        const double diff = obs.cf_target - cf;
        parts.data_misfit = obs.cf_weight * diff * diff;
    } else {
        for (const auto& d : obs.profile) {
            const double diff = d.value - state.u[d.node];
            parts.data_misfit += d.weight * diff * diff;
        }
    }
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        parts.reg_term += lambda * (beta[i] - 1.0) * (beta[i] - 1.0);
    parts.value = parts.data_misfit + parts.reg_term;
    return parts;
}

Eigen::VectorXd objective_state_derivative(const FlowState& state, const Observation& obs,
                                           const Grid1D& grid, const ChannelCase& cs,
                                           const SAConstants& constants) {
    const int n = static_cast<int>(grid.n());
    obs.validate(n);
    Eigen::VectorXd dJdU = Eigen::VectorXd::Zero(2 * n);

    if (obs.kind == ObservationKind::velocity_profile) {
        for (const auto& d : obs.profile)
            dJdU[2 * d.node] += -2.0 * d.weight * (d.value - state.u[d.node]);
        return dJdU;
    }

    // scalar C_f = 2 tau_w / U_b^2 with the conservative wall shear
    const SkinFriction sf = skin_friction(state, grid, cs, constants);
    const double h1 = grid.y[1] - grid.y[0];
    const double nut0 = eddy_viscosity(state.nu_tilde[0], cs.nu, constants);
    const double nut1 = eddy_viscosity(state.nu_tilde[1], cs.nu, constants);
    const double ne = cs.nu + 0.5 * (nut0 + nut1);
    const double du = state.u[1] - state.u[0];

    const double dcf_dtau = 2.0 / (sf.u_bulk * sf.u_bulk);
    const double dcf_dub = -4.0 * sf.tau_wall / (sf.u_bulk * sf.u_bulk * sf.u_bulk);
    const double pref = -2.0 * obs.cf_weight * (obs.cf_target - sf.cf);

    // tau_w dependencies: u0, u1 through the face difference, nt0, nt1 through
    // the face viscosity
    dJdU[0] += pref * dcf_dtau * (-ne / h1);
    dJdU[2] += pref * dcf_dtau * (ne / h1);
    dJdU[1] += pref * dcf_dtau *
               (0.5 * d_eddy_viscosity_d_nu_tilde(state.nu_tilde[0], cs.nu, constants) * du / h1);
    dJdU[3] += pref * dcf_dtau *
               (0.5 * d_eddy_viscosity_d_nu_tilde(state.nu_tilde[1], cs.nu, constants) * du / h1);
    // U_b dependencies: every u node through the trapezoidal rule
    for (int i = 0; i < n; ++i) dJdU[2 * i] += pref * dcf_dub * bulk_weight(grid, i);
    return dJdU;
}

Eigen::VectorXd objective_beta_derivative(const Eigen::VectorXd& beta, double lambda) {
    return 2.0 * lambda * (beta.array() - 1.0).matrix();
}

} // namespace fiml
