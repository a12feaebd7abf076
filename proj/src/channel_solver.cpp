#include "fiml/channel_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fiml/csv.hpp"
#include "fiml/errors.hpp"

namespace fiml {

namespace {

// ============================================================================
// Derivative stencils on the nonuniform grid
// ============================================================================

/// df/dy at one node as sum_k c[k] * f[idx[k]]; m = 0 encodes an identically
/// zero derivative (half-channel centerline, by symmetry).
struct GradStencil {
    int idx[3] = {0, 0, 0};
    double c[3] = {0.0, 0.0, 0.0};
    int m = 0;
};

double apply(const GradStencil& s, const Eigen::VectorXd& f) {
    double g = 0.0;
    for (int k = 0; k < s.m; ++k) g += s.c[k] * f[s.idx[k]];
    return g;
}

std::vector<GradStencil> gradient_stencils(const Grid1D& grid) {
    const int n = static_cast<int>(grid.n());
    const auto& y = grid.y;
    std::vector<GradStencil> out(n);

    { // wall, one-sided second order
        const double h1 = y[1] - y[0], h2 = y[2] - y[0];
        out[0] = {{0, 1, 2},
                  {-(h1 + h2) / (h1 * h2), h2 / (h1 * (h2 - h1)), -h1 / (h2 * (h2 - h1))},
                  3};
    }
    for (int i = 1; i + 1 < n; ++i) {
        const double dm = y[i] - y[i - 1], dp = y[i + 1] - y[i];
        out[i] = {{i - 1, i, i + 1},
                  {-dp / (dm * (dm + dp)), (dp - dm) / (dm * dp), dm / (dp * (dm + dp))},
                  3};
    }
    if (grid.half_channel) {
        out[n - 1] = GradStencil{}; // symmetry: derivative vanishes
    } else {
        const double h1 = y[n - 1] - y[n - 2], h2 = y[n - 1] - y[n - 3];
        out[n - 1] = {{n - 1, n - 2, n - 3},
                      {(h1 + h2) / (h1 * h2), -h2 / (h1 * (h2 - h1)), h1 / (h2 * (h2 - h1))},
                      3};
    }
    return out;
}

inline int row_u(int i) { return 2 * i; }
inline int row_nt(int i) { return 2 * i + 1; }

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

// ============================================================================
// Residual and Jacobian
// ============================================================================

void assemble_residual(const FlowState& state, const Eigen::VectorXd& beta,
                       const Grid1D& grid, const ChannelCase& cs,
                       const SAConstants& constants, Eigen::VectorXd& residual,
                       BandedMatrix* jacobian) {
    const int n = static_cast<int>(grid.n());
    if (state.u.size() != n || state.nu_tilde.size() != n || beta.size() != n)
        throw ConfigError("assemble_residual: state/beta size does not match the grid");

    const auto& y = grid.y;
    const auto& u = state.u;
    const auto& nt = state.nu_tilde;
    const double nu = cs.nu;
    const double dpdx = cs.dpdx();
    const SAConstants& c = constants;

    residual.setZero(2 * n);
    if (jacobian) {
        if (jacobian->rows() != 2 * n || jacobian->lower_bandwidth() != 3 ||
            jacobian->upper_bandwidth() != 3)
            *jacobian = BandedMatrix(2 * n, 3, 3);
        else
            jacobian->set_zero();
    }

    const auto stencils = gradient_stencils(grid);

    // nodal eddy viscosity and its nu_tilde derivative
    Eigen::VectorXd nut(n), dnut(n);
    for (int i = 0; i < n; ++i) {
        nut[i] = eddy_viscosity(nt[i], nu, c);
        dnut[i] = d_eddy_viscosity_d_nu_tilde(nt[i], nu, c);
    }

    // ---- wall rows (both walls for a full channel) ------------------------
    auto wall_row = [&](int i) {
        residual[row_u(i)] = -u[i];
        residual[row_nt(i)] = -nt[i];
        if (jacobian) {
            jacobian->add(row_u(i), row_u(i), -1.0);
            jacobian->add(row_nt(i), row_nt(i), -1.0);
        }
    };
    wall_row(0);
    if (!grid.half_channel) wall_row(n - 1);

    const int last_interior = grid.half_channel ? n - 1 : n - 2;

    for (int i = 1; i <= last_interior; ++i) {
        const bool centerline = grid.half_channel && i == n - 1;
        const double dm = y[i] - y[i - 1];
        const double dp = centerline ? 0.0 : y[i + 1] - y[i];
        const double w = centerline ? 0.5 * dm : 0.5 * (y[i + 1] - y[i - 1]);

        // ---- momentum: d/dy[(nu + nu_t) du/dy] - dP/dx --------------------
        const double nem = nu + 0.5 * (nut[i - 1] + nut[i]);
        const double nep = centerline ? 0.0 : nu + 0.5 * (nut[i] + nut[i + 1]);
        const double flux_m = nem * (u[i] - u[i - 1]) / dm;
        const double flux_p = centerline ? 0.0 : nep * (u[i + 1] - u[i]) / dp;
        residual[row_u(i)] = (flux_p - flux_m) / w - dpdx;

        if (jacobian) {
            const int r = row_u(i);
            jacobian->add(r, row_u(i - 1), nem / (dm * w));
            jacobian->add(r, row_u(i), -nem / (dm * w));
            jacobian->add(r, row_nt(i - 1), -0.5 * dnut[i - 1] * (u[i] - u[i - 1]) / (dm * w));
            jacobian->add(r, row_nt(i), -0.5 * dnut[i] * (u[i] - u[i - 1]) / (dm * w));
            if (!centerline) {
                jacobian->add(r, row_u(i + 1), nep / (dp * w));
                jacobian->add(r, row_u(i), -nep / (dp * w));
                jacobian->add(r, row_nt(i + 1), 0.5 * dnut[i + 1] * (u[i + 1] - u[i]) / (dp * w));
                jacobian->add(r, row_nt(i), 0.5 * dnut[i] * (u[i + 1] - u[i]) / (dp * w));
            }
        }

        // ---- transport ----------------------------------------------------
        const GradStencil& gs = stencils[i];
        const double du_dy = apply(gs, u);
        const double omega = std::abs(du_dy);
        const double sg = sgn(du_dy);
        const double dnt_dy = apply(gs, nt);

        const auto src = sa_source_terms(omega, nt[i], nu, grid.d[i], c);

        const double kem = nu + 0.5 * (nt[i - 1] + nt[i]);
        const double kep = centerline ? 0.0 : nu + 0.5 * (nt[i] + nt[i + 1]);
        const double fm = kem * (nt[i] - nt[i - 1]) / dm;
        const double fp = centerline ? 0.0 : kep * (nt[i + 1] - nt[i]) / dp;
        const double diffusion = (fp - fm) / w;

        residual[row_nt(i)] = beta[i] * src.production - src.destruction +
                              (diffusion + c.cb2 * dnt_dy * dnt_dy) / c.sigma;

        if (jacobian) {
            const int r = row_nt(i);
            // sources
            jacobian->add(r, row_nt(i),
                          beta[i] * src.dP_d_nu_tilde - src.dD_d_nu_tilde);
            const double dsrc_domega = beta[i] * src.dP_d_omega - src.dD_d_omega;
            if (dsrc_domega != 0.0 && sg != 0.0)
                for (int k = 0; k < gs.m; ++k)
                    jacobian->add(r, row_u(gs.idx[k]), dsrc_domega * sg * gs.c[k]);
            // diffusion: coefficient and difference parts
            jacobian->add(r, row_nt(i - 1), (kem - 0.5 * (nt[i] - nt[i - 1])) / (dm * w * c.sigma));
            jacobian->add(r, row_nt(i),
                          (-kem - 0.5 * (nt[i] - nt[i - 1])) / (dm * w * c.sigma));
            if (!centerline) {
                jacobian->add(r, row_nt(i + 1),
                              (kep + 0.5 * (nt[i + 1] - nt[i])) / (dp * w * c.sigma));
                jacobian->add(r, row_nt(i),
                              (-kep + 0.5 * (nt[i + 1] - nt[i])) / (dp * w * c.sigma));
            }
            // gradient-squared term
            const double q = 2.0 * c.cb2 * dnt_dy / c.sigma;
            if (q != 0.0)
                for (int k = 0; k < gs.m; ++k)
                    jacobian->add(r, row_nt(gs.idx[k]), q * gs.c[k]);
        }
    }
}

Eigen::VectorXd production_profile(const FlowState& state, const Grid1D& grid,
                                   const ChannelCase& cs, const SAConstants& constants) {
    const int n = static_cast<int>(grid.n());
    const auto stencils = gradient_stencils(grid);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    const int last_interior = grid.half_channel ? n - 1 : n - 2;
    for (int i = 1; i <= last_interior; ++i) {
        const double omega = std::abs(apply(stencils[i], state.u));
        p[i] = sa_source_terms(omega, state.nu_tilde[i], cs.nu, grid.d[i], constants)
                   .production;
    }
    return p;
}

ResidualNorms residual_norms(const Eigen::VectorXd& residual, const Grid1D& grid,
                             const ChannelCase& cs) {
    const int n = static_cast<int>(grid.n());
    if (residual.size() != 2 * n)
        throw ConfigError("residual_norms: residual size does not match the grid");
    const double ut2 = cs.u_tau() * cs.u_tau();
    const double scale_u = ut2 / cs.h;
    double su = 0.0, st = 0.0, span = 0.0;
    for (int i = 0; i < n; ++i) {
        const double yl = i == 0 ? grid.y[0] : 0.5 * (grid.y[i - 1] + grid.y[i]);
        const double yr = i == n - 1 ? grid.y[n - 1] : 0.5 * (grid.y[i] + grid.y[i + 1]);
        const double w = yr - yl;
        su += w * residual[row_u(i)] * residual[row_u(i)];
        st += w * residual[row_nt(i)] * residual[row_nt(i)];
        span += w;
    }
    return {std::sqrt(su / span) / scale_u, std::sqrt(st / span) / ut2};
}

// ============================================================================
// Forward solve
// ============================================================================

FlowState initial_state(const Grid1D& grid, const ChannelCase& cs, const SolverConfig& cfg) {
    const int n = static_cast<int>(grid.n());
    FlowState s;
    s.u = Eigen::VectorXd::Zero(n);
    s.nu_tilde = Eigen::VectorXd::Constant(n, cfg.initial_nu_tilde_factor * cs.nu);
    s.nu_tilde[0] = 0.0;
    if (!grid.half_channel) s.nu_tilde[n - 1] = 0.0;
    return s;
}

PseudoTimeStepper::PseudoTimeStepper(const Grid1D& grid, const ChannelCase& cs,
                                     const SAConstants& constants, const SolverConfig& cfg)
    : grid_(grid),
      case_(cs),
      constants_(constants),
      config_(cfg),
      jacobian_(2 * static_cast<int>(grid.n()), 3, 3),
      dt_(cfg.dt_init) {}

std::vector<double> PseudoTimeStepper::history_max_norms() const {
    std::vector<double> h;
    h.reserve(history_.size());
    for (const auto& r : history_) h.push_back(r.max_norm());
    return h;
}

ResidualNorms PseudoTimeStepper::evaluate(const FlowState& state, const Eigen::VectorXd& beta) {
    assemble_residual(state, beta, grid_, case_, constants_, residual_, &jacobian_);
    const ResidualNorms norms = residual_norms(residual_, grid_, case_);
    history_.push_back(norms);
    if (!std::isfinite(norms.max_norm())) {
        std::ostringstream msg;
        msg << "pseudo-time march for '" << case_.label
            << "' hit a non-finite residual at step " << history_.size() - 1;
        throw ConvergenceError(msg.str(), history_max_norms());
    }
    residual_current_ = true;
    return norms;
}

void PseudoTimeStepper::advance(FlowState& state) {
    if (!residual_current_)
        throw ConfigError("PseudoTimeStepper::advance needs a preceding evaluate");
    const int n = static_cast<int>(grid_.n());
    const double norm = history_.back().max_norm();
    if (advanced_once_) {
        // grow through decreases and mild transient rises (a warm start near a
        // neighboring solution sends a correction wave from the transport rows
        // into the momentum rows, lifting the max norm for a while); retreat
        // only on a genuine jump
        if (norm < 2.0 * prev_norm_)
            dt_ = std::min(dt_ * config_.dt_growth, config_.dt_max);
        else
            dt_ = std::max(0.5 * dt_, config_.dt_init * 1e-6);
    }
    prev_norm_ = norm;
    advanced_once_ = true;

    // (I/dt - J) dU = R
    BandedMatrix m(2 * n, 3, 3);
    for (int i = 0; i < 2 * n; ++i) {
        const int j0 = std::max(0, i - 3), j1 = std::min(2 * n - 1, i + 3);
        for (int j = j0; j <= j1; ++j) m.at(i, j) = -jacobian_.at(i, j);
        m.at(i, i) += 1.0 / dt_;
    }
    const Eigen::VectorXd du = BandedLU(std::move(m)).solve(residual_);
    for (int i = 0; i < n; ++i) {
        state.u[i] += du[row_u(i)];
        state.nu_tilde[i] += du[row_nt(i)];
    }
    state.nu_tilde = state.nu_tilde.cwiseMax(0.0);
    // keep the essential conditions exact instead of letting elimination
    // roundoff leak into the wall nodes
    state.u[0] = 0.0;
    state.nu_tilde[0] = 0.0;
    if (!grid_.half_channel) {
        state.u[n - 1] = 0.0;
        state.nu_tilde[n - 1] = 0.0;
    }
    residual_current_ = false;
}

ForwardSolution solve_forward(const Grid1D& grid, const ChannelCase& cs,
                              const SAConstants& constants, const SolverConfig& cfg,
                              const Eigen::VectorXd& beta, const FlowState* warm_start) {
    ForwardSolution sol;
    sol.state = warm_start ? *warm_start : initial_state(grid, cs, cfg);
    PseudoTimeStepper march(grid, cs, constants, cfg);

    for (int step = 0; step <= cfg.max_steps; ++step) {
        const ResidualNorms norms = march.evaluate(sol.state, beta);
        if (norms.max_norm() < cfg.tol) {
            sol.iterations = step;
            sol.final_residual = norms;
            sol.history = march.history();
            return sol;
        }
        if (step == cfg.max_steps) break;
        march.advance(sol.state);
    }

    std::ostringstream msg;
    msg << "forward solve for '" << cs.label << "' did not reach tol " << cfg.tol << " in "
        << cfg.max_steps << " steps (residual " << march.history().back().max_norm() << ")";
    throw ConvergenceError(msg.str(), march.history_max_norms());
}

// ============================================================================
// Diagnostics
// ============================================================================

double wall_velocity_gradient(const FlowState& state, const Grid1D& grid) {
    const double h1 = grid.y[1] - grid.y[0], h2 = grid.y[2] - grid.y[0];
    return -(h1 + h2) / (h1 * h2) * state.u[0] + h2 / (h1 * (h2 - h1)) * state.u[1] -
           h1 / (h2 * (h2 - h1)) * state.u[2];
}

Eigen::VectorXd velocity_gradient_profile(const FlowState& state, const Grid1D& grid) {
    if (state.u.size() != static_cast<Eigen::Index>(grid.n()))
        throw ConfigError("velocity_gradient_profile: state size does not match the grid");
    const auto stencils = gradient_stencils(grid);
    Eigen::VectorXd g(grid.n());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = apply(stencils[i], state.u);
    return g;
}

double bulk_velocity(const FlowState& state, const Grid1D& grid) {
    double integral = 0.0;
    for (Eigen::Index i = 0; i + 1 < grid.n(); ++i)
        integral += 0.5 * (state.u[i] + state.u[i + 1]) * (grid.y[i + 1] - grid.y[i]);
    const double span = grid.half_channel ? grid.h : 2.0 * grid.h;
    return integral / span;
}

double wall_shear(const FlowState& state, const Grid1D& grid, const ChannelCase& cs,
                  const SAConstants& constants) {
    const double h1 = grid.y[1] - grid.y[0];
    const double ne = cs.nu + 0.5 * (eddy_viscosity(state.nu_tilde[0], cs.nu, constants) +
                                     eddy_viscosity(state.nu_tilde[1], cs.nu, constants));
    const double face_flux = ne * (state.u[1] - state.u[0]) / h1;
    return face_flux - cs.dpdx() * 0.5 * h1;
}

SkinFriction skin_friction(const FlowState& state, const Grid1D& grid, const ChannelCase& cs,
                           const SAConstants& constants) {
    SkinFriction out;
    out.tau_wall = wall_shear(state, grid, cs, constants);
    out.u_bulk = bulk_velocity(state, grid);
    if (std::abs(out.u_bulk) < 1e-300)
        throw NumericalError("skin friction undefined: bulk velocity is zero");
    out.cf = 2.0 * out.tau_wall / (out.u_bulk * out.u_bulk);
    return out;
}

WallUnits wall_units(const FlowState& state, const Grid1D& grid, const ChannelCase& cs,
                     const SAConstants& constants) {
    const double tau_w = wall_shear(state, grid, cs, constants);
    if (!(tau_w > 0.0))
        throw NumericalError("wall units undefined: wall shear is not positive");
    WallUnits out;
    out.u_tau = std::sqrt(tau_w);
    out.y_plus = grid.d * (out.u_tau / cs.nu);
    out.u_plus = state.u / out.u_tau;
    return out;
}

double pressure_gradient_parameter(const FlowState& state, const Grid1D& grid,
                                   const ChannelCase& cs, const SAConstants& constants) {
    const double dpdx = cs.dpdx();
    if (dpdx == 0.0) return 0.0;

    // centerline velocity: last node for a half channel, node nearest y = h otherwise
    int icl = static_cast<int>(grid.n()) - 1;
    if (!grid.half_channel) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < grid.n(); ++i) {
            const double dist = std::abs(grid.y[i] - grid.h);
            if (dist < best) {
                best = dist;
                icl = static_cast<int>(i);
            }
        }
    }
    const double u_cl = state.u[icl];
    if (std::abs(u_cl) < 1e-300)
        throw NumericalError("pressure-gradient parameter undefined: zero centerline velocity");

    double delta_star = 0.0;
    for (int i = 0; i < icl; ++i)
        delta_star += 0.5 * ((1.0 - state.u[i] / u_cl) + (1.0 - state.u[i + 1] / u_cl)) *
                      (grid.y[i + 1] - grid.y[i]);
    if (delta_star == 0.0) return 0.0;

    const double tau_w = wall_shear(state, grid, cs, constants);
    if (tau_w == 0.0)
        throw NumericalError("pressure-gradient parameter undefined: zero wall shear");
    return delta_star / tau_w * dpdx;
}

// ============================================================================
// Artifacts
// ============================================================================

void export_state_csv(const std::string& path, const FlowState& state,
                      const Grid1D& grid, const ChannelCase& cs,
                      const SAConstants& constants, const Eigen::VectorXd& beta) {
    const int n = static_cast<int>(grid.n());
    const WallUnits wu = wall_units(state, grid, cs, constants);
    std::vector<std::vector<double>> cols(7, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        cols[0][i] = grid.y[i];
        cols[1][i] = wu.y_plus[i];
        cols[2][i] = state.u[i];
        cols[3][i] = wu.u_plus[i];
        cols[4][i] = state.nu_tilde[i];
        cols[5][i] = eddy_viscosity(state.nu_tilde[i], cs.nu, constants);
        cols[6][i] = beta[i];
    }
    write_csv_numeric(path, {"y", "y_plus", "u", "u_plus", "nu_tilde", "nu_t", "beta"}, cols);
}

void export_history_csv(const std::string& path, const std::vector<ResidualNorms>& history) {
    std::vector<std::vector<double>> cols(3);
    for (std::size_t k = 0; k < history.size(); ++k) {
        cols[0].push_back(static_cast<double>(k));
        cols[1].push_back(history[k].momentum);
        cols[2].push_back(history[k].transport);
    }
    write_csv_numeric(path, {"iteration", "res_momentum", "res_nu_tilde"}, cols);
}

} // namespace fiml
