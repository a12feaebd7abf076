#include "fiml/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "fiml/errors.hpp"

namespace fiml {

namespace {

double dual_cell_width(const Grid1D& grid, int i) {
    const int n = static_cast<int>(grid.n());
    const double yl = i == 0 ? grid.y[0] : 0.5 * (grid.y[i - 1] + grid.y[i]);
    const double yr = i == n - 1 ? grid.y[n - 1] : 0.5 * (grid.y[i] + grid.y[i + 1]);
    return yr - yl;
}

} // namespace

InversionResult invert(const Observation& obs, const InversionConfig& inv,
                       const Grid1D& grid, const ChannelCase& cs,
                       const SAConstants& constants, const SolverConfig& solver) {
    obs.validate(grid.n());
    if (inv.lambda < 0.0) throw ConfigError("invert: lambda must be nonnegative");

    const Eigen::VectorXd beta0 = Eigen::VectorXd::Ones(grid.n());
    InversionResult out;

    // baseline solve doubles as the first warm state and the sensitivity probe
    GradientResult at_one =
        objective_gradient(beta0, obs, inv.lambda, grid, cs, constants, solver);
    out.initial = at_one.objective;
    out.initial_gradient = at_one.gradient;

    FlowState warm = at_one.forward.state;

    LbfgsProblem problem;
    problem.value = [&](const Eigen::VectorXd& beta) {
        const ForwardSolution sol = solve_forward(grid, cs, constants, solver, beta, &warm);
        warm = sol.state;
        return objective_parts(sol.state, beta, obs, inv.lambda, grid, cs, constants).value;
    };
    problem.value_and_gradient = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& g) {
        const GradientResult r =
            objective_gradient(beta, obs, inv.lambda, grid, cs, constants, solver, &warm);
        warm = r.forward.state;
        g = r.gradient;
        return r.objective.value;
    };

    const LbfgsResult opt = lbfgs_minimize(problem, beta0, inv.optimizer);
    out.beta_opt = opt.x;
    out.history = opt.history;
    out.stop = opt.stop;

    out.solution = solve_forward(grid, cs, constants, solver, out.beta_opt, &warm);
    out.final =
        objective_parts(out.solution.state, out.beta_opt, obs, inv.lambda, grid, cs, constants);
    return out;
}

std::vector<int> sensitive_nodes(const Eigen::VectorXd& gradient, double threshold) {
    const double gmax = gradient.cwiseAbs().maxCoeff();
    std::vector<int> out;
    if (gmax == 0.0) return out;
    for (Eigen::Index i = 0; i < gradient.size(); ++i)
        if (std::abs(gradient[i]) > threshold * gmax) out.push_back(static_cast<int>(i));
    return out;
}

// ============================================================================
// Twin experiments
// ============================================================================

Eigen::VectorXd gaussian_bump_beta(const Grid1D& grid, const ChannelCase& cs,
                                   double amplitude, double center_plus, double width_plus) {
    const double scale = cs.u_tau() / cs.nu;
    Eigen::VectorXd beta(grid.n());
    for (Eigen::Index i = 0; i < grid.n(); ++i) {
        const double yp = grid.d[i] * scale; // wall distance so full channels get both sides
        const double t = (yp - center_plus) / width_plus;
        beta[i] = 1.0 + amplitude * std::exp(-t * t);
    }
    return beta;
}

Observation synthesize_observation(ObservationKind kind, const ForwardSolution& truth,
                                   const Grid1D& grid, const ChannelCase& cs,
                                   const SAConstants& constants) {
    Observation obs;
    obs.kind = kind;
    if (kind == ObservationKind::scalar_cf) {
        const double cf = skin_friction(truth.state, grid, cs, constants).cf;
        obs.cf_target = cf;
        obs.cf_weight = 1.0 / (0.01 * cf * 0.01 * cf);
        return obs;
    }
    const double ub = bulk_velocity(truth.state, grid);
    const double w = 1.0 / (0.01 * ub * 0.01 * ub);
    const int n = static_cast<int>(grid.n());
    const int last = grid.half_channel ? n - 1 : n - 2; // far wall is pinned anyway
    for (int i = 1; i <= last; ++i) obs.profile.push_back({i, truth.state.u[i], w});
    return obs;
}

double profile_rms_percent(const Eigen::VectorXd& u, const Eigen::VectorXd& u_ref,
                           const Grid1D& grid) {
    if (u.size() != grid.n() || u_ref.size() != grid.n())
        throw ConfigError("profile_rms_percent: profile sizes do not match the grid");
    double num = 0.0, den = 0.0;
    for (int i = 0; i < static_cast<int>(grid.n()); ++i) {
        const double w = dual_cell_width(grid, i);
        num += w * (u[i] - u_ref[i]) * (u[i] - u_ref[i]);
        den += w;
    }
    FlowState ref;
    ref.u = u_ref;
    const double ub = bulk_velocity(ref, grid);
    if (ub == 0.0) throw NumericalError("profile_rms_percent: zero reference bulk velocity");
    return 100.0 * std::sqrt(num / den) / std::abs(ub);
}

TwinReport twin_experiment(const Eigen::VectorXd& beta_true, ObservationKind kind,
                           const InversionConfig& inv, const Grid1D& grid,
                           const ChannelCase& cs, const SAConstants& constants,
                           const SolverConfig& solver) {
    TwinReport rep;
    rep.beta_true = beta_true;
    rep.truth_solution = solve_forward(grid, cs, constants, solver, beta_true);
    rep.cf_truth = skin_friction(rep.truth_solution.state, grid, cs, constants).cf;

    const Observation obs =
        synthesize_observation(kind, rep.truth_solution, grid, cs, constants);
    rep.inversion = invert(obs, inv, grid, cs, constants, solver);

    rep.beta_opt = rep.inversion.beta_opt;
    rep.misfit_initial = rep.inversion.initial.data_misfit;
    rep.misfit_final = rep.inversion.final.data_misfit;
    rep.misfit_reduction_percent =
        rep.misfit_initial > 0.0
            ? 100.0 * (1.0 - rep.misfit_final / rep.misfit_initial)
            : 0.0;

    const ForwardSolution baseline =
        solve_forward(grid, cs, constants, solver, Eigen::VectorXd::Ones(grid.n()));
    rep.cf_baseline = skin_friction(baseline.state, grid, cs, constants).cf;
    rep.cf_recovered = skin_friction(rep.inversion.solution.state, grid, cs, constants).cf;

    rep.u_rms_baseline_percent =
        profile_rms_percent(baseline.state.u, rep.truth_solution.state.u, grid);
    rep.u_rms_recovered_percent = profile_rms_percent(rep.inversion.solution.state.u,
                                                      rep.truth_solution.state.u, grid);

    rep.sensitive = sensitive_nodes(rep.inversion.initial_gradient, inv.sensitivity_threshold);
    if (!rep.sensitive.empty()) {
        double s = 0.0;
        for (int i : rep.sensitive) {
            const double d = rep.beta_opt[i] - beta_true[i];
            s += d * d;
        }
        rep.beta_rms_sensitive = std::sqrt(s / rep.sensitive.size());
    }
    return rep;
}

EquivalenceReport objective_equivalence_study(const Eigen::VectorXd& beta_true,
                                              const InversionConfig& inv, const Grid1D& grid,
                                              const ChannelCase& cs,
                                              const SAConstants& constants,
                                              const SolverConfig& solver) {
    EquivalenceReport rep;
    rep.scalar_run =
        twin_experiment(beta_true, ObservationKind::scalar_cf, inv, grid, cs, constants, solver);
    rep.profile_run = twin_experiment(beta_true, ObservationKind::velocity_profile, inv, grid,
                                      cs, constants, solver);
    rep.u_rms_between_percent =
        profile_rms_percent(rep.scalar_run.inversion.solution.state.u,
                            rep.profile_run.inversion.solution.state.u, grid);

    std::set_intersection(rep.scalar_run.sensitive.begin(), rep.scalar_run.sensitive.end(),
                          rep.profile_run.sensitive.begin(), rep.profile_run.sensitive.end(),
                          std::back_inserter(rep.common_sensitive));
    if (!rep.common_sensitive.empty()) {
        double s = 0.0;
        for (int i : rep.common_sensitive) {
            const double d = rep.scalar_run.beta_opt[i] - rep.profile_run.beta_opt[i];
            s += d * d;
        }
        rep.beta_rms_between_sensitive = std::sqrt(s / rep.common_sensitive.size());
    }
    return rep;
}

std::vector<LambdaSweepEntry> lambda_sweep(const Eigen::VectorXd& beta_true,
                                           ObservationKind kind,
                                           const std::vector<double>& lambdas,
                                           const InversionConfig& base, const Grid1D& grid,
                                           const ChannelCase& cs, const SAConstants& constants,
                                           const SolverConfig& solver) {
    std::vector<LambdaSweepEntry> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        InversionConfig cfg = base;
        cfg.lambda = lambda;
        const TwinReport rep =
            twin_experiment(beta_true, kind, cfg, grid, cs, constants, solver);
        LambdaSweepEntry e;
        e.lambda = lambda;
        e.cf_recovered = rep.cf_recovered;
        e.beta_distance = (rep.beta_opt.array() - 1.0).matrix().norm();
        e.misfit_reduction_percent = rep.misfit_reduction_percent;
        out.push_back(e);
    }
    return out;
}

} // namespace fiml
