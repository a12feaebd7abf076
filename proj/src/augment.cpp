#include "fiml/augment.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace fiml {

void AugmentConfig::validate() const {
    if (!(beta_lo < beta_hi))
        throw ConfigError("augment: clamp bounds must satisfy beta_lo < beta_hi");
    if (!(beta_lo <= 1.0 && 1.0 <= beta_hi))
        throw ConfigError("augment: clamp bounds must contain the neutral correction 1");
    if (!(relaxation > 0.0 && relaxation <= 1.0))
        throw ConfigError("augment: relaxation must lie in (0, 1]");
    if (!(beta_tol > 0.0)) throw ConfigError("augment: beta tolerance must be positive");
}

AugmentedRun solve_augmented(const MlpNetwork& net, const Grid1D& grid, const ChannelCase& cs,
                             const SAConstants& constants, const SolverConfig& solver,
                             const AugmentConfig& cfg) {
    cfg.validate();
    net.validate();
    const int n = static_cast<int>(grid.n());

    AugmentedRun run;
    run.config = cfg;
    run.config.features.active = net.scaler.active;
    run.state = initial_state(grid, cs, solver);
    run.beta = Eigen::VectorXd::Ones(n);

    PseudoTimeStepper march(grid, cs, constants, solver);
    double last_change = std::numeric_limits<double>::infinity();

    for (int step = 0; step <= solver.max_steps; ++step) {
        const ResidualNorms norms = march.evaluate(run.state, run.beta);
        if (norms.max_norm() < solver.tol && last_change < cfg.beta_tol) {
            run.iterations = step;
            run.final_residual = norms;
            run.history = march.history();
            return run;
        }
        if (step == solver.max_steps) break;
        march.advance(run.state);

        // the advance comes first, so even the quiescent start has picked up
        // wall-bounded shear by the time features are read
        const FeatureTable table =
            extract_features(run.state, grid, cs, constants, run.config.features);
        const auto t0 = std::chrono::steady_clock::now();
        Eigen::VectorXd suggestion = net.predict(table.values);
        run.network_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        run.network_queries += 1;
        run.network_samples += n;

        suggestion = suggestion.cwiseMax(cfg.beta_lo).cwiseMin(cfg.beta_hi);
        const Eigen::VectorXd delta = cfg.relaxation * (suggestion - run.beta);
        last_change = delta.lpNorm<Eigen::Infinity>();
        run.beta += delta;
        run.beta_change.push_back(last_change);
    }

    std::ostringstream msg;
    msg << "augmented solve for '" << cs.label << "' did not reach residual tol " << solver.tol
        << " and correction tol " << cfg.beta_tol << " in " << solver.max_steps
        << " steps (residual " << march.history().back().max_norm() << ", correction change "
        << last_change << ")";
    throw AugmentedConvergenceError(msg.str(), march.history_max_norms(), run.beta_change);
}

// ============================================================================
// Comparison against the baseline model
// ============================================================================

double observation_rms_percent(const Eigen::VectorXd& u, const Observation& obs) {
    if (obs.kind != ObservationKind::velocity_profile)
        throw ConfigError("observation_rms_percent needs a velocity-profile observation");
    obs.validate(u.size());
    double num = 0.0, den = 0.0;
    for (const ProfileDatum& d : obs.profile) {
        const double e = u[d.node] - d.value;
        num += d.weight * e * e;
        den += d.weight * d.value * d.value;
    }
    if (!(den > 0.0))
        throw NumericalError("observation RMS undefined: the truth profile is identically zero");
    return 100.0 * std::sqrt(num / den);
}

AugmentComparison compare_with_baseline(const MlpNetwork& net, const Observation& truth,
                                        const Grid1D& grid, const ChannelCase& cs,
                                        const SAConstants& constants,
                                        const SolverConfig& solver, const AugmentConfig& cfg) {
    truth.validate(grid.n());
    AugmentComparison out;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.n());
    out.baseline = solve_forward(grid, cs, constants, solver, ones);
    out.augmented = solve_augmented(net, grid, cs, constants, solver, cfg);

    out.cf_baseline = skin_friction(out.baseline.state, grid, cs, constants);
    out.cf_augmented = skin_friction(out.augmented.state, grid, cs, constants);
    // lambda = 0: the pure data misfit is the comparison currency
    out.misfit_baseline =
        objective_parts(out.baseline.state, ones, truth, 0.0, grid, cs, constants).data_misfit;
    out.misfit_augmented = objective_parts(out.augmented.state, out.augmented.beta, truth, 0.0,
                                           grid, cs, constants)
                               .data_misfit;
    if (truth.kind == ObservationKind::velocity_profile) {
        out.u_rms_baseline_percent = observation_rms_percent(out.baseline.state.u, truth);
        out.u_rms_augmented_percent = observation_rms_percent(out.augmented.state.u, truth);
    }
    out.iterations_baseline = out.baseline.iterations;
    out.iterations_augmented = out.augmented.iterations;
    out.iteration_ratio = static_cast<double>(out.iterations_augmented) /
                          static_cast<double>(std::max(out.iterations_baseline, 1));
    return out;
}

// ============================================================================
// Ensemble prediction
// ============================================================================

EnsembleReport ensemble_predict(const std::vector<MlpNetwork>& nets, const Grid1D& grid,
                                const ChannelCase& cs, const SAConstants& constants,
                                const SolverConfig& solver, const AugmentConfig& cfg) {
    if (nets.size() < 2)
        throw ConfigError("ensemble_predict needs at least 2 networks, got " +
                          std::to_string(nets.size()));

    EnsembleReport rep;
    rep.members.resize(nets.size());

    std::vector<std::future<void>> tasks;
    tasks.reserve(nets.size());
    for (std::size_t k = 0; k < nets.size(); ++k) {
        tasks.push_back(std::async(std::launch::async, [&, k]() {
            EnsembleMember& m = rep.members[k];
            m.index = k;
            try {
                const AugmentedRun run =
                    solve_augmented(nets[k], grid, cs, constants, solver, cfg);
                m.cf = skin_friction(run.state, grid, cs, constants).cf;
                m.iterations = run.iterations;
                m.u = run.state.u;
                m.beta = run.beta;
                m.network_queries = run.network_queries;
                m.converged = true;
            } catch (const std::exception& e) {
                m.error = e.what();
            }
        }));
    }
    for (auto& t : tasks) t.get();

    std::vector<const EnsembleMember*> ok;
    for (const auto& m : rep.members)
        if (m.converged) ok.push_back(&m);
    rep.survivors = static_cast<int>(ok.size());
    if (rep.survivors < 2) {
        std::ostringstream msg;
        msg << "ensemble: only " << rep.survivors << " of " << nets.size()
            << " members converged (2 required)";
        for (const auto& m : rep.members)
            if (!m.converged) msg << "; member " << m.index << ": " << m.error;
        throw ConvergenceError(msg.str());
    }

    const int n = static_cast<int>(grid.n());
    rep.cf_min = std::numeric_limits<double>::infinity();
    rep.cf_max = -std::numeric_limits<double>::infinity();
    rep.u_min = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    rep.u_max = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    rep.u_mean = Eigen::VectorXd::Zero(n);
    double cf_sum = 0.0;
    for (const EnsembleMember* m : ok) {
        rep.cf_min = std::min(rep.cf_min, m->cf);
        rep.cf_max = std::max(rep.cf_max, m->cf);
        cf_sum += m->cf;
        rep.u_min = rep.u_min.cwiseMin(m->u);
        rep.u_max = rep.u_max.cwiseMax(m->u);
        rep.u_mean += m->u;
    }
    rep.cf_mean = cf_sum / rep.survivors;
    rep.u_mean /= static_cast<double>(rep.survivors);
    return rep;
}

} // namespace fiml
