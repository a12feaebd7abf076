/// Network-in-the-loop solver: identity-network equivalence with the baseline
/// march, clamp safety, an end-to-end trained-correction run, the comparison
/// report, and the concurrent ensemble.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fiml/augment.hpp"
#include "fiml/errors.hpp"
#include "fiml/inversion.hpp"
#include "fiml/neuralnet.hpp"

using namespace fiml;

namespace {

ChannelCase case_rt550() {
    ChannelCase cs;
    cs.label = "rt550";
    cs.re_tau = 550.0;
    cs.nu = 1.0 / 550.0;
    cs.h = 1.0;
    return cs;
}

/// Zero weights and a constant output bias: the network's value everywhere is
/// the bias, independent of its inputs.
MlpNetwork constant_net(double value) {
    MlpNetwork net;
    net.layer_sizes = {4, 1};
    net.weights = {Eigen::MatrixXd::Zero(1, 4)};
    net.biases = {Eigen::VectorXd::Constant(1, value)};
    net.activations = {Activation::linear};
    net.scaler.active = default_feature_mask;
    net.scaler.minimum = Eigen::VectorXd::Zero(4);
    net.scaler.maximum = Eigen::VectorXd::Ones(4);
    return net;
}

/// Scaler feeds 2 features into a 4-input first layer; the first prediction
/// refuses it, so an augmented solve fails immediately.
MlpNetwork broken_net() {
    MlpNetwork net = constant_net(1.0);
    net.scaler.active = {true, false, false, false, true};
    net.scaler.minimum = Eigen::VectorXd::Zero(2);
    net.scaler.maximum = Eigen::VectorXd::Ones(2);
    return net;
}

/// Shared expensive setup: a profile twin inversion at Re_tau = 550 on 65
/// nodes, a small network trained on its recovered correction, and the
/// baseline solve. Built once per process; every field is deterministic.
struct Pipeline {
    ChannelCase cs = case_rt550();
    Grid1D grid = build_grid(65, 1.0, 3.0);
    SAConstants constants;
    SolverConfig solver;
    ForwardSolution baseline;
    TwinReport twin;
    MlpNetwork net;
};

const Pipeline& pipeline() {
    static const Pipeline p = [] {
        Pipeline q;
        q.baseline = solve_forward(q.grid, q.cs, q.constants, q.solver,
                                   Eigen::VectorXd::Ones(q.grid.n()));
        const Eigen::VectorXd beta_true = gaussian_bump_beta(q.grid, q.cs);
        InversionConfig inv;
        q.twin = twin_experiment(beta_true, ObservationKind::velocity_profile, inv, q.grid,
                                 q.cs, q.constants, q.solver);

        TrainingSet set;
        append_case(set,
                    extract_features(q.twin.inversion.solution.state, q.grid, q.cs,
                                     q.constants),
                    q.twin.inversion.beta_opt, q.cs.label);
        TrainConfig tc;
        tc.hidden = {20, 20};
        tc.max_epochs = 2000;
        tc.patience = 400;
        q.net = train_network(set, tc).network;
        return q;
    }();
    return p;
}

} // namespace

TEST_CASE("augment config rejects bad bounds, relaxation, and tolerance") {
    AugmentConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    AugmentConfig swapped = cfg;
    swapped.beta_lo = 2.0;
    swapped.beta_hi = 0.0;
    CHECK_THROWS_AS(swapped.validate(), ConfigError);

    AugmentConfig off_one = cfg;
    off_one.beta_lo = 1.5; // the starting field 1 must be admissible
    CHECK_THROWS_AS(off_one.validate(), ConfigError);

    AugmentConfig frozen = cfg;
    frozen.relaxation = 0.0;
    CHECK_THROWS_AS(frozen.validate(), ConfigError);

    AugmentConfig over = cfg;
    over.relaxation = 1.5;
    CHECK_THROWS_AS(over.validate(), ConfigError);

    AugmentConfig tol = cfg;
    tol.beta_tol = 0.0;
    CHECK_THROWS_AS(tol.validate(), ConfigError);
}

TEST_CASE("stepper advance without a fresh evaluate is refused") {
    const ChannelCase cs = case_rt550();
    const Grid1D grid = build_grid(17, 1.0, 3.0);
    const SAConstants constants;
    const SolverConfig solver;
    PseudoTimeStepper march(grid, cs, constants, solver);
    FlowState state = initial_state(grid, cs, solver);
    CHECK_THROWS_AS(march.advance(state), ConfigError);

    march.evaluate(state, Eigen::VectorXd::Ones(grid.n()));
    CHECK_NOTHROW(march.advance(state));
    CHECK_THROWS_AS(march.advance(state), ConfigError); // residual consumed
}

TEST_CASE("manual stepper loop reproduces solve_forward bit for bit") {
    const ChannelCase cs = case_rt550();
    const Grid1D grid = build_grid(33, 1.0, 3.0);
    const SAConstants constants;
    const SolverConfig solver;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.n());

    const ForwardSolution sol = solve_forward(grid, cs, constants, solver, ones);

    PseudoTimeStepper march(grid, cs, constants, solver);
    FlowState state = initial_state(grid, cs, solver);
    int steps = 0;
    while (march.evaluate(state, ones).max_norm() >= solver.tol) {
        march.advance(state);
        ++steps;
    }
    CHECK(steps == sol.iterations);
    CHECK(march.history().size() == sol.history.size());
    CHECK((state.u.array() == sol.state.u.array()).all());
    CHECK((state.nu_tilde.array() == sol.state.nu_tilde.array()).all());
}

TEST_CASE("constant-1 network reproduces the baseline solve bit for bit") {
    const Pipeline& p = pipeline();
    const AugmentedRun run =
        solve_augmented(constant_net(1.0), p.grid, p.cs, p.constants, p.solver);

    CHECK(run.iterations == p.baseline.iterations);
    CHECK((run.state.u.array() == p.baseline.state.u.array()).all());
    CHECK((run.state.nu_tilde.array() == p.baseline.state.nu_tilde.array()).all());
    CHECK((run.beta.array() == 1.0).all());
    for (double d : run.beta_change) CHECK(d == 0.0);

    // the stronger statement above implies the tolerance form of the identity
    // check, but pin it too so the bound is exercised as stated
    CHECK(run.final_residual.max_norm() < 10.0 * p.solver.tol);

    // one batched query per advance, one sample per node
    CHECK(run.network_queries == run.iterations);
    CHECK(run.network_samples == run.network_queries * static_cast<long long>(p.grid.n()));
    CHECK(run.history.size() == static_cast<std::size_t>(run.iterations) + 1);
}

TEST_CASE("out-of-range suggestions are clamped and the field stays in bounds") {
    const Pipeline& p = pipeline();

    SUBCASE("upper bound") {
        const AugmentedRun run =
            solve_augmented(constant_net(50.0), p.grid, p.cs, p.constants, p.solver);
        CHECK(run.beta.maxCoeff() <= 2.0);
        CHECK(run.beta.minCoeff() >= 1.0); // convex path from 1 toward the clamp
        CHECK(run.beta.minCoeff() > 2.0 - 1e-7);
        // doubled production thickens the eddy viscosity and drags C_f up
        CHECK(skin_friction(run.state, p.grid, p.cs, p.constants).cf >
              skin_friction(p.baseline.state, p.grid, p.cs, p.constants).cf);
    }

    SUBCASE("lower bound") {
        AugmentConfig cfg;
        cfg.beta_lo = 0.5;
        const AugmentedRun run =
            solve_augmented(constant_net(-50.0), p.grid, p.cs, p.constants, p.solver, cfg);
        CHECK(run.beta.minCoeff() >= 0.5);
        CHECK(run.beta.maxCoeff() <= 1.0);
        CHECK(run.beta.maxCoeff() < 0.5 + 1e-7);
    }
}

TEST_CASE("trained correction network closes the loop on its training case") {
    const Pipeline& p = pipeline();
    const AugmentedRun run = solve_augmented(p.net, p.grid, p.cs, p.constants, p.solver);

    // self-consistent state lands on the synthetic truth, not the baseline
    const double cf_aug = skin_friction(run.state, p.grid, p.cs, p.constants).cf;
    CHECK(std::abs(cf_aug - p.twin.cf_truth) / p.twin.cf_truth < 1e-2);
    CHECK(std::abs(cf_aug - p.twin.cf_truth) <
          std::abs(p.twin.cf_baseline - p.twin.cf_truth));

    // the correction it settled on is a genuine bump, inside the clamp bounds
    CHECK(run.beta.minCoeff() >= 0.0);
    CHECK(run.beta.maxCoeff() <= 2.0);
    CHECK(run.beta.minCoeff() < 0.9);
    CHECK(run.beta.maxCoeff() < 1.2);

    // dual convergence: flow residual and correction increment both settled
    CHECK(run.final_residual.max_norm() < p.solver.tol);
    CHECK(run.beta_change.back() < 1e-8);

    // the network tail costs iterations but stays within the overhead budget
    CHECK(run.iterations <= 3 * p.baseline.iterations);

    SUBCASE("rerun is bitwise identical") {
        const AugmentedRun again = solve_augmented(p.net, p.grid, p.cs, p.constants, p.solver);
        CHECK(again.iterations == run.iterations);
        CHECK((again.state.u.array() == run.state.u.array()).all());
        CHECK((again.beta.array() == run.beta.array()).all());
        REQUIRE(again.beta_change.size() == run.beta_change.size());
        for (std::size_t k = 0; k < run.beta_change.size(); ++k)
            CHECK(again.beta_change[k] == run.beta_change[k]);
    }
}

TEST_CASE("observation RMS matches a hand-computed value and refuses scalars") {
    Observation obs;
    obs.kind = ObservationKind::velocity_profile;
    obs.profile = {{1, 3.0, 1.0}, {2, 4.0, 1.0}};

    Eigen::VectorXd u(4);
    u << 0.0, 3.0, 4.0, 5.0;
    CHECK(observation_rms_percent(u, obs) == 0.0);

    u[1] = 3.5; // num = 0.25, den = 25 -> 10 percent
    CHECK(observation_rms_percent(u, obs) == doctest::Approx(10.0).epsilon(1e-12));

    Observation scalar;
    scalar.kind = ObservationKind::scalar_cf;
    scalar.cf_target = 1.0;
    CHECK_THROWS_AS(observation_rms_percent(u, scalar), ConfigError);
}

TEST_CASE("comparison report scores both solves against the same observation") {
    const Pipeline& p = pipeline();

    SUBCASE("trained network against the twin profile data") {
        const Observation obs = synthesize_observation(
            ObservationKind::velocity_profile, p.twin.truth_solution, p.grid, p.cs,
            p.constants);
        const AugmentComparison cmp =
            compare_with_baseline(p.net, obs, p.grid, p.cs, p.constants, p.solver);

        CHECK(cmp.misfit_augmented < cmp.misfit_baseline);
        CHECK(cmp.misfit_augmented < 0.01 * cmp.misfit_baseline);
        CHECK(cmp.u_rms_augmented_percent < cmp.u_rms_baseline_percent);
        CHECK(cmp.u_rms_augmented_percent < 0.05);
        CHECK(cmp.iterations_baseline == p.baseline.iterations);
        CHECK(cmp.iteration_ratio ==
              doctest::Approx(double(cmp.iterations_augmented) /
                              double(cmp.iterations_baseline)));
        CHECK(cmp.iteration_ratio <= 3.0);
    }

    SUBCASE("identity network, truth generated at the baseline: no degradation") {
        ForwardSolution truth =
            solve_forward(p.grid, p.cs, p.constants, p.solver, Eigen::VectorXd::Ones(p.grid.n()));
        const Observation obs = synthesize_observation(ObservationKind::scalar_cf, truth,
                                                       p.grid, p.cs, p.constants);
        const AugmentComparison cmp = compare_with_baseline(constant_net(1.0), obs, p.grid,
                                                            p.cs, p.constants, p.solver);

        // identical marches: both misfits vanish identically, ratio is exactly 1
        CHECK(cmp.misfit_baseline == 0.0);
        CHECK(cmp.misfit_augmented == 0.0);
        CHECK(cmp.misfit_augmented <= cmp.misfit_baseline + 0.01 * cmp.misfit_baseline);
        CHECK(cmp.iteration_ratio == 1.0);
        CHECK(cmp.cf_augmented.cf == cmp.cf_baseline.cf);
        CHECK(cmp.u_rms_baseline_percent == 0.0); // scalar truth has no profile
        CHECK(cmp.u_rms_augmented_percent == 0.0);
    }
}

TEST_CASE("ensemble envelope, failure tolerance, and preconditions") {
    const Pipeline& p = pipeline();

    SUBCASE("identical members give a zero-width envelope") {
        const std::vector<MlpNetwork> nets = {constant_net(1.0), constant_net(1.0)};
        const EnsembleReport rep =
            ensemble_predict(nets, p.grid, p.cs, p.constants, p.solver);
        CHECK(rep.survivors == 2);
        CHECK(rep.cf_min == rep.cf_max);
        CHECK(rep.cf_mean == rep.cf_min);
        CHECK((rep.u_min.array() == rep.u_max.array()).all());
        CHECK((rep.u_mean.array() == rep.u_min.array()).all());
    }

    SUBCASE("distinct members bracket their own predictions") {
        const std::vector<MlpNetwork> nets = {p.net, constant_net(1.0)};
        const EnsembleReport rep =
            ensemble_predict(nets, p.grid, p.cs, p.constants, p.solver);
        CHECK(rep.survivors == 2);
        CHECK(rep.cf_min < rep.cf_max);
        for (const EnsembleMember& m : rep.members) {
            CHECK(m.converged);
            CHECK(rep.cf_min <= m.cf);
            CHECK(m.cf <= rep.cf_max);
        }
        CHECK(rep.cf_mean == doctest::Approx(0.5 * (rep.members[0].cf + rep.members[1].cf)));
        CHECK((rep.u_min.array() <= rep.u_max.array()).all());
        CHECK((rep.u_mean.array() >= rep.u_min.array()).all());
        CHECK((rep.u_mean.array() <= rep.u_max.array()).all());
    }

    SUBCASE("a failing member is recorded and the survivors carry the report") {
        const std::vector<MlpNetwork> nets = {constant_net(1.0), constant_net(1.0),
                                              broken_net()};
        const EnsembleReport rep =
            ensemble_predict(nets, p.grid, p.cs, p.constants, p.solver);
        CHECK(rep.survivors == 2);
        CHECK_FALSE(rep.members[2].converged);
        CHECK(rep.members[2].error.find("input dimension") != std::string::npos);
        CHECK(rep.members[0].converged);
        CHECK(rep.cf_min == rep.cf_max); // the two survivors are identical
    }

    SUBCASE("fewer than two networks is a precondition error") {
        const std::vector<MlpNetwork> one = {constant_net(1.0)};
        CHECK_THROWS_AS(ensemble_predict(one, p.grid, p.cs, p.constants, p.solver),
                        ConfigError);
    }

    SUBCASE("fewer than two survivors fails the whole run") {
        const std::vector<MlpNetwork> nets = {broken_net(), broken_net()};
        try {
            ensemble_predict(nets, p.grid, p.cs, p.constants, p.solver);
            FAIL("expected ConvergenceError");
        } catch (const ConvergenceError& e) {
            CHECK(std::string(e.what()).find("2 required") != std::string::npos);
            CHECK(std::string(e.what()).find("member 0") != std::string::npos);
        }
    }
}

TEST_CASE("step exhaustion raises an error carrying both histories") {
    const Pipeline& p = pipeline();
    SolverConfig strangled = p.solver;
    strangled.max_steps = 3;
    try {
        solve_augmented(constant_net(1.0), p.grid, p.cs, p.constants, strangled);
        FAIL("expected AugmentedConvergenceError");
    } catch (const AugmentedConvergenceError& e) {
        CHECK(e.residual_history.size() == 4); // evaluates at steps 0..3
        CHECK(e.beta_change_history.size() == 3); // one update per advance
        CHECK(std::string(e.what()).find("did not reach") != std::string::npos);
    }

    // the same failure is catchable as the plain convergence error
    CHECK_THROWS_AS(solve_augmented(constant_net(1.0), p.grid, p.cs, p.constants, strangled),
                    ConvergenceError);
}
