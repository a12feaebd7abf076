/// Non-dimensional feature extraction: hand-checked values, wall conventions,
/// dynamic-similarity invariance, guards, and the min-max scaler.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "fiml/csv.hpp"
#include "fiml/errors.hpp"
#include "fiml/features.hpp"

using namespace fiml;

namespace {

ChannelCase case_at(double re_tau, double nu, double h) {
    ChannelCase cs;
    cs.re_tau = re_tau;
    cs.nu = nu;
    cs.h = h;
    return cs;
}

/// Uniform five-node half-channel grid on [0, 1] built by hand.
Grid1D hand_grid() {
    Grid1D g;
    g.h = 1.0;
    g.half_channel = true;
    g.y = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
    g.d = g.y;
    return g;
}

/// Linear shear u = slope * y with constant nu_tilde except a pinned wall.
FlowState linear_shear_state(const Grid1D& grid, double slope, double nu_tilde) {
    FlowState s;
    s.u = slope * grid.y;
    s.nu_tilde = Eigen::VectorXd::Constant(grid.n(), nu_tilde);
    s.nu_tilde[0] = 0.0;
    return s;
}

} // namespace

TEST_CASE("features match hand-evaluated values on a linear shear") {
    const Grid1D grid = hand_grid();
    const ChannelCase cs = case_at(100.0, 1e-5, 1.0);
    const SAConstants c;
    const FlowState state = linear_shear_state(grid, 0.02, 3e-5);

    const FeatureTable t = extract_features(state, grid, cs, c);
    REQUIRE(t.values.rows() == 5);

    // node 2 sits at d = 0.5 with du/dy = 0.02, nu_tilde = 3e-5, nu = 1e-5
    const int i = 2;
    CHECK(t.values(i, 0) == doctest::Approx(3.0).epsilon(1e-14));              // chi
    CHECK(t.values(i, 1) == doctest::Approx(125.0).epsilon(1e-12));            // omega_bar
    CHECK(t.values(i, 2) == 1.0);                                              // s_over_omega
    // production over destruction, rebuilt from the closure functions
    const auto src = sa_source_terms(0.02, 3e-5, 1e-5, 0.5, c);
    const double ratio = 3.0 / 4.0;
    const double expected_pd =
        (c.cb1 * ratio * 125.0) / (ratio * ratio * c.cw1() * src.fw);
    CHECK(t.values(i, 3) == doctest::Approx(expected_pd).epsilon(1e-12));
    // tau_ratio = nu_t * 0.02 / (nu * 0.02) = chi * fv1(chi)
    CHECK(t.values(i, 4) == doctest::Approx(3.0 * fv1(3.0, c)).epsilon(1e-12));
}

TEST_CASE("wall node yields the zero conventions") {
    const Grid1D grid = hand_grid();
    const ChannelCase cs = case_at(100.0, 1e-5, 1.0);
    const FlowState state = linear_shear_state(grid, 0.02, 3e-5);
    const FeatureTable t = extract_features(state, grid, cs, SAConstants{});
    CHECK(t.values(0, 0) == 0.0); // chi
    CHECK(t.values(0, 1) == 0.0); // omega_bar: d = 0
    CHECK(t.values(0, 2) == 1.0);
    CHECK(t.values(0, 3) == 0.0); // p_over_d via the eps floor
    CHECK(t.values(0, 4) == 0.0); // tau_ratio: nu_t = 0
}

TEST_CASE("values are clamped to the configured cap") {
    const Grid1D grid = hand_grid();
    const ChannelCase cs = case_at(100.0, 1e-5, 1.0);
    FlowState state = linear_shear_state(grid, 0.02, 0.5); // chi = 5e4 off the wall
    const FeatureTable t = extract_features(state, grid, cs, SAConstants{});
    CHECK(t.values(2, 0) == 1e4);
}

TEST_CASE("features on a converged channel state stay in physical ranges") {
    const ChannelCase cs = case_at(550.0, 1.0 / 550.0, 1.0);
    const Grid1D grid = build_grid(65, 1.0, 3.0);
    const SAConstants c;
    const SolverConfig cfg;
    const ForwardSolution sol =
        solve_forward(grid, cs, c, cfg, Eigen::VectorXd::Ones(65));
    const FeatureTable t = extract_features(sol.state, grid, cs, c);

    CHECK(t.values.allFinite());
    for (int i = 0; i < 65; ++i) {
        CHECK(t.values(i, 3) >= 0.0);
        CHECK(t.values(i, 4) >= 0.0);
        CHECK(t.values(i, 4) <= 1.05);
    }
    // the working viscosity rises well above molecular in the outer layer
    CHECK(t.values.col(0).maxCoeff() > 10.0);
    CHECK(t.values.col(0).maxCoeff() < 1e3);
    // extraction is pure: rerun is bitwise identical
    const FeatureTable t2 = extract_features(sol.state, grid, cs, c);
    CHECK(t.values == t2.values);
}

TEST_CASE("features are invariant under dynamic-similarity rescaling") {
    const ChannelCase cs = case_at(550.0, 1.0 / 550.0, 1.0);
    const Grid1D grid = build_grid(65, 1.0, 3.0);
    const SAConstants c;
    const SolverConfig cfg;
    const ForwardSolution sol =
        solve_forward(grid, cs, c, cfg, Eigen::VectorXd::Ones(65));
    const FeatureTable base = extract_features(sol.state, grid, cs, c);

    auto scaled_inputs = [&](double length, double velocity) {
        Grid1D g2 = grid;
        g2.y = length * grid.y;
        g2.d = length * grid.d;
        g2.h = length * grid.h;
        const ChannelCase cs2 =
            case_at(cs.re_tau, velocity * length * cs.nu, length * cs.h);
        FlowState s2;
        s2.u = velocity * sol.state.u;
        s2.nu_tilde = velocity * length * sol.state.nu_tilde;
        return std::pair{g2, std::pair{cs2, s2}};
    };

    SUBCASE("general scale factors to relative 1e-12") {
        const auto [g2, rest] = scaled_inputs(3.0, 2.0);
        const FeatureTable t2 = extract_features(rest.second, g2, rest.first, c);
        for (int i = 0; i < 65; ++i)
            for (int f = 0; f < feature_count; ++f) {
                const double a = base.values(i, f), b = t2.values(i, f);
                CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
            }
    }
    SUBCASE("power-of-two scale factors bitwise") {
        const auto [g2, rest] = scaled_inputs(4.0, 2.0);
        const FeatureTable t2 = extract_features(rest.second, g2, rest.first, c);
        CHECK(base.values == t2.values);
    }
}

TEST_CASE("degenerate states are refused") {
    const Grid1D grid = hand_grid();
    const ChannelCase cs = case_at(100.0, 1e-5, 1.0);

    FlowState quiet;
    quiet.u = Eigen::VectorXd::Zero(5);
    quiet.nu_tilde = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(extract_features(quiet, grid, cs, SAConstants{}), NumericalError);

    const FlowState reversed = linear_shear_state(grid, -0.02, 3e-5);
    CHECK_THROWS_AS(extract_features(reversed, grid, cs, SAConstants{}), NumericalError);

    FlowState broken = linear_shear_state(grid, 0.02, 3e-5);
    broken.u[3] = std::nan("");
    CHECK_THROWS_AS(extract_features(broken, grid, cs, SAConstants{}), NumericalError);
}

TEST_CASE("invalid feature configuration is rejected") {
    const Grid1D grid = hand_grid();
    const ChannelCase cs = case_at(100.0, 1e-5, 1.0);
    const FlowState state = linear_shear_state(grid, 0.02, 3e-5);

    FeatureConfig none;
    none.active = {false, false, false, false, false};
    CHECK_THROWS_AS(extract_features(state, grid, cs, SAConstants{}, none), ConfigError);

    FeatureConfig bad_eps;
    bad_eps.eps = 0.0;
    CHECK_THROWS_AS(extract_features(state, grid, cs, SAConstants{}, bad_eps), ConfigError);
}

TEST_CASE("active mask helpers select the canonical subset") {
    FeatureTable t;
    t.active = default_feature_mask;
    t.values.resize(2, feature_count);
    t.values << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
    CHECK(t.active_count() == 4);
    CHECK(t.active_names() ==
          std::vector<std::string>{"chi", "omega_bar", "p_over_d", "tau_ratio"});
    const Eigen::MatrixXd a = t.active_values();
    REQUIRE(a.cols() == 4);
    CHECK(a(0, 0) == 1);
    CHECK(a(0, 1) == 2);
    CHECK(a(0, 2) == 4); // s_over_omega skipped
    CHECK(a(0, 3) == 5);
}

TEST_CASE("min-max scaler maps the sample range onto the unit interval") {
    Eigen::MatrixXd samples(3, feature_count);
    samples.setZero();
    samples.col(0) << 0.0, 10.0, 5.0;
    samples.col(1) << 2.0, 4.0, 3.0;
    FeatureMask mask = {true, true, false, false, false};

    const FeatureScaler s = fit_scaler(samples, mask);
    const Eigen::MatrixXd scaled = s.apply(samples);
    REQUIRE(scaled.cols() == 2);
    CHECK(scaled(0, 0) == 0.0);
    CHECK(scaled(1, 0) == 1.0);
    CHECK(scaled(2, 0) == 0.5);
    CHECK(scaled(0, 1) == 0.0);
    CHECK(scaled(1, 1) == 1.0);
    CHECK(scaled(2, 1) == 0.5);
}

TEST_CASE("constant features are dropped from the scaler with a warning") {
    Eigen::MatrixXd samples(3, feature_count);
    samples.setOnes();
    samples.col(0) << 0.0, 10.0, 5.0;
    FeatureMask mask = {true, true, true, false, false}; // omega_bar and s_over_omega constant

    std::vector<std::string> warnings;
    const FeatureScaler s = fit_scaler(samples, mask, &warnings);
    CHECK(s.active == FeatureMask{true, false, false, false, false});
    REQUIRE(warnings.size() == 2);
    CHECK(warnings[0].find("omega_bar") != std::string::npos);
    CHECK(warnings[1].find("s_over_omega") != std::string::npos);
    CHECK(s.minimum.size() == 1);

    // every requested feature constant is unusable
    FeatureMask only_const = {false, false, true, false, false};
    CHECK_THROWS_AS(fit_scaler(samples, only_const), ConfigError);

    // fewer than two samples cannot define a spread
    CHECK_THROWS_AS(fit_scaler(samples.topRows(1), mask), ConfigError);
}

TEST_CASE("feature table exports the active columns with named headers") {
    const Grid1D grid = hand_grid();
    const ChannelCase cs = case_at(100.0, 1e-5, 1.0);
    const FlowState state = linear_shear_state(grid, 0.02, 3e-5);
    const FeatureTable t = extract_features(state, grid, cs, SAConstants{});

    const std::string path =
        (std::filesystem::temp_directory_path() / "fiml_features.csv").string();
    export_feature_csv(path, t);
    const CsvTable back = read_csv(path);
    CHECK(back.header ==
          std::vector<std::string>{"chi", "omega_bar", "p_over_d", "tau_ratio"});
    REQUIRE(back.n_rows() == 5);
    CHECK(back.num(2, back.col("chi")) == t.values(2, 0));
    std::remove(path.c_str());
}
