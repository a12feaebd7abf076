#include "fiml/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fiml/csv.hpp"
#include "fiml/errors.hpp"

namespace fiml {

const char* feature_name(Feature f) {
    switch (f) {
        case Feature::chi: return "chi";
        case Feature::omega_bar: return "omega_bar";
        case Feature::s_over_omega: return "s_over_omega";
        case Feature::p_over_d: return "p_over_d";
        case Feature::tau_ratio: return "tau_ratio";
    }
    throw ConfigError("feature_name: unknown feature id");
}

int FeatureTable::active_count() const {
    int k = 0;
    for (bool a : active) k += a ? 1 : 0;
    return k;
}

std::vector<std::string> FeatureTable::active_names() const {
    std::vector<std::string> names;
    for (int f = 0; f < feature_count; ++f)
        if (active[f]) names.push_back(feature_name(static_cast<Feature>(f)));
    return names;
}

Eigen::MatrixXd FeatureTable::active_values() const {
    Eigen::MatrixXd out(values.rows(), active_count());
    int k = 0;
    for (int f = 0; f < feature_count; ++f)
        if (active[f]) out.col(k++) = values.col(f);
    return out;
}

FeatureTable extract_features(const FlowState& state, const Grid1D& grid,
                              const ChannelCase& cs, const SAConstants& constants,
                              const FeatureConfig& cfg) {
    const int n = static_cast<int>(grid.n());
    if (state.u.size() != n || state.nu_tilde.size() != n)
        throw ConfigError("extract_features: state size does not match the grid");
    if (!(cfg.eps > 0.0) || !(cfg.cap > 0.0))
        throw ConfigError("extract_features: eps and cap must be positive");
    if (!(cs.nu > 0.0)) throw ConfigError("extract_features: viscosity must be positive");
    if (std::none_of(cfg.active.begin(), cfg.active.end(), [](bool a) { return a; }))
        throw ConfigError("extract_features: no active features");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(state.u[i]) || !std::isfinite(state.nu_tilde[i]))
            throw NumericalError("extract_features: non-finite state");

    const Eigen::VectorXd dudy = velocity_gradient_profile(state, grid);
    const double tau_wall = cs.nu * dudy[0];
    if (!(tau_wall > 0.0)) {
        std::ostringstream msg;
        msg << "extract_features: wall shear " << tau_wall
            << " is not positive; the state carries no wall-bounded shear";
        throw NumericalError(msg.str());
    }

    const SAConstants& c = constants;
    FeatureTable table;
    table.active = cfg.active;
    table.values.resize(n, feature_count);
    for (int i = 0; i < n; ++i) {
        const double nt = state.nu_tilde[i];
        const double d = grid.d[i];
        const double omega = std::abs(dudy[i]);

        const double chi = nt / cs.nu;
        const double omega_bar = d * d * omega / std::max(nt + cs.nu, cfg.eps);
        // chi/(chi+1), the nu_tilde fraction of the total working viscosity
        const double ratio = chi / std::max(chi + 1.0, cfg.eps);
        // fw from the regular closure chain; at a wall the radius denominator
        // vanishes and the clip pins r, but the ratio^2 prefactor is zero there
        const double fwv = d > 0.0 ? sa_source_terms(omega, nt, cs.nu, d, c).fw
                                   : fw(c.r_clip, c);
        const double p_bar = c.cb1 * ratio * omega_bar;
        const double d_bar = ratio * ratio * c.cw1() * fwv;
        const double nut = eddy_viscosity(nt, cs.nu, c);

        table.values(i, static_cast<int>(Feature::chi)) = chi;
        table.values(i, static_cast<int>(Feature::omega_bar)) = omega_bar;
        // strain and vorticity magnitudes coincide pointwise in parallel
        // shear, so their ratio is 1 by construction (the 0/0 at a symmetry
        // line takes the same limit)
        table.values(i, static_cast<int>(Feature::s_over_omega)) = 1.0;
        table.values(i, static_cast<int>(Feature::p_over_d)) =
            p_bar / std::max(d_bar, cfg.eps);
        table.values(i, static_cast<int>(Feature::tau_ratio)) =
            nut * omega / tau_wall;
    }
    table.values = table.values.cwiseMax(0.0).cwiseMin(cfg.cap);
    return table;
}

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& values) const {
    if (values.cols() != feature_count)
        throw ConfigError("feature scaler: expected canonical-order value matrix");
    Eigen::MatrixXd out(values.rows(), minimum.size());
    int k = 0;
    for (int f = 0; f < feature_count; ++f) {
        if (!active[f]) continue;
        out.col(k) = (values.col(f).array() - minimum[k]) / (maximum[k] - minimum[k]);
        ++k;
    }
    return out;
}

FeatureScaler fit_scaler(const Eigen::MatrixXd& samples, const FeatureMask& requested,
                         std::vector<std::string>* warnings) {
    if (samples.cols() != feature_count)
        throw ConfigError("fit_scaler: expected canonical-order sample matrix");
    if (samples.rows() < 2) throw ConfigError("fit_scaler: need at least 2 samples");

    FeatureScaler scaler;
    scaler.active = requested;
    std::vector<double> mins, maxs;
    for (int f = 0; f < feature_count; ++f) {
        if (!requested[f]) continue;
        const double lo = samples.col(f).minCoeff();
        const double hi = samples.col(f).maxCoeff();
        if (hi == lo) {
            scaler.active[f] = false;
            if (warnings) {
                std::ostringstream msg;
                msg << "feature " << feature_name(static_cast<Feature>(f))
                    << " is constant (" << lo << ") across the training set; dropped";
                warnings->push_back(msg.str());
            }
            continue;
        }
        mins.push_back(lo);
        maxs.push_back(hi);
    }
    if (mins.empty())
        throw ConfigError("fit_scaler: every requested feature is constant");
    scaler.minimum = Eigen::Map<Eigen::VectorXd>(mins.data(), mins.size());
    scaler.maximum = Eigen::Map<Eigen::VectorXd>(maxs.data(), maxs.size());
    return scaler;
}

void export_feature_csv(const std::string& path, const FeatureTable& table) {
    const Eigen::MatrixXd act = table.active_values();
    std::vector<std::vector<double>> cols(act.cols());
    for (Eigen::Index j = 0; j < act.cols(); ++j)
        cols[j].assign(act.col(j).begin(), act.col(j).end());
    write_csv_numeric(path, table.active_names(), cols);
}

} // namespace fiml
