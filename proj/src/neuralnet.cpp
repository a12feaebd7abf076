#include "fiml/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fiml/csv.hpp"
#include "fiml/errors.hpp"

namespace fiml {

using nlohmann::json;

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::linear: return "linear";
    }
    throw ConfigError("activation_name: unknown activation");
}

namespace {

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "linear") return Activation::linear;
    throw ParseError("unknown activation '" + name + "'");
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& a, Activation act) {
    if (act == Activation::linear) return a;
    return ((-a.array()).exp() + 1.0).inverse();
}

/// Layer outputs for one batch, inputs as columns; stage[0] is the input,
/// stage[l + 1] the output of layer l.
std::vector<Eigen::MatrixXd> forward_stages(const MlpNetwork& net,
                                            const Eigen::MatrixXd& input_cols) {
    std::vector<Eigen::MatrixXd> stage;
    stage.reserve(net.weights.size() + 1);
    stage.push_back(input_cols);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        Eigen::MatrixXd a = net.weights[l] * stage.back();
        a.colwise() += net.biases[l];
        stage.push_back(activate(a, net.activations[l]));
    }
    return stage;
}

struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    double sse = 0.0;
};

/// SSE over the batch and its weight gradients from one backward sweep.
Gradients sse_gradients(const MlpNetwork& net, const Eigen::MatrixXd& input_cols,
                        const Eigen::RowVectorXd& targets) {
    const auto stage = forward_stages(net, input_cols);
    const std::size_t layers = net.weights.size();

    Gradients g;
    g.w.resize(layers);
    g.b.resize(layers);
    const Eigen::RowVectorXd err = stage.back().row(0) - targets;
    g.sse = err.squaredNorm();

    // delta = dSSE/d(pre-activation), walked back layer by layer
    Eigen::MatrixXd delta = 2.0 * err; // linear output layer
    for (std::size_t l = layers; l-- > 0;) {
        if (net.activations[l] == Activation::sigmoid) {
            const auto& z = stage[l + 1].array();
            delta.array() *= z * (1.0 - z);
        }
        g.w[l] = delta * stage[l].transpose();
        g.b[l] = delta.rowwise().sum();
        if (l > 0) delta = (net.weights[l].transpose() * delta).eval();
    }
    return g;
}

double batch_sse(const MlpNetwork& net, const Eigen::MatrixXd& input_cols,
                 const Eigen::RowVectorXd& targets) {
    return (forward_stages(net, input_cols).back().row(0) - targets).squaredNorm();
}

/// One sign-based adaptive step per weight (iRPROP-minus): grow the step on a
/// kept gradient sign, shrink and skip the move on a reversal.
template <class Mat>
void rprop_update(Mat& w, Mat& g, Mat& g_prev, Mat& step, const TrainConfig& cfg) {
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        double gk = g(k);
        const double p = gk * g_prev(k);
        if (p > 0.0) {
            step(k) = std::min(step(k) * cfg.rprop_grow, cfg.rprop_step_max);
        } else if (p < 0.0) {
            step(k) = std::max(step(k) * cfg.rprop_shrink, cfg.rprop_step_min);
            gk = 0.0;
        }
        if (gk > 0.0)
            w(k) -= step(k);
        else if (gk < 0.0)
            w(k) += step(k);
        g_prev(k) = gk;
    }
}

} // namespace

// ============================================================================
// MlpNetwork
// ============================================================================

void MlpNetwork::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("network needs input and output layers");
    for (int s : layer_sizes)
        if (s < 1) throw ConfigError("network layer sizes must be positive");
    if (layer_sizes.back() != 1) throw ConfigError("network output layer must have size 1");
    const std::size_t layers = layer_sizes.size() - 1;
    if (weights.size() != layers || biases.size() != layers || activations.size() != layers)
        throw ConfigError("network weight/bias/activation counts do not match the layers");
    for (std::size_t l = 0; l < layers; ++l) {
        if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l])
            throw ConfigError("network weight matrix shape does not match the layer sizes");
        if (biases[l].size() != layer_sizes[l + 1])
            throw ConfigError("network bias length does not match the layer sizes");
    }
}

Eigen::VectorXd MlpNetwork::forward(const Eigen::MatrixXd& scaled_rows) const {
    if (scaled_rows.cols() != layer_sizes.front())
        throw ConfigError("network input dimension mismatch");
    return forward_stages(*this, scaled_rows.transpose()).back().row(0);
}

double MlpNetwork::forward_one(const Eigen::VectorXd& scaled) const {
    return forward(scaled.transpose())[0];
}

Eigen::VectorXd MlpNetwork::predict(const Eigen::MatrixXd& canonical_values) const {
    return forward(scaler.apply(canonical_values));
}

MlpNetwork make_network(const std::vector<int>& layer_sizes, unsigned seed) {
    MlpNetwork net;
    net.layer_sizes = layer_sizes;
    net.seed = seed;
    std::mt19937 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Eigen::MatrixXd w(layer_sizes[l + 1], layer_sizes[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
        net.activations.push_back(l + 2 < layer_sizes.size() ? Activation::sigmoid
                                                             : Activation::linear);
    }
    net.validate();
    return net;
}

// ============================================================================
// Training data
// ============================================================================

void append_case(TrainingSet& set, const FeatureTable& table, const Eigen::VectorXd& beta,
                 const std::string& label) {
    if (table.values.rows() != beta.size())
        throw ConfigError("append_case: feature rows and beta length differ");
    if (set.size() == 0)
        set.active = table.active;
    else if (set.active != table.active)
        throw ConfigError("append_case: active-feature mask differs from the set's");

    const Eigen::Index old = set.size();
    Eigen::MatrixXd features(old + table.values.rows(), feature_count);
    Eigen::VectorXd targets(old + beta.size());
    if (old > 0) {
        features.topRows(old) = set.features;
        targets.head(old) = set.beta;
    }
    features.bottomRows(table.values.rows()) = table.values;
    targets.tail(beta.size()) = beta;
    set.features = std::move(features);
    set.beta = std::move(targets);
    set.case_labels.insert(set.case_labels.end(), beta.size(), label);
}

void write_training_csv(const std::string& path, const TrainingSet& set) {
    CsvTable t;
    std::vector<int> cols;
    for (int f = 0; f < feature_count; ++f)
        if (set.active[f]) {
            t.header.push_back(feature_name(static_cast<Feature>(f)));
            cols.push_back(f);
        }
    t.header.push_back("beta");
    t.header.push_back("case");
    for (Eigen::Index i = 0; i < set.size(); ++i) {
        std::vector<std::string> row;
        for (int f : cols) row.push_back(fmt_double(set.features(i, f)));
        row.push_back(fmt_double(set.beta[i]));
        row.push_back(set.case_labels[i]);
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

TrainingSet read_training_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    TrainingSet set;
    set.active = {false, false, false, false, false};
    std::vector<std::pair<std::size_t, int>> feature_cols; // csv column -> canonical slot
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        const std::string& name = t.header[c];
        if (name == "beta" || name == "case") continue;
        bool known = false;
        for (int f = 0; f < feature_count; ++f)
            if (name == feature_name(static_cast<Feature>(f))) {
                set.active[f] = true;
                feature_cols.push_back({c, f});
                known = true;
            }
        if (!known)
            throw ParseError("training set " + path + ": unknown column '" + name + "'");
    }
    if (feature_cols.empty())
        throw ParseError("training set " + path + ": no feature columns");
    const std::size_t beta_col = t.col("beta");
    const std::size_t case_col = t.col("case");
    const Eigen::Index n = static_cast<Eigen::Index>(t.n_rows());
    set.features = Eigen::MatrixXd::Zero(n, feature_count);
    set.beta.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (auto [c, f] : feature_cols) set.features(i, f) = t.num(i, c);
        set.beta[i] = t.num(i, beta_col);
        set.case_labels.push_back(t.rows[i][case_col]);
    }
    return set;
}

// ============================================================================
// Training
// ============================================================================

TrainResult train_network(const TrainingSet& set, const TrainConfig& cfg) {
    if (set.size() < 2) throw ConfigError("train_network: need at least 2 samples");
    if (set.features.rows() != set.size() ||
        set.case_labels.size() != static_cast<std::size_t>(set.size()))
        throw ConfigError("train_network: inconsistent training-set fields");
    if (!(cfg.validation_fraction > 0.0) || cfg.validation_fraction > 0.5)
        throw ConfigError("train_network: validation fraction must lie in (0, 0.5]");
    if (cfg.max_epochs < 1 || cfg.patience < 1)
        throw ConfigError("train_network: epochs and patience must be positive");

    // seeded split: validation first, training the rest; both nonempty
    std::vector<Eigen::Index> order(set.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const Eigen::Index n_val = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::lround(cfg.validation_fraction * set.size())), 1,
        set.size() - 1);

    Eigen::MatrixXd val_raw(n_val, feature_count);
    Eigen::RowVectorXd val_t(n_val);
    Eigen::MatrixXd train_raw(set.size() - n_val, feature_count);
    Eigen::RowVectorXd train_t(set.size() - n_val);
    for (Eigen::Index i = 0; i < n_val; ++i) {
        val_raw.row(i) = set.features.row(order[i]);
        val_t[i] = set.beta[order[i]];
    }
    for (Eigen::Index i = n_val; i < set.size(); ++i) {
        train_raw.row(i - n_val) = set.features.row(order[i]);
        train_t[i - n_val] = set.beta[order[i]];
    }

    TrainResult res;
    const FeatureScaler scaler = fit_scaler(train_raw, set.active, &res.warnings);
    const Eigen::MatrixXd train_x = scaler.apply(train_raw).transpose(); // inputs as columns
    const Eigen::MatrixXd val_x = scaler.apply(val_raw).transpose();

    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(train_x.rows()));
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(1);
    MlpNetwork net = make_network(sizes, cfg.seed);
    net.scaler = scaler;

    const std::size_t layers = net.weights.size();
    std::vector<Eigen::MatrixXd> w_gprev(layers), w_step(layers), w_vel(layers);
    std::vector<Eigen::VectorXd> b_gprev(layers), b_step(layers), b_vel(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        w_gprev[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
        b_gprev[l] = Eigen::VectorXd::Zero(net.biases[l].size());
        w_step[l] = Eigen::MatrixXd::Constant(net.weights[l].rows(), net.weights[l].cols(),
                                              cfg.rprop_step0);
        b_step[l] = Eigen::VectorXd::Constant(net.biases[l].size(), cfg.rprop_step0);
        w_vel[l] = w_gprev[l];
        b_vel[l] = b_gprev[l];
    }

    // the untrained network participates in best-snapshot selection
    MlpNetwork best = net;
    double best_val = batch_sse(net, val_x, val_t);
    double best_train = batch_sse(net, train_x, train_t);
    int best_epoch = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Gradients g = sse_gradients(net, train_x, train_t);
        for (std::size_t l = 0; l < layers; ++l) {
            if (cfg.algorithm == TrainAlgorithm::rprop) {
                rprop_update(net.weights[l], g.w[l], w_gprev[l], w_step[l], cfg);
                rprop_update(net.biases[l], g.b[l], b_gprev[l], b_step[l], cfg);
            } else {
                w_vel[l] = cfg.momentum * w_vel[l] - cfg.learning_rate * g.w[l];
                b_vel[l] = cfg.momentum * b_vel[l] - cfg.learning_rate * g.b[l];
                net.weights[l] += w_vel[l];
                net.biases[l] += b_vel[l];
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_sse = batch_sse(net, train_x, train_t);
        stats.validation_sse = batch_sse(net, val_x, val_t);
        res.history.push_back(stats);
        if (!std::isfinite(stats.train_sse) || !std::isfinite(stats.validation_sse)) {
            std::ostringstream msg;
            msg << "training loss became non-finite at epoch " << epoch;
            throw NumericalError(msg.str());
        }

        if (stats.validation_sse < best_val) {
            best_val = stats.validation_sse;
            best_train = stats.train_sse;
            best_epoch = epoch;
            best.weights = net.weights;
            best.biases = net.biases;
        } else if (epoch - best_epoch >= cfg.patience) {
            break;
        }
    }

    best.epochs_trained = static_cast<int>(res.history.size());
    best.train_sse = best_train;
    best.validation_sse = best_val;
    res.network = std::move(best);
    return res;
}

double backprop_gradcheck(const MlpNetwork& net, const Eigen::MatrixXd& scaled_rows,
                          const Eigen::VectorXd& targets) {
    net.validate();
    const Eigen::MatrixXd x = scaled_rows.transpose();
    const Eigen::RowVectorXd t = targets.transpose();
    const Gradients g = sse_gradients(net, x, t);

    MlpNetwork probe = net;
    const double h = 1e-6;
    double max_abs_fd = 0.0, max_diff = 0.0;
    auto check = [&](double& w, double analytic) {
        const double saved = w;
        w = saved + h;
        const double fp = batch_sse(probe, x, t);
        w = saved - h;
        const double fm = batch_sse(probe, x, t);
        w = saved;
        const double fd = (fp - fm) / (2.0 * h);
        max_abs_fd = std::max(max_abs_fd, std::abs(fd));
        max_diff = std::max(max_diff, std::abs(analytic - fd));
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (Eigen::Index k = 0; k < probe.weights[l].size(); ++k)
            check(probe.weights[l](k), g.w[l](k));
        for (Eigen::Index k = 0; k < probe.biases[l].size(); ++k)
            check(probe.biases[l](k), g.b[l](k));
    }
    return max_diff / std::max(max_abs_fd, 1e-300);
}

// ============================================================================
// Persistence
// ============================================================================

namespace {

const json& get_field(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end())
        throw ParseError(std::string("network file: missing field '") + name + "'");
    return *it;
}

} // namespace

void save_network(const std::string& path, const MlpNetwork& net) {
    net.validate();
    json j;
    j["format"] = "fiml-mlp";
    j["version"] = 1;
    j["layer_sizes"] = net.layer_sizes;
    std::vector<std::string> acts;
    for (Activation a : net.activations) acts.push_back(activation_name(a));
    j["activations"] = acts;
    json weights = json::array(), biases = json::array();
    for (const auto& w : net.weights) {
        std::vector<double> flat;
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        weights.push_back(flat);
    }
    for (const auto& b : net.biases)
        biases.push_back(std::vector<double>(b.begin(), b.end()));
    j["weights"] = weights;
    j["biases"] = biases;

    json scaler;
    std::vector<std::string> active;
    for (int f = 0; f < feature_count; ++f)
        if (net.scaler.active[f]) active.push_back(feature_name(static_cast<Feature>(f)));
    scaler["active"] = active;
    scaler["minimum"] = std::vector<double>(net.scaler.minimum.begin(),
                                            net.scaler.minimum.end());
    scaler["maximum"] = std::vector<double>(net.scaler.maximum.begin(),
                                            net.scaler.maximum.end());
    j["scaler"] = scaler;

    json meta;
    meta["seed"] = net.seed;
    meta["epochs"] = net.epochs_trained;
    meta["train_sse"] = net.train_sse;
    meta["validation_sse"] = net.validation_sse;
    j["metadata"] = meta;

    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

MlpNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("network file " + path + ": " + e.what());
    }

    if (get_field(j, "format").get<std::string>() != "fiml-mlp")
        throw ParseError("network file " + path + ": unrecognized format");
    if (get_field(j, "version").get<int>() != 1)
        throw ParseError("network file " + path + ": unsupported version");

    MlpNetwork net;
    net.layer_sizes = get_field(j, "layer_sizes").get<std::vector<int>>();
    for (const auto& name : get_field(j, "activations").get<std::vector<std::string>>())
        net.activations.push_back(activation_from_name(name));

    const json& weights = get_field(j, "weights");
    const json& biases = get_field(j, "biases");
    if (weights.size() + 1 != net.layer_sizes.size() || biases.size() != weights.size())
        throw ParseError("network file " + path + ": weight/bias layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto flat = weights[l].get<std::vector<double>>();
        const Eigen::Index rows = net.layer_sizes[l + 1], cols = net.layer_sizes[l];
        if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
            throw ParseError("network file " + path + ": weight matrix size mismatch");
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = flat[r * cols + c];
        net.weights.push_back(std::move(w));
        const auto bv = biases[l].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(bv.size()) != rows)
            throw ParseError("network file " + path + ": bias length mismatch");
        net.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bv.data(), bv.size()));
    }

    const json& scaler = get_field(j, "scaler");
    net.scaler.active = {false, false, false, false, false};
    for (const auto& name : get_field(scaler, "active").get<std::vector<std::string>>()) {
        bool known = false;
        for (int f = 0; f < feature_count; ++f)
            if (name == feature_name(static_cast<Feature>(f))) {
                net.scaler.active[f] = true;
                known = true;
            }
        if (!known)
            throw ParseError("network file " + path + ": unknown feature '" + name + "'");
    }
    const auto mins = get_field(scaler, "minimum").get<std::vector<double>>();
    const auto maxs = get_field(scaler, "maximum").get<std::vector<double>>();
    net.scaler.minimum.resize(static_cast<Eigen::Index>(mins.size()));
    net.scaler.maximum.resize(static_cast<Eigen::Index>(maxs.size()));
    for (std::size_t i = 0; i < mins.size(); ++i) net.scaler.minimum[i] = mins[i];
    for (std::size_t i = 0; i < maxs.size(); ++i) net.scaler.maximum[i] = maxs[i];

    const json& meta = get_field(j, "metadata");
    net.seed = get_field(meta, "seed").get<unsigned>();
    net.epochs_trained = get_field(meta, "epochs").get<int>();
    net.train_sse = get_field(meta, "train_sse").get<double>();
    net.validation_sse = get_field(meta, "validation_sse").get<double>();

    net.validate();
    return net;
}

} // namespace fiml
