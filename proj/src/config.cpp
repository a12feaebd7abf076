#include "fiml/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fiml/csv.hpp"
#include "fiml/errors.hpp"
#include "fiml/toml.hpp"

namespace fiml {

const char* observation_kind_name(ObservationKind kind) {
    return kind == ObservationKind::scalar_cf ? "scalar" : "profile";
}

const char* observation_source_name(ObservationSource source) {
    return source == ObservationSource::twin ? "twin" : "file";
}

const char* profile_units_name(ProfileUnits units) {
    return units == ProfileUnits::plus ? "plus" : "physical";
}

const char* train_algorithm_name(TrainAlgorithm algorithm) {
    return algorithm == TrainAlgorithm::rprop ? "rprop" : "sgd";
}

namespace {

/// One section's keys with consumption tracking: every key a loader asks for
/// is marked seen, so whatever remains afterwards is unknown by construction.
class SectionReader {
public:
    SectionReader(const TomlDocument& doc, std::string section, const std::string& source)
        : name_(std::move(section)) {
        auto it = doc.find(name_);
        if (it != doc.end()) table_ = &it->second;
        prefix_ = source + ": [" + name_ + "].";
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return table_ && table_->count(key) > 0;
    }

    double number(const std::string& key, double fallback) {
        const TomlValue* v = find(key);
        return v ? v->as_number(prefix_ + key) : fallback;
    }

    int integer(const std::string& key, int fallback) {
        const TomlValue* v = find(key);
        if (!v) return fallback;
        return narrow(v->as_integer(prefix_ + key), key, std::numeric_limits<int>::min(),
                      std::numeric_limits<int>::max());
    }

    unsigned uinteger(const std::string& key, unsigned fallback) {
        const TomlValue* v = find(key);
        if (!v) return fallback;
        return static_cast<unsigned>(
            narrow(v->as_integer(prefix_ + key), key, 0, std::numeric_limits<unsigned>::max()));
    }

    bool boolean(const std::string& key, bool fallback) {
        const TomlValue* v = find(key);
        return v ? v->as_boolean(prefix_ + key) : fallback;
    }

    std::string text(const std::string& key, std::string fallback) {
        const TomlValue* v = find(key);
        return v ? v->as_string(prefix_ + key) : std::move(fallback);
    }

    std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
        const TomlValue* v = find(key);
        if (!v) return fallback;
        std::vector<std::string> out;
        for (const TomlValue& e : elements(*v, key))
            out.push_back(e.as_string(prefix_ + key));
        return out;
    }

    std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
        const TomlValue* v = find(key);
        if (!v) return fallback;
        std::vector<int> out;
        for (const TomlValue& e : elements(*v, key))
            out.push_back(narrow(e.as_integer(prefix_ + key), key,
                                 std::numeric_limits<int>::min(),
                                 std::numeric_limits<int>::max()));
        return out;
    }

    std::string context(const std::string& key) const { return prefix_ + key; }

    /// Keys present in the file but never asked for.
    void unknown_into(std::vector<std::string>& out) const {
        if (!table_) return;
        for (const auto& [key, value] : *table_)
            if (!seen_.count(key)) out.push_back(name_ + "." + key);
    }

private:
    const TomlValue* find(const std::string& key) {
        seen_.insert(key);
        if (!table_) return nullptr;
        auto it = table_->find(key);
        return it == table_->end() ? nullptr : &it->second;
    }

    long long narrow(long long raw, const std::string& key, long long lo, long long hi) const {
        if (raw < lo || raw > hi)
            throw ConfigError(prefix_ + key + ": integer out of range");
        return raw;
    }

    const std::vector<TomlValue>& elements(const TomlValue& v, const std::string& key) const {
        if (v.kind != TomlValue::Kind::Array)
            throw ParseError(prefix_ + key + ": expected an array");
        return v.array;
    }

    const std::map<std::string, TomlValue>* table_ = nullptr;
    std::string name_;
    std::string prefix_;
    std::set<std::string> seen_;
};

ObservationKind parse_kind(const std::string& s, const std::string& context) {
    if (s == "scalar") return ObservationKind::scalar_cf;
    if (s == "profile") return ObservationKind::velocity_profile;
    throw ConfigError(context + ": expected \"scalar\" or \"profile\", got \"" + s + "\"");
}

ObservationSource parse_source(const std::string& s, const std::string& context) {
    if (s == "twin") return ObservationSource::twin;
    if (s == "file") return ObservationSource::file;
    throw ConfigError(context + ": expected \"twin\" or \"file\", got \"" + s + "\"");
}

ProfileUnits parse_units(const std::string& s, const std::string& context) {
    if (s == "plus") return ProfileUnits::plus;
    if (s == "physical") return ProfileUnits::physical;
    throw ConfigError(context + ": expected \"plus\" or \"physical\", got \"" + s + "\"");
}

TrainAlgorithm parse_algorithm(const std::string& s, const std::string& context) {
    if (s == "rprop") return TrainAlgorithm::rprop;
    if (s == "sgd") return TrainAlgorithm::sgd_momentum;
    throw ConfigError(context + ": expected \"rprop\" or \"sgd\", got \"" + s + "\"");
}

FeatureMask parse_feature_names(const std::vector<std::string>& names,
                                const std::string& context) {
    if (names.empty())
        throw ConfigError(context + ": at least one feature name required");
    FeatureMask mask{};
    for (const std::string& wanted : names) {
        bool matched = false;
        for (int f = 0; f < feature_count; ++f) {
            if (wanted != feature_name(static_cast<Feature>(f))) continue;
            if (mask[f])
                throw ConfigError(context + ": duplicate feature \"" + wanted + "\"");
            mask[f] = true;
            matched = true;
            break;
        }
        if (!matched) {
            std::ostringstream msg;
            msg << context << ": unknown feature \"" << wanted << "\"; known:";
            for (int f = 0; f < feature_count; ++f)
                msg << " " << feature_name(static_cast<Feature>(f));
            throw ConfigError(msg.str());
        }
    }
    return mask;
}

std::string toml_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    out += "\"";
    return out;
}

std::string toml_strings(const std::vector<std::string>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += toml_string(values[i]);
    }
    return out + "]";
}

std::string toml_integers(const std::vector<int>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(values[i]);
    }
    return out + "]";
}

std::vector<std::string> active_feature_names(const FeatureMask& mask) {
    std::vector<std::string> names;
    for (int f = 0; f < feature_count; ++f)
        if (mask[f]) names.push_back(feature_name(static_cast<Feature>(f)));
    return names;
}

} // namespace

AugmentConfig AugmentSpec::make_config(const FeatureConfig& features) const {
    AugmentConfig out;
    out.beta_lo = beta_lo;
    out.beta_hi = beta_hi;
    out.relaxation = relaxation;
    out.beta_tol = beta_tol;
    out.features = features;
    return out;
}

Grid1D RunConfig::make_grid() const {
    return build_grid(grid_n, channel.h, grid_stretch, half_channel);
}

void RunConfig::validate() const {
    auto bad = [](const std::string& what) { throw ConfigError("config: " + what); };

    if (channel.label.empty()) bad("case label must not be empty");
    if (!(channel.re_tau > 0.0)) bad("re_tau must be positive");
    if (!(channel.nu > 0.0) || !std::isfinite(channel.nu)) bad("nu must be positive and finite");
    if (!(channel.h > 0.0)) bad("h must be positive");

    if (grid_n < 3) bad("grid n must be at least 3");
    if (!(grid_stretch >= 1.0)) bad("grid stretch must be at least 1");

    if (!(solver.tol > 0.0)) bad("solver tol must be positive");
    if (solver.max_steps < 1) bad("solver max_steps must be at least 1");
    if (!(solver.dt_init > 0.0)) bad("solver dt_init must be positive");
    if (!(solver.dt_growth >= 1.0)) bad("solver dt_growth must be at least 1");
    if (!(solver.dt_max >= solver.dt_init)) bad("solver dt_max must be at least dt_init");
    if (solver.initial_nu_tilde_factor < 0.0)
        bad("solver initial_nu_tilde_factor must be nonnegative");

    if (!(constants.cb1 > 0.0)) bad("cb1 must be positive");
    if (!(constants.sigma > 0.0)) bad("sigma must be positive");
    if (!(constants.kappa > 0.0)) bad("kappa must be positive");
    if (!(constants.cv1 > 0.0)) bad("cv1 must be positive");
    if (!(constants.cw3 > 0.0)) bad("cw3 must be positive");
    if (!(constants.r_clip > 0.0)) bad("r_clip must be positive");
    if (!(constants.omega_floor > 0.0 && constants.omega_floor <= 1.0))
        bad("omega_floor must lie in (0, 1]");

    if (!(observation.amplitude > -1.0))
        bad("observation amplitude must exceed -1 so the true correction stays positive");
    if (!(observation.width_plus > 0.0)) bad("observation width_plus must be positive");
    if (observation.center_plus < 0.0) bad("observation center_plus must be nonnegative");
    if (observation.source == ObservationSource::file && observation.path.empty())
        bad("observation path is required when source is \"file\"");

    if (inversion.lambda < 0.0) bad("inversion lambda must be nonnegative");
    if (inversion.optimizer.memory < 1) bad("inversion memory must be at least 1");
    if (inversion.optimizer.max_iterations < 1) bad("inversion max_iterations must be at least 1");
    if (!(inversion.optimizer.grad_tol > 0.0)) bad("inversion grad_tol must be positive");
    if (!(inversion.optimizer.armijo_c > 0.0 && inversion.optimizer.armijo_c < 1.0))
        bad("inversion armijo_c must lie in (0, 1)");
    if (inversion.optimizer.max_backtracks < 1) bad("inversion max_backtracks must be at least 1");
    if (!(inversion.sensitivity_threshold >= 0.0 && inversion.sensitivity_threshold <= 1.0))
        bad("inversion sensitivity_threshold must lie in [0, 1]");

    if (training.config.hidden.empty()) bad("training hidden must name at least one layer");
    for (int width : training.config.hidden)
        if (width < 1) bad("training hidden layer sizes must be positive");
    if (training.config.max_epochs < 1) bad("training max_epochs must be at least 1");
    if (training.config.patience < 1) bad("training patience must be at least 1");
    if (!(training.config.validation_fraction > 0.0 && training.config.validation_fraction < 1.0))
        bad("training validation_fraction must lie in (0, 1)");
    if (!(training.config.learning_rate > 0.0)) bad("training learning_rate must be positive");
    if (!(training.config.momentum >= 0.0 && training.config.momentum < 1.0))
        bad("training momentum must lie in [0, 1)");

    if (!(features.eps > 0.0)) bad("features eps must be positive");
    if (!(features.cap > 0.0)) bad("features cap must be positive");
    if (std::none_of(features.active.begin(), features.active.end(), [](bool b) { return b; }))
        bad("at least one feature must be active");

    augment.make_config(features).validate();

    if (!(gradcheck.step > 0.0)) bad("gradcheck step must be positive");
    if (!(gradcheck.tolerance > 0.0)) bad("gradcheck tolerance must be positive");
    for (int node : gradcheck.nodes)
        if (node < 0 || node >= grid_n) bad("gradcheck nodes must lie inside the grid");

    if (output_root.empty()) bad("output_root must not be empty");
}

RunConfig parse_run_config(const std::string& text, const std::string& source_name) {
    const TomlDocument doc = parse_toml(text, source_name);
    RunConfig cfg;
    std::vector<std::string> unknown;

    SectionReader cs(doc, "case", source_name);
    cfg.channel.label = cs.text("label", cfg.channel.label);
    cfg.channel.re_tau = cs.number("re_tau", cfg.channel.re_tau);
    cfg.channel.h = cs.number("h", cfg.channel.h);
    if (cs.has("nu"))
        cfg.channel.nu = cs.number("nu", cfg.channel.nu);
    else if (cfg.channel.re_tau > 0.0)
        cfg.channel.nu = cfg.channel.h / cfg.channel.re_tau;

    SectionReader gr(doc, "grid", source_name);
    cfg.grid_n = gr.integer("n", cfg.grid_n);
    cfg.grid_stretch = gr.number("stretch", cfg.grid_stretch);
    cfg.half_channel = gr.boolean("half_channel", cfg.half_channel);

    SectionReader so(doc, "solver", source_name);
    cfg.solver.tol = so.number("tol", cfg.solver.tol);
    cfg.solver.max_steps = so.integer("max_steps", cfg.solver.max_steps);
    cfg.solver.dt_init = so.number("dt_init", cfg.solver.dt_init);
    cfg.solver.dt_growth = so.number("dt_growth", cfg.solver.dt_growth);
    cfg.solver.dt_max = so.number("dt_max", cfg.solver.dt_max);
    cfg.solver.initial_nu_tilde_factor =
        so.number("initial_nu_tilde_factor", cfg.solver.initial_nu_tilde_factor);

    SectionReader co(doc, "constants", source_name);
    cfg.constants.cb1 = co.number("cb1", cfg.constants.cb1);
    cfg.constants.sigma = co.number("sigma", cfg.constants.sigma);
    cfg.constants.cb2 = co.number("cb2", cfg.constants.cb2);
    cfg.constants.kappa = co.number("kappa", cfg.constants.kappa);
    cfg.constants.cw2 = co.number("cw2", cfg.constants.cw2);
    cfg.constants.cw3 = co.number("cw3", cfg.constants.cw3);
    cfg.constants.cv1 = co.number("cv1", cfg.constants.cv1);
    cfg.constants.r_clip = co.number("r_clip", cfg.constants.r_clip);
    cfg.constants.omega_floor = co.number("omega_floor", cfg.constants.omega_floor);

    SectionReader ob(doc, "observation", source_name);
    if (ob.has("kind"))
        cfg.observation.kind = parse_kind(ob.text("kind", ""), ob.context("kind"));
    if (ob.has("source"))
        cfg.observation.source = parse_source(ob.text("source", ""), ob.context("source"));
    cfg.observation.amplitude = ob.number("amplitude", cfg.observation.amplitude);
    cfg.observation.center_plus = ob.number("center_plus", cfg.observation.center_plus);
    cfg.observation.width_plus = ob.number("width_plus", cfg.observation.width_plus);
    cfg.observation.path = ob.text("path", cfg.observation.path);
    if (ob.has("units"))
        cfg.observation.units = parse_units(ob.text("units", ""), ob.context("units"));
    cfg.observation.scalar_label = ob.text("scalar_label", cfg.observation.scalar_label);

    SectionReader in(doc, "inversion", source_name);
    cfg.inversion.lambda = in.number("lambda", cfg.inversion.lambda);
    cfg.inversion.optimizer.memory = in.integer("memory", cfg.inversion.optimizer.memory);
    cfg.inversion.optimizer.max_iterations =
        in.integer("max_iterations", cfg.inversion.optimizer.max_iterations);
    cfg.inversion.optimizer.grad_tol = in.number("grad_tol", cfg.inversion.optimizer.grad_tol);
    cfg.inversion.optimizer.armijo_c = in.number("armijo_c", cfg.inversion.optimizer.armijo_c);
    cfg.inversion.optimizer.max_backtracks =
        in.integer("max_backtracks", cfg.inversion.optimizer.max_backtracks);
    cfg.inversion.sensitivity_threshold =
        in.number("sensitivity_threshold", cfg.inversion.sensitivity_threshold);

    SectionReader tr(doc, "training", source_name);
    cfg.training.config.hidden = tr.integers("hidden", cfg.training.config.hidden);
    if (tr.has("algorithm"))
        cfg.training.config.algorithm =
            parse_algorithm(tr.text("algorithm", ""), tr.context("algorithm"));
    cfg.training.config.max_epochs = tr.integer("max_epochs", cfg.training.config.max_epochs);
    cfg.training.config.patience = tr.integer("patience", cfg.training.config.patience);
    cfg.training.config.validation_fraction =
        tr.number("validation_fraction", cfg.training.config.validation_fraction);
    cfg.training.config.seed = tr.uinteger("seed", cfg.training.config.seed);
    cfg.training.config.learning_rate =
        tr.number("learning_rate", cfg.training.config.learning_rate);
    cfg.training.config.momentum = tr.number("momentum", cfg.training.config.momentum);
    cfg.training.data = tr.strings("data", cfg.training.data);

    SectionReader fe(doc, "features", source_name);
    if (fe.has("active"))
        cfg.features.active = parse_feature_names(fe.strings("active", {}), fe.context("active"));
    cfg.features.eps = fe.number("eps", cfg.features.eps);
    cfg.features.cap = fe.number("cap", cfg.features.cap);

    SectionReader au(doc, "augment", source_name);
    cfg.augment.beta_lo = au.number("beta_lo", cfg.augment.beta_lo);
    cfg.augment.beta_hi = au.number("beta_hi", cfg.augment.beta_hi);
    cfg.augment.relaxation = au.number("relaxation", cfg.augment.relaxation);
    cfg.augment.beta_tol = au.number("beta_tol", cfg.augment.beta_tol);
    cfg.augment.network = au.text("network", cfg.augment.network);
    cfg.augment.networks = au.strings("networks", cfg.augment.networks);

    SectionReader gc(doc, "gradcheck", source_name);
    cfg.gradcheck.nodes = gc.integers("nodes", cfg.gradcheck.nodes);
    cfg.gradcheck.step = gc.number("step", cfg.gradcheck.step);
    cfg.gradcheck.tolerance = gc.number("tolerance", cfg.gradcheck.tolerance);

    SectionReader pa(doc, "paths", source_name);
    cfg.output_root = pa.text("output_root", cfg.output_root);

    for (const SectionReader* reader : {&cs, &gr, &so, &co, &ob, &in, &tr, &fe, &au, &gc, &pa})
        reader->unknown_into(unknown);

    static const std::set<std::string> known_sections = {
        "",         "case",     "grid",    "solver",  "constants", "observation",
        "inversion", "training", "features", "augment", "gradcheck", "paths"};
    for (const auto& [section, table] : doc) {
        if (section.empty()) {
            for (const auto& [key, value] : table) unknown.push_back(key);
        } else if (!known_sections.count(section)) {
            if (table.empty())
                unknown.push_back("[" + section + "]");
            else
                for (const auto& [key, value] : table) unknown.push_back(section + "." + key);
        }
    }

    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        std::ostringstream msg;
        msg << source_name << ": unknown config keys: ";
        for (std::size_t i = 0; i < unknown.size(); ++i)
            msg << (i ? ", " : "") << unknown[i];
        throw ConfigError(msg.str());
    }

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path);
}

std::string render_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    // negative zero would render as "-0" and reload as +0; normalize so the
    // rendered text is a fixed point of load-then-render from the start
    auto num = [](double v) { return fmt_double(v == 0.0 ? 0.0 : v); };

    out << "[case]\n";
    out << "label = " << toml_string(cfg.channel.label) << "\n";
    out << "re_tau = " << num(cfg.channel.re_tau) << "\n";
    out << "h = " << num(cfg.channel.h) << "\n";
    out << "nu = " << num(cfg.channel.nu) << "\n";

    out << "\n[grid]\n";
    out << "n = " << cfg.grid_n << "\n";
    out << "stretch = " << num(cfg.grid_stretch) << "\n";
    out << "half_channel = " << (cfg.half_channel ? "true" : "false") << "\n";

    out << "\n[solver]\n";
    out << "tol = " << num(cfg.solver.tol) << "\n";
    out << "max_steps = " << cfg.solver.max_steps << "\n";
    out << "dt_init = " << num(cfg.solver.dt_init) << "\n";
    out << "dt_growth = " << num(cfg.solver.dt_growth) << "\n";
    out << "dt_max = " << num(cfg.solver.dt_max) << "\n";
    out << "initial_nu_tilde_factor = " << num(cfg.solver.initial_nu_tilde_factor) << "\n";

    out << "\n[constants]\n";
    out << "cb1 = " << num(cfg.constants.cb1) << "\n";
    out << "sigma = " << num(cfg.constants.sigma) << "\n";
    out << "cb2 = " << num(cfg.constants.cb2) << "\n";
    out << "kappa = " << num(cfg.constants.kappa) << "\n";
    out << "cw2 = " << num(cfg.constants.cw2) << "\n";
    out << "cw3 = " << num(cfg.constants.cw3) << "\n";
    out << "cv1 = " << num(cfg.constants.cv1) << "\n";
    out << "r_clip = " << num(cfg.constants.r_clip) << "\n";
    out << "omega_floor = " << num(cfg.constants.omega_floor) << "\n";

    out << "\n[observation]\n";
    out << "kind = \"" << observation_kind_name(cfg.observation.kind) << "\"\n";
    out << "source = \"" << observation_source_name(cfg.observation.source) << "\"\n";
    out << "amplitude = " << num(cfg.observation.amplitude) << "\n";
    out << "center_plus = " << num(cfg.observation.center_plus) << "\n";
    out << "width_plus = " << num(cfg.observation.width_plus) << "\n";
    out << "path = " << toml_string(cfg.observation.path) << "\n";
    out << "units = \"" << profile_units_name(cfg.observation.units) << "\"\n";
    out << "scalar_label = " << toml_string(cfg.observation.scalar_label) << "\n";

    out << "\n[inversion]\n";
    out << "lambda = " << num(cfg.inversion.lambda) << "\n";
    out << "memory = " << cfg.inversion.optimizer.memory << "\n";
    out << "max_iterations = " << cfg.inversion.optimizer.max_iterations << "\n";
    out << "grad_tol = " << num(cfg.inversion.optimizer.grad_tol) << "\n";
    out << "armijo_c = " << num(cfg.inversion.optimizer.armijo_c) << "\n";
    out << "max_backtracks = " << cfg.inversion.optimizer.max_backtracks << "\n";
    out << "sensitivity_threshold = " << num(cfg.inversion.sensitivity_threshold) << "\n";

    out << "\n[training]\n";
    out << "hidden = " << toml_integers(cfg.training.config.hidden) << "\n";
    out << "algorithm = \"" << train_algorithm_name(cfg.training.config.algorithm) << "\"\n";
    out << "max_epochs = " << cfg.training.config.max_epochs << "\n";
    out << "patience = " << cfg.training.config.patience << "\n";
    out << "validation_fraction = " << num(cfg.training.config.validation_fraction) << "\n";
    out << "seed = " << cfg.training.config.seed << "\n";
    out << "learning_rate = " << num(cfg.training.config.learning_rate) << "\n";
    out << "momentum = " << num(cfg.training.config.momentum) << "\n";
    out << "data = " << toml_strings(cfg.training.data) << "\n";

    out << "\n[features]\n";
    out << "active = " << toml_strings(active_feature_names(cfg.features.active)) << "\n";
    out << "eps = " << num(cfg.features.eps) << "\n";
    out << "cap = " << num(cfg.features.cap) << "\n";

    out << "\n[augment]\n";
    out << "beta_lo = " << num(cfg.augment.beta_lo) << "\n";
    out << "beta_hi = " << num(cfg.augment.beta_hi) << "\n";
    out << "relaxation = " << num(cfg.augment.relaxation) << "\n";
    out << "beta_tol = " << num(cfg.augment.beta_tol) << "\n";
    out << "network = " << toml_string(cfg.augment.network) << "\n";
    out << "networks = " << toml_strings(cfg.augment.networks) << "\n";

    out << "\n[gradcheck]\n";
    out << "nodes = " << toml_integers(cfg.gradcheck.nodes) << "\n";
    out << "step = " << num(cfg.gradcheck.step) << "\n";
    out << "tolerance = " << num(cfg.gradcheck.tolerance) << "\n";

    out << "\n[paths]\n";
    out << "output_root = " << toml_string(cfg.output_root) << "\n";

    return out.str();
}

} // namespace fiml
