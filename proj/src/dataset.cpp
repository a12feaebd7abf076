#include "fiml/dataset.hpp"

#include <cmath>
#include <sstream>

#include "fiml/csv.hpp"
#include "fiml/errors.hpp"

namespace fiml {

namespace {

/// Column index for the first present name of a pair, plus whether the wall-
/// unit variant was the one found.
std::pair<std::size_t, bool> find_column(const CsvTable& table, const std::string& physical,
                                         const std::string& plus, const std::string& path) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (table.header[j] == physical) return {j, false};
        if (table.header[j] == plus) return {j, true};
    }
    throw ParseError(path + ": needs a column named '" + physical + "' or '" + plus + "'");
}

} // namespace

TruthDataset ingest_profile(const std::string& path, ProfileUnits units,
                            const ChannelCase& cs) {
    const CsvTable table = read_csv(path);
    const auto [jy, y_in_plus] = find_column(table, "y", "y_plus", path);
    const auto [ju, u_in_plus] = find_column(table, "u", "u_plus", path);
    if (table.n_rows() == 0) throw ParseError(path + ": no data rows");

    // a physical-units file must not use wall-unit column names, and the other
    // way around; mixed headers are fine since each column converts on its own
    const bool any_plus = y_in_plus || u_in_plus;
    if (units == ProfileUnits::physical && any_plus)
        throw ParseError(path + ": wall-unit columns in a file declared physical");
    if (units == ProfileUnits::plus && !any_plus)
        throw ParseError(path + ": no wall-unit columns in a file declared plus");

    const double u_tau = cs.u_tau();
    const double y_scale = y_in_plus ? cs.nu / u_tau : 1.0;
    const double u_scale = u_in_plus ? u_tau : 1.0;

    TruthDataset out;
    out.kind = ObservationKind::velocity_profile;
    out.provenance = path;
    out.y.resize(table.n_rows());
    out.u.resize(table.n_rows());
    double prev = -1.0;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const std::size_t line = r + 2; // header is line 1
        const double yv = table.num(r, jy);
        const double uv = table.num(r, ju);
        std::ostringstream at;
        at << path << " line " << line;
        if (!std::isfinite(yv) || !std::isfinite(uv))
            throw ParseError(at.str() + ": non-finite value");
        if (yv < 0.0) throw ParseError(at.str() + ": negative wall distance");
        if (yv <= prev) throw ParseError(at.str() + ": y must increase strictly");
        prev = yv;
        out.y[r] = yv * y_scale;
        out.u[r] = uv * u_scale;
    }
    return out;
}

TruthDataset ingest_scalars(const std::string& path) {
    const CsvTable table = read_csv(path);
    const std::size_t jl = table.col("label");
    const std::size_t jr = table.col("re_tau");
    const std::size_t jc = table.col("cf");
    if (table.n_rows() == 0) throw ParseError(path + ": no data rows");

    TruthDataset out;
    out.kind = ObservationKind::scalar_cf;
    out.provenance = path;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        std::ostringstream at;
        at << path << " line " << r + 2;
        ScalarRecord rec;
        rec.label = table.rows[r][jl];
        rec.re_tau = table.num(r, jr);
        rec.cf = table.num(r, jc);
        if (rec.label.empty()) throw ParseError(at.str() + ": empty label");
        if (!(rec.re_tau > 0.0)) throw ParseError(at.str() + ": re_tau must be positive");
        if (!std::isfinite(rec.cf) || !(rec.cf > 0.0))
            throw ParseError(at.str() + ": cf must be finite and positive");
        out.scalars.push_back(std::move(rec));
    }
    return out;
}

Observation observation_from_profile(const TruthDataset& data, const Grid1D& grid) {
    if (data.kind != ObservationKind::velocity_profile)
        throw ConfigError("observation_from_profile needs a profile dataset");
    const int n = static_cast<int>(grid.n());

    // nearest node per datum; on a collision the closer datum wins, ties keep
    // the earlier one
    std::vector<int> owner(n, -1);
    std::vector<double> dist(n, 0.0);
    for (Eigen::Index k = 0; k < data.y.size(); ++k) {
        int best = 0;
        double bd = std::abs(data.y[k] - grid.y[0]);
        for (int i = 1; i < n; ++i) {
            const double d = std::abs(data.y[k] - grid.y[i]);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        if (best == 0) continue; // wall node: no-slip is already enforced
        if (owner[best] < 0 || bd < dist[best]) {
            owner[best] = static_cast<int>(k);
            dist[best] = bd;
        }
    }

    double sum_sq = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (owner[i] < 0) continue;
        sum_sq += data.u[owner[i]] * data.u[owner[i]];
        ++count;
    }
    if (count == 0)
        throw ConfigError("profile observation is empty after mapping onto the grid");
    const double u_ref = std::sqrt(sum_sq / count);
    if (!(u_ref > 0.0))
        throw ConfigError("profile observation has zero velocity scale");
    const double w = 1.0 / (0.01 * u_ref * 0.01 * u_ref);

    Observation obs;
    obs.kind = ObservationKind::velocity_profile;
    for (int i = 0; i < n; ++i)
        if (owner[i] >= 0) obs.profile.push_back({i, data.u[owner[i]], w});
    return obs;
}

Observation observation_from_scalar(const TruthDataset& data, const std::string& case_label) {
    if (data.kind != ObservationKind::scalar_cf)
        throw ConfigError("observation_from_scalar needs a scalar dataset");
    for (const ScalarRecord& rec : data.scalars) {
        if (rec.label != case_label) continue;
        Observation obs;
        obs.kind = ObservationKind::scalar_cf;
        obs.cf_target = rec.cf;
        obs.cf_weight = 1.0 / (0.01 * rec.cf * 0.01 * rec.cf);
        return obs;
    }
    std::ostringstream msg;
    msg << "no scalar record labeled '" << case_label << "'; available:";
    for (const ScalarRecord& rec : data.scalars) msg << " '" << rec.label << "'";
    throw ConfigError(msg.str());
}

} // namespace fiml
