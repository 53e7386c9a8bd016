#include "moistcol/saturation.hpp"

#include "csv_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace moistcol {

namespace {

constexpr double kZSlack = 1e-12;

// Cell index and (possibly extrapolating) fraction along one axis.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
    if (axis.size() < 2) return {0, 0.0};
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
    i = std::min(i, axis.size() - 2);
    return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

void check_axis(const std::vector<double>& axis, const char* name, std::size_t minNodes) {
    if (axis.size() < minNodes)
        throw ConfigError(std::string("saturation table needs at least ") + std::to_string(minNodes) + " " + name +
                          " nodes");
}

}  // namespace

SaturationTable load_saturation_table(const std::string& path) {
    const auto csv = detail::read_csv(path);
    const int ct = csv.column("theta"), cz = csv.column("z"), ctt = csv.column("t"), cq = csv.column("q");
    if (ct < 0 || cz < 0 || ctt < 0 || cq < 0)
        throw ConfigError(path + ": saturation table needs columns theta,z,t,q");

    std::set<double> th, zs, ts;
    std::map<std::tuple<double, double, double>, double> values;
    for (const auto& row : csv.rows) {
        const double a = detail::parse_double(row[static_cast<std::size_t>(ct)], path);
        const double b = detail::parse_double(row[static_cast<std::size_t>(cz)], path);
        const double c = detail::parse_double(row[static_cast<std::size_t>(ctt)], path);
        const double q = detail::parse_double(row[static_cast<std::size_t>(cq)], path);
        th.insert(a);
        zs.insert(b);
        ts.insert(c);
        if (!values.emplace(std::make_tuple(a, b, c), q).second)
            throw ConfigError(path + ": duplicate grid node in saturation table");
    }
    SaturationTable table;
    table.theta.assign(th.begin(), th.end());
    table.z.assign(zs.begin(), zs.end());
    table.t.assign(ts.begin(), ts.end());
    if (values.size() != table.theta.size() * table.z.size() * table.t.size())
        throw ConfigError(path + ": saturation table is not a full tensor grid");
    table.q.reserve(values.size());
    for (double a : table.theta)
        for (double b : table.z)
            for (double c : table.t) table.q.push_back(values.at({a, b, c}));
    return table;
}

SaturationModel SaturationModel::linear(double qstar, double a, double b, double c) {
    if (!(a > 0.0)) throw ConfigError("linear saturation model requires a > 0");
    if (!(b > 0.0)) throw ConfigError("linear saturation model requires b > 0");
    if (!(c >= 0.0)) throw ConfigError("linear saturation model requires c >= 0");
    SaturationModel m;
    m.kind_ = Kind::LinearBuiltin;
    m.qstar_ = qstar;
    m.a_ = a;
    m.b_ = b;
    m.c_ = c;
    return m;
}

SaturationModel SaturationModel::tabulated(SaturationTable table) {
    check_axis(table.theta, "theta", 2);
    check_axis(table.z, "z", 2);
    check_axis(table.t, "t", 1);
    if (table.q.size() != table.theta.size() * table.z.size() * table.t.size())
        throw ConfigError("saturation table size does not match its axes");
    for (std::size_t i = 0; i < table.theta.size(); ++i)
        for (std::size_t j = 0; j < table.z.size(); ++j)
            for (std::size_t k = 0; k < table.t.size(); ++k) {
                if (i + 1 < table.theta.size() && !(table.at(i + 1, j, k) > table.at(i, j, k)))
                    throw ConfigError("saturation table is not strictly increasing in theta");
                if (j + 1 < table.z.size() && !(table.at(i, j + 1, k) < table.at(i, j, k)))
                    throw ConfigError("saturation table is not strictly decreasing in z");
            }
    SaturationModel m;
    m.kind_ = Kind::UserTabulated;
    m.table_ = std::make_shared<const SaturationTable>(std::move(table));
    return m;
}

double SaturationModel::operator()(double theta, double z, double t) const {
    if (kind_ == Kind::LinearBuiltin) return qstar_ + a_ * theta - b_ * z - c_ * t;
    return interpolate(theta, z, t);
}

double SaturationModel::interpolate(double theta, double z, double t) const {
    const auto& tb = *table_;
    const auto [i, fx] = locate(tb.theta, theta);
    const auto [j, fy] = locate(tb.z, z);
    const auto [k, fz] = locate(tb.t, t);
    const std::size_t k1 = tb.t.size() > 1 ? k + 1 : k;
    auto lerp = [](double p, double q, double f) { return p + (q - p) * f; };
    auto along_t = [&](std::size_t a, std::size_t b) { return lerp(tb.at(a, b, k), tb.at(a, b, k1), fz); };
    const double c00 = along_t(i, j), c01 = along_t(i, j + 1);
    const double c10 = along_t(i + 1, j), c11 = along_t(i + 1, j + 1);
    return lerp(lerp(c00, c01, fy), lerp(c10, c11, fy), fx);
}

double eval_qsat(const SaturationModel& model, double theta, double z, double t) {
    if (!(z >= -kZSlack && z <= 1.0 + kZSlack))
        throw ConfigError("saturation evaluated outside z in [0,1]: z=" + std::to_string(z));
    return model(theta, std::clamp(z, 0.0, 1.0), t);
}

double theta_inverse(const SaturationModel& model, double w, double z, double t, const SolverConfig& cfg) {
    auto residual = [&](double theta) { return theta + model(theta, z, t) - w; };

    // Slope of theta + Q^sat exceeds 1, so stepping by the residual always crosses the root.
    double guess = w - model(0.0, z, t);
    double r = residual(guess);
    int evals = 1;
    if (r == 0.0) return guess;

    double lo = guess, hi = guess;
    double step = std::abs(r) * (1.0 + 1e-12) + std::numeric_limits<double>::min();
    for (;;) {
        if (r > 0.0) {
            lo = hi - step;
            if (residual(lo) <= 0.0) break;
        } else {
            hi = lo + step;
            if (residual(hi) >= 0.0) break;
        }
        step *= 2.0;
        if (++evals > cfg.maxIter)
            throw SolverError("theta_inverse: failed to bracket root (w=" + std::to_string(w) + ")");
    }

    while (hi - lo > cfg.tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (residual(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
        if (++evals > cfg.maxIter)
            throw SolverError("theta_inverse: bisection did not converge (w=" + std::to_string(w) + ")");
    }
    return 0.5 * (lo + hi);
}

ThetaBounds compute_bounds(const SaturationModel& model, const DomainBox& box, int gridResolution,
                           const SolverConfig& cfg) {
    if (!(box.wMax > 0.0) || !(box.T > 0.0)) throw ConfigError("domain box requires wMax > 0 and T > 0");
    ThetaBounds out;
    if (model.kind() == SaturationModel::Kind::LinearBuiltin) {
        const double s = 1.0 + model.a();
        out.infDwTheta = 1.0 / s;
        out.infDzTheta = model.b() / s;
        out.supDzTheta = model.b() / s;
        out.supDtTheta = model.c() / s;
        // Theta is affine, so |Theta| peaks at a corner of the box.
        for (double w : {-box.wMax, box.wMax})
            for (double z : {0.0, 1.0})
                for (double t : {0.0, box.T})
                    out.supAbsTheta =
                        std::max(out.supAbsTheta, std::abs((w - model.qstar() + model.b() * z + model.c() * t) / s));
    } else {
        if (gridResolution < 2) throw ConfigError("grid resolution must be at least 2");
        out.infDwTheta = std::numeric_limits<double>::infinity();
        out.infDzTheta = std::numeric_limits<double>::infinity();
        const int g = gridResolution;
        const double h = 1e-6;
        for (int iw = 0; iw < g; ++iw) {
            const double w = -box.wMax + 2.0 * box.wMax * iw / (g - 1);
            for (int iz = 0; iz < g; ++iz) {
                const double z = static_cast<double>(iz) / (g - 1);
                for (int it = 0; it < g; ++it) {
                    const double t = box.T * it / (g - 1);
                    const double th = theta_inverse(model, w, z, t, cfg);
                    const double qTheta = (model(th + h, z, t) - model(th - h, z, t)) / (2 * h);
                    const double zl = std::max(0.0, z - h), zr = std::min(1.0, z + h);
                    const double qZ = (model(th, zr, t) - model(th, zl, t)) / (zr - zl);
                    const double tl = std::max(0.0, t - h), tr = std::min(box.T, t + h);
                    const double qT = (model(th, z, tr) - model(th, z, tl)) / (tr - tl);
                    const double denom = 1.0 + qTheta;
                    out.infDwTheta = std::min(out.infDwTheta, 1.0 / denom);
                    out.infDzTheta = std::min(out.infDzTheta, -qZ / denom);
                    out.supDzTheta = std::max(out.supDzTheta, -qZ / denom);
                    out.supDtTheta = std::max(out.supDtTheta, std::abs(qT / denom));
                    out.supAbsTheta = std::max(out.supAbsTheta, std::abs(th));
                }
            }
        }
        if (!(out.infDwTheta > 0.0) || !(out.infDzTheta > 0.0))
            throw ConfigError("saturation model violates monotonicity on the domain box");
    }
    out.cfl = out.supDtTheta / out.infDzTheta;
    return out;
}

double max_timestep(const ThetaBounds& bounds, int n, double T) {
    if (n < 1) throw ConfigError("parcel count must be at least 1");
    if (bounds.cfl > 0.0) return 1.0 / (2.0 * bounds.cfl * n);
    return T / n;
}

}  // namespace moistcol
