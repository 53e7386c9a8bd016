#include "moistcol/io.hpp"

#include "csv_util.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace moistcol {

namespace {

std::string resolve_path(const std::string& path, const std::string& baseDir) {
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(baseDir) / p).string();
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
    }
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<int> one_based(const std::vector<int>& v) {
    std::vector<int> out(v);
    for (int& x : out) ++x;
    return out;
}

std::vector<int> zero_based(std::vector<int> v) {
    for (int& x : v) --x;
    return v;
}

PiecewiseLinear parse_pl(const Json& j, const std::string& valueKey, const std::string& where) {
    check_keys(j, {"z", valueKey}, where);
    PiecewiseLinear f{get<std::vector<double>>(j, "z", where), get<std::vector<double>>(j, valueKey, where)};
    if (f.z.empty() || f.z.size() != f.v.size()) throw ConfigError(where + ": z and " + valueKey + " must match and be non-empty");
    for (std::size_t i = 1; i < f.z.size(); ++i)
        if (!(f.z[i] > f.z[i - 1])) throw ConfigError(where + ": z nodes must be strictly increasing");
    return f;
}

MoistureRule parse_moisture(const Json& j, const std::string& where) {
    MoistureRule m;
    if (j.is_string()) {
        if (j.get<std::string>() != "saturated") throw ConfigError(where + ": moisture must be \"saturated\" or an object");
        return m;
    }
    if (j.contains("deficit")) {
        check_keys(j, {"deficit"}, where);
        m.kind = MoistureRule::Kind::Deficit;
        m.deficit = get<double>(j, "deficit", where);
        if (!(m.deficit >= 0.0)) throw ConfigError(where + ": deficit must be nonnegative");
        return m;
    }
    m.kind = MoistureRule::Kind::Explicit;
    m.q = parse_pl(j, "q", where);
    return m;
}

Vector moisture_at(const MoistureRule& rule, const Vector& theta, const SaturationModel& model) {
    const int n = static_cast<int>(theta.size());
    Vector q(n);
    for (int i = 0; i < n; ++i) {
        const double z = grid_z(i, n);
        switch (rule.kind) {
            case MoistureRule::Kind::Saturated: q[i] = eval_qsat(model, theta[i], z, 0.0); break;
            case MoistureRule::Kind::Deficit: q[i] = eval_qsat(model, theta[i], z, 0.0) - rule.deficit; break;
            case MoistureRule::Kind::Explicit: q[i] = rule.q(z); break;
        }
    }
    return q;
}

Vector profile_at(const Json& p, int n, const std::string& where) {
    if (p.is_array()) return discretize_profile(to_vector(p.get<std::vector<double>>()), n);
    const auto f = parse_pl(p, "theta", where);
    return discretize_profile(f, n);
}

Json to_json_vec(const Vector& v) { return from_vector(v); }

}  // namespace

double PiecewiseLinear::operator()(double x) const {
    if (x <= z.front()) return v.front();
    if (x >= z.back()) return v.back();
    const auto it = std::upper_bound(z.begin(), z.end(), x);
    const auto i = static_cast<std::size_t>(it - z.begin());
    const double w = (x - z[i - 1]) / (z[i] - z[i - 1]);
    return (1.0 - w) * v[i - 1] + w * v[i];
}

SaturationModel model_from_json(const Json& j, const std::string& baseDir) {
    const std::string where = "model block";
    const auto kind = get_or<std::string>(j, "kind", "linear", where);
    if (kind == "linear") {
        check_keys(j, {"kind", "qstar", "a", "b", "c"}, where);
        return SaturationModel::linear(get<double>(j, "qstar", where), get<double>(j, "a", where),
                                       get<double>(j, "b", where), get_or<double>(j, "c", 0.0, where));
    }
    if (kind == "tabulated") {
        check_keys(j, {"kind", "table"}, where);
        return SaturationModel::tabulated(load_saturation_table(resolve_path(get<std::string>(j, "table", where), baseDir)));
    }
    throw ConfigError("model kind must be \"linear\" or \"tabulated\"");
}

Json model_to_json(const SaturationModel& model) {
    if (model.kind() == SaturationModel::Kind::LinearBuiltin)
        return {{"kind", "linear"}, {"qstar", model.qstar()}, {"a", model.a()}, {"b", model.b()}, {"c", model.c()}};
    // Inline the table so the file does not depend on the config's location.
    const auto& tb = *model.table();
    return {{"kind", "tabulated"}, {"inline", {{"theta", tb.theta}, {"z", tb.z}, {"t", tb.t}, {"q", tb.q}}}};
}

RunConfig parse_config(const Json& j, const std::string& baseDir) {
    check_keys(j, {"model", "initial", "numerics", "output", "converge", "verify"}, "config");
    RunConfig cfg;
    cfg.modelBlock = get<Json>(j, "model", "config");
    cfg.model = model_from_json(cfg.modelBlock, baseDir);

    const Json num = j.value("numerics", Json::object());
    check_keys(num, {"n", "T", "dt", "seed", "mode", "samples", "cap", "tolerance", "max_iter", "grid_resolution",
                     "validate", "thin", "threads"},
               "numerics");
    auto& N = cfg.numerics;
    N.n = get_or<int>(num, "n", 0, "numerics");
    N.T = get_or<double>(num, "T", 1.0, "numerics");
    if (!(N.T > 0.0)) throw ConfigError("numerics.T must be positive");
    if (num.contains("dt") && !(num["dt"].is_string() && num["dt"] == "auto")) N.dt = get<double>(num, "dt", "numerics");
    N.seed = get_or<std::uint64_t>(num, "seed", 0, "numerics");
    const auto mode = get_or<std::string>(num, "mode", "exhaustive", "numerics");
    if (mode == "exhaustive")
        N.mode = EnsembleMode::Kind::Exhaustive;
    else if (mode == "montecarlo")
        N.mode = EnsembleMode::Kind::MonteCarlo;
    else
        throw ConfigError("numerics.mode must be \"exhaustive\" or \"montecarlo\"");
    N.samples = get_or<int>(num, "samples", 10000, "numerics");
    N.cap = get_or<std::uint64_t>(num, "cap", 1000000, "numerics");
    N.solver.tolerance = get_or<double>(num, "tolerance", 1e-12, "numerics");
    N.solver.maxIter = get_or<int>(num, "max_iter", 200, "numerics");
    if (!(N.solver.tolerance > 0.0) || N.solver.maxIter < 1) throw ConfigError("solver tolerance and max_iter must be positive");
    N.gridResolution = get_or<int>(num, "grid_resolution", 64, "numerics");
    N.validate = get_or<bool>(num, "validate", true, "numerics");
    N.thin = get_or<bool>(num, "thin", false, "numerics");
    N.threads = get_or<int>(num, "threads", 1, "numerics");

    const Json ini = get<Json>(j, "initial", "config");
    const auto kind = get_or<std::string>(ini, "kind", "deterministic", "initial");
    auto& I = cfg.initial;
    if (kind == "deterministic") {
        check_keys(ini, {"kind", "theta", "q"}, "initial");
        I.kind = InitialConfig::Kind::Deterministic;
        I.theta = to_vector(get<std::vector<double>>(ini, "theta", "initial"));
        I.q = to_vector(get<std::vector<double>>(ini, "q", "initial"));
        if (I.theta.size() != I.q.size() || I.theta.size() == 0) throw ConfigError("initial theta and q must be non-empty and equal in length");
        if (N.n != 0 && N.n != I.theta.size()) throw ConfigError("numerics.n disagrees with the initial arrays");
        N.n = static_cast<int>(I.theta.size());
    } else if (kind == "continuum") {
        check_keys(ini, {"kind", "profile", "moisture"}, "initial");
        I.kind = InitialConfig::Kind::Continuum;
        I.profile = parse_pl(get<Json>(ini, "profile", "initial"), "theta", "initial.profile");
        I.moisture = parse_moisture(ini.value("moisture", Json("saturated")), "initial.moisture");
    } else if (kind == "ensemble") {
        check_keys(ini, {"kind", "K", "shiftC", "profiles"}, "initial");
        I.kind = InitialConfig::Kind::Ensemble;
        I.ensemble = ini;
    } else {
        throw ConfigError("initial.kind must be deterministic, continuum or ensemble");
    }
    if (N.n < 1 && I.kind != InitialConfig::Kind::Deterministic && !j.contains("converge"))
        throw ConfigError("numerics.n is required for continuum and ensemble data");

    const Json out = j.value("output", Json::object());
    check_keys(out, {"directory", "formats", "stride", "marginal_times"}, "output");
    cfg.output.directory = get_or<std::string>(out, "directory", "out", "output");
    cfg.output.formats = get_or<std::vector<std::string>>(out, "formats", {"csv", "jsonl"}, "output");
    for (const auto& f : cfg.output.formats)
        if (f != "csv" && f != "jsonl") throw ConfigError("output.formats entries must be csv or jsonl");
    cfg.output.stride = get_or<int>(out, "stride", 1, "output");
    if (cfg.output.stride < 1) throw ConfigError("output.stride must be at least 1");
    cfg.output.marginalTimes = get_or<std::vector<double>>(out, "marginal_times", {}, "output");

    const Json conv = j.value("converge", Json::object());
    check_keys(conv, {"n_list", "times", "observables", "z"}, "converge");
    cfg.converge.nList = get_or<std::vector<int>>(conv, "n_list", {8, 16, 32, 64}, "converge");
    cfg.converge.times = get_or<std::vector<double>>(conv, "times", {}, "converge");
    cfg.converge.observables = get_or<std::vector<std::string>>(conv, "observables", {"theta", "thetaM", "flow"}, "converge");
    cfg.converge.z = get_or<double>(conv, "z", 0.5, "converge");

    const Json ver = j.value("verify", Json::object());
    check_keys(ver, {"c4_cap", "c5_cap", "c6_cap", "jump_tolerance", "exhaustive_overtake_max", "overtake_samples",
                     "seed", "energy_exhaustive_max"},
               "verify");
    auto& V = cfg.verify;
    V.c4Cap = get_or<double>(ver, "c4_cap", V.c4Cap, "verify");
    V.c5Cap = get_or<double>(ver, "c5_cap", V.c5Cap, "verify");
    V.c6Cap = get_or<double>(ver, "c6_cap", V.c6Cap, "verify");
    V.jumpTolerance = get_or<double>(ver, "jump_tolerance", V.jumpTolerance, "verify");
    V.exhaustiveOvertakeMax = get_or<int>(ver, "exhaustive_overtake_max", V.exhaustiveOvertakeMax, "verify");
    V.overtakeSamples = get_or<int>(ver, "overtake_samples", V.overtakeSamples, "verify");
    V.seed = get_or<unsigned long long>(ver, "seed", V.seed, "verify");
    V.energyExhaustiveMax = get_or<int>(ver, "energy_exhaustive_max", V.energyExhaustiveMax, "verify");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_config(j, dir.empty() ? "." : dir);
}

ColumnState build_initial(const RunConfig& cfg, const SaturationModel& model, int n) {
    const auto& I = cfg.initial;
    switch (I.kind) {
        case InitialConfig::Kind::Deterministic: return ColumnState::initial(I.theta, I.q);
        case InitialConfig::Kind::Continuum: {
            if (n < 1) throw ConfigError("continuum data needs a resolution n >= 1");
            const Vector theta = discretize_profile(I.profile, n);
            return ColumnState::initial(theta, moisture_at(I.moisture, theta, model));
        }
        case InitialConfig::Kind::Ensemble: break;
    }
    throw ConfigError("this command needs deterministic or continuum initial data");
}

InitialEnsemble build_ensemble(const RunConfig& cfg, const SaturationModel& model, int n, double T,
                               const std::string& baseDir) {
    if (cfg.initial.kind != InitialConfig::Kind::Ensemble) return deterministic_ensemble(build_initial(cfg, model, n));
    const Json& e = cfg.initial.ensemble;
    const double K = get<double>(e, "K", "initial");
    if (!(K > 0.0)) throw ConfigError("initial.K must be positive");
    const ThetaBounds bounds = compute_bounds(model, DomainBox{K + 1.0, T}, cfg.numerics.gridResolution, cfg.numerics.solver);
    std::optional<double> requested;
    if (e.contains("shiftC")) requested = get<double>(e, "shiftC", "initial");

    std::optional<double> shiftUsed;
    std::vector<ProfileEntry> profiles;
    const auto list = get<Json>(e, "profiles", "initial");
    if (!list.is_array() || list.empty()) throw ConfigError("initial.profiles must be a non-empty array");
    for (std::size_t m = 0; m < list.size(); ++m) {
        const auto& p = list[m];
        const std::string where = "initial.profiles[" + std::to_string(m) + "]";
        check_keys(p, {"weight", "theta", "atoms", "samples", "samples_csv", "histogram", "bins", "moisture"}, where);
        ProfileEntry entry;
        entry.weight = get_or<double>(p, "weight", 1.0, where);
        entry.theta = profile_at(get<Json>(p, "theta", where), n, where + ".theta");
        auto shift = [&] {
            shiftUsed = shift_constant(K, bounds, requested);
            return *shiftUsed;
        };
        if (p.contains("atoms")) {
            const auto cells = get<std::vector<std::vector<Json>>>(p, "atoms", where);
            if (static_cast<int>(cells.size()) != n) throw ConfigError(where + ": atoms need one list per cell");
            for (const auto& cell : cells) {
                std::vector<Atom> atoms;
                for (const auto& a : cell) atoms.push_back({get<double>(a, "value", where), get<double>(a, "probability", where)});
                entry.atoms.push_back(std::move(atoms));
            }
        } else if (p.contains("samples") || p.contains("samples_csv")) {
            std::vector<std::pair<double, double>> samples;
            if (p.contains("samples")) {
                for (const auto& sz : get<std::vector<std::vector<double>>>(p, "samples", where)) {
                    if (sz.size() != 2) throw ConfigError(where + ": samples are [s, z] pairs");
                    samples.emplace_back(sz[0], sz[1]);
                }
            } else {
                const auto path = resolve_path(get<std::string>(p, "samples_csv", where), baseDir);
                const auto table = detail::read_csv(path);
                const int sc = table.column("s"), zc = table.column("z");
                if (sc < 0 || zc < 0) throw ConfigError(path + ": sample CSV needs columns s,z");
                for (const auto& row : table.rows)
                    samples.emplace_back(detail::parse_double(row[static_cast<std::size_t>(sc)], path),
                                         detail::parse_double(row[static_cast<std::size_t>(zc)], path));
            }
            entry.atoms = discretize_conditional(samples, n, K, shift());
        } else if (p.contains("histogram")) {
            const auto hist = load_histogram(resolve_path(get<std::string>(p, "histogram", where), baseDir), n,
                                             get_or<int>(p, "bins", 0, where));
            entry.atoms = discretize_conditional(hist, n, K, shift());
        } else {
            const auto rule = parse_moisture(p.value("moisture", Json("saturated")), where + ".moisture");
            const Vector q = moisture_at(rule, entry.theta, model);
            for (int i = 0; i < n; ++i) entry.atoms.push_back({{entry.theta[i] + q[i], 1.0}});
        }
        profiles.push_back(std::move(entry));
    }
    return make_ensemble(n, K, shiftUsed, std::move(profiles), model, bounds, cfg.numerics.solver);
}

double resolve_dt(const NumericsConfig& num, const ThetaBounds& bounds, int n) {
    return num.dt ? *num.dt : max_timestep(bounds, n, num.T);
}

Json bounds_to_json(const ThetaBounds& b) {
    return {{"infDzTheta", b.infDzTheta}, {"supDzTheta", b.supDzTheta}, {"supDtTheta", b.supDtTheta},
            {"infDwTheta", b.infDwTheta}, {"supAbsTheta", b.supAbsTheta}, {"cfl", b.cfl}};
}

ThetaBounds bounds_from_json(const Json& j) {
    const std::string where = "bounds";
    ThetaBounds b;
    b.infDzTheta = get<double>(j, "infDzTheta", where);
    b.supDzTheta = get<double>(j, "supDzTheta", where);
    b.supDtTheta = get<double>(j, "supDtTheta", where);
    b.infDwTheta = get<double>(j, "infDwTheta", where);
    b.supAbsTheta = get<double>(j, "supAbsTheta", where);
    b.cfl = get<double>(j, "cfl", where);
    return b;
}

Json report_to_json(const StepReport& r) {
    Json levels = Json::array();
    for (const auto& l : r.levels)
        levels.push_back({{"k", l.k + 1},
                          {"wet", one_based(l.wet)},
                          {"eligible", one_based(l.eligible)},
                          {"jumperLabel", l.jumperLabel >= 0 ? Json(l.jumperLabel + 1) : Json(nullptr)},
                          {"jumperFrom", l.jumperFrom >= 0 ? Json(l.jumperFrom + 1) : Json(nullptr)},
                          {"thetaBefore", l.thetaBefore},
                          {"thetaAfter", l.thetaAfter}});
    Json labels = Json::array();
    for (const auto& f : r.labels)
        labels.push_back({{"lifted", f.lifted},
                          {"liftTarget", f.liftTarget >= 0 ? Json(f.liftTarget + 1) : Json(nullptr)},
                          {"pushedDown", f.pushedDown},
                          {"lifts", f.lifts}});
    return {{"t", r.t}, {"tNext", r.tNext}, {"levels", levels}, {"labels", labels}};
}

StepReport report_from_json(const Json& j) {
    const std::string where = "step report";
    StepReport r;
    r.t = get<double>(j, "t", where);
    r.tNext = get<double>(j, "tNext", where);
    auto index = [&](const Json& o, const char* key) { return o.at(key).is_null() ? -1 : o.at(key).get<int>() - 1; };
    try {
        for (const auto& l : j.at("levels")) {
            LevelRecord rec;
            rec.k = l.at("k").get<int>() - 1;
            rec.wet = zero_based(l.at("wet").get<std::vector<int>>());
            rec.eligible = zero_based(l.at("eligible").get<std::vector<int>>());
            rec.jumperLabel = index(l, "jumperLabel");
            rec.jumperFrom = index(l, "jumperFrom");
            rec.thetaBefore = l.at("thetaBefore").get<double>();
            rec.thetaAfter = l.at("thetaAfter").get<double>();
            r.levels.push_back(std::move(rec));
        }
        for (const auto& f : j.at("labels"))
            r.labels.push_back({f.at("lifted").get<bool>(), index(f, "liftTarget"), f.at("pushedDown").get<bool>(),
                                f.at("lifts").get<int>()});
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed step report: ") + e.what());
    }
    return r;
}

Json check_to_json(const CheckReport& r) {
    auto finite_or_null = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
    Json constants = Json::object(), tolerances = Json::object();
    for (const auto& [k, v] : r.constants) constants[k] = finite_or_null(v);
    for (const auto& [k, v] : r.tolerances) tolerances[k] = finite_or_null(v);
    Json worst = Json::object();
    if (!r.pass || r.worst.label >= 0 || r.worst.step >= 0) {
        worst["label"] = r.worst.label >= 0 ? Json(r.worst.label + 1) : Json(nullptr);
        worst["step"] = r.worst.step >= 0 ? Json(r.worst.step) : Json(nullptr);
        worst["level"] = r.worst.level >= 0 ? Json(r.worst.level + 1) : Json(nullptr);
        worst["t"] = finite_or_null(r.worst.t);
    }
    return {{"check", r.name},   {"pass", r.pass},           {"evaluated", r.evaluated}, {"worst", worst},
            {"constants", constants}, {"tolerances", tolerances}, {"message", r.message}};
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out, int stride) {
    out << "t,position_index,z,theta,q,label\n";
    out << std::setprecision(17);
    const auto states = traj.states();
    for (std::size_t k = 0; k < states.size(); k += static_cast<std::size_t>(stride)) {
        const auto& s = states[k];
        for (int p = 0; p < s.n; ++p)
            out << s.t << ',' << p + 1 << ',' << s.z(p) << ',' << s.theta[p] << ',' << s.q[p] << ',' << s.label[p] + 1
                << '\n';
    }
}

void write_trajectory_jsonl(const Trajectory& traj, std::ostream& out) {
    const Json header = {{"format", "moistcol-trajectory"},
                         {"version", 1},
                         {"model", model_to_json(traj.model())},
                         {"n", traj.n()},
                         {"dt", traj.dt()},
                         {"T", traj.T()},
                         {"steps", traj.steps()},
                         {"bounds", bounds_to_json(traj.bounds())},
                         {"solver", {{"tolerance", traj.solver().tolerance}, {"maxIter", traj.solver().maxIter}}},
                         {"thetaM", to_json_vec(traj.initial().thetaM)}};
    out << header.dump() << '\n';
    const auto states = traj.states();
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto& s = states[k];
        Json line = {{"k", k},
                     {"t", s.t},
                     {"theta", to_json_vec(s.theta)},
                     {"q", to_json_vec(s.q)},
                     {"position", one_based(s.position.image())}};
        if (k > 0) line["report"] = report_to_json(traj.report(static_cast<int>(k)));
        out << line.dump() << '\n';
    }
}

namespace {

Trajectory read_jsonl(std::istream& in, const std::string& baseDir) {
    std::string line;
    auto next_json = [&](const char* what) {
        while (std::getline(in, line))
            if (!detail::trim(line).empty()) try {
                    return Json::parse(line);
                } catch (const Json::exception& e) {
                    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
                }
        return Json();
    };
    const Json header = next_json("trajectory header");
    if (!header.is_object() || header.value("format", "") != "moistcol-trajectory")
        throw ConfigError("not a trajectory JSON-lines file");
    const std::string where = "trajectory header";
    SaturationModel model = SaturationModel::linear(1, 1, 1, 0);
    const Json& mj = header.at("model");
    if (mj.contains("inline")) {
        SaturationTable tb;
        const auto& t = mj.at("inline");
        tb.theta = t.at("theta").get<std::vector<double>>();
        tb.z = t.at("z").get<std::vector<double>>();
        tb.t = t.at("t").get<std::vector<double>>();
        tb.q = t.at("q").get<std::vector<double>>();
        model = SaturationModel::tabulated(std::move(tb));
    } else {
        model = model_from_json(mj, baseDir);
    }
    const int n = get<int>(header, "n", where);
    const double dt = get<double>(header, "dt", where), T = get<double>(header, "T", where);
    SolverConfig solver;
    solver.tolerance = header.at("solver").at("tolerance").get<double>();
    solver.maxIter = header.at("solver").at("maxIter").get<int>();
    const Vector thetaM = to_vector(get<std::vector<double>>(header, "thetaM", where));
    if (thetaM.size() != n) throw ConfigError("trajectory header thetaM has the wrong length");

    auto state_of = [&](const Json& j) {
        const std::string w = "trajectory state";
        ColumnState s;
        s.n = n;
        s.t = get<double>(j, "t", w);
        s.theta = to_vector(get<std::vector<double>>(j, "theta", w));
        s.q = to_vector(get<std::vector<double>>(j, "q", w));
        s.thetaM = thetaM;
        s.position = Permutation(zero_based(get<std::vector<int>>(j, "position", w)));
        if (s.theta.size() != n || s.q.size() != n || s.position.size() != n || !s.position.is_bijection())
            throw ConfigError("trajectory state " + std::to_string(j.value("k", -1)) + " is malformed");
        s.label = s.position.inverse();
        return s;
    };

    Json first = next_json("trajectory state");
    if (first.is_null()) throw ConfigError("trajectory has no states");
    ColumnState prev = state_of(first);
    Trajectory traj(model, bounds_from_json(header.at("bounds")), solver, dt, T, prev, false);
    for (Json j = next_json("trajectory state"); !j.is_null(); j = next_json("trajectory state")) {
        ColumnState s = state_of(j);
        Permutation beta = Permutation::identity(n);
        for (int p = 0; p < n; ++p) beta[p] = s.position[prev.label[p]];
        if (!j.contains("report")) throw ConfigError("trajectory state without a step report");
        StepReport rep = report_from_json(j.at("report"));
        traj.append({s, std::move(beta), std::move(rep)});
        prev = std::move(s);
    }
    return traj;
}

}  // namespace

Trajectory read_trajectory_jsonl(std::istream& in, const std::string& baseDir) {
    try {
        return read_jsonl(in, baseDir);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed trajectory file: ") + e.what());
    }
}

Trajectory read_trajectory_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trajectory file: " + path);
    const auto dir = std::filesystem::path(path).parent_path().string();
    return read_trajectory_jsonl(in, dir.empty() ? "." : dir);
}

}  // namespace moistcol
