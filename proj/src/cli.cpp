#include "moistcol/cli.hpp"

#include "moistcol/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace moistcol::cli {

namespace {

namespace fs = std::filesystem;

struct Flags {
    std::string config;
    std::string out;
    std::string trajectory;
    std::string profile;
    std::vector<int> nList;
    std::uint64_t seed = 0;
    bool seedSet = false;
    int threads = 0;
    bool noValidate = false;
};

struct Loaded {
    RunConfig cfg;
    std::string baseDir = ".";
};

Loaded load(const Flags& f, bool required = true) {
    Loaded l;
    if (f.config.empty()) {
        if (required) throw ConfigError("--config is required");
    } else {
        l.cfg = load_config(f.config);
        const auto dir = fs::path(f.config).parent_path().string();
        l.baseDir = dir.empty() ? "." : dir;
    }
    auto& num = l.cfg.numerics;
    if (f.seedSet) {
        num.seed = f.seed;
        l.cfg.verify.seed = f.seed;
    }
    if (f.threads > 0) num.threads = f.threads;
    if (f.noValidate) num.validate = false;
    if (!f.out.empty()) l.cfg.output.directory = f.out;
    return l;
}

RunOptions run_options(const NumericsConfig& num) {
    RunOptions o;
    o.solver = num.solver;
    o.validate = num.validate;
    o.thin = num.thin;
    o.gridResolution = num.gridResolution;
    return o;
}

fs::path out_dir(const RunConfig& cfg) {
    const fs::path dir(cfg.output.directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory: " + dir.string());
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    return f;
}

std::string num(double x, int digits = 6) {
    if (!std::isfinite(x)) return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
    std::ostringstream s;
    s << std::setprecision(digits) << x;
    return s.str();
}

bool has_format(const RunConfig& cfg, const std::string& f) {
    return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), f) != cfg.output.formats.end();
}

double conservation_residual(const Trajectory& traj) {
    double r = 0.0;
    for (const auto& s : traj.states())
        for (int p = 0; p < s.n; ++p) r = std::max(r, std::abs(s.theta[p] + s.q[p] - s.moist_at(p)));
    return r;
}

int total_jumps(const Trajectory& traj) {
    int j = 0;
    for (int k = 1; k <= traj.steps(); ++k) j += traj.report(k).jump_count();
    return j;
}

Trajectory simulate_config(const RunConfig& cfg) {
    if (cfg.initial.kind == InitialConfig::Kind::Ensemble)
        throw ConfigError("simulate needs deterministic or continuum initial data; use the ensemble command");
    const SaturationModel& model = cfg.model;
    const ColumnState initial = build_initial(cfg, model, cfg.numerics.n);
    const RunOptions opts = run_options(cfg.numerics);
    const ThetaBounds bounds = bounds_for(initial, model, cfg.numerics.T, opts);
    return run(initial, model, bounds, cfg.numerics.T, resolve_dt(cfg.numerics, bounds, initial.n), opts);
}

int cmd_simulate(const Flags& f, std::ostream& out) {
    const auto l = load(f);
    const auto& cfg = l.cfg;
    const fs::path dir = out_dir(cfg);
    Trajectory traj = [&] {
        try {
            return simulate_config(cfg);
        } catch (const StepInvariantError& e) {
            auto file = open_out(dir / "failure_report.json");
            file << Json{{"error", e.what()}, {"report", report_to_json(e.report())}}.dump(2) << '\n';
            throw;
        }
    }();
    if (has_format(cfg, "csv")) {
        auto file = open_out(dir / "trajectory.csv");
        write_trajectory_csv(traj, file, cfg.output.stride);
    }
    if (has_format(cfg, "jsonl")) {
        auto file = open_out(dir / "trajectory.jsonl");
        write_trajectory_jsonl(traj, file);
    }
    out << "simulate: n=" << traj.n() << " steps=" << traj.steps() << " dt=" << num(traj.dt(), 17)
        << " jumps=" << total_jumps(traj) << " conservation_residual=" << num(conservation_residual(traj), 3)
        << " out=" << dir.string() << '\n';
    return Ok;
}

int resolution(const RunConfig& cfg) {
    if (cfg.numerics.n < 1) throw ConfigError("numerics.n is required");
    return cfg.numerics.n;
}

EnsembleMode ensemble_mode(const NumericsConfig& num) {
    EnsembleMode m;
    m.kind = num.mode;
    m.seed = num.seed;
    m.samples = num.samples;
    m.cap = num.cap;
    return m;
}

std::vector<double> marginal_times(const RunConfig& cfg) {
    auto times = cfg.output.marginalTimes;
    if (times.empty()) times = {0.0, cfg.numerics.T / 2};
    for (double t : times)
        if (!(t >= 0.0 && t < cfg.numerics.T)) throw ConfigError("marginal times must lie in [0, T)");
    return times;
}

Json one_based(const std::vector<int>& v) {
    Json a = Json::array();
    for (int x : v) a.push_back(x + 1);
    return a;
}

int cmd_ensemble(const Flags& f, std::ostream& out) {
    const auto l = load(f);
    const auto& cfg = l.cfg;
    const double T = cfg.numerics.T;
    const InitialEnsemble ens = build_ensemble(cfg, cfg.model, resolution(cfg), T, l.baseDir);
    const RunOptions opts = run_options(cfg.numerics);
    const double dt = resolve_dt(cfg.numerics, ensemble_bounds(ens, cfg.model, T, opts), ens.n);
    const auto times = marginal_times(cfg);
    const fs::path dir = out_dir(cfg);
    const EnsembleMode mode = ensemble_mode(cfg.numerics);
    const EnsembleResult res = run_ensemble(ens, cfg.model, T, dt, mode, opts, cfg.numerics.threads);

    auto file = open_out(dir / "ensemble.jsonl");
    const bool mc = mode.kind == EnsembleMode::Kind::MonteCarlo;
    file << Json{{"format", "moistcol-ensemble"},
                 {"version", 1},
                 {"n", res.n},
                 {"K", ens.K},
                 {"shiftC", res.shiftC ? Json(*res.shiftC) : Json(nullptr)},
                 {"dt", res.dt},
                 {"T", res.T},
                 {"mode", mc ? "montecarlo" : "exhaustive"},
                 {"seed", mode.seed},
                 {"samples", mc ? Json(mode.samples) : Json(nullptr)},
                 {"members", res.runs.size()},
                 {"total_weight", res.total_weight()}}
                .dump()
         << '\n';
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
        const auto& m = res.runs[i];
        const auto& tr = m.trajectory;
        const ColumnState last = tr.state(tr.steps());
        file << Json{{"member", i + 1},
                     {"profile", m.profile + 1},
                     {"choice", one_based(m.choice)},
                     {"weight", m.weight},
                     {"multiplicity", m.multiplicity},
                     {"thetaM", std::vector<double>(tr.initial().thetaM.data(), tr.initial().thetaM.data() + res.n)},
                     {"jumps", total_jumps(tr)},
                     {"final_theta", std::vector<double>(last.theta.data(), last.theta.data() + res.n)},
                     {"final_position", one_based(last.position.image())}}
                    .dump()
             << '\n';
    }

    auto csv = open_out(dir / "marginals.csv");
    csv << "t,member,weight,position_index,z,theta,label\n" << std::setprecision(17);
    out << "ensemble: n=" << res.n << " members=" << res.runs.size() << " total_weight=" << num(res.total_weight(), 17)
        << " dt=" << num(dt, 17) << '\n';
    for (double t : times) {
        const EmpiricalMarginal mg = marginal(res, t);
        for (std::size_t i = 0; i < mg.samples.size(); ++i) {
            const auto& s = mg.samples[i];
            const Permutation lab = s.position.inverse();
            for (int p = 0; p < mg.n; ++p)
                csv << t << ',' << i + 1 << ',' << s.weight << ',' << p + 1 << ',' << grid_z(p, mg.n) << ','
                    << s.theta[p] << ',' << lab[p] + 1 << '\n';
        }
        out << "  t=" << num(t) << " position_marginal_deviation=" << num(position_marginal_deviation(mg), 3) << '\n';
    }
    return Ok;
}

void print_checks(const std::vector<CheckReport>& reports, std::ostream& out) {
    out << std::left << std::setw(20) << "check" << std::setw(6) << "pass" << std::setw(11) << "evaluated"
        << "constants\n";
    for (const auto& r : reports) {
        std::ostringstream consts;
        for (const auto& [k, v] : r.constants) consts << k << '=' << num(v, 4) << ' ';
        out << std::left << std::setw(20) << r.name << std::setw(6) << (r.pass ? "yes" : "NO") << std::setw(11)
            << r.evaluated << consts.str() << '\n';
        if (!r.pass) out << "    " << r.message << '\n';
    }
}

int cmd_verify(const Flags& f, std::ostream& out) {
    const auto l = load(f, f.trajectory.empty());
    const auto& cfg = l.cfg;
    std::optional<Trajectory> traj;
    std::string source;
    if (!f.trajectory.empty()) {
        traj.emplace(read_trajectory_jsonl(f.trajectory));
        source = f.trajectory;
    } else {
        traj.emplace(simulate_config(cfg));
        source = f.config;
    }
    const auto reports = run_all_checks(*traj, cfg.verify, std::max(1, cfg.numerics.threads));
    bool pass = true;
    Json checks = Json::array();
    for (const auto& r : reports) {
        pass = pass && r.pass;
        checks.push_back(check_to_json(r));
    }
    const fs::path dir = out_dir(cfg);
    auto file = open_out(dir / "check_report.json");
    file << Json{{"source", source}, {"n", traj->n()}, {"steps", traj->steps()}, {"dt", traj->dt()}, {"pass", pass},
                 {"checks", checks}}
                .dump(2)
         << '\n';
    print_checks(reports, out);
    out << "verify: " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? Ok : CheckFailure;
}

/// Default sample times sit on step boundaries of the coarsest level, which every finer level
/// shares when dt halves with n; off-boundary samples mix time and space errors.
std::vector<double> converge_times(const RunConfig& cfg, double coarseDt) {
    auto times = cfg.converge.times;
    const double T = cfg.numerics.T;
    if (times.empty()) {
        const int steps = static_cast<int>(std::ceil(T / coarseDt - 1e-9));
        for (int i = 0; i < 8; ++i) {
            const double t = std::floor(static_cast<double>(i) * steps / 8.0) * coarseDt;
            if (times.empty() || t > times.back()) times.push_back(t);
        }
    }
    for (double t : times)
        if (!(t >= 0.0 && t < T)) throw ConfigError("converge times must lie in [0, T)");
    return times;
}

int cmd_converge(const Flags& f, std::ostream& out) {
    const auto l = load(f);
    const auto& cfg = l.cfg;
    const auto nList = f.nList.empty() ? cfg.converge.nList : f.nList;
    if (nList.empty()) throw ConfigError("converge needs at least one resolution");
    for (int n : nList)
        if (n < 1) throw ConfigError("resolutions must be positive");
    if (cfg.initial.kind == InitialConfig::Kind::Deterministic)
        for (int n : nList)
            if (n != cfg.numerics.n)
                throw ConfigError("deterministic initial data has fixed n = " + std::to_string(cfg.numerics.n) +
                                  "; use continuum or ensemble data to refine");
    const double T = cfg.numerics.T;
    std::vector<Observable> observables;
    for (const auto& name : cfg.converge.observables) observables.push_back(parse_observable(name, cfg.converge.z));
    const RunOptions opts = run_options(cfg.numerics);
    const EnsembleMode mode = ensemble_mode(cfg.numerics);

    struct Level {
        int n;
        EnsembleResult res;
        double c4 = 0, c5 = 0, c6 = 0;
    };
    std::vector<Level> levels;
    for (int n : nList) {
        const InitialEnsemble ens = build_ensemble(cfg, cfg.model, n, T, l.baseDir);
        NumericsConfig numN = cfg.numerics;
        const ThetaBounds bounds = ensemble_bounds(ens, cfg.model, T, opts);
        if (numN.dt && *numN.dt > max_timestep(bounds, n, T)) numN.dt.reset();  // keep every level admissible
        Level lv{n, run_ensemble(ens, cfg.model, T, resolve_dt(numN, bounds, n), mode, opts, numN.threads)};
        for (const auto& m : lv.res.runs) {
            const auto inc = check_increment_formula(m.trajectory, cfg.verify);
            const auto cont = check_continuity(m.trajectory, cfg.verify);
            lv.c4 = std::max(lv.c4, inc.constants.at("C4"));
            lv.c5 = std::max(lv.c5, cont.constants.at("C5"));
            lv.c6 = std::max(lv.c6, cont.constants.at("C6"));
        }
        levels.push_back(std::move(lv));
    }

    double coarseDt = 0.0;
    for (const auto& lv : levels) coarseDt = std::max(coarseDt, lv.res.dt);
    const auto times = converge_times(cfg, coarseDt);
    const fs::path dir = out_dir(cfg);
    auto csv = open_out(dir / "converge.csv");
    csv << std::setprecision(17) << "n_coarse,n_fine,t,l1";
    for (const auto& o : observables) csv << ",w1_" << observable_name(o);
    csv << '\n';
    out << "resolution pairs\n" << std::left << std::setw(8) << "n" << std::setw(8) << "n'" << std::setw(10) << "t"
        << std::setw(14) << "L1";
    for (const auto& o : observables) out << std::setw(14) << ("W1 " + observable_name(o));
    out << '\n';
    for (std::size_t i = 0; i + 1 < levels.size() || (levels.size() == 1 && i == 0); ++i) {
        const Level& a = levels[i];
        const Level& b = levels[std::min(i + 1, levels.size() - 1)];
        for (double t : times) {
            const EmpiricalMarginal ma = marginal(a.res, t), mb = marginal(b.res, t);
            double l1 = std::numeric_limits<double>::quiet_NaN();
            if (ma.samples.size() == 1 && mb.samples.size() == 1)
                l1 = profile_l1(ma.samples[0].theta, mb.samples[0].theta);
            csv << a.n << ',' << b.n << ',' << t << ',' << l1;
            out << std::setw(8) << a.n << std::setw(8) << b.n << std::setw(10) << num(t) << std::setw(14)
                << (std::isnan(l1) ? "-" : num(l1));
            for (const auto& o : observables) {
                const double d = marginal_distance(ma, mb, o);
                csv << ',' << d;
                out << std::setw(14) << num(d);
            }
            csv << '\n';
            out << '\n';
        }
        if (levels.size() == 1) break;
    }

    auto ccsv = open_out(dir / "converge_constants.csv");
    ccsv << std::setprecision(17) << "n,dt,steps,members,C4,C5,C6\n";
    out << "measured constants\n" << std::setw(8) << "n" << std::setw(14) << "dt" << std::setw(10) << "members"
        << std::setw(12) << "C4" << std::setw(12) << "C5" << std::setw(12) << "C6" << '\n';
    for (const auto& lv : levels) {
        const int steps = lv.res.runs.front().trajectory.steps();
        ccsv << lv.n << ',' << lv.res.dt << ',' << steps << ',' << lv.res.runs.size() << ',' << lv.c4 << ',' << lv.c5
             << ',' << lv.c6 << '\n';
        out << std::setw(8) << lv.n << std::setw(14) << num(lv.res.dt) << std::setw(10) << lv.res.runs.size()
            << std::setw(12) << num(lv.c4, 4) << std::setw(12) << num(lv.c5, 4) << std::setw(12) << num(lv.c6, 4)
            << '\n';
    }
    return Ok;
}

Vector parse_profile(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(cell, &used));
            if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ConfigError("--profile: cannot parse '" + cell + "'");
        }
    }
    if (v.empty()) throw ConfigError("--profile is empty");
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int cmd_energy(const Flags& f, std::ostream& out) {
    const auto l = load(f, f.trajectory.empty() && f.profile.empty());
    const int emax = l.cfg.verify.energyExhaustiveMax;
    out << std::left << std::setw(6) << "k" << std::setw(12) << "t" << std::setw(24) << "energy" << std::setw(24)
        << "minimum" << std::setw(9) << "minimal" << "certificate\n";
    auto row = [&](const std::string& k, const std::string& t, const EnergyCertificate& c) {
        out << std::setw(6) << k << std::setw(12) << t << std::setw(24) << num(c.energy, 17) << std::setw(24)
            << num(c.minimum, 17) << std::setw(9) << (c.minimal ? "yes" : "no")
            << (c.exhaustive ? "exhaustive (" + std::to_string(c.permutations) + " orderings)" : "sortedness") << '\n';
    };
    if (!f.profile.empty()) {
        row("-", "-", certify_minimal(parse_profile(f.profile), emax));
        return Ok;
    }
    const Trajectory traj = f.trajectory.empty() ? simulate_config(l.cfg) : read_trajectory_jsonl(f.trajectory);
    bool all = true;
    const auto states = traj.states();
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto c = certify_minimal(states[k].theta, emax);
        all = all && c.minimal;
        row(std::to_string(k), num(states[k].t), c);
    }
    return all ? Ok : CheckFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Single-column moist convection by parcel rearrangement", "moistcol"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON run configuration");
        sub->add_option("--out", f.out, "output directory (overrides output.directory)");
        sub->add_option("--seed", f.seed, "random seed (ensemble sampling, verification sampling)")
            ->each([&](const std::string&) { f.seedSet = true; });
        sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--no-validate", f.noValidate, "skip per-step invariant checks");
    };
    auto* sim = app.add_subcommand("simulate", "run a deterministic column");
    auto* ens = app.add_subcommand("ensemble", "run a weighted ensemble and export marginals");
    auto* ver = app.add_subcommand("verify", "check a trajectory file or a configured run");
    auto* conv = app.add_subcommand("converge", "refinement study over several resolutions");
    auto* en = app.add_subcommand("energy", "energy per snapshot with a minimality certificate");
    for (auto* s : {sim, ens, ver, conv, en}) common(s);
    ver->add_option("--trajectory", f.trajectory, "trajectory JSON-lines file");
    en->add_option("--trajectory", f.trajectory, "trajectory JSON-lines file");
    en->add_option("--profile", f.profile, "comma-separated theta values");
    conv->add_option("--n", f.nList, "resolutions (overrides converge.n_list)")->delimiter(',');

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return ConfigFailure;
    }

    try {
        if (sim->parsed()) return cmd_simulate(f, out);
        if (ens->parsed()) return cmd_ensemble(f, out);
        if (ver->parsed()) return cmd_verify(f, out);
        if (conv->parsed()) return cmd_converge(f, out);
        return cmd_energy(f, out);
    } catch (const StepInvariantError& e) {
        err << "step invariant violated: " << e.what() << '\n';
        return CheckFailure;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const Json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return RuntimeFailure;
    }
}

}  // namespace moistcol::cli
