#include "moistcol/ensemble.hpp"

#include "csv_util.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace moistcol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Right endpoint of moisture bin j (1-based).
double bin_right(double K, int n, int j) { return -K + 2.0 * K * j / n; }

int bin_of(double s, double K, int n) {
    const int j = static_cast<int>(std::ceil((s + K) * n / (2.0 * K)));
    return std::clamp(j, 1, n);
}

int cell_of(double z, int n) {
    if (z <= 0.0) return 0;
    return std::clamp(static_cast<int>(std::ceil(z * n)) - 1, 0, n - 1);
}

CellAtoms atoms_from_mass(const std::vector<std::vector<double>>& mass, int n, double K, double shiftC) {
    CellAtoms out(mass.size());
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const double total = std::accumulate(mass[i].begin(), mass[i].end(), 0.0);
        if (!(total > 0.0)) throw ConfigError("cell " + std::to_string(i + 1) + " has no moisture mass");
        for (int j = 1; j <= n; ++j) {
            const double m = mass[i][static_cast<std::size_t>(j - 1)];
            if (m < 0.0) throw ConfigError("negative histogram mass in cell " + std::to_string(i + 1));
            if (m > 0.0) out[i].push_back({bin_right(K, n, j) - shiftC / n, m / total});
        }
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Standard distributions are implementation-defined; this conversion is not, so streams are
// reproducible across standard libraries.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string describe_member(int profile, const std::vector<int>& choice) {
    std::ostringstream s;
    s << "ensemble member (profile " << profile << ", sigma [";
    for (std::size_t i = 0; i < choice.size(); ++i) s << (i ? "," : "") << choice[i];
    s << "])";
    return s.str();
}

[[noreturn]] void rethrow_member(std::exception_ptr e, const std::string& who) {
    try {
        std::rethrow_exception(e);
    } catch (const StepInvariantError& x) {
        throw StepInvariantError(who + ": " + x.what(), x.report());
    } catch (const ConfigError& x) {
        throw ConfigError(who + ": " + x.what());
    } catch (const SolverError& x) {
        throw SolverError(who + ": " + x.what());
    } catch (const LogicError& x) {
        throw LogicError(who + ": " + x.what());
    } catch (const std::exception& x) {
        throw std::runtime_error(who + ": " + x.what());
    }
}

double profile_l2(const Vector& a, const Vector& b) {
    const long long na = a.size(), nb = b.size();
    long long x = 0, i = 0, j = 0;
    double sum = 0.0;
    while (i < na && j < nb) {
        const long long next = std::min((i + 1) * nb, (j + 1) * na);
        const double d = a[i] - b[j];
        sum += d * d * static_cast<double>(next - x);
        x = next;
        if ((i + 1) * nb == next) ++i;
        if ((j + 1) * na == next) ++j;
    }
    return std::sqrt(sum / static_cast<double>(na * nb));
}

// Minimum-cost transport between supplies a and demands b (equal totals) by successive shortest
// paths with potentials. Each augmentation exhausts a supply, a demand or a reverse edge.
double transport(std::vector<double> a, std::vector<double> b, const std::vector<std::vector<double>>& cost) {
    const std::size_t na = a.size(), nb = b.size(), V = na + nb;
    const double eps = 1e-15;
    std::vector<std::vector<double>> flow(na, std::vector<double>(nb, 0.0));
    std::vector<double> pot(V, 0.0);
    double total = 0.0;
    for (;;) {
        double remaining = 0.0;
        for (double x : a) remaining += x;
        if (remaining <= 1e-14) break;

        std::vector<double> dist(V, kInf);
        std::vector<long> parent(V, -1);
        std::vector<char> done(V, 0);
        for (std::size_t i = 0; i < na; ++i)
            if (a[i] > eps) dist[i] = 0.0;
        for (std::size_t it = 0; it < V; ++it) {
            std::size_t u = V;
            for (std::size_t v = 0; v < V; ++v)
                if (!done[v] && dist[v] < kInf && (u == V || dist[v] < dist[u])) u = v;
            if (u == V) break;
            done[u] = 1;
            if (u < na) {
                for (std::size_t j = 0; j < nb; ++j) {
                    const double d = dist[u] + std::max(cost[u][j] + pot[u] - pot[na + j], 0.0);
                    if (d < dist[na + j]) {
                        dist[na + j] = d;
                        parent[na + j] = static_cast<long>(u);
                    }
                }
            } else {
                const std::size_t j = u - na;
                for (std::size_t i = 0; i < na; ++i) {
                    if (flow[i][j] <= eps || a[i] > eps) continue;  // sources stay roots
                    const double d = dist[u] + std::max(-cost[i][j] + pot[u] - pot[i], 0.0);
                    if (d < dist[i]) {
                        dist[i] = d;
                        parent[i] = static_cast<long>(u);
                    }
                }
            }
        }
        std::size_t sink = V;
        for (std::size_t j = 0; j < nb; ++j)
            if (b[j] > eps && dist[na + j] < kInf && (sink == V || dist[na + j] < dist[sink])) sink = na + j;
        if (sink == V) break;

        double push = b[sink - na];
        std::size_t v = sink;
        while (parent[v] >= 0) {
            const auto u = static_cast<std::size_t>(parent[v]);
            if (u >= na) push = std::min(push, flow[v][u - na]);
            v = u;
        }
        push = std::min(push, a[v]);
        a[v] -= push;
        b[sink - na] -= push;
        v = sink;
        while (parent[v] >= 0) {
            const auto u = static_cast<std::size_t>(parent[v]);
            if (u < na) {
                flow[u][v - na] += push;
                total += push * cost[u][v - na];
            } else {
                flow[v][u - na] -= push;
                total -= push * cost[v][u - na];
            }
            v = u;
        }
        double maxDist = 0.0;
        for (double d : dist)
            if (d < kInf) maxDist = std::max(maxDist, d);
        for (std::size_t u = 0; u < V; ++u) pot[u] += dist[u] < kInf ? dist[u] : maxDist;
    }
    return total;
}

// Distinct profiles with accumulated weight, normalised to total 1.
std::vector<std::pair<Vector, double>> profile_law(const EmpiricalMarginal& m) {
    std::map<std::vector<double>, double> acc;
    double total = 0.0;
    for (const auto& s : m.samples) {
        acc[std::vector<double>(s.theta.data(), s.theta.data() + s.theta.size())] += s.weight;
        total += s.weight;
    }
    std::vector<std::pair<Vector, double>> out;
    for (const auto& [v, w] : acc)
        out.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())), w / total);
    return out;
}

}  // namespace

InitialEnsemble deterministic_ensemble(const ColumnState& state) {
    InitialEnsemble ens;
    ens.n = state.n;
    ens.K = state.thetaM.cwiseAbs().maxCoeff();
    ProfileEntry p;
    p.weight = 1.0;
    p.theta = state.theta;
    p.atoms.resize(static_cast<std::size_t>(state.n));
    for (int i = 0; i < state.n; ++i) p.atoms[static_cast<std::size_t>(i)].push_back({state.moist_at(i), 1.0});
    ens.profiles.push_back(std::move(p));
    return ens;
}

Vector discretize_profile(const std::function<double(double)>& theta, int n) {
    if (n < 1) throw ConfigError("profile resolution must be at least 1");
    Vector out(n);
    for (int i = 0; i < n; ++i) out[i] = theta(grid_z(i, n));
    for (int i = 0; i + 1 < n; ++i)
        if (out[i] > out[i + 1]) throw ConfigError("profile is not nondecreasing at z=" + std::to_string(grid_z(i, n)));
    return out;
}

Vector discretize_profile(const Vector& samples, int n) {
    const long long m = samples.size();
    if (m < 1) throw ConfigError("profile needs at least one sample");
    return discretize_profile(
        [&](double z) {
            const long long i = std::llround(z * n);  // z = i/n exactly
            return samples[static_cast<Eigen::Index>((i * m + n - 1) / n - 1)];
        },
        n);
}

double shift_constant(double K, const ThetaBounds& bounds, std::optional<double> requested) {
    const double floor = 2.0 * K + bounds.supDzTheta / bounds.infDwTheta;
    if (!requested) return floor + 1.0;
    if (!(*requested > floor))
        throw ConfigError("shift constant " + std::to_string(*requested) + " must exceed 2K + supDzTheta/infDwTheta = " +
                          std::to_string(floor));
    return *requested;
}

CellAtoms discretize_conditional(const std::vector<std::pair<double, double>>& samples, int n, double K,
                                 double shiftC) {
    if (!(K > 0.0)) throw ConfigError("moisture half-width K must be positive");
    std::vector<std::vector<double>> mass(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (const auto& [s, z] : samples) {
        if (std::abs(s) > K) throw ConfigError("moisture sample " + std::to_string(s) + " outside [-K, K]");
        if (z < 0.0 || z > 1.0) throw ConfigError("sample height outside [0, 1]");
        const int i = std::min(static_cast<int>(std::floor(z * n)), n - 1);
        mass[static_cast<std::size_t>(i)][static_cast<std::size_t>(bin_of(s, K, n) - 1)] += 1.0;
    }
    return atoms_from_mass(mass, n, K, shiftC);
}

CellHistogram load_histogram(const std::string& path, int cells, int bins) {
    const auto table = detail::read_csv(path);
    const int cell = table.column("cell"), bin = table.column("binIndex"), mass = table.column("mass");
    if (cell < 0 || bin < 0 || mass < 0) throw ConfigError(path + ": histogram needs columns cell,binIndex,mass");
    std::vector<std::array<double, 3>> rows;
    long maxBin = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + ":" + std::to_string(r + 2);
        const long c = detail::parse_int(row[static_cast<std::size_t>(cell)], where);
        const long b = detail::parse_int(row[static_cast<std::size_t>(bin)], where);
        rows.push_back({static_cast<double>(c), static_cast<double>(b),
                        detail::parse_double(row[static_cast<std::size_t>(mass)], where)});
        maxBin = std::max(maxBin, b);
    }
    CellHistogram h;
    h.cells = cells;
    h.bins = bins > 0 ? bins : static_cast<int>(maxBin);
    h.mass.assign(static_cast<std::size_t>(h.cells) * static_cast<std::size_t>(h.bins), 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto c = static_cast<long>(rows[r][0]), b = static_cast<long>(rows[r][1]);
        if (c < 1 || c > h.cells || b < 1 || b > h.bins)
            throw ConfigError(path + ": histogram row " + std::to_string(r + 1) + " out of range");
        h.mass[static_cast<std::size_t>((c - 1) * h.bins + (b - 1))] += rows[r][2];
    }
    return h;
}

CellAtoms discretize_conditional(const CellHistogram& hist, int n, double K, double shiftC) {
    if (!(K > 0.0)) throw ConfigError("moisture half-width K must be positive");
    if (hist.cells != n) throw ConfigError("histogram has " + std::to_string(hist.cells) + " cells, expected " + std::to_string(n));
    const long long B = hist.bins;
    std::vector<std::vector<double>> mass(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (long long b = 0; b < B; ++b) {
            const double m = hist.mass[static_cast<std::size_t>(i * B + b)];
            if (m == 0.0) continue;
            // Source bin [b n, (b+1) n] and target bin [j B, (j+1) B] in units of 2K/(B n).
            for (long long j = 0; j < n; ++j) {
                const long long overlap = std::min((b + 1) * n, (j + 1) * B) - std::max(b * n, j * B);
                if (overlap > 0)
                    mass[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += m * static_cast<double>(overlap) / n;
            }
        }
    return atoms_from_mass(mass, n, K, shiftC);
}

std::vector<AdmissibilityClause> check_admissibility(const InitialEnsemble& ens, const SaturationModel& model,
                                                     const ThetaBounds& bounds, const SolverConfig& cfg) {
    AdmissibilityClause weights{"weights", true, ""}, monotone{"monotone", true, ""},
        probabilities{"probabilities", true, ""}, support{"support", true, ""}, constraint{"constraint", true, ""},
        shift{"shift", true, ""};
    auto fail = [](AdmissibilityClause& c, const std::string& why) {
        if (c.pass) c.message = why;
        c.pass = false;
    };

    double total = 0.0;
    for (const auto& p : ens.profiles) {
        total += p.weight;
        if (!(p.weight > 0.0)) fail(weights, "profile weight must be positive");
    }
    if (ens.profiles.empty() || std::abs(total - 1.0) > 1e-12) fail(weights, "profile weights sum to " + std::to_string(total));

    for (std::size_t m = 0; m < ens.profiles.size(); ++m) {
        const auto& p = ens.profiles[m];
        const std::string where = "profile " + std::to_string(m);
        if (p.theta.size() != ens.n || static_cast<int>(p.atoms.size()) != ens.n) {
            fail(monotone, where + " does not have n cells");
            continue;
        }
        for (int i = 0; i + 1 < ens.n; ++i)
            if (p.theta[i] > p.theta[i + 1]) fail(monotone, where + " decreases at cell " + std::to_string(i + 1));
        for (int i = 0; i < ens.n; ++i) {
            const auto& cell = p.atoms[static_cast<std::size_t>(i)];
            const std::string at = where + ", cell " + std::to_string(i + 1);
            double psum = 0.0;
            for (const auto& a : cell) {
                psum += a.probability;
                if (a.probability < 0.0) fail(probabilities, at + " has a negative probability");
                if (std::abs(a.value) > ens.K + 1.0) fail(support, at + " atom " + std::to_string(a.value) + " outside [-K-1, K+1]");
                if (a.probability > 0.0) {
                    const double need = theta_inverse(model, a.value, grid_z(i, ens.n), 0.0, cfg);
                    if (p.theta[i] < need - cfg.tolerance)
                        fail(constraint, at + ": theta " + std::to_string(p.theta[i]) + " below Theta(atom) " +
                                             std::to_string(need));
                }
            }
            if (cell.empty() || std::abs(psum - 1.0) > 1e-12) fail(probabilities, at + " probabilities sum to " + std::to_string(psum));
        }
    }
    if (ens.shiftC) {
        const double floor = 2.0 * ens.K + bounds.supDzTheta / bounds.infDwTheta;
        if (!(*ens.shiftC > floor)) fail(shift, "shift constant must exceed " + std::to_string(floor));
    }
    return {weights, monotone, probabilities, support, constraint, shift};
}

InitialEnsemble make_ensemble(int n, double K, std::optional<double> shiftC, std::vector<ProfileEntry> profiles,
                              const SaturationModel& model, const ThetaBounds& bounds, const SolverConfig& cfg) {
    InitialEnsemble ens;
    ens.n = n;
    ens.K = K;
    ens.shiftC = shiftC;
    ens.profiles = std::move(profiles);
    for (const auto& c : check_admissibility(ens, model, bounds, cfg))
        if (!c.pass) throw ConfigError("initial ensemble rejected (" + c.name + "): " + c.message);
    return ens;
}

std::vector<Sigma> enumerate_sigmas(const InitialEnsemble& ens, int profile, std::uint64_t cap) {
    const auto& atoms = ens.profiles.at(static_cast<std::size_t>(profile)).atoms;
    std::uint64_t count = 1;
    for (const auto& cell : atoms) {
        if (cell.empty()) throw ConfigError("cell without atoms");
        if (count > cap / cell.size()) throw ConfigError("sigma enumeration exceeds the cap; use Monte Carlo");
        count *= cell.size();
    }

    std::vector<Sigma> out;
    out.reserve(count);
    std::vector<int> choice(atoms.size(), 0);
    for (;;) {
        double p = 1.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) p *= atoms[i][static_cast<std::size_t>(choice[i])].probability;
        out.push_back({choice, p});
        // Odometer with the last cell fastest, so the first cell is most significant.
        std::size_t i = atoms.size();
        while (i > 0) {
            --i;
            if (++choice[i] < static_cast<int>(atoms[i].size())) break;
            choice[i] = 0;
            if (i == 0) return out;
        }
        if (atoms.empty()) return out;
    }
}

std::vector<std::vector<int>> sample_sigmas(const InitialEnsemble& ens, int profile, int count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("sample count must be at least 1");
    const auto& atoms = ens.profiles.at(static_cast<std::size_t>(profile)).atoms;
    std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(profile)));
    std::vector<std::vector<int>> out(static_cast<std::size_t>(count), std::vector<int>(atoms.size(), 0));
    for (auto& choice : out)
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const double u = unit_uniform(rng);
            double acc = 0.0;
            int pick = static_cast<int>(atoms[i].size()) - 1;
            for (std::size_t a = 0; a < atoms[i].size(); ++a) {
                acc += atoms[i][a].probability;
                if (u < acc) {
                    pick = static_cast<int>(a);
                    break;
                }
            }
            choice[i] = pick;
        }
    return out;
}

ColumnState member_state(const InitialEnsemble& ens, int profile, const std::vector<int>& choice) {
    const auto& p = ens.profiles.at(static_cast<std::size_t>(profile));
    Vector thetaM(ens.n);
    for (int i = 0; i < ens.n; ++i)
        thetaM[i] = p.atoms[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(choice[static_cast<std::size_t>(i)])).value;
    return ColumnState::from_moist(p.theta, thetaM);
}

double EnsembleResult::total_weight() const {
    double w = 0.0;
    for (const auto& r : runs) w += r.weight;
    return w;
}

ThetaBounds ensemble_bounds(const InitialEnsemble& ens, const SaturationModel& model, double T,
                            const RunOptions& opts) {
    double wMax = 1e-12;
    for (const auto& p : ens.profiles)
        for (const auto& cell : p.atoms)
            for (const auto& a : cell) wMax = std::max(wMax, std::abs(a.value));
    return compute_bounds(model, DomainBox{wMax, T}, opts.gridResolution, opts.solver);
}

EnsembleResult run_ensemble(const InitialEnsemble& ens, const SaturationModel& model, double T, double dt,
                            const EnsembleMode& mode, const RunOptions& opts, int threads) {
    struct Job {
        int profile;
        std::vector<int> choice;
        double weight;
        int multiplicity;
    };
    std::vector<Job> jobs;
    for (int m = 0; m < static_cast<int>(ens.profiles.size()); ++m) {
        const double w = ens.profiles[static_cast<std::size_t>(m)].weight;
        if (mode.kind == EnsembleMode::Kind::Exhaustive) {
            for (auto& s : enumerate_sigmas(ens, m, mode.cap)) jobs.push_back({m, std::move(s.choice), w * s.probability, 1});
        } else {
            std::map<std::vector<int>, int> counts;
            for (auto& c : sample_sigmas(ens, m, mode.samples, mode.seed)) ++counts[c];
            for (const auto& [c, k] : counts) jobs.push_back({m, c, w * k / mode.samples, k});
        }
    }

    const ThetaBounds bounds = ensemble_bounds(ens, model, T, opts);

    std::vector<std::optional<Trajectory>> out(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                out[i].emplace(run(member_state(ens, jobs[i].profile, jobs[i].choice), model, bounds, T, dt, opts));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int pool = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> ts;
        for (int t = 0; t < pool; ++t) ts.emplace_back(worker);
        for (auto& t : ts) t.join();
    }
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (errors[i]) rethrow_member(errors[i], describe_member(jobs[i].profile, jobs[i].choice));

    EnsembleResult res;
    res.mode = mode;
    res.n = ens.n;
    res.dt = dt;
    res.T = T;
    res.shiftC = ens.shiftC;
    for (std::size_t i = 0; i < jobs.size(); ++i)
        res.runs.push_back({jobs[i].profile, std::move(jobs[i].choice), jobs[i].weight, jobs[i].multiplicity,
                            std::move(*out[i])});
    return res;
}

EmpiricalMarginal marginal(const EnsembleResult& res, double t) {
    EmpiricalMarginal m;
    m.t = t;
    m.n = res.n;
    for (const auto& r : res.runs) {
        const auto s = r.trajectory.state(r.trajectory.index_at(t));
        m.samples.push_back({r.weight, s.theta, s.thetaM, s.position});
    }
    return m;
}

double position_marginal_deviation(const EmpiricalMarginal& m) {
    double total = 0.0;
    for (const auto& s : m.samples) total += s.weight;
    double worst = 0.0;
    for (int p = 0; p < m.n; ++p) {
        double mass = 0.0;
        for (const auto& s : m.samples) {
            int count = 0;
            for (int j = 0; j < m.n; ++j) count += s.position[j] == p;
            mass += s.weight * count;
        }
        worst = std::max(worst, std::abs(mass - total) / (m.n * total));
    }
    return worst;
}

Observable parse_observable(const std::string& name, double z) {
    Observable o;
    o.z = z;
    if (name == "theta")
        o.kind = Observable::Kind::ThetaAt;
    else if (name == "thetaM")
        o.kind = Observable::Kind::ThetaMAt;
    else if (name == "flow")
        o.kind = Observable::Kind::FlowAt;
    else if (name == "profile_l2")
        o.kind = Observable::Kind::ProfileL2;
    else
        throw ConfigError("unknown observable '" + name + "' (theta, thetaM, flow, profile_l2)");
    return o;
}

std::string observable_name(const Observable& obs) {
    switch (obs.kind) {
        case Observable::Kind::ThetaAt: return "theta";
        case Observable::Kind::ThetaMAt: return "thetaM";
        case Observable::Kind::FlowAt: return "flow";
        case Observable::Kind::ProfileL2: return "profile_l2";
    }
    return "";
}

std::vector<std::pair<double, double>> observe(const EmpiricalMarginal& m, const Observable& obs) {
    std::vector<std::pair<double, double>> out;
    const int c = cell_of(obs.z, m.n);
    for (const auto& s : m.samples) {
        double v = 0.0;
        switch (obs.kind) {
            case Observable::Kind::ThetaAt: v = s.theta[c]; break;
            case Observable::Kind::ThetaMAt: v = s.thetaM[s.position.inverse()[c]]; break;
            case Observable::Kind::FlowAt: v = grid_z(s.position[c], m.n); break;
            case Observable::Kind::ProfileL2: throw ConfigError("profile_l2 is not a scalar observable");
        }
        out.emplace_back(v, s.weight);
    }
    return out;
}

double wasserstein1(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b) {
    auto normalise = [](std::vector<std::pair<double, double>>& v) {
        double total = 0.0;
        for (const auto& x : v) total += x.second;
        if (!(total > 0.0)) throw ConfigError("empirical law has no mass");
        for (auto& x : v) x.second /= total;
        std::sort(v.begin(), v.end());
    };
    normalise(a);
    normalise(b);
    std::vector<double> xs;
    for (const auto& x : a) xs.push_back(x.first);
    for (const auto& x : b) xs.push_back(x.first);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    double Fa = 0.0, Fb = 0.0, w = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        while (ia < a.size() && a[ia].first <= xs[k]) Fa += a[ia++].second;
        while (ib < b.size() && b[ib].first <= xs[k]) Fb += b[ib++].second;
        w += std::abs(Fa - Fb) * (xs[k + 1] - xs[k]);
    }
    return w;
}

double marginal_distance(const EmpiricalMarginal& a, const EmpiricalMarginal& b, const Observable& obs) {
    if (obs.kind != Observable::Kind::ProfileL2) return wasserstein1(observe(a, obs), observe(b, obs));
    const auto la = profile_law(a), lb = profile_law(b);
    if (la.size() * lb.size() > 4000000) throw ConfigError("profile_l2 transport problem too large");
    std::vector<double> wa, wb;
    std::vector<std::vector<double>> cost(la.size(), std::vector<double>(lb.size()));
    for (std::size_t i = 0; i < la.size(); ++i) {
        wa.push_back(la[i].second);
        for (std::size_t j = 0; j < lb.size(); ++j) cost[i][j] = profile_l2(la[i].first, lb[j].first);
    }
    for (const auto& x : lb) wb.push_back(x.second);
    return transport(wa, wb, cost);
}

double mc_tolerance(const EmpiricalMarginal& reference, const Observable& obs, int samples) {
    auto law = observe(reference, obs);
    double total = 0.0;
    for (const auto& x : law) total += x.second;
    std::sort(law.begin(), law.end());
    double F = 0.0, tol = 0.0;
    for (std::size_t k = 0; k + 1 < law.size(); ++k) {
        F += law[k].second / total;
        const double f = std::clamp(F, 0.0, 1.0);
        tol += 3.0 * std::sqrt(f * (1.0 - f) / samples) * (law[k + 1].first - law[k].first);
    }
    return tol;
}

}  // namespace moistcol
