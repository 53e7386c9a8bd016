#include "moistcol/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <random>
#include <sstream>

namespace moistcol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

void record_max(CheckReport& r, const std::string& key, double v) {
    auto it = r.constants.find(key);
    if (it == r.constants.end())
        r.constants[key] = v;
    else
        it->second = std::max(it->second, v);
}

bool small_step(const Trajectory& traj) {
    const double cfl = traj.bounds().cfl;
    return cfl == 0.0 || traj.n() * traj.dt() * cfl < 1.0;
}

std::vector<double> epsilon_grid(const Trajectory& traj) {
    std::vector<double> out{traj.dt()};
    for (double e = 2.0 * traj.dt(); e <= traj.T() / 4.0 * (1.0 + 1e-12); e *= 2.0) out.push_back(e);
    return out;
}

// Position of every label at every snapshot.
std::vector<std::vector<int>> position_table(const std::vector<ColumnState>& states) {
    std::vector<std::vector<int>> pos;
    pos.reserve(states.size());
    for (const auto& s : states) pos.push_back(s.position.image());
    return pos;
}

// Theta-hat of every label at every snapshot.
std::vector<std::vector<double>> hat_table(const std::vector<ColumnState>& states) {
    std::vector<std::vector<double>> hat;
    hat.reserve(states.size());
    for (const auto& s : states) {
        std::vector<double> row(static_cast<std::size_t>(s.n));
        for (int j = 0; j < s.n; ++j) row[static_cast<std::size_t>(j)] = s.theta[s.position[j]];
        hat.push_back(std::move(row));
    }
    return hat;
}

using Mask = std::vector<std::uint64_t>;

// Labels at positions below (or above) p.
Mask mask_of(const ColumnState& s, int p, bool below) {
    Mask m(static_cast<std::size_t>((s.n + 63) / 64), 0);
    const int lo = below ? 0 : p + 1;
    const int hi = below ? p : s.n;
    for (int q = lo; q < hi; ++q) {
        const int lab = s.label[q];
        m[static_cast<std::size_t>(lab / 64)] |= std::uint64_t{1} << (lab % 64);
    }
    return m;
}

int popcount_and(const Mask& a, const Mask& b) {
    int c = 0;
    for (std::size_t w = 0; w < a.size(); ++w) c += std::popcount(a[w] & b[w]);
    return c;
}

}  // namespace

void CheckReport::fail(const CheckLocation& where, const std::string& why) {
    if (pass) {
        worst = where;
        message = why;
    }
    pass = false;
}

CheckReport check_step_invariants(const Trajectory& traj) {
    CheckReport r;
    r.name = "step_invariants";
    const auto states = traj.states();
    StepTolerances tol;
    tol.monotone = traj.solver().tolerance;
    tol.saturation = saturation_slack(traj.bounds(), traj.solver());
    r.tolerances = {{"monotone", tol.monotone},
                    {"conservation", tol.conservation},
                    {"theta_hat", tol.thetaHat},
                    {"saturation", tol.saturation}};
    r.constants = {{"conservation_residual", 0.0}, {"saturation_excess", 0.0}, {"monotone_violation", 0.0}};

    const auto initial = describe_inadmissible(states.front(), traj.model(), tol.saturation);
    if (!initial.empty()) r.fail({-1, 0, -1, states.front().t}, "initial state: " + initial);
    for (std::size_t k = 1; k < states.size(); ++k) {
        ++r.evaluated;
        const auto& s = states[k];
        const auto res = measure_step(states[k - 1], s, traj.model());
        record_max(r, "conservation_residual", res.conservationResidual);
        record_max(r, "saturation_excess", res.saturationExcess);
        record_max(r, "monotone_violation", res.monotoneViolation);
        const CheckLocation at{res.worstLabel, static_cast<int>(k), -1, s.t};
        const auto problem = first_violation(res, tol);
        if (!problem.empty()) r.fail(at, problem);
        if (res.labelsBijective && !(s.label == s.position.inverse()))
            r.fail(at, "label and position maps are not inverse");
        if (!(traj.cumulative(static_cast<int>(k)) == traj.step_map(static_cast<int>(k)) *
                                                           traj.cumulative(static_cast<int>(k) - 1)))
            r.fail(at, "cumulative map is not the composition of the step maps");
    }
    return r;
}

CheckReport check_jump_structure(const Trajectory& traj) {
    CheckReport r;
    r.name = "jump_structure";
    const auto states = traj.states();
    const int n = traj.n();
    const bool small = small_step(traj);
    r.constants["small_step"] = small ? 1.0 : 0.0;
    r.constants["max_lifts_per_step"] = 0.0;

    for (int k = 1; k <= traj.steps(); ++k) {
        const auto& rep = traj.report(k);
        ColumnState cur = states[static_cast<std::size_t>(k - 1)];
        std::vector<int> lifts(static_cast<std::size_t>(n), 0), target(static_cast<std::size_t>(n), -1);
        std::vector<char> pushed(static_cast<std::size_t>(n), 0), dry(static_cast<std::size_t>(n), 0);

        for (const auto& lvl : rep.levels) {
            ++r.evaluated;
            const CheckLocation at{-1, k, lvl.k, rep.tNext};
            const auto wet = wet_set(cur, traj.model(), rep.tNext, traj.solver());
            if (!lvl.wet.empty() && lvl.wet != wet) r.fail(at, "recorded wet set differs from the replayed state");
            std::vector<char> isWet(static_cast<std::size_t>(n), 0);
            for (int p : wet) isWet[static_cast<std::size_t>(p)] = 1;
            for (int p = 0; p <= lvl.k; ++p)
                if (!isWet[static_cast<std::size_t>(p)]) dry[static_cast<std::size_t>(cur.label[p])] = 1;

            const std::vector<int> before = cur.position.image();
            if (lvl.jumperLabel >= 0) {
                const int j = lvl.jumperLabel;
                const auto u = static_cast<std::size_t>(j);
                const int from = cur.position[j];
                CheckLocation here = at;
                here.label = j;
                if (from != lvl.jumperFrom) r.fail(here, "recorded jumper position differs from the replayed state");
                const auto eligible = eligible_set(cur, traj.model(), rep.tNext, lvl.k, wet);
                if (std::find(eligible.begin(), eligible.end(), from) == eligible.end())
                    r.fail(here, "jumper is not in the eligible set");
                if (from > lvl.k) {
                    r.fail(here, "jumper sits above the active level");
                    break;
                }
                if (from < lvl.k) {
                    if (++lifts[u] > 1) r.fail(here, "label lifted more than once in a step");
                    if (small && pushed[u]) r.fail(here, "label lifted after being pushed down in the same step");
                    if (dry[u]) r.fail(here, "label lifted after being dry at or below the active level");
                    target[u] = lvl.k;
                    record_max(r, "max_lifts_per_step", lifts[u]);
                }
                for (int p = from + 1; p <= lvl.k; ++p) pushed[static_cast<std::size_t>(cur.label[p])] = 1;
                apply_jump(cur, traj.model(), lvl.k, from, rep.tNext, traj.solver());
                cur.theta[lvl.k] = lvl.thetaAfter;
                cur.q[lvl.k] = cur.thetaM[j] - lvl.thetaAfter;
            }
            for (int j = 0; j < n; ++j) {
                const auto u = static_cast<std::size_t>(j);
                if (dry[u] && cur.position[j] > before[u])
                    r.fail({j, k, lvl.k, rep.tNext}, "dry label moved up within the step");
                if (target[u] >= 0 && cur.position[j] != target[u])
                    r.fail({j, k, lvl.k, rep.tNext}, "lifted label left its target level");
            }
        }
        if (!(cur.position == states[static_cast<std::size_t>(k)].position))
            r.fail({-1, k, -1, rep.tNext}, "replayed cascade does not reproduce the recorded positions");
    }
    return r;
}

CheckReport check_overtake(const Trajectory& traj, const VerifyOptions& opts) {
    CheckReport r;
    r.name = "overtake";
    const auto states = traj.states();
    const auto pos = position_table(states);
    const int n = traj.n();
    const int K = traj.steps();
    const auto& s = traj.initial().thetaM;

    // Pairwise order flips between consecutive snapshots.
    std::vector<int> flips(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    for (int k = 0; k < K; ++k) {
        const auto& a = pos[static_cast<std::size_t>(k)];
        const auto& b = pos[static_cast<std::size_t>(k + 1)];
        if (a == b) continue;
        for (int j1 = 0; j1 < n; ++j1)
            for (int j2 = 0; j2 < n; ++j2) {
                const auto u1 = static_cast<std::size_t>(j1), u2 = static_cast<std::size_t>(j2);
                if (!(a[u1] < a[u2] && b[u1] > b[u2])) continue;
                ++r.evaluated;
                const CheckLocation at{j1, k + 1, -1, traj.time(k + 1)};
                if (!(s[j1] > s[j2]))
                    r.fail(at, "label " + std::to_string(j1) + " overtook " + std::to_string(j2) +
                                   " without strictly larger thetaM");
                const std::size_t key = std::min(u1, u2) * static_cast<std::size_t>(n) + std::max(u1, u2);
                if (++flips[key] > 1)
                    r.fail(at, "labels " + std::to_string(j1) + " and " + std::to_string(j2) + " crossed twice");
            }
    }

    r.constants["max_overtake_ratio"] = 0.0;
    if (!small_step(traj)) {
        r.message = r.pass ? "crossing-count bound skipped: n*dt >= 1/cfl" : r.message;
        return r;
    }
    auto count_check = [&](int k, int l, const std::vector<Mask>& below, const std::vector<Mask>& above) {
        for (int j0 = 0; j0 < n; ++j0) {
            ++r.evaluated;
            const int c = popcount_and(below[static_cast<std::size_t>(j0)], above[static_cast<std::size_t>(j0)]);
            record_max(r, "max_overtake_ratio", static_cast<double>(c) / (l - k));
            if (c > 2 * (l - k))
                r.fail({j0, l, -1, traj.time(l)}, "overtake count " + std::to_string(c) + " exceeds 2(l-k) = " +
                                                      std::to_string(2 * (l - k)) + " from step " +
                                                      std::to_string(k));
        }
    };
    auto masks = [&](int k, bool below) {
        std::vector<Mask> m;
        m.reserve(static_cast<std::size_t>(n));
        const auto& st = states[static_cast<std::size_t>(k)];
        for (int j = 0; j < n; ++j) m.push_back(mask_of(st, st.position[j], below));
        return m;
    };

    if (n <= opts.exhaustiveOvertakeMax) {
        std::vector<std::vector<Mask>> below, above;
        for (int k = 0; k <= K; ++k) {
            below.push_back(masks(k, true));
            above.push_back(masks(k, false));
        }
        for (int k = 0; k < K; ++k)
            for (int l = k + 1; l <= K; ++l)
                count_check(k, l, below[static_cast<std::size_t>(k)], above[static_cast<std::size_t>(l)]);
        r.constants["exhaustive"] = 1.0;
    } else if (K > 0) {
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<int> pick(0, K);
        for (int i = 0; i < opts.overtakeSamples; ++i) {
            int k = pick(rng), l = pick(rng);
            if (k == l) continue;
            if (k > l) std::swap(k, l);
            count_check(k, l, masks(k, true), masks(l, false));
        }
        r.constants["exhaustive"] = 0.0;
    }
    return r;
}

CheckReport check_tv(const Trajectory& traj, const VerifyOptions& opts) {
    CheckReport r;
    r.name = "tv";
    const double infDz = traj.bounds().infDzTheta;
    r.tolerances["jump"] = opts.jumpTolerance;
    r.constants = {{"C3", 0.0}, {"max_pv", 0.0}, {"max_pv_ratio", 0.0}};
    for (const auto& path : lagrangian_paths(traj)) {
        ++r.evaluated;
        double hatInf = 0.0;
        for (double h : path.thetaHat) hatInf = std::max(hatInf, std::abs(h));
        const double pvBound = 2.0 * hatInf / infDz;
        const double pv = path.positive_variation();
        const double tv = path.total_variation();
        record_max(r, "C3", tv);
        record_max(r, "max_pv", pv);
        if (pvBound > 0.0) record_max(r, "max_pv_ratio", pv / pvBound);
        if (pv > pvBound + opts.jumpTolerance)
            r.fail({path.label, -1, -1, kInf}, "positive variation " + fmt(pv) + " exceeds " + fmt(pvBound));
        if (tv > 2.0 * (pvBound + opts.jumpTolerance) + 2.0)
            r.fail({path.label, -1, -1, kInf}, "total variation " + fmt(tv) + " exceeds the bound");
        for (std::size_t k = 1; k < path.position.size(); ++k) {
            const double rise = std::max(path.position[k] - path.position[k - 1], 0.0);
            const double gain = path.thetaHat[k] - path.thetaHat[k - 1];
            if (gain < infDz * rise - opts.jumpTolerance)
                r.fail({path.label, static_cast<int>(k), -1, traj.time(static_cast<int>(k))},
                       "theta-hat gain " + fmt(gain) + " below infDzTheta * rise " + fmt(infDz * rise));
        }
    }
    return r;
}

CheckReport check_dry_persistence(const Trajectory& traj, std::vector<double> epsilons) {
    CheckReport r;
    r.name = "dry_persistence";
    if (epsilons.empty()) epsilons = epsilon_grid(traj);
    std::sort(epsilons.begin(), epsilons.end());
    const double supDt = traj.bounds().supDtTheta;
    const double dt = traj.dt();
    const int K = traj.steps();
    const auto states = traj.states();
    const auto pos = position_table(states);
    const auto hat = hat_table(states);
    r.tolerances["solver"] = traj.solver().tolerance;
    r.constants["window_factor"] = 2.0 * supDt;

    for (int j = 0; j < traj.n(); ++j) {
        const auto u = static_cast<std::size_t>(j);
        const double s = traj.initial().thetaM[j];
        // First snapshot after k at which the label gains theta or moves up.
        std::vector<int> nextBreak(static_cast<std::size_t>(K + 1), K + 1);
        for (int k = K - 1; k >= 0; --k) {
            const auto a = static_cast<std::size_t>(k), b = a + 1;
            const bool broke = hat[b][u] != hat[a][u] || pos[b][u] > pos[a][u];
            nextBreak[a] = broke ? k + 1 : nextBreak[b];
        }
        for (int k = 0; k < K; ++k) {
            const auto a = static_cast<std::size_t>(k);
            const double margin =
                hat[a][u] - theta_inverse(traj.model(), s, grid_z(pos[a][u], traj.n()), states[a].t, traj.solver());
            auto it = std::lower_bound(epsilons.begin(), epsilons.end(), margin - traj.solver().tolerance);
            if (it == epsilons.begin()) continue;
            const double eps = *std::prev(it);
            ++r.evaluated;
            const double window = supDt > 0.0 ? eps / (2.0 * supDt) : kInf;
            const double reach = std::min(static_cast<double>(K), k + std::floor(window / dt + 1e-9));
            if (nextBreak[a] <= reach)
                r.fail({j, nextBreak[a], -1, traj.time(nextBreak[a])},
                       "dry margin " + fmt(margin) + " at step " + std::to_string(k) +
                           " did not persist over the window " + fmt(window));
        }
    }
    return r;
}

CheckReport check_increment_formula(const Trajectory& traj, const VerifyOptions& opts, std::vector<double> epsilons) {
    CheckReport r;
    r.name = "increment_formula";
    if (epsilons.empty()) epsilons = epsilon_grid(traj);
    const double dt = traj.dt();
    const int K = traj.steps();
    const auto states = traj.states();
    const auto pos = position_table(states);
    const auto hat = hat_table(states);
    r.tolerances["C4_cap"] = opts.c4Cap;
    r.constants["C4"] = 0.0;
    for (int j = 0; j < traj.n(); ++j) {
        const auto u = static_cast<std::size_t>(j);
        const double s = traj.initial().thetaM[j];
        for (int m = 0; m < K; ++m) {
            const double t = (m + 0.5) * dt;
            for (double eps : epsilons) {
                const double lo = t - eps, hi = t + eps;
                if (lo < 0.0 || hi >= traj.T()) continue;
                ++r.evaluated;
                const auto a = static_cast<std::size_t>(traj.index_at(lo));
                const auto b = static_cast<std::size_t>(traj.index_at(hi));
                const double df = hat[b][u] - hat[a][u];
                const double dTheta = theta_inverse(traj.model(), s, grid_z(pos[b][u], traj.n()), hi, traj.solver()) -
                                      theta_inverse(traj.model(), s, grid_z(pos[a][u], traj.n()), lo, traj.solver());
                const double ratio = std::abs(df - std::max(dTheta, 0.0)) / (eps + dt);
                if (ratio > r.constants["C4"]) {
                    r.constants["C4"] = ratio;
                    if (r.pass) r.worst = {j, static_cast<int>(a), -1, t};
                }
            }
        }
    }
    const double c4 = r.constants["C4"];
    if (!std::isfinite(c4) || c4 > opts.c4Cap)
        r.fail(r.worst, "increment ratio " + fmt(c4) + " exceeds cap " + fmt(opts.c4Cap));
    return r;
}

CheckReport check_continuity(const Trajectory& traj, const VerifyOptions& opts) {
    CheckReport r;
    r.name = "continuity";
    const auto states = traj.states();
    const int n = traj.n();
    const double dt = traj.dt();
    r.constants = {{"C5", 0.0}, {"C6", 0.0}};
    r.tolerances = {{"C5_cap", opts.c5Cap}, {"C6_cap", opts.c6Cap}};
    CheckLocation at5, at6;
    for (std::size_t k = 0; k < states.size(); ++k)
        for (std::size_t l = k + 1; l < states.size(); ++l) {
            ++r.evaluated;
            // Sup over t in [t_l, t_l+dt), s in [t_k, t_k+dt) of the ratio: the gap shrinks to (l-k-1)dt.
            const double scale = std::sqrt(static_cast<double>(l - k) * dt);
            const double dTheta = (states[l].theta - states[k].theta).cwiseAbs().sum() / n;
            double dFlow = 0.0;
            for (int j = 0; j < n; ++j) dFlow += std::abs(states[l].position[j] - states[k].position[j]);
            dFlow /= static_cast<double>(n) * n;
            if (dTheta / scale > r.constants["C5"]) {
                r.constants["C5"] = dTheta / scale;
                at5 = {-1, static_cast<int>(l), -1, states[l].t};
            }
            if (dFlow / scale > r.constants["C6"]) {
                r.constants["C6"] = dFlow / scale;
                at6 = {-1, static_cast<int>(l), -1, states[l].t};
            }
        }
    if (!std::isfinite(r.constants["C5"]) || r.constants["C5"] > opts.c5Cap)
        r.fail(at5, "theta continuity ratio " + fmt(r.constants["C5"]) + " exceeds cap");
    if (!std::isfinite(r.constants["C6"]) || r.constants["C6"] > opts.c6Cap)
        r.fail(at6, "flow continuity ratio " + fmt(r.constants["C6"]) + " exceeds cap");
    if (r.pass) r.worst = at5;
    return r;
}

CheckReport check_energy(const Trajectory& traj, const VerifyOptions& opts) {
    CheckReport r;
    r.name = "energy";
    const auto states = traj.states();
    r.constants["exhaustive"] = traj.n() <= opts.energyExhaustiveMax ? 1.0 : 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        ++r.evaluated;
        const auto cert = certify_minimal(states[k].theta, opts.energyExhaustiveMax);
        if (!cert.minimal)
            r.fail({-1, static_cast<int>(k), -1, states[k].t},
                   "energy " + fmt(cert.energy) + " above the minimum " + fmt(cert.minimum));
    }
    return r;
}

std::vector<WetnessPath> wetness_paths(const Trajectory& traj) {
    const auto states = traj.states();
    const int n = traj.n();
    std::vector<WetnessPath> out(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        auto& w = out[static_cast<std::size_t>(j)];
        w.label = j;
        w.s = traj.initial().thetaM[j];
        for (const auto& st : states) {
            const int p = st.position[j];
            w.t.push_back(st.t);
            w.f.push_back(st.theta[p]);
            w.g.push_back(theta_inverse(traj.model(), w.s, st.z(p), st.t, traj.solver()));
        }
    }
    return out;
}

double wet_tolerance(const Trajectory& traj) {
    return 4.0 * traj.solver().tolerance + traj.bounds().supDtTheta * traj.dt();
}

CheckReport check_wet_measure(const WetnessPath& path, double tol, double dgCap) {
    CheckReport r;
    r.name = "wet_measure";
    r.tolerances = {{"wet", tol}, {"dg_cap", dgCap}};
    r.constants = {{"max_increment_mismatch", 0.0}, {"aggregate_mismatch", 0.0}, {"wet_increments", 0.0}};
    const std::size_t m = path.f.size();
    if (path.g.size() != m || path.t.size() != m) throw ConfigError("wetness path sequences differ in length");
    for (std::size_t k = 1; k < m; ++k)
        if (path.f[k] < path.f[k - 1] - 1e-12)
            throw ConfigError("wetness path f decreases at index " + std::to_string(k));

    double sumF = 0.0, sumG = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const CheckLocation at{path.label, static_cast<int>(k), -1, path.t[k]};
        ++r.evaluated;
        if (path.f[k] < path.g[k] - tol) r.fail(at, "f below g: saturation constraint violated");
        if (k + 1 == m) break;
        const double df = path.f[k + 1] - path.f[k];
        const double dg = path.g[k + 1] - path.g[k];
        const bool wet = path.f[k] - path.g[k] <= tol;
        const double mismatch = wet ? std::abs(df - std::max(dg, 0.0)) : 0.0;
        record_max(r, "max_increment_mismatch", mismatch);
        if (df > 0.0 && !wet) r.fail(at, "f increased off the wet set");
        if (mismatch > tol) r.fail(at, "increment " + fmt(df) + " differs from (dg)+ = " + fmt(std::max(dg, 0.0)));
        if (!wet && dg > dgCap) r.fail(at, "g increment " + fmt(dg) + " on a dry stretch exceeds " + fmt(dgCap));
        if (wet) {
            sumF += df;
            sumG += std::max(dg, 0.0);
            ++count;
        }
    }
    r.constants["wet_increments"] = count;
    r.constants["aggregate_mismatch"] = std::abs(sumF - sumG);
    if (std::abs(sumF - sumG) > count * tol + 1e-15)
        r.fail({path.label, -1, -1, kInf}, "aggregate f increase " + fmt(sumF) + " differs from " + fmt(sumG));
    return r;
}

CheckReport check_wet_measure(const Trajectory& traj) {
    CheckReport total;
    total.name = "wet_measure";
    const double tol = wet_tolerance(traj);
    const double dgCap = traj.bounds().supDtTheta * traj.dt() + 2.0 * traj.solver().tolerance;
    total.tolerances = {{"wet", tol}, {"dg_cap", dgCap}};
    for (const auto& path : wetness_paths(traj)) {
        const auto r = check_wet_measure(path, tol, dgCap);
        total.evaluated += r.evaluated;
        for (const auto& [key, v] : r.constants)
            if (key == "wet_increments")
                total.constants[key] += v;
            else
                record_max(total, key, v);
        if (!r.pass) total.fail(r.worst, r.message);
    }
    return total;
}

std::vector<CheckReport> run_all_checks(const Trajectory& traj, const VerifyOptions& opts, int threads) {
    const std::vector<std::pair<std::string, std::function<CheckReport()>>> checks = {
        {"step_invariants", [&] { return check_step_invariants(traj); }},
        {"jump_structure", [&] { return check_jump_structure(traj); }},
        {"overtake", [&] { return check_overtake(traj, opts); }},
        {"tv", [&] { return check_tv(traj, opts); }},
        {"dry_persistence", [&] { return check_dry_persistence(traj); }},
        {"increment_formula", [&] { return check_increment_formula(traj, opts); }},
        {"continuity", [&] { return check_continuity(traj, opts); }},
        {"wet_measure", [&] { return check_wet_measure(traj); }},
        {"energy", [&] { return check_energy(traj, opts); }},
    };
    // A check that cannot be evaluated on this trajectory (corrupt input) counts as a failure.
    auto guarded = [](const std::string& name, const std::function<CheckReport()>& c) {
        try {
            return c();
        } catch (const std::exception& e) {
            CheckReport r;
            r.name = name;
            r.fail({}, std::string("check aborted: ") + e.what());
            return r;
        }
    };
    std::vector<CheckReport> out;
    if (threads <= 1) {
        for (const auto& [name, c] : checks) out.push_back(guarded(name, c));
        return out;
    }
    std::vector<std::future<CheckReport>> pending;
    for (const auto& [name, c] : checks) pending.push_back(std::async(std::launch::async, guarded, name, c));
    for (auto& f : pending) out.push_back(f.get());
    return out;
}

double energy(const Vector& theta) {
    const auto n = theta.size();
    double e = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) e -= grid_z(static_cast<int>(p), static_cast<int>(n)) * theta[p];
    return e / static_cast<double>(n);
}

EnergyCertificate certify_minimal(const Vector& theta, int exhaustiveMax) {
    EnergyCertificate c;
    c.energy = energy(theta);
    std::vector<double> v(theta.data(), theta.data() + theta.size());
    std::sort(v.begin(), v.end());
    const double slack = 1e-12 * (1.0 + theta.cwiseAbs().maxCoeff());
    if (theta.size() <= exhaustiveMax) {
        c.exhaustive = true;
        c.minimum = kInf;
        do {
            ++c.permutations;
            c.minimum = std::min(c.minimum, energy(Eigen::Map<const Vector>(v.data(), theta.size())));
        } while (std::next_permutation(v.begin(), v.end()));
    } else {
        c.minimum = energy(Eigen::Map<const Vector>(v.data(), theta.size()));
    }
    c.minimal = c.energy <= c.minimum + slack;
    return c;
}

double profile_l1(const Vector& a, const Vector& b) {
    const long long na = a.size(), nb = b.size();
    if (na == 0 || nb == 0) throw ConfigError("profile_l1 needs non-empty profiles");
    // Breakpoints i/na and j/nb on the common denominator na*nb.
    long long x = 0, i = 0, j = 0;
    double sum = 0.0;
    while (i < na && j < nb) {
        const long long next = std::min((i + 1) * nb, (j + 1) * na);
        sum += std::abs(a[i] - b[j]) * static_cast<double>(next - x);
        x = next;
        if ((i + 1) * nb == next) ++i;
        if ((j + 1) * na == next) ++j;
    }
    return sum / static_cast<double>(na * nb);
}

}  // namespace moistcol
