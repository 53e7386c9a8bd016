#include "moistcol/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace moistcol {

namespace {

double forward(const SaturationModel& model, double theta, double z, double t) { return theta + model(theta, z, t); }

bool is_wet(const SaturationModel& model, double theta, double moist, double z, double tNext, double tol) {
    return forward(model, theta + tol, z, tNext) < moist;
}

// Sup of dQ/dtheta, used to turn the theta tolerance into a q tolerance.
double sup_dq_dtheta(const SaturationModel& model) {
    if (model.kind() == SaturationModel::Kind::LinearBuiltin) return model.a();
    const auto& tb = *model.table();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < tb.theta.size(); ++i)
        for (std::size_t j = 0; j < tb.z.size(); ++j)
            for (std::size_t k = 0; k < tb.t.size(); ++k)
                s = std::max(s, (tb.at(i + 1, j, k) - tb.at(i, j, k)) / (tb.theta[i + 1] - tb.theta[i]));
    return s;
}

// Incremental cascade state: per-position wet flag and beat threshold.
class Cascade {
public:
    Cascade(ColumnState& s, const SaturationModel& model, double tNext, const SolverConfig& cfg)
        : s_(s), model_(model), tNext_(tNext), cfg_(cfg), wet_(static_cast<std::size_t>(s.n)),
          threshold_(static_cast<std::size_t>(s.n)) {
        for (int p = 0; p < s_.n; ++p) refresh(p);
    }

    int wet_count() const { return wetCount_; }

    std::vector<int> wet_positions() const {
        std::vector<int> out;
        for (int p = 0; p < s_.n; ++p)
            if (wet_[static_cast<std::size_t>(p)]) out.push_back(p);
        return out;
    }

    std::vector<int> eligible(int k) const {
        std::vector<int> out;
        double beat = -std::numeric_limits<double>::infinity();
        for (int j0 = k; j0 >= 0; --j0) {
            const auto u = static_cast<std::size_t>(j0);
            if (wet_[u] && s_.moist_at(j0) > beat) out.push_back(j0);
            beat = std::max(beat, threshold_[u]);
        }
        std::reverse(out.begin(), out.end());
        for (int j0 = k + 1; j0 < s_.n; ++j0)
            if (wet_[static_cast<std::size_t>(j0)]) out.push_back(j0);
        return out;
    }

    LevelRecord jump(int k, int jstar) {
        LevelRecord rec = apply_jump(s_, model_, k, jstar, tNext_, cfg_);
        for (int p = jstar; p <= k; ++p) refresh(p);
        return rec;
    }

private:
    void refresh(int p) {
        const auto u = static_cast<std::size_t>(p);
        const double z = s_.z(p);
        const double moist = s_.moist_at(p);
        const bool w = is_wet(model_, s_.theta[p], moist, z, tNext_, cfg_.tolerance);
        if (w != static_cast<bool>(wet_[u])) wetCount_ += w ? 1 : -1;
        wet_[u] = w;
        threshold_[u] = w ? moist : forward(model_, s_.theta[p], z, tNext_);
    }

    ColumnState& s_;
    const SaturationModel& model_;
    double tNext_;
    SolverConfig cfg_;
    std::vector<char> wet_;
    std::vector<double> threshold_;
    int wetCount_ = 0;
};

}  // namespace

int StepReport::jump_count() const {
    return static_cast<int>(
        std::count_if(levels.begin(), levels.end(), [](const LevelRecord& r) { return r.jumperLabel >= 0; }));
}

std::vector<int> wet_set(const ColumnState& state, const SaturationModel& model, double tNext, const SolverConfig& cfg) {
    std::vector<int> out;
    for (int p = 0; p < state.n; ++p)
        if (is_wet(model, state.theta[p], state.moist_at(p), state.z(p), tNext, cfg.tolerance)) out.push_back(p);
    return out;
}

std::vector<int> eligible_set(const ColumnState& state, const SaturationModel& model, double tNext, int k,
                              const std::vector<int>& wet) {
    std::vector<char> isWet(static_cast<std::size_t>(state.n), 0);
    for (int p : wet) isWet[static_cast<std::size_t>(p)] = 1;
    std::vector<int> out;
    for (int j0 : wet) {
        if (j0 > k) {
            out.push_back(j0);
            continue;
        }
        const double moist = state.moist_at(j0);
        bool beats = true;
        for (int j = j0 + 1; j <= k && beats; ++j) {
            if (isWet[static_cast<std::size_t>(j)])
                beats = moist > state.moist_at(j);
            else
                beats = forward(model, state.theta[j], state.z(j), tNext) < moist;
        }
        if (beats) out.push_back(j0);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<int> select_jumper(const ColumnState& state, const std::vector<int>& eligible) {
    std::optional<int> best;
    for (int p : eligible) {
        if (!best || state.moist_at(p) > state.moist_at(*best) ||
            (state.moist_at(p) == state.moist_at(*best) && p > *best))
            best = p;
    }
    return best;
}

LevelRecord apply_jump(ColumnState& state, const SaturationModel& model, int k, int jstar, double tNext,
                       const SolverConfig& cfg) {
    if (k < 0 || k >= state.n || jstar < 0 || jstar > k)
        throw LogicError("apply_jump: jumper position " + std::to_string(jstar) + " cannot move to level " +
                         std::to_string(k));
    LevelRecord rec;
    rec.k = k;
    rec.jumperFrom = jstar;
    rec.jumperLabel = state.label[jstar];
    rec.thetaBefore = state.theta[jstar];

    for (int p = jstar; p < k; ++p) {
        const int moved = state.label[p + 1];
        state.label[p] = moved;
        state.position[moved] = p;
        state.theta[p] = state.theta[p + 1];
        state.q[p] = state.thetaM[moved] - state.theta[p];
    }
    state.label[k] = rec.jumperLabel;
    state.position[rec.jumperLabel] = k;
    state.theta[k] = theta_inverse(model, state.thetaM[rec.jumperLabel], state.z(k), tNext, cfg);
    state.q[k] = state.thetaM[rec.jumperLabel] - state.theta[k];
    rec.thetaAfter = state.theta[k];
    return rec;
}

StepResiduals measure_step(const ColumnState& before, const ColumnState& after, const SaturationModel& model) {
    StepResiduals r;
    r.labelsBijective = after.position.is_bijection() && after.label.is_bijection() &&
                        after.position.size() == after.n && after.label.size() == after.n;
    if (!r.labelsBijective) return r;
    for (int p = 0; p + 1 < after.n; ++p) {
        const double v = after.theta[p] - after.theta[p + 1];
        if (v > r.monotoneViolation) {
            r.monotoneViolation = v;
            r.worstPosition = p;
        }
    }
    for (int j = 0; j < after.n; ++j) {
        const int p = after.position[j];
        const double cons = std::abs(after.theta[p] + after.q[p] - after.thetaM[j]);
        r.conservationResidual = std::max(r.conservationResidual, cons);
        const double dec = before.theta[before.position[j]] - after.theta[p];
        if (dec > r.thetaHatDecrease) {
            r.thetaHatDecrease = dec;
            r.worstLabel = j;
        }
        const double excess = after.q[p] - eval_qsat(model, after.theta[p], after.z(p), after.t);
        if (excess > r.saturationExcess) {
            r.saturationExcess = excess;
            if (r.worstLabel < 0) r.worstLabel = j;
        }
    }
    return r;
}

std::string first_violation(const StepResiduals& r, const StepTolerances& tol) {
    std::ostringstream msg;
    msg.precision(17);
    if (!r.labelsBijective)
        msg << "label map is not a bijection";
    else if (r.monotoneViolation > tol.monotone)
        msg << "(i) theta not monotone at position " << r.worstPosition << " (drop " << r.monotoneViolation << ")";
    else if (r.conservationResidual > tol.conservation)
        msg << "(ii) conservation residual " << r.conservationResidual;
    else if (r.thetaHatDecrease > tol.thetaHat)
        msg << "(iii) theta-hat decreased by " << r.thetaHatDecrease << " for label " << r.worstLabel;
    else if (r.saturationExcess > tol.saturation)
        msg << "(iv) saturation exceeded by " << r.saturationExcess;
    return msg.str();
}

StepResult step(const ColumnState& state, const SaturationModel& model, double dt, const StepOptions& opts) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    return step_to(state, model, state.t + dt, opts);
}

StepResult step_to(const ColumnState& state, const SaturationModel& model, double tNext, const StepOptions& opts) {
    StepResult out{state, Permutation::identity(state.n), {}};
    ColumnState& s = out.state;
    StepReport& report = out.report;
    report.t = state.t;
    report.tNext = tNext;
    report.labels.assign(static_cast<std::size_t>(state.n), {});

    Cascade cascade(s, model, tNext, opts.solver);
    for (int k = s.n - 1; k >= 0; --k) {
        if (cascade.wet_count() == 0) break;
        LevelRecord rec;
        rec.k = k;
        const auto eligible = cascade.eligible(k);
        if (opts.recordSets) {
            rec.wet = cascade.wet_positions();
            rec.eligible = eligible;
        }
        if (const auto jstar = select_jumper(s, eligible)) {
            for (int p = *jstar + 1; p <= k; ++p) report.labels[static_cast<std::size_t>(s.label[p])].pushedDown = true;
            LevelRecord jumped = cascade.jump(k, *jstar);
            rec.jumperLabel = jumped.jumperLabel;
            rec.jumperFrom = jumped.jumperFrom;
            rec.thetaBefore = jumped.thetaBefore;
            rec.thetaAfter = jumped.thetaAfter;
            if (*jstar < k) {
                auto& flags = report.labels[static_cast<std::size_t>(rec.jumperLabel)];
                flags.lifted = true;
                flags.liftTarget = k;
                ++flags.lifts;
            }
        }
        report.levels.push_back(std::move(rec));
    }
    s.t = tNext;

    for (int p = 0; p < s.n; ++p) out.beta[p] = s.position[state.label[p]];

    if (opts.validate) {
        StepTolerances tol;
        tol.monotone = opts.solver.tolerance;
        tol.saturation = 2.0 * opts.solver.tolerance * (1.0 + sup_dq_dtheta(model));
        const auto problem = first_violation(measure_step(state, s, model), tol);
        if (!problem.empty()) throw StepInvariantError("step invariant violated at t=" + std::to_string(tNext) + ": " + problem, report);
    }
    return out;
}

}  // namespace moistcol
