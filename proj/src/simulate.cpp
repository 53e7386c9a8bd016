#include "moistcol/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace moistcol {

namespace {

constexpr double kIndexSlack = 1e-9;

}  // namespace

Trajectory::Trajectory(SaturationModel model, ThetaBounds bounds, SolverConfig solver, double dt, double T,
                       ColumnState initial, bool thin)
    : model_(std::move(model)), bounds_(bounds), solver_(solver), dt_(dt), T_(T), thin_(thin) {
    cumulative_.push_back(initial.position);
    snapshots_.push_back(std::move(initial));
}

void Trajectory::append(StepResult result) {
    cumulative_.push_back(result.state.position);
    betas_.push_back(std::move(result.beta));
    reports_.push_back(std::move(result.report));
    if (!thin_) snapshots_.push_back(std::move(result.state));
}

Permutation Trajectory::cumulative(int k) const { return cumulative_.at(static_cast<std::size_t>(k)); }

ColumnState Trajectory::state(int k) const {
    if (k < 0 || k > steps()) throw ConfigError("snapshot index out of range");
    if (!thin_) return snapshots_[static_cast<std::size_t>(k)];
    ColumnState s = snapshots_.front();
    Vector hat(s.n);
    for (int j = 0; j < s.n; ++j) hat[j] = s.theta[s.position[j]];
    for (int m = 1; m <= k; ++m) replay(s, hat, m);
    return s;
}

std::vector<ColumnState> Trajectory::states() const {
    if (!thin_) return snapshots_;
    std::vector<ColumnState> out;
    out.reserve(static_cast<std::size_t>(steps() + 1));
    ColumnState s = snapshots_.front();
    Vector hat(s.n);
    for (int j = 0; j < s.n; ++j) hat[j] = s.theta[s.position[j]];
    out.push_back(s);
    for (int m = 1; m <= steps(); ++m) {
        replay(s, hat, m);
        out.push_back(s);
    }
    return out;
}

// Advance a reconstructed snapshot from m-1 to m: jumpers take their recorded theta, every
// label moves to its position under alpha_m.
void Trajectory::replay(ColumnState& s, Vector& hat, int m) const {
    for (const auto& lvl : report(m).levels)
        if (lvl.jumperLabel >= 0) hat[lvl.jumperLabel] = lvl.thetaAfter;
    s.position = cumulative_[static_cast<std::size_t>(m)];
    s.label = s.position.inverse();
    for (int j = 0; j < s.n; ++j) {
        const int p = s.position[j];
        s.theta[p] = hat[j];
        s.q[p] = s.thetaM[j] - hat[j];
    }
    s.t = report(m).tNext;
}

int Trajectory::index_at(double t) const {
    if (!(t >= 0.0) || !(t < T_)) throw ConfigError("time " + std::to_string(t) + " outside [0, T)");
    const int k = static_cast<int>(std::floor(t / dt_ + kIndexSlack));
    return std::min(k, steps());
}

double LagrangianPath::positive_variation() const {
    double pv = 0.0;
    for (std::size_t k = 1; k < position.size(); ++k) pv += std::max(position[k] - position[k - 1], 0.0);
    return pv;
}

double LagrangianPath::total_variation() const {
    double tv = 0.0;
    for (std::size_t k = 1; k < position.size(); ++k) tv += std::abs(position[k] - position[k - 1]);
    return tv;
}

ThetaBounds bounds_for(const ColumnState& initial, const SaturationModel& model, double T, const RunOptions& opts) {
    DomainBox box;
    box.wMax = std::max(initial.thetaM.cwiseAbs().maxCoeff(), 1e-12);
    box.T = T;
    return compute_bounds(model, box, opts.gridResolution, opts.solver);
}

Trajectory run(const ColumnState& initial, const SaturationModel& model, double T, double dt, const RunOptions& opts) {
    if (!(T > 0.0)) throw ConfigError("time horizon T must be positive");
    return run(initial, model, bounds_for(initial, model, T, opts), T, dt, opts);
}

Trajectory run(const ColumnState& initial, const SaturationModel& model, const ThetaBounds& bounds, double T,
               double dt, const RunOptions& opts) {
    if (!(T > 0.0)) throw ConfigError("time horizon T must be positive");
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const double dtMax = max_timestep(bounds, initial.n, T);
    if (dt > dtMax * (1.0 + 1e-12))
        throw ConfigError("time step " + std::to_string(dt) + " exceeds the admissible maximum " +
                          std::to_string(dtMax));
    const auto problem = describe_inadmissible(initial, model, saturation_slack(bounds, opts.solver));
    if (!problem.empty()) throw ConfigError("initial state is not admissible: " + problem);

    const int K = static_cast<int>(std::ceil(T / dt - kIndexSlack));
    Trajectory traj(model, bounds, opts.solver, dt, T, initial, opts.thin);

    StepOptions stepOpts;
    stepOpts.solver = opts.solver;
    stepOpts.validate = opts.validate;
    stepOpts.recordSets = !opts.thin;

    ColumnState current = initial;
    for (int k = 1; k <= K; ++k) {
        StepResult r = step_to(current, model, initial.t + k * dt, stepOpts);
        current = r.state;
        traj.append(std::move(r));
    }
    return traj;
}

Permutation flow_map(const Trajectory& traj, double t) { return traj.cumulative(traj.index_at(t)); }

std::vector<LagrangianPath> lagrangian_paths(const Trajectory& traj) {
    const int n = traj.n();
    std::vector<LagrangianPath> paths(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        paths[static_cast<std::size_t>(j)].label = j;
        paths[static_cast<std::size_t>(j)].s = traj.initial().thetaM[j];
    }
    for (const ColumnState& s : traj.states()) {
        for (int j = 0; j < n; ++j) {
            auto& path = paths[static_cast<std::size_t>(j)];
            const int p = s.position[j];
            path.cell.push_back(p);
            path.position.push_back(s.z(p));
            path.thetaHat.push_back(s.theta[p]);
        }
    }
    return paths;
}

Vector interpolated_theta(const Trajectory& traj, double t) {
    const int k = traj.index_at(t);
    const ColumnState a = traj.state(k);
    if (k == traj.steps()) return a.theta;
    const ColumnState b = traj.state(k + 1);
    const double w = std::clamp((t - traj.time(k)) / traj.dt(), 0.0, 1.0);
    return (1.0 - w) * a.theta + w * b.theta;
}

}  // namespace moistcol
