/**
 * @file simulate.hpp
 * @brief Time-marching a single column and reading off flow maps and parcel paths.
 *
 * Snapshot k holds the state at t_k = k*dt. Fields are piecewise constant in time:
 * a query at t uses snapshot floor(t/dt), so a time exactly on a step boundary belongs
 * to the new step.
 */
#pragma once

#include "moistcol/rearrange.hpp"

#include <vector>

namespace moistcol {

struct RunOptions {
    SolverConfig solver;
    bool validate = true;
    bool thin = false;        // keep only the initial snapshot plus per-step permutations
    int gridResolution = 64;  // bounds sampling for tabulated models
};

class Trajectory {
public:
    Trajectory(SaturationModel model, ThetaBounds bounds, SolverConfig solver, double dt, double T, ColumnState initial,
               bool thin);

    const SaturationModel& model() const { return model_; }
    const ThetaBounds& bounds() const { return bounds_; }
    const SolverConfig& solver() const { return solver_; }
    double dt() const { return dt_; }
    double T() const { return T_; }
    int n() const { return initial().n; }
    bool thin() const { return thin_; }

    /// Number of completed steps K; snapshots are k = 0..K.
    int steps() const { return static_cast<int>(betas_.size()); }
    double time(int k) const { return k * dt_; }

    const ColumnState& initial() const { return snapshots_.front(); }
    /// Snapshot k (reconstructed from permutations and jump records in thin mode).
    ColumnState state(int k) const;
    /// All snapshots k = 0..K in order (one replay pass in thin mode).
    std::vector<ColumnState> states() const;
    /// Cumulative flow map alpha_k: label -> position.
    Permutation cumulative(int k) const;
    /// Per-step map beta_k: position at t_{k-1} -> position at t_k, k = 1..K.
    const Permutation& step_map(int k) const { return betas_.at(static_cast<std::size_t>(k - 1)); }
    const StepReport& report(int k) const { return reports_.at(static_cast<std::size_t>(k - 1)); }

    /// Snapshot index in effect at time t in [0, T).
    int index_at(double t) const;

    void append(StepResult result);

private:
    void replay(ColumnState& s, Vector& hat, int m) const;

    SaturationModel model_;
    ThetaBounds bounds_;
    SolverConfig solver_;
    double dt_;
    double T_;
    bool thin_;
    std::vector<ColumnState> snapshots_;
    std::vector<Permutation> betas_;
    std::vector<StepReport> reports_;
    std::vector<Permutation> cumulative_;
};

struct LagrangianPath {
    int label = 0;
    double s = 0.0;                  // conserved thetaM
    std::vector<double> position;    // z of the parcel at t_k
    std::vector<double> thetaHat;    // theta of the parcel at t_k
    std::vector<int> cell;           // 0-based position index at t_k

    double positive_variation() const;
    double total_variation() const;
};

/// Bounds on the box |w| <= max|thetaM|, z in [0,1], t in [0,T].
ThetaBounds bounds_for(const ColumnState& initial, const SaturationModel& model, double T,
                       const RunOptions& opts = {});

Trajectory run(const ColumnState& initial, const SaturationModel& model, double T, double dt,
               const RunOptions& opts = {});
/// Same as run() with bounds supplied by the caller.
Trajectory run(const ColumnState& initial, const SaturationModel& model, const ThetaBounds& bounds, double T,
               double dt, const RunOptions& opts = {});

/// F_t on grid cells: cell j is carried to cell flow_map(t)[j].
Permutation flow_map(const Trajectory& traj, double t);

std::vector<LagrangianPath> lagrangian_paths(const Trajectory& traj);

/// Position-indexed theta linearly interpolated in time between snapshots.
Vector interpolated_theta(const Trajectory& traj, double t);

}  // namespace moistcol
