/**
 * @file rearrange.hpp
 * @brief One time step of the parcel-rearrangement cascade.
 *
 * A step from t to t + dt visits levels k = n-1, ..., 0 (0-based positions). At each level
 * the wet set W_k and the eligible set W'_k are formed, and the eligible parcel with the
 * largest conserved thetaM is lifted to position k, where its theta becomes
 * Theta(thetaM, z_k, t + dt). Parcels between its old position and k shift down by one.
 *
 * Comparisons against Theta use the forward map phi(x) = x + Q^sat(x, z, t), which is
 * strictly increasing, so that `x < Theta(w, z, t)` is evaluated as `phi(x) < w` without a
 * root solve:
 *   - position p is wet when phi(theta_p + tol) < thetaM_p  (theta_p < Theta - tol),
 *   - a dry parcel at p is beaten by moisture w when phi(theta_p) < w.
 */
#pragma once

#include "moistcol/column.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace moistcol {

/// What happened at one level of the cascade. Levels with an empty wet set are not recorded.
struct LevelRecord {
    int k = 0;
    std::vector<int> wet;       // positions; empty when set recording is off
    std::vector<int> eligible;  // positions; empty when set recording is off
    int jumperLabel = -1;       // -1 when no parcel moves to k
    int jumperFrom = -1;        // position the jumper came from
    double thetaBefore = 0.0;   // jumper theta before the lift
    double thetaAfter = 0.0;    // Theta(thetaM, z_k, t + dt)
};

struct LabelFlags {
    bool lifted = false;
    int liftTarget = -1;
    bool pushedDown = false;
    int lifts = 0;
};

struct StepReport {
    double t = 0.0;      // start of the step
    double tNext = 0.0;  // end of the step
    std::vector<LevelRecord> levels;
    std::vector<LabelFlags> labels;

    int jump_count() const;
};

/// Four-point invariant residuals measured between the states before and after a step.
struct StepResiduals {
    double monotoneViolation = 0.0;     // max(theta[p] - theta[p+1], 0)
    double conservationResidual = 0.0;  // max |theta + q - thetaM| per label
    double thetaHatDecrease = 0.0;      // max(before - after, 0) per label
    double saturationExcess = 0.0;      // max(q - Q^sat(theta, z, tNext), 0)
    bool labelsBijective = true;
    int worstLabel = -1;
    int worstPosition = -1;
};

struct StepTolerances {
    double monotone = 1e-12;
    double conservation = 1e-12;
    double thetaHat = 1e-12;
    double saturation = 0.0;  // filled from saturation_slack()
};

StepResiduals measure_step(const ColumnState& before, const ColumnState& after, const SaturationModel& model);
/// Empty on success; otherwise names the violated point.
std::string first_violation(const StepResiduals& r, const StepTolerances& tol);

class StepInvariantError : public std::runtime_error {
public:
    StepInvariantError(const std::string& what, StepReport report)
        : std::runtime_error(what), report_(std::move(report)) {}
    const StepReport& report() const { return report_; }

private:
    StepReport report_;
};

struct StepOptions {
    SolverConfig solver;
    bool validate = true;
    bool recordSets = true;
};

struct StepResult {
    ColumnState state;
    Permutation beta;  // position at t -> position at t + dt
    StepReport report;
};

/// Positions p with theta_p < Theta(thetaM_p, z_p, tNext) - tol.
std::vector<int> wet_set(const ColumnState& state, const SaturationModel& model, double tNext,
                         const SolverConfig& cfg = {});

/// Wet positions at or below k that beat every parcel in (j0, k], plus any wet position above k.
std::vector<int> eligible_set(const ColumnState& state, const SaturationModel& model, double tNext, int k,
                              const std::vector<int>& wet);

/// Eligible position with maximal thetaM; ties go to the largest position.
std::optional<int> select_jumper(const ColumnState& state, const std::vector<int>& eligible);

/// Lift the parcel at `jstar` to k and shift (jstar, k] down by one. Mutates `state`.
LevelRecord apply_jump(ColumnState& state, const SaturationModel& model, int k, int jstar, double tNext,
                       const SolverConfig& cfg = {});

/// Full cascade from state.t to state.t + dt.
StepResult step(const ColumnState& state, const SaturationModel& model, double dt, const StepOptions& opts = {});
/// Same as step() with an explicit end time (avoids accumulating t += dt).
StepResult step_to(const ColumnState& state, const SaturationModel& model, double tNext,
                   const StepOptions& opts = {});

}  // namespace moistcol
