/**
 * @file verify.hpp
 * @brief Executable checks of the discrete estimates on recorded trajectories.
 *
 * Checks with an explicit constant (per-jump inequality, positive variation, dry persistence,
 * overtake count) are hard bounds. For the remaining estimates the sup ratio is measured and
 * reported as C4, C5, C6; a finite cap can be configured, otherwise only finiteness is required.
 */
#pragma once

#include "moistcol/simulate.hpp"

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace moistcol {

struct CheckLocation {
    int label = -1;
    int step = -1;   // snapshot index
    int level = -1;  // cascade level within the step
    double t = std::numeric_limits<double>::quiet_NaN();
};

struct CheckReport {
    std::string name;
    bool pass = true;
    long evaluated = 0;  // number of cases examined
    CheckLocation worst;
    std::map<std::string, double> constants;
    std::map<std::string, double> tolerances;
    std::string message;

    /// Records a failure; the first failure fixes the location and message.
    void fail(const CheckLocation& where, const std::string& why);
};

struct VerifyOptions {
    double jumpTolerance = 1e-9;          // per-jump inequality and PV bound
    double c4Cap = std::numeric_limits<double>::infinity();
    double c5Cap = std::numeric_limits<double>::infinity();
    double c6Cap = std::numeric_limits<double>::infinity();
    int exhaustiveOvertakeMax = 64;       // n above this samples (k, l) pairs
    int overtakeSamples = 4096;
    unsigned long long seed = 0x5eed;
    int energyExhaustiveMax = 8;
};

CheckReport check_step_invariants(const Trajectory& traj);
CheckReport check_jump_structure(const Trajectory& traj);
CheckReport check_overtake(const Trajectory& traj, const VerifyOptions& opts = {});
CheckReport check_tv(const Trajectory& traj, const VerifyOptions& opts = {});
/// Empty `epsilons` uses the grid dt, 2dt, 4dt, ... up to T/4.
CheckReport check_dry_persistence(const Trajectory& traj, std::vector<double> epsilons = {});
CheckReport check_increment_formula(const Trajectory& traj, const VerifyOptions& opts = {},
                                    std::vector<double> epsilons = {});
CheckReport check_continuity(const Trajectory& traj, const VerifyOptions& opts = {});
CheckReport check_energy(const Trajectory& traj, const VerifyOptions& opts = {});

/// Per-label sequences on the snapshot grid: f_k = theta-hat, g_k = Theta(s, z of the label, t_k).
/// The wet set is {k : |f_k - g_k| <= tol}.
struct WetnessPath {
    int label = 0;
    double s = 0.0;
    std::vector<double> t;
    std::vector<double> f;
    std::vector<double> g;
};

std::vector<WetnessPath> wetness_paths(const Trajectory& traj);
/// Tolerance for a trajectory: 2 * solver tolerance + supDtTheta * dt.
double wet_tolerance(const Trajectory& traj);
/// Throws ConfigError if f decreases. `dgCap` bounds increments of g on dry stretches.
CheckReport check_wet_measure(const WetnessPath& path, double tol, double dgCap);
CheckReport check_wet_measure(const Trajectory& traj);

/// All trajectory checks in a fixed order; `threads` > 1 evaluates them concurrently.
std::vector<CheckReport> run_all_checks(const Trajectory& traj, const VerifyOptions& opts = {}, int threads = 1);

/// E = -(1/n) sum_p z_p theta_p.
double energy(const Vector& theta);

struct EnergyCertificate {
    double energy = 0.0;
    double minimum = 0.0;
    bool minimal = false;
    bool exhaustive = false;  // false: certified via sortedness instead of enumeration
    long permutations = 0;
};

/// Exhaustive search over all orderings for n <= exhaustiveMax.
EnergyCertificate certify_minimal(const Vector& theta, int exhaustiveMax = 8);

/// Exact L1 distance on [0,1] between two cell profiles of possibly different lengths.
double profile_l1(const Vector& a, const Vector& b);

}  // namespace moistcol
