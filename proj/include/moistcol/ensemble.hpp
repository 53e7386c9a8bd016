/**
 * @file ensemble.hpp
 * @brief Finite-n measure-valued solutions: discretized random data, weighted runs, marginals.
 *
 * Initial data is a finite mixture of theta-profiles. For each profile, each cell i carries a
 * discrete law over thetaM atoms. An assignment sigma picks one atom per cell; its weight is the
 * profile weight times the product of the chosen atom probabilities.
 *
 * Moisture bins: K_j = [-K + 2K(j-1)/n, -K + 2Kj/n] for j = 1..n with right endpoint w_j. Mass
 * in K_j becomes an atom at w_j - C/n.
 */
#pragma once

#include "moistcol/simulate.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace moistcol {

struct Atom {
    double value = 0.0;
    double probability = 0.0;
};

using CellAtoms = std::vector<std::vector<Atom>>;  // [cell][atom]

struct ProfileEntry {
    double weight = 1.0;
    Vector theta;     // n nondecreasing values
    CellAtoms atoms;  // n cells
};

struct InitialEnsemble {
    int n = 0;
    double K = 0.0;
    std::optional<double> shiftC;  // unset for data given directly as atoms
    std::vector<ProfileEntry> profiles;
};

/// Single-profile, single-atom data whose atoms are exactly theta + q.
InitialEnsemble deterministic_ensemble(const ColumnState& state);

/// Values theta(z_i) at z_i = i/n; rejects non-monotone results.
Vector discretize_profile(const std::function<double(double)>& theta, int n);
/// `samples` is a step profile on its own uniform cells; evaluated at z_i = i/n.
Vector discretize_profile(const Vector& samples, int n);

/// Default C = 2K + supDzTheta/infDwTheta + 1. A requested C must exceed 2K + supDzTheta/infDwTheta.
double shift_constant(double K, const ThetaBounds& bounds, std::optional<double> requested = {});

/// Equal-mass (s, z) samples; z selects the cell J_i = [(i-1)/n, i/n).
CellAtoms discretize_conditional(const std::vector<std::pair<double, double>>& samples, int n, double K,
                                 double shiftC);

/// Per-cell masses on `bins` equal bins over [-K, K]; re-binned onto the n moisture bins.
struct CellHistogram {
    int cells = 0;
    int bins = 0;
    std::vector<double> mass;  // [cell * bins + bin]
};
CellHistogram load_histogram(const std::string& path, int cells, int bins);
CellAtoms discretize_conditional(const CellHistogram& hist, int n, double K, double shiftC);

struct AdmissibilityClause {
    std::string name;
    bool pass = true;
    std::string message;
};

/// Clauses: weights, monotone, probabilities, support, constraint, shift.
std::vector<AdmissibilityClause> check_admissibility(const InitialEnsemble& ens, const SaturationModel& model,
                                                     const ThetaBounds& bounds, const SolverConfig& cfg = {});
/// Builds the ensemble and throws ConfigError naming the first failing admissibility clause.
InitialEnsemble make_ensemble(int n, double K, std::optional<double> shiftC, std::vector<ProfileEntry> profiles,
                              const SaturationModel& model, const ThetaBounds& bounds, const SolverConfig& cfg = {});

struct Sigma {
    std::vector<int> choice;  // atom index per cell
    double probability = 0.0;
};

/// Product enumeration, first cell most significant. Throws ConfigError above `cap` assignments.
std::vector<Sigma> enumerate_sigmas(const InitialEnsemble& ens, int profile, std::uint64_t cap = 1000000);
/// Independent draws per cell; the stream depends only on (seed, profile).
std::vector<std::vector<int>> sample_sigmas(const InitialEnsemble& ens, int profile, int count, std::uint64_t seed);

/// Initial column for a profile and an assignment.
ColumnState member_state(const InitialEnsemble& ens, int profile, const std::vector<int>& choice);

struct EnsembleMode {
    enum class Kind { Exhaustive, MonteCarlo } kind = Kind::Exhaustive;
    std::uint64_t seed = 0;
    int samples = 10000;
    std::uint64_t cap = 1000000;
};

struct EnsembleMember {
    int profile = 0;
    std::vector<int> choice;
    double weight = 0.0;
    int multiplicity = 1;  // Monte Carlo draws merged into this member
    Trajectory trajectory;
};

struct EnsembleResult {
    EnsembleMode mode;
    int n = 0;
    double dt = 0.0;
    double T = 0.0;
    std::optional<double> shiftC;
    std::vector<EnsembleMember> runs;

    double total_weight() const;
};

/// Bounds on the box |w| <= max|atom|, shared by every member run.
ThetaBounds ensemble_bounds(const InitialEnsemble& ens, const SaturationModel& model, double T,
                            const RunOptions& opts = {});

/// One run per (profile, distinct sigma), merged in (profile, sigma lexicographic) order.
EnsembleResult run_ensemble(const InitialEnsemble& ens, const SaturationModel& model, double T, double dt,
                            const EnsembleMode& mode, const RunOptions& opts = {}, int threads = 1);

struct MarginalSample {
    double weight = 0.0;
    Vector theta;       // position-indexed profile at t
    Vector thetaM;      // label-indexed
    Permutation position;  // label (start cell) -> cell at t
};

struct EmpiricalMarginal {
    double t = 0.0;
    int n = 0;
    std::vector<MarginalSample> samples;
};

/// Snapshot in effect at t (floor(t/dt), so a step boundary shows the post-step state).
EmpiricalMarginal marginal(const EnsembleResult& res, double t);
/// Largest |mass at a cell - 1/n| of the weighted position distribution (normalised by total weight).
double position_marginal_deviation(const EmpiricalMarginal& m);

struct Observable {
    enum class Kind { ThetaAt, ThetaMAt, FlowAt, ProfileL2 } kind = Kind::ThetaAt;
    double z = 0.5;
};

Observable parse_observable(const std::string& name, double z);
std::string observable_name(const Observable& obs);

/// Weighted values of a scalar observable (ConfigError for ProfileL2).
std::vector<std::pair<double, double>> observe(const EmpiricalMarginal& m, const Observable& obs);

/// Exact W1 between two weighted discrete laws on the line.
double wasserstein1(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b);
/// W1 of the observable pushforwards; ProfileL2 solves the transport problem with L2 ground cost.
double marginal_distance(const EmpiricalMarginal& a, const EmpiricalMarginal& b, const Observable& obs);
/// 3-sigma bound on W1 between an N-sample empirical law and `reference`: sum 3 sqrt(F(1-F)/N) dx.
double mc_tolerance(const EmpiricalMarginal& reference, const Observable& obs, int samples);

}  // namespace moistcol
