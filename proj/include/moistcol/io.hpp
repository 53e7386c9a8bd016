/**
 * @file io.hpp
 * @brief Run configuration and file formats.
 *
 * Files use 1-based position indices and labels; doubles are written with 17 significant
 * digits so every value round-trips exactly.
 *
 * Trajectory JSON-lines: one header object (model, n, dt, T, bounds, solver, thetaM), then one
 * object per snapshot with theta, q, position (label -> position) and, from k = 1, the step report.
 */
#pragma once

#include "moistcol/ensemble.hpp"
#include "moistcol/verify.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace moistcol {

using Json = nlohmann::json;

/// Piecewise-linear function through (z, v) nodes, constant outside the node range.
struct PiecewiseLinear {
    std::vector<double> z;
    std::vector<double> v;
    double operator()(double x) const;
};

/// How moisture is assigned to a continuum profile at each resolution.
struct MoistureRule {
    enum class Kind { Saturated, Deficit, Explicit } kind = Kind::Saturated;
    double deficit = 0.0;   // q = Q^sat - deficit
    PiecewiseLinear q;      // explicit q(z)
};

struct InitialConfig {
    enum class Kind { Deterministic, Continuum, Ensemble } kind = Kind::Deterministic;
    // Deterministic
    Vector theta, q;
    // Continuum (also the profile source for re-discretised ensembles)
    PiecewiseLinear profile;
    MoistureRule moisture;
    // Ensemble
    Json ensemble;  // raw block, resolved per n by build_ensemble()
};

struct NumericsConfig {
    int n = 0;                 // required for continuum and ensemble data
    double T = 1.0;
    std::optional<double> dt;  // unset: largest admissible step
    std::uint64_t seed = 0;
    EnsembleMode::Kind mode = EnsembleMode::Kind::Exhaustive;
    int samples = 10000;
    std::uint64_t cap = 1000000;
    SolverConfig solver;
    int gridResolution = 64;
    bool validate = true;
    bool thin = false;
    int threads = 1;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "jsonl"};
    int stride = 1;                     // CSV snapshot stride; JSON-lines always keeps every step
    std::vector<double> marginalTimes;  // default: 0 and T/2
};

struct ConvergeConfig {
    std::vector<int> nList{8, 16, 32, 64};
    std::vector<double> times;  // default: 8 evenly spaced times in [0, T)
    std::vector<std::string> observables{"theta", "thetaM", "flow"};
    double z = 0.5;
};

struct RunConfig {
    Json modelBlock;
    SaturationModel model = SaturationModel::linear(1.0, 0.5, 1.0, 0.0);
    InitialConfig initial;
    NumericsConfig numerics;
    OutputConfig output;
    ConvergeConfig converge;
    VerifyOptions verify;
};

/// Relative table paths resolve against `baseDir`.
SaturationModel model_from_json(const Json& j, const std::string& baseDir = ".");
Json model_to_json(const SaturationModel& model);

RunConfig parse_config(const Json& j, const std::string& baseDir = ".");
RunConfig load_config(const std::string& path);

/// Deterministic or continuum initial data at resolution n (continuum ignores n == 0).
ColumnState build_initial(const RunConfig& cfg, const SaturationModel& model, int n);
/// Ensemble data at resolution n; deterministic and continuum data give a Dirac ensemble.
InitialEnsemble build_ensemble(const RunConfig& cfg, const SaturationModel& model, int n, double T,
                               const std::string& baseDir = ".");

/// Resolved step: configured dt or max_timestep().
double resolve_dt(const NumericsConfig& num, const ThetaBounds& bounds, int n);

Json bounds_to_json(const ThetaBounds& b);
ThetaBounds bounds_from_json(const Json& j);
Json report_to_json(const StepReport& r);
StepReport report_from_json(const Json& j);
Json check_to_json(const CheckReport& r);

void write_trajectory_csv(const Trajectory& traj, std::ostream& out, int stride = 1);
void write_trajectory_jsonl(const Trajectory& traj, std::ostream& out);
Trajectory read_trajectory_jsonl(std::istream& in, const std::string& baseDir = ".");
Trajectory read_trajectory_jsonl(const std::string& path);

}  // namespace moistcol
