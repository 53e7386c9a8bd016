/**
 * @file saturation.hpp
 * @brief Saturation moisture Q^sat(theta, z, t), its implicit inverse, and derived bounds.
 *
 * The saturation constraint q <= Q^sat(theta, z, t) is equivalent to
 * theta >= Theta(theta + q, z, t), where Theta(w, z, t) solves
 *
 *   theta + Q^sat(theta, z, t) = w.
 *
 * Q^sat must be strictly increasing in theta and strictly decreasing in z.
 */
#pragma once

#include "moistcol/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace moistcol {

/// Regular tensor-product table of Q^sat samples, trilinearly interpolated.
struct SaturationTable {
    std::vector<double> theta;  // strictly increasing axes
    std::vector<double> z;
    std::vector<double> t;
    std::vector<double> q;      // q[(i_theta * nz + i_z) * nt + i_t]

    double at(std::size_t it, std::size_t iz, std::size_t itt) const {
        return q[(it * z.size() + iz) * t.size() + itt];
    }
};

/// Parse a CSV with header columns theta,z,t,q covering a full tensor grid.
SaturationTable load_saturation_table(const std::string& path);

class SaturationModel {
public:
    enum class Kind { LinearBuiltin, UserTabulated };

    /// Q^sat = qstar + a*theta - b*z - c*t. Requires a > 0, b > 0, c >= 0.
    static SaturationModel linear(double qstar, double a, double b, double c);
    /// Validated on its nodes: strictly increasing along theta, strictly decreasing along z.
    static SaturationModel tabulated(SaturationTable table);

    Kind kind() const { return kind_; }
    double qstar() const { return qstar_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    const SaturationTable* table() const { return table_.get(); }

    /// Unchecked evaluation (z is not range-checked).
    double operator()(double theta, double z, double t) const;

private:
    SaturationModel() = default;
    double interpolate(double theta, double z, double t) const;

    Kind kind_ = Kind::LinearBuiltin;
    double qstar_ = 0.0, a_ = 0.0, b_ = 0.0, c_ = 0.0;
    std::shared_ptr<const SaturationTable> table_;
};

struct DomainBox {
    double wMax = 1.0;  // bound on |theta^M|
    double T = 1.0;
};

struct ThetaBounds {
    double infDzTheta = 0.0;
    double supDzTheta = 0.0;
    double supDtTheta = 0.0;
    double infDwTheta = 0.0;
    double supAbsTheta = 0.0;
    double cfl = 0.0;  // supDtTheta / infDzTheta
};

struct SolverConfig {
    double tolerance = 1e-12;
    int maxIter = 200;
};

/// Q^sat with z range-checked against [0,1] (slack 1e-12); z is clamped into the interval.
double eval_qsat(const SaturationModel& model, double theta, double z, double t);

/// Theta(w, z, t) by bracketed bisection; |result - Theta| <= cfg.tolerance.
double theta_inverse(const SaturationModel& model, double w, double z, double t,
                     const SolverConfig& cfg = {});

/// Exact for the linear family; centered differences on a `gridResolution`^3 grid otherwise.
ThetaBounds compute_bounds(const SaturationModel& model, const DomainBox& box, int gridResolution = 64,
                           const SolverConfig& cfg = {});

/// Largest admissible step 1/(2 cfl n); falls back to T/n when cfl == 0.
double max_timestep(const ThetaBounds& bounds, int n, double T);

/// Slack on q <= Q^sat accounting for the inversion tolerance: 2 tol (1 + sup dQ/dtheta).
inline double saturation_slack(const ThetaBounds& bounds, const SolverConfig& cfg) {
    return 2.0 * cfg.tolerance / bounds.infDwTheta;
}

}  // namespace moistcol
