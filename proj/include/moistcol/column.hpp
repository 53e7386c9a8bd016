#pragma once

#include "moistcol/saturation.hpp"
#include "moistcol/types.hpp"

namespace moistcol {

/// One discrete column at time t.
///
/// Position p (0-based) sits at z = (p+1)/n. theta and q are position-indexed, thetaM is
/// label-indexed and fixed at construction. `position` maps label -> position (the cumulative
/// flow map) and `label` is its inverse.
struct ColumnState {
    int n = 0;
    double t = 0.0;
    Vector theta;
    Vector q;
    Permutation position;
    Permutation label;
    Vector thetaM;

    /// Parcel j starts at position j. q is recomputed as thetaM - theta so that
    /// theta + q == thetaM holds by construction.
    static ColumnState initial(const Vector& theta, const Vector& q, double t0 = 0.0);
    static ColumnState from_moist(const Vector& theta, const Vector& thetaM, double t0 = 0.0);

    double z(int p) const { return grid_z(p, n); }
    double moist_at(int p) const { return thetaM[label[p]]; }
};

/// Monotone theta and q <= Q^sat(theta, z, t) + slack at every position.
/// Returns an empty string when admissible, otherwise a description of the first violation.
std::string describe_inadmissible(const ColumnState& state, const SaturationModel& model, double slack);

}  // namespace moistcol
