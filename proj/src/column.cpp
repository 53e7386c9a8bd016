#include "moistcol/column.hpp"

#include <sstream>

namespace moistcol {

ColumnState ColumnState::initial(const Vector& theta, const Vector& q, double t0) {
    if (theta.size() != q.size()) throw ConfigError("theta and q must have the same length");
    return from_moist(theta, theta + q, t0);
}

ColumnState ColumnState::from_moist(const Vector& theta, const Vector& thetaM, double t0) {
    if (theta.size() < 1) throw ConfigError("column needs at least one parcel");
    if (theta.size() != thetaM.size()) throw ConfigError("theta and thetaM must have the same length");
    ColumnState s;
    s.n = static_cast<int>(theta.size());
    s.t = t0;
    s.theta = theta;
    s.thetaM = thetaM;
    s.q = thetaM - theta;
    s.position = Permutation::identity(s.n);
    s.label = Permutation::identity(s.n);
    return s;
}

std::string describe_inadmissible(const ColumnState& state, const SaturationModel& model, double slack) {
    std::ostringstream msg;
    msg.precision(17);
    for (int p = 0; p + 1 < state.n; ++p)
        if (state.theta[p] > state.theta[p + 1]) {
            msg << "theta decreases between positions " << p << " and " << p + 1;
            return msg.str();
        }
    for (int p = 0; p < state.n; ++p) {
        const double cap = eval_qsat(model, state.theta[p], state.z(p), state.t);
        if (state.q[p] > cap + slack) {
            msg << "q exceeds saturation at position " << p << ": q=" << state.q[p] << " > Qsat=" << cap;
            return msg.str();
        }
    }
    return {};
}

}  // namespace moistcol
