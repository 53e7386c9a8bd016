// Shared test data: worked examples and random admissible columns.
#pragma once

#include "moistcol/column.hpp"
#include "moistcol/saturation.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace fixtures {

using moistcol::ColumnState;
using moistcol::SaturationModel;
using moistcol::Vector;

inline SaturationModel worked_model() { return SaturationModel::linear(1.0, 0.5, 1.0, 0.2); }

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline ColumnState worked_n2() { return ColumnState::initial(vec({0.0, 0.1}), vec({0.5, 0.0})); }
inline ColumnState worked_n3() {
    return ColumnState::initial(vec({0.0, 0.05, 0.1}), vec({2.0 / 3.0, 0.358333, 0.0}));
}

struct RandomCase {
    double qstar, a, b, c;
    int n;
    std::vector<double> theta;
    std::vector<double> q;

    SaturationModel model() const { return SaturationModel::linear(qstar, a, b, c); }
    ColumnState state() const {
        Vector th = Eigen::Map<const Vector>(theta.data(), n);
        Vector qq = Eigen::Map<const Vector>(q.data(), n);
        return ColumnState::initial(th, qq);
    }
};

/// Linear model with a in [0.1,2], b in [0.5,2], c in [0,0.5]; sorted theta; each parcel either
/// exactly saturated or dry by a random deficit.
inline RandomCase random_case(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RandomCase rc;
    rc.n = n;
    rc.qstar = 0.5 + u(rng);
    rc.a = 0.1 + 1.9 * u(rng);
    rc.b = 0.5 + 1.5 * u(rng);
    rc.c = 0.5 * u(rng);
    rc.theta.resize(static_cast<std::size_t>(n));
    rc.q.resize(static_cast<std::size_t>(n));
    const double spread = 0.2 + 1.5 * u(rng);
    for (auto& x : rc.theta) x = spread * u(rng);
    std::sort(rc.theta.begin(), rc.theta.end());
    for (int p = 0; p < n; ++p) {
        const double z = static_cast<double>(p + 1) / n;
        const double th = rc.theta[static_cast<std::size_t>(p)];
        const double sat = rc.qstar + rc.a * th - rc.b * z;
        rc.q[static_cast<std::size_t>(p)] = u(rng) < 0.6 ? sat : sat - 0.3 * u(rng);
    }
    return rc;
}

inline std::mt19937_64 seeded(unsigned long long seed) { return std::mt19937_64(seed); }

}  // namespace fixtures
