#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "regressor.hpp"

namespace freqtrack {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/// The three stacked channel regressions at one instant: z = psi * sigma
/// with sigma = (beta^2, beta*omega, omega^2) unknown. Row i comes from the
/// channel with lambda_i, in declared order.
struct RegressionSnapshot {
    Vec3 z{};
    Mat3 psi{};
    double t = 0.0;
};

/// Determinant delta = det(psi) and mixed vector y_mixed = adj(psi) * z.
/// Each component satisfies delta * sigma_i = y_mixed_i without any
/// division, so a vanishing determinant is harmless.
struct DremOutput {
    double delta = 0.0;
    Vec3 y_mixed{};
    double t = 0.0;
};

inline double det3(const Mat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Transpose of the cofactor matrix; adjugate3(m) * m = det3(m) * I.
inline Mat3 adjugate3(const Mat3& m) {
    Mat3 a;
    a[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    a[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    a[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    a[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    a[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    a[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    a[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    a[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    a[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    return a;
}

/// Stack three channel outputs (identical timestamps required) into one
/// 3x3 regression snapshot.
inline RegressionSnapshot stack(const ChannelOutputs& c1, const ChannelOutputs& c2,
                                const ChannelOutputs& c3) {
    if (c1.t != c2.t || c1.t != c3.t) {
        throw std::runtime_error("stack: channel timestamps do not match");
    }
    RegressionSnapshot s;
    s.z = {c1.z, c2.z, c3.z};
    s.psi = {{{c1.psi1, c1.psi2, c1.psi3}, {c2.psi1, c2.psi2, c2.psi3}, {c3.psi1, c3.psi2, c3.psi3}}};
    s.t = c1.t;
    return s;
}

/// Mix the stacked system into three decoupled scalar regressions
/// delta * sigma_i = y_mixed_i. Never divides by delta; a singular psi just
/// yields delta = 0 with finite y_mixed.
inline DremOutput mix(const RegressionSnapshot& snapshot) {
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(snapshot.z[static_cast<std::size_t>(i)])) {
            throw std::runtime_error("mix: non-finite z entry");
        }
        for (int j = 0; j < 3; ++j) {
            if (!std::isfinite(snapshot.psi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])) {
                throw std::runtime_error("mix: non-finite psi entry");
            }
        }
    }
    DremOutput out;
    out.delta = det3(snapshot.psi);
    const Mat3 adj = adjugate3(snapshot.psi);
    for (std::size_t i = 0; i < 3; ++i) {
        out.y_mixed[i] = adj[i][0] * snapshot.z[0] + adj[i][1] * snapshot.z[1] + adj[i][2] * snapshot.z[2];
    }
    out.t = snapshot.t;
    return out;
}

} // namespace freqtrack
