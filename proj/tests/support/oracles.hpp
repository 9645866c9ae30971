#pragma once

// Test-only oracles, kept independent of the library implementation paths
// they check.

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

#include <freqtrack/drem.hpp>
#include <freqtrack/signal.hpp>

namespace oracles {

// Evaluate the chirp sample in extended precision so finite differences of
// high order stay above the rounding floor.
inline long double sample_ld(const freqtrack::SignalSpec& spec, long double t) {
    long double omega = spec.omega0;
    const auto& segs = spec.rate_segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const long double seg_end =
            (i + 1 < segs.size()) ? static_cast<long double>(segs[i + 1].t_start) : t;
        const long double upper = std::min(t, seg_end);
        if (upper <= static_cast<long double>(segs[i].t_start)) {
            break;
        }
        omega += static_cast<long double>(segs[i].beta) * (upper - segs[i].t_start);
    }
    return static_cast<long double>(spec.amplitude) *
           std::sin(omega * t + static_cast<long double>(spec.phase));
}

// 4th-order central finite differences of the sampled signal.
inline double fd_first(const freqtrack::SignalSpec& spec, double t, double h) {
    const long double hl = h;
    const long double tl = t;
    return static_cast<double>((-sample_ld(spec, tl + 2 * hl) + 8 * sample_ld(spec, tl + hl) -
                                8 * sample_ld(spec, tl - hl) + sample_ld(spec, tl - 2 * hl)) /
                               (12 * hl));
}

inline double fd_second(const freqtrack::SignalSpec& spec, double t, double h) {
    const long double hl = h;
    const long double tl = t;
    return static_cast<double>((-sample_ld(spec, tl + 2 * hl) + 16 * sample_ld(spec, tl + hl) -
                                30 * sample_ld(spec, tl) + 16 * sample_ld(spec, tl - hl) -
                                sample_ld(spec, tl - 2 * hl)) /
                               (12 * hl * hl));
}

inline double fd_third(const freqtrack::SignalSpec& spec, double t, double h) {
    const long double hl = h;
    const long double tl = t;
    return static_cast<double>(
        (-sample_ld(spec, tl + 3 * hl) + 8 * sample_ld(spec, tl + 2 * hl) -
         13 * sample_ld(spec, tl + hl) + 13 * sample_ld(spec, tl - hl) -
         8 * sample_ld(spec, tl - 2 * hl) + sample_ld(spec, tl - 3 * hl)) /
        (8 * hl * hl * hl));
}

// Independent dense 3x3 solve (Gaussian elimination with partial pivoting),
// used to cross-check the adjugate-based mixing. Returns nullopt when the
// matrix is numerically singular.
inline std::optional<freqtrack::Vec3> gaussian_solve3(const freqtrack::Mat3& a_in,
                                                      const freqtrack::Vec3& b_in) {
    std::array<std::array<double, 4>, 3> m{};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            m[i][j] = a_in[i][j];
        }
        m[i][3] = b_in[i];
    }
    for (std::size_t col = 0; col < 3; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < 3; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) {
                piv = r;
            }
        }
        if (std::abs(m[piv][col]) < 1e-14) {
            return std::nullopt;
        }
        std::swap(m[piv], m[col]);
        for (std::size_t r = col + 1; r < 3; ++r) {
            const double factor = m[r][col] / m[col][col];
            for (std::size_t j = col; j < 4; ++j) {
                m[r][j] -= factor * m[col][j];
            }
        }
    }
    freqtrack::Vec3 x{};
    for (int i = 2; i >= 0; --i) {
        const auto ui = static_cast<std::size_t>(i);
        double acc = m[ui][3];
        for (std::size_t j = ui + 1; j < 3; ++j) {
            acc -= m[ui][j] * x[j];
        }
        x[ui] = acc / m[ui][ui];
    }
    return x;
}

// Random single-segment chirp spec in the ranges the identity sweeps use.
inline freqtrack::SignalSpec random_spec(std::mt19937& rng) {
    std::uniform_real_distribution<double> amp(0.5, 5.0);
    std::uniform_real_distribution<double> ph(0.0, 6.283185307179586);
    std::uniform_real_distribution<double> om(0.5, 5.0);
    std::uniform_real_distribution<double> bt(-0.2, 0.2);
    freqtrack::SignalSpec spec;
    spec.amplitude = amp(rng);
    spec.phase = ph(rng);
    spec.omega0 = om(rng);
    spec.rate_segments = {{0.0, bt(rng)}};
    return spec;
}

inline freqtrack::SignalSpec paper_signal() {
    freqtrack::SignalSpec spec;
    spec.amplitude = 2.0;
    spec.phase = 1.0;
    spec.omega0 = 1.0;
    spec.rate_segments = {{0.0, 0.05}};
    return spec;
}

} // namespace oracles
