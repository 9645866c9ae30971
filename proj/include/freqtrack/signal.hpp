#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace freqtrack {

/// One piece of the piecewise-constant frequency-rate schedule: from
/// t_start onward (until the next segment) the instantaneous frequency
/// changes at beta rad/s^2.
struct RateSegment {
    double t_start; // seconds
    double beta;    // rad/s^2
};

/// Ground-truth chirp description: y(t) = amplitude * sin(omega(t)*t + phase)
/// where omega(t) is continuous, piecewise-linear, omega(0) = omega0 and
/// d(omega)/dt = rate_segments[i].beta on [t_i, t_{i+1}).
struct SignalSpec {
    double amplitude = 1.0;
    double phase = 0.0;   // radians
    double omega0 = 1.0;  // rad/s
    std::vector<RateSegment> rate_segments{{0.0, 0.0}};

    void validate() const {
        if (!(amplitude > 0.0)) {
            throw std::invalid_argument("SignalSpec: amplitude must be > 0");
        }
        if (rate_segments.empty()) {
            throw std::invalid_argument("SignalSpec: rate_segments must be non-empty");
        }
        if (rate_segments.front().t_start != 0.0) {
            throw std::invalid_argument("SignalSpec: first rate segment must start at t = 0");
        }
        for (std::size_t i = 1; i < rate_segments.size(); ++i) {
            if (!(rate_segments[i].t_start > rate_segments[i - 1].t_start)) {
                throw std::invalid_argument("SignalSpec: segment start times must be strictly increasing");
            }
        }
        for (const auto& seg : rate_segments) {
            if (!std::isfinite(seg.t_start) || !std::isfinite(seg.beta)) {
                throw std::invalid_argument("SignalSpec: non-finite segment entry");
            }
        }
        if (!std::isfinite(amplitude) || !std::isfinite(phase) || !std::isfinite(omega0)) {
            throw std::invalid_argument("SignalSpec: non-finite field");
        }
    }

    /// Index of the segment active at time t (right-continuous at switches).
    std::size_t segment_index(double t) const {
        std::size_t i = rate_segments.size() - 1;
        while (i > 0 && rate_segments[i].t_start > t) {
            --i;
        }
        return i;
    }

    /// Rate beta active at time t.
    double beta_at(double t) const { return rate_segments[segment_index(t)].beta; }
};

/// Instantaneous frequency omega(t) = omega0 + integral of beta, evaluated
/// closed-form segment by segment. Continuous across segment switches.
inline double omega_true(const SignalSpec& spec, double t) {
    if (t < 0.0) {
        throw std::domain_error("omega_true: t must be >= 0");
    }
    double omega = spec.omega0;
    const auto& segs = spec.rate_segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const double seg_end = (i + 1 < segs.size()) ? segs[i + 1].t_start : t;
        const double upper = std::min(t, seg_end);
        if (upper <= segs[i].t_start) {
            break;
        }
        omega += segs[i].beta * (upper - segs[i].t_start);
    }
    return omega;
}

/// Measured signal sample y(t) = A*sin(omega(t)*t + phase). The phase
/// argument is literally omega(t)*t + phase (not the integral of omega), so
/// within one segment the argument is quadratic in t.
inline double sample(const SignalSpec& spec, double t) {
    if (t < 0.0) {
        throw std::domain_error("sample: t must be >= 0");
    }
    return spec.amplitude * std::sin(omega_true(spec, t) * t + spec.phase);
}

/// y and its first three time derivatives in closed form.
struct Derivatives {
    double y;
    double yd1;
    double yd2;
    double yd3;
};

/// Closed-form derivatives of y(t) = A*sin(theta), theta = omega(t)*t + phase.
/// With s = omega + beta*t (so s = d(theta)/dt and ds/dt = 2*beta):
///   yd1 = A cos(theta) s
///   yd2 = -A sin(theta) s^2 + 2 beta A cos(theta)
///   yd3 = -A cos(theta) s^3 - 6 beta A sin(theta) s
/// Undefined at segment switch instants where beta jumps.
inline Derivatives analytic_derivatives(const SignalSpec& spec, double t) {
    if (t < 0.0) {
        throw std::domain_error("analytic_derivatives: t must be >= 0");
    }
    for (std::size_t i = 1; i < spec.rate_segments.size(); ++i) {
        if (t == spec.rate_segments[i].t_start) {
            throw std::domain_error("analytic_derivatives: t is at a rate-segment boundary");
        }
    }
    const double A = spec.amplitude;
    const double omega = omega_true(spec, t);
    const double beta = spec.beta_at(t);
    const double theta = omega * t + spec.phase;
    const double s = omega + beta * t;
    const double sin_th = std::sin(theta);
    const double cos_th = std::cos(theta);
    Derivatives d;
    d.y = A * sin_th;
    d.yd1 = A * cos_th * s;
    d.yd2 = -A * sin_th * s * s + 2.0 * beta * A * cos_th;
    d.yd3 = -A * cos_th * s * s * s - 6.0 * beta * A * sin_th * s;
    return d;
}

/// Residual of the third-derivative identity
///   yd3 = -beta^2 t^2 yd1 - 6 beta^2 t y - 2 beta omega t yd1 - 6 beta omega y - omega^2 yd1
/// with omega the instantaneous omega(t). Algebraically zero; the returned
/// value reflects rounding only (|residual| <= 1e-9 * (1 + |yd3|)).
inline double check_eq4(const SignalSpec& spec, double t) {
    const Derivatives d = analytic_derivatives(spec, t);
    const double omega = omega_true(spec, t);
    const double beta = spec.beta_at(t);
    const double rhs = -beta * beta * t * t * d.yd1 - 6.0 * beta * beta * t * d.y -
                       2.0 * beta * omega * t * d.yd1 - 6.0 * beta * omega * d.y -
                       omega * omega * d.yd1;
    return d.yd3 - rhs;
}

} // namespace freqtrack
