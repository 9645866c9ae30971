#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

namespace freqtrack {

struct EstimatorConfig {
    double gamma = 1e5;          // beta^2-loop adaptation gain
    double gamma2 = 1e5;         // omega-loop adaptation gain
    double epsilon_w = 1e-6;     // threshold on 1-w before finite-time division
    double epsilon_sign = 1e-3;  // relative deadzone for sign recovery
    // Alternative auxiliary-generator pair (w1 rate not squared in beta_hat,
    // w2 forced by w1 alone). Kept for comparison; the default pair is the
    // one that makes the finite-time frequency reconstruction exact.
    bool use_printed_aux_generators = false;

    void validate() const {
        if (!(gamma > 0.0) || !(gamma2 > 0.0)) {
            throw std::invalid_argument("EstimatorConfig: gamma and gamma2 must be > 0");
        }
        if (!(epsilon_w > 0.0) || !(epsilon_w < 1.0)) {
            throw std::invalid_argument("EstimatorConfig: epsilon_w must be in (0, 1)");
        }
        if (!(epsilon_sign > 0.0)) {
            throw std::invalid_argument("EstimatorConfig: epsilon_sign must be > 0");
        }
    }
};

struct EstimatorState {
    double beta2_hat = 0.0;
    double w = 1.0;        // e^(-gamma * int delta^2), decays from 1
    double omega_hat = 0.0;
    double w1 = 1.0;       // observer forgetting scalar, starts when beta_hat exists
    double w2 = 0.0;       // observer feed-forward accumulator
    double beta2_hat_init = 0.0; // beta2_hat at the start of the current window
    double omega_hat_ref = 0.0;  // omega_hat when the observer started
    bool observer_started = false;
    int sign = 0; // last decided sign of beta; 0 = undecided so far
    // running mean-square trackers for the sign deadzone
    double sum_sq_delta = 0.0;
    double sum_sq_y2 = 0.0;
    long n_sign_samples = 0;
};

/// Online estimator for the decoupled scalar regressions
///   delta * beta2 = y1   and   delta * beta * omega = y2.
///
/// beta2 is tracked by a gradient loop whose error contracts by
/// e^(-gamma*delta^2*dt) per step; the same factor drives the forgetting
/// scalar w, so beta2 is recovered exactly (in continuous time) by the
/// finite-time quotient (beta2_hat - beta2_hat(0)*w)/(1-w) as soon as w has
/// moved away from 1. The frequency observer integrates
///   d(omega_hat)/dt = beta_hat + gamma2*delta*beta_hat*(y2 - delta*beta_hat*omega_hat)
/// and its own finite-time reconstruction uses the auxiliary pair
///   d(w1)/dt = -a*w1,  d(w2)/dt = -a*w2 + beta_hat*w1,  a = gamma2*delta^2*beta_hat^2,
/// the unique pair for which omega_hat - w1*omega_hat(0) - w2 - (1-w1)*omega
/// obeys de/dt = -a*e with e(0) = 0, making the quotient exact.
///
/// All scalar updates are per-step exact solutions of the frozen-coefficient
/// ODEs, unconditionally stable for any gain.
class Estimator {
public:
    explicit Estimator(const EstimatorConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

    const EstimatorConfig& config() const { return cfg_; }
    const EstimatorState& state() const { return st_; }

    /// Seed the gradient loop before the first step. The finite-time quotient
    /// is exact for any initial value; the default is the neutral 0.
    void set_initial_beta2(double beta2) {
        require_finite(beta2, 0.0, 1.0);
        st_.beta2_hat = beta2;
        st_.beta2_hat_init = beta2;
    }

    /// Seed the frequency observer before it starts.
    void set_initial_omega(double omega) {
        require_finite(omega, 0.0, 1.0);
        st_.omega_hat = omega;
        st_.omega_hat_ref = omega;
    }

    /// One pipeline step: gradient + forgetting update, sign tracking, then
    /// the frequency observer gated on beta_hat availability.
    void step(double delta, double y1, double y2, double dt) {
        step_beta2(delta, y1, dt);
        const int s = sign_beta(delta, y2);
        if (s != 0) {
            st_.sign = s;
        }
        step_omega(delta, y2, beta_hat(), dt);
    }

    /// Advance beta2_hat and w by the exact frozen-coefficient solution over
    /// one step. With delta = 0 nothing moves (no excitation).
    void step_beta2(double delta, double y1, double dt) {
        require_finite(delta, y1, dt);
        if (delta == 0.0) {
            return;
        }
        const double x = cfg_.gamma * delta * delta * dt;
        const double em1 = -std::expm1(-x); // 1 - e^(-x), accurate for small x
        const double f = 1.0 - em1;
        // beta2+ = f*beta2 + (1-f)*(y1/delta), arranged so a vanishing delta
        // never reaches a division
        st_.beta2_hat += (em1 / delta) * y1 - em1 * st_.beta2_hat;
        st_.w *= f;
        if (!std::isfinite(st_.beta2_hat)) {
            throw std::runtime_error("Estimator: beta2 update produced non-finite value");
        }
    }

    /// Finite-time beta^2: available once 1-w exceeds epsilon_w.
    std::optional<double> ft_beta2() const {
        const double denom = 1.0 - st_.w;
        if (!(denom > cfg_.epsilon_w)) {
            return std::nullopt;
        }
        return (st_.beta2_hat - st_.beta2_hat_init * st_.w) / denom;
    }

    /// Instantaneous sign decision sign(delta)*sign(y2), with a relative
    /// deadzone: a factor whose magnitude is below epsilon_sign times its
    /// running RMS counts as zero and the decision is withheld. Also feeds
    /// the RMS trackers, so call once per sample.
    int sign_beta(double delta, double y2) {
        require_finite(delta, y2, 1.0);
        st_.sum_sq_delta += delta * delta;
        st_.sum_sq_y2 += y2 * y2;
        st_.n_sign_samples += 1;
        const double n = static_cast<double>(st_.n_sign_samples);
        const double rms_delta = std::sqrt(st_.sum_sq_delta / n);
        const double rms_y2 = std::sqrt(st_.sum_sq_y2 / n);
        if (std::abs(delta) <= cfg_.epsilon_sign * rms_delta || std::abs(y2) <= cfg_.epsilon_sign * rms_y2) {
            return 0;
        }
        const int s_delta = delta > 0.0 ? 1 : -1;
        const int s_y2 = y2 > 0.0 ? 1 : -1;
        return s_delta * s_y2;
    }

    /// sqrt(ft_beta2) with the recovered sign; small negative ft values from
    /// discretization clamp to zero. Unavailable until both the finite-time
    /// value exists and a sign has ever been decided.
    std::optional<double> beta_hat() const {
        const auto ft = ft_beta2();
        if (!ft || st_.sign == 0) {
            return std::nullopt;
        }
        return std::sqrt(std::max(0.0, *ft)) * static_cast<double>(st_.sign);
    }

    /// Advance the frequency observer and its auxiliary generators. Before
    /// beta_hat exists the observer holds (zero feed-forward, zero gain) and
    /// the w1/w2 clocks do not run; they start, and the reference value of
    /// omega_hat is recorded, on the first step with beta_hat available.
    void step_omega(double delta, double y2, std::optional<double> beta_hat_now, double dt) {
        require_finite(delta, y2, dt);
        if (!st_.observer_started) {
            if (!beta_hat_now) {
                return;
            }
            st_.observer_started = true;
            st_.omega_hat_ref = st_.omega_hat;
            st_.w1 = 1.0;
            st_.w2 = 0.0;
        }
        const double b = beta_hat_now.value_or(0.0);
        const double a = cfg_.gamma2 * delta * delta * b * b;
        const double x = a * dt;
        const double em1 = -std::expm1(-x);
        const double f = 1.0 - em1;
        const double phi1 = x > 0.0 ? em1 / x : 1.0; // (1 - e^(-x))/x, -> 1 as x -> 0
        const double forcing = b + cfg_.gamma2 * delta * b * y2;
        st_.omega_hat = f * st_.omega_hat + dt * phi1 * forcing;

        if (!cfg_.use_printed_aux_generators) {
            // d(w2)/dt = -a*w2 + b*w1 with w1 decaying at the same rate a has
            // the exact one-step solution f*(w2 + b*w1*dt)
            const double w1_old = st_.w1;
            st_.w1 = f * w1_old;
            st_.w2 = f * (st_.w2 + b * w1_old * dt);
        } else {
            const double w1_old = st_.w1;
            st_.w1 = std::exp(-cfg_.gamma2 * delta * delta * b * dt) * w1_old;
            st_.w2 = f * st_.w2 + dt * phi1 * w1_old;
        }
        if (!std::isfinite(st_.omega_hat) || !std::isfinite(st_.w1) || !std::isfinite(st_.w2)) {
            throw std::runtime_error("Estimator: omega update produced non-finite value");
        }
    }

    /// Finite-time frequency: available once the observer runs (i.e. it has
    /// been stepped with beta_hat in hand) and 1-w1 exceeds epsilon_w.
    std::optional<double> ft_omega() const {
        if (!st_.observer_started) {
            return std::nullopt;
        }
        const double denom = 1.0 - st_.w1;
        if (!(denom > cfg_.epsilon_w)) {
            return std::nullopt;
        }
        return (st_.omega_hat - st_.w1 * st_.omega_hat_ref - st_.w2) / denom;
    }

    /// Re-arm the finite-time windows at a declared rate-segment switch:
    /// forgetting scalars and availability gates restart, integrator states
    /// beta2_hat and omega_hat are kept.
    void reset_windows() {
        st_.w = 1.0;
        st_.w1 = 1.0;
        st_.w2 = 0.0;
        st_.beta2_hat_init = st_.beta2_hat;
        st_.observer_started = false;
        st_.sign = 0;
        st_.sum_sq_delta = 0.0;
        st_.sum_sq_y2 = 0.0;
        st_.n_sign_samples = 0;
    }

private:
    static void require_finite(double a, double b, double c) {
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
            throw std::runtime_error("Estimator: non-finite input");
        }
    }

    EstimatorConfig cfg_;
    EstimatorState st_;
};

} // namespace freqtrack
