#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace freqtrack {

/// Node kinds a filter cascade is built from. The stateful blocks realize
/// the three proper first-order transfer functions
///   Lowpass  lambda/(p+lambda)
///   Lag      1/(p+lambda)
///   Washout  lambda*p/(p+lambda) = lambda*(1 - lambda/(p+lambda))
/// so the differentiation operator p never appears explicitly. TimeWeight
/// multiplies the running signal by t^power in the middle of a chain;
/// OuterTimeWeight is the same multiplication applied at the cascade output
/// and must be the last node. Gain is a constant multiplier.
enum class NodeKind { Lowpass, Lag, Washout, TimeWeight, OuterTimeWeight, Gain };

struct NodeSpec {
    NodeKind kind;
    double value; // lambda for filter blocks, power (1 or 2) for weights, factor for Gain
};

inline NodeSpec lowpass(double lambda) { return {NodeKind::Lowpass, lambda}; }
inline NodeSpec lag(double lambda) { return {NodeKind::Lag, lambda}; }
inline NodeSpec washout(double lambda) { return {NodeKind::Washout, lambda}; }
inline NodeSpec time_weight(int power) { return {NodeKind::TimeWeight, static_cast<double>(power)}; }
inline NodeSpec outer_time_weight(int power) { return {NodeKind::OuterTimeWeight, static_cast<double>(power)}; }
inline NodeSpec gain(double factor) { return {NodeKind::Gain, factor}; }

/// Held (start-of-step) and end-of-step values of a cascade output for one
/// integration step. `held` is what a downstream consumer integrates over
/// [t, t+dt); `reported` is the output at t+dt.
struct GraphStep {
    double held;
    double reported;
};

/// A single-input single-output cascade of first-order blocks, time weights
/// and gains, advanced on a uniform grid. Each stateful block carries one
/// scalar state, initialized to zero (the filter identities the regressor
/// relies on hold exactly only with zero initial conditions).
///
/// Stepping uses exact zero-order-hold discretization per block: over
/// [t, t+dt) every internal signal is held at its start-of-step value and
/// each state advances by x+ = e^(-lambda*dt)*x + (1 - e^(-lambda*dt))*g*held
/// (g = 1 for Lowpass/Washout, 1/lambda for Lag). Time weights evaluate at
/// the step midpoint t + dt/2 when producing held values, and at the actual
/// report time when producing outputs.
class FilterGraph {
public:
    FilterGraph() = default;

    explicit FilterGraph(const std::vector<NodeSpec>& specs) {
        if (specs.empty()) {
            throw std::invalid_argument("FilterGraph: node list must be non-empty");
        }
        nodes_.reserve(specs.size());
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const NodeSpec& s = specs[i];
            switch (s.kind) {
            case NodeKind::Lowpass:
            case NodeKind::Lag:
            case NodeKind::Washout:
                if (!(s.value > 0.0) || !std::isfinite(s.value)) {
                    throw std::invalid_argument("FilterGraph: block lambda must be > 0");
                }
                break;
            case NodeKind::TimeWeight:
            case NodeKind::OuterTimeWeight:
                if (s.value != 1.0 && s.value != 2.0) {
                    throw std::invalid_argument("FilterGraph: time-weight power must be 1 or 2");
                }
                if (s.kind == NodeKind::OuterTimeWeight && i + 1 != specs.size()) {
                    throw std::invalid_argument("FilterGraph: outer time weight must be the last node");
                }
                break;
            case NodeKind::Gain:
                if (!std::isfinite(s.value)) {
                    throw std::invalid_argument("FilterGraph: gain must be finite");
                }
                break;
            }
            nodes_.push_back(Node{s.kind, s.value, 0.0, 0.0, 0.0, 0.0});
        }
    }

    /// Reset all block states to zero.
    void reset() {
        for (Node& n : nodes_) {
            n.state = 0.0;
            n.held_in = 0.0;
        }
    }

    /// Advance one step. `u_held` is the input sample at t, held over the
    /// step; `u_report` is the input value used when evaluating the output
    /// at t+dt (pass the upstream cascade's reported value when chaining
    /// graphs; for an external input both are the same sample).
    GraphStep step_linked(double u_held, double u_report, double t, double dt) {
        if (!(dt > 0.0)) {
            throw std::invalid_argument("FilterGraph: dt must be > 0");
        }
        if (!std::isfinite(u_held) || !std::isfinite(u_report)) {
            throw std::runtime_error("FilterGraph: non-finite input");
        }
        prepare(dt);

        // Held pass: every node's output at t, with states as of t.
        const double t_mid = t + 0.5 * dt;
        double v = u_held;
        for (Node& n : nodes_) {
            switch (n.kind) {
            case NodeKind::Lowpass:
            case NodeKind::Lag:
                n.held_in = v;
                v = n.state;
                break;
            case NodeKind::Washout:
                n.held_in = v;
                v = n.value * (v - n.state);
                break;
            case NodeKind::TimeWeight:
            case NodeKind::OuterTimeWeight:
                v = weight(t_mid, n.value) * v;
                break;
            case NodeKind::Gain:
                v = n.value * v;
                break;
            }
        }
        const double held_out = v;

        // State advance with held inputs.
        for (Node& n : nodes_) {
            switch (n.kind) {
            case NodeKind::Lowpass:
            case NodeKind::Washout:
                n.state = n.decay * n.state + n.rise * n.held_in;
                break;
            case NodeKind::Lag:
                n.state = n.decay * n.state + (n.rise / n.value) * n.held_in;
                break;
            default:
                break;
            }
        }

        // Report pass: output at t+dt with the new states.
        const double t_end = t + dt;
        double r = u_report;
        for (const Node& n : nodes_) {
            switch (n.kind) {
            case NodeKind::Lowpass:
            case NodeKind::Lag:
                r = n.state;
                break;
            case NodeKind::Washout:
                r = n.value * (r - n.state);
                break;
            case NodeKind::TimeWeight:
            case NodeKind::OuterTimeWeight:
                r = weight(t_end, n.value) * r;
                break;
            case NodeKind::Gain:
                r = n.value * r;
                break;
            }
        }
        if (!std::isfinite(held_out) || !std::isfinite(r)) {
            throw std::runtime_error("FilterGraph: non-finite output");
        }
        return {held_out, r};
    }

    /// Advance one step with an external input sample and return the output
    /// at t+dt.
    double step(double u, double t, double dt) { return step_linked(u, u, t, dt).reported; }

private:
    struct Node {
        NodeKind kind;
        double value;
        double state;
        double held_in;
        // cached per-dt discretization factors
        double decay;
        double rise;
    };

    static double weight(double t, double power) { return power == 2.0 ? t * t : t; }

    void prepare(double dt) {
        if (dt == cached_dt_) {
            return;
        }
        for (Node& n : nodes_) {
            if (n.kind == NodeKind::Lowpass || n.kind == NodeKind::Lag || n.kind == NodeKind::Washout) {
                n.decay = std::exp(-n.value * dt);
                n.rise = 1.0 - n.decay;
            }
        }
        cached_dt_ = dt;
    }

    std::vector<Node> nodes_;
    double cached_dt_ = -1.0;
};

/// Build a cascade realizing the product of the listed node transfer
/// functions, interleaved with time weights in the given order.
inline FilterGraph compose(const std::vector<NodeSpec>& specs) { return FilterGraph(specs); }

/// Advance `graph` one step with input sample `u` (held over [t, t+dt)) and
/// return the cascade output at t+dt.
inline double step_graph(FilterGraph& graph, double u, double t, double dt) {
    return graph.step(u, t, dt);
}

} // namespace freqtrack
