#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drem.hpp"
#include "estimator.hpp"
#include "regressor.hpp"
#include "signal.hpp"

namespace freqtrack {

/// Summary tolerances: a run counts as converged once the estimate stays
/// inside these bands for the rest of the horizon.
inline constexpr double kBetaConvergenceTol = 5e-3;   // rad/s^2
inline constexpr double kOmegaConvergenceTol = 0.05;  // rad/s

struct ScenarioConfig {
    SignalSpec signal;
    std::array<double, 3> lambdas{1.0, 2.0, 3.0};
    double gamma = 1e5;
    double gamma2 = 1e5;
    double dt = 1e-3;
    double horizon = 30.0;
    double epsilon_w = 1e-6;
    double epsilon_sign = 1e-3;
    bool reset_on_segment_switch = false;
    std::string output_path = "run.csv";
    long log_stride = 10;

    void validate() const {
        signal.validate();
        for (double l : lambdas) {
            if (!(l > 0.0) || !std::isfinite(l)) {
                throw std::invalid_argument("ScenarioConfig: lambdas must be > 0");
            }
        }
        if (lambdas[0] == lambdas[1] || lambdas[0] == lambdas[2] || lambdas[1] == lambdas[2]) {
            throw std::invalid_argument("ScenarioConfig: lambdas must be pairwise distinct");
        }
        if (!(dt > 0.0) || dt > 0.01) {
            throw std::invalid_argument("ScenarioConfig: dt must be in (0, 0.01]");
        }
        if (!(horizon > 0.0) || horizon > 600.0) {
            throw std::invalid_argument("ScenarioConfig: horizon must be in (0, 600]");
        }
        if (!(epsilon_w > 0.0) || !(epsilon_w < 1.0)) {
            throw std::invalid_argument("ScenarioConfig: epsilon_w must be in (0, 1)");
        }
        if (!(epsilon_sign > 0.0)) {
            throw std::invalid_argument("ScenarioConfig: epsilon_sign must be > 0");
        }
        if (log_stride < 1) {
            throw std::invalid_argument("ScenarioConfig: log_stride must be >= 1");
        }
        if (output_path.empty()) {
            throw std::invalid_argument("ScenarioConfig: output_path must be set");
        }
    }
};

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    try {
        const auto& sig = j.at("signal");
        cfg.signal.amplitude = sig.at("amplitude").get<double>();
        cfg.signal.phase = sig.at("phase").get<double>();
        cfg.signal.omega0 = sig.at("omega0").get<double>();
        cfg.signal.rate_segments.clear();
        for (const auto& seg : sig.at("rate_segments")) {
            cfg.signal.rate_segments.push_back({seg.at("t_start").get<double>(), seg.at("beta").get<double>()});
        }
        const auto& lams = j.at("lambdas");
        if (lams.size() != 3) {
            throw std::invalid_argument("ScenarioConfig: exactly 3 lambdas required");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            cfg.lambdas[i] = lams.at(i).get<double>();
        }
        cfg.gamma = j.at("gamma").get<double>();
        cfg.gamma2 = j.at("gamma2").get<double>();
        cfg.dt = j.at("dt").get<double>();
        cfg.horizon = j.at("horizon").get<double>();
        cfg.epsilon_w = j.value("epsilon_w", 1e-6);
        cfg.epsilon_sign = j.value("epsilon_sign", 1e-3);
        cfg.reset_on_segment_switch = j.value("reset_on_segment_switch", false);
        cfg.output_path = j.value("output_path", std::string("run.csv"));
        cfg.log_stride = j.value("log_stride", 10L);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("ScenarioConfig: bad config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("ScenarioConfig: cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("ScenarioConfig: invalid JSON in " + path + ": " + e.what());
    }
    return scenario_from_json(j);
}

struct RunSummary {
    std::optional<double> final_beta_hat;          // last finite-time beta estimate
    std::optional<double> final_omega_err;         // |omega_ft - omega_true| at the end
    std::optional<double> beta_convergence_time;   // first time the beta band holds ever after
    std::optional<double> omega_convergence_time;
    double min_abs_delta = 0.0;
    double median_abs_delta = 0.0;
    std::array<double, 3> residual_rms_per_lambda{}; // RMS(residual)/RMS(z), t >= 1 s
    long steps = 0;
    long rows_emitted = 0;
};

inline nlohmann::json summary_to_json(const RunSummary& s) {
    nlohmann::json j;
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    j["final_beta_hat"] = opt(s.final_beta_hat);
    j["final_omega_err"] = opt(s.final_omega_err);
    j["beta_convergence_time"] = opt(s.beta_convergence_time);
    j["omega_convergence_time"] = opt(s.omega_convergence_time);
    j["min_abs_delta"] = s.min_abs_delta;
    j["median_abs_delta"] = s.median_abs_delta;
    j["residual_rms_per_lambda"] = s.residual_rms_per_lambda;
    j["steps"] = s.steps;
    j["rows_emitted"] = s.rows_emitted;
    return j;
}

namespace detail {

inline void append_field(std::string& row, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    row += buf;
    row += ',';
}

inline void append_field(std::string& row, const std::optional<double>& v) {
    if (v) {
        append_field(row, *v);
    } else {
        row += "unavailable,";
    }
}

inline void append_field(std::string& row, int v) {
    row += std::to_string(v);
    row += ',';
}

} // namespace detail

inline const char* csv_header() {
    return "t,y,omega_true,beta_true,"
           "z1,psi1_1,psi2_1,psi3_1,z2,psi1_2,psi2_2,psi3_2,z3,psi1_3,psi2_3,psi3_3,"
           "delta,y_mix1,y_mix2,y_mix3,"
           "beta2_hat,w,beta2_ft,sign_beta,beta_hat,omega_hat,w1,w2,omega_ft,"
           "resid1,resid2,resid3\n";
}

/// Execute the full generator -> 3 channels -> mixer -> estimator pipeline on
/// the uniform grid, writing the CSV time series to config.output_path and
/// returning the run summary. Deterministic: identical config produces
/// byte-identical CSV. Non-finite values anywhere abort with the offending
/// step index in the exception message.
inline RunSummary run(const ScenarioConfig& config) {
    config.validate();

    const std::filesystem::path out_path(config.output_path);
    if (out_path.has_parent_path()) {
        std::filesystem::create_directories(out_path.parent_path());
    }
    std::ofstream csv(out_path, std::ios::binary);
    if (!csv) {
        throw std::invalid_argument("run: cannot open output file " + config.output_path);
    }
    csv << csv_header();

    RegressorChannel ch1(config.lambdas[0]);
    RegressorChannel ch2(config.lambdas[1]);
    RegressorChannel ch3(config.lambdas[2]);
    EstimatorConfig est_cfg;
    est_cfg.gamma = config.gamma;
    est_cfg.gamma2 = config.gamma2;
    est_cfg.epsilon_w = config.epsilon_w;
    est_cfg.epsilon_sign = config.epsilon_sign;
    Estimator est(est_cfg);

    const long n_steps = static_cast<long>(std::llround(config.horizon / config.dt));
    const double dt = config.dt;

    RunSummary summary;
    std::vector<double> abs_deltas;
    abs_deltas.reserve(static_cast<std::size_t>(n_steps));
    std::array<double, 3> sum_sq_resid{};
    std::array<double, 3> sum_sq_z{};
    long n_resid = 0;
    // convergence scan state: time of the last step where the band was violated
    double last_beta_fail = -1.0;
    double last_omega_fail = -1.0;
    double first_row_t = 0.0;
    std::string row;

    for (long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        try {
            const double y = sample(config.signal, t);
            const ChannelOutputs c1 = ch1.advance(y, t, dt);
            const ChannelOutputs c2 = ch2.advance(y, t, dt);
            const ChannelOutputs c3 = ch3.advance(y, t, dt);
            const RegressionSnapshot snap = stack(c1, c2, c3);
            const DremOutput mixed = mix(snap);
            const double t_row = snap.t;

            if (config.reset_on_segment_switch) {
                for (std::size_t i = 1; i < config.signal.rate_segments.size(); ++i) {
                    const double tb = config.signal.rate_segments[i].t_start;
                    if (t < tb && tb <= t_row) {
                        est.reset_windows();
                    }
                }
            }
            est.step(mixed.delta, mixed.y_mixed[0], mixed.y_mixed[1], dt);

            const double omega = omega_true(config.signal, t_row);
            const double beta = config.signal.beta_at(t_row);
            std::array<double, 3> resid{};
            const std::array<const ChannelOutputs*, 3> outs{&c1, &c2, &c3};
            for (std::size_t i = 0; i < 3; ++i) {
                const ChannelOutputs& o = *outs[i];
                resid[i] = o.z - beta * beta * o.psi1 - beta * omega * o.psi2 - omega * omega * o.psi3;
                if (t_row >= 1.0) {
                    sum_sq_resid[i] += resid[i] * resid[i];
                    sum_sq_z[i] += o.z * o.z;
                }
            }
            if (t_row >= 1.0) {
                ++n_resid;
            }
            abs_deltas.push_back(std::abs(mixed.delta));

            const std::optional<double> bhat = est.beta_hat();
            const std::optional<double> oft = est.ft_omega();
            if (k == 0) {
                first_row_t = t_row;
            }
            if (!bhat || std::abs(*bhat - beta) > kBetaConvergenceTol) {
                last_beta_fail = t_row;
            }
            if (!oft || std::abs(*oft - omega) > kOmegaConvergenceTol) {
                last_omega_fail = t_row;
            }
            summary.final_beta_hat = bhat;
            summary.final_omega_err = oft ? std::optional<double>(std::abs(*oft - omega)) : std::nullopt;

            if ((k + 1) % config.log_stride == 0) {
                row.clear();
                detail::append_field(row, t_row);
                detail::append_field(row, sample(config.signal, t_row));
                detail::append_field(row, omega);
                detail::append_field(row, beta);
                for (const ChannelOutputs* o : outs) {
                    detail::append_field(row, o->z);
                    detail::append_field(row, o->psi1);
                    detail::append_field(row, o->psi2);
                    detail::append_field(row, o->psi3);
                }
                detail::append_field(row, mixed.delta);
                detail::append_field(row, mixed.y_mixed[0]);
                detail::append_field(row, mixed.y_mixed[1]);
                detail::append_field(row, mixed.y_mixed[2]);
                const EstimatorState& st = est.state();
                detail::append_field(row, st.beta2_hat);
                detail::append_field(row, st.w);
                detail::append_field(row, est.ft_beta2());
                detail::append_field(row, st.sign);
                detail::append_field(row, bhat);
                detail::append_field(row, st.omega_hat);
                detail::append_field(row, st.w1);
                detail::append_field(row, st.w2);
                detail::append_field(row, oft);
                detail::append_field(row, resid[0]);
                detail::append_field(row, resid[1]);
                detail::append_field(row, resid[2]);
                row.back() = '\n';
                csv << row;
                ++summary.rows_emitted;
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("numeric abort at step " + std::to_string(k) + " (t=" +
                                     std::to_string(t) + "): " + e.what());
        }
    }

    summary.steps = n_steps;
    if (!abs_deltas.empty()) {
        summary.min_abs_delta = *std::min_element(abs_deltas.begin(), abs_deltas.end());
        const auto mid = abs_deltas.begin() + static_cast<std::ptrdiff_t>(abs_deltas.size() / 2);
        std::nth_element(abs_deltas.begin(), mid, abs_deltas.end());
        summary.median_abs_delta = *mid;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        summary.residual_rms_per_lambda[i] =
            (n_resid > 0 && sum_sq_z[i] > 0.0) ? std::sqrt(sum_sq_resid[i] / sum_sq_z[i]) : 0.0;
    }
    const double t_end = static_cast<double>(n_steps) * dt;
    if (last_beta_fail < 0.0) {
        summary.beta_convergence_time = first_row_t;
    } else if (last_beta_fail + dt <= t_end) {
        summary.beta_convergence_time = last_beta_fail + dt;
    }
    if (last_omega_fail < 0.0) {
        summary.omega_convergence_time = first_row_t;
    } else if (last_omega_fail + dt <= t_end) {
        summary.omega_convergence_time = last_omega_fail + dt;
    }
    return summary;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace detail

/// Extract plot-ready series from a run CSV:
///   signal.dat  t, y
///   beta.dat    t, beta_hat, beta_true
///   omega.dat   t, omega_ft, omega_true
/// Rows where the estimate is still unavailable are skipped in beta.dat and
/// omega.dat. A zero-length CSV yields three empty files.
inline void emit_plot_data(const std::string& csv_path, const std::string& out_dir) {
    std::ifstream in(csv_path);
    if (!in) {
        throw std::invalid_argument("emit_plot_data: cannot open " + csv_path);
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    std::ofstream f_signal(dir / "signal.dat");
    std::ofstream f_beta(dir / "beta.dat");
    std::ofstream f_omega(dir / "omega.dat");

    std::string line;
    if (!std::getline(in, line)) {
        return; // empty input: three empty series
    }
    const std::vector<std::string> header = detail::split_csv_line(line);
    auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw std::invalid_argument("emit_plot_data: missing column '" + name + "' in " + csv_path);
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_t = col("t");
    const std::size_t c_y = col("y");
    const std::size_t c_bt = col("beta_true");
    const std::size_t c_bh = col("beta_hat");
    const std::size_t c_ot = col("omega_true");
    const std::size_t c_of = col("omega_ft");

    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != header.size()) {
            throw std::invalid_argument("emit_plot_data: truncated row at line " +
                                        std::to_string(line_no) + " of " + csv_path);
        }
        f_signal << f[c_t] << ' ' << f[c_y] << '\n';
        if (f[c_bh] != "unavailable") {
            f_beta << f[c_t] << ' ' << f[c_bh] << ' ' << f[c_bt] << '\n';
        }
        if (f[c_of] != "unavailable") {
            f_omega << f[c_t] << ' ' << f[c_of] << ' ' << f[c_ot] << '\n';
        }
    }
}

} // namespace freqtrack
