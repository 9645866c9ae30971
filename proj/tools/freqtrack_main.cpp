#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include <freqtrack/freqtrack.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNumericAbort = 2;
constexpr int kExitVerifyFailure = 3;

freqtrack::SignalSpec default_signal() {
    freqtrack::SignalSpec spec;
    spec.amplitude = 2.0;
    spec.phase = 1.0;
    spec.omega0 = 1.0;
    spec.rate_segments = {{0.0, 0.05}};
    return spec;
}

int run_command(const std::string& config_path, const std::string& out_dir) {
    freqtrack::ScenarioConfig cfg = freqtrack::load_scenario(config_path);
    if (!out_dir.empty()) {
        const std::filesystem::path csv_name = std::filesystem::path(cfg.output_path).filename();
        cfg.output_path = (std::filesystem::path(out_dir) / csv_name).string();
    }
    const freqtrack::RunSummary summary = freqtrack::run(cfg);
    const nlohmann::json j = freqtrack::summary_to_json(summary);

    std::filesystem::path summary_path(cfg.output_path);
    summary_path.replace_extension();
    summary_path += "_summary.json";
    std::ofstream sf(summary_path);
    sf << j.dump(2) << '\n';

    std::cout << j.dump(2) << '\n';
    std::cerr << "csv: " << cfg.output_path << "\nsummary: " << summary_path.string() << '\n';
    return kExitOk;
}

bool report(const char* name, bool ok, double value, double bound) {
    std::printf("%-28s %s  (%.3e, bound %.3e)\n", name, ok ? "PASS" : "FAIL", value, bound);
    return ok;
}

int verify_command() {
    using namespace freqtrack;
    bool all_ok = true;

    // derivative identity sweep over random chirp specs
    {
        std::mt19937 rng(20240811u);
        std::uniform_real_distribution<double> amp(0.5, 5.0);
        std::uniform_real_distribution<double> ph(0.0, 6.283185307179586);
        std::uniform_real_distribution<double> om(0.5, 5.0);
        std::uniform_real_distribution<double> bt(-0.2, 0.2);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            SignalSpec spec;
            spec.amplitude = amp(rng);
            spec.phase = ph(rng);
            spec.omega0 = om(rng);
            spec.rate_segments = {{0.0, bt(rng)}};
            for (double t = 0.1; t <= 29.9; t += 0.1) {
                const double r = check_eq4(spec, t);
                const double scale = 1.0 + std::abs(analytic_derivatives(spec, t).yd3);
                worst = std::max(worst, std::abs(r) / scale);
            }
        }
        all_ok &= report("derivative identity", worst <= 1e-9, worst, 1e-9);
    }

    // swapping identity, independent pipelines per lambda
    {
        const SignalSpec spec = default_signal();
        double worst_ratio = 0.0;
        for (double lambda : {1.0, 2.0, 3.0}) {
            const SwappingLemmaStats s = swapping_lemma_scan(lambda, spec, 30.0, 1e-3);
            worst_ratio = std::max(worst_ratio, s.max_deviation / s.max_abs_lhs);
        }
        all_ok &= report("swapping identity", worst_ratio <= 0.01, worst_ratio, 0.01);
    }

    // regression identity residual per lambda
    {
        const SignalSpec spec = default_signal();
        double worst = 0.0;
        for (double lambda : {1.0, 2.0, 3.0}) {
            const RegressionResidualStats s = check_regression_identity(lambda, spec, 30.0, 1e-3);
            worst = std::max(worst, s.rel_rms);
        }
        all_ok &= report("regression identity", worst <= 0.02, worst, 0.02);
    }

    // adjugate identity on random matrices
    {
        std::mt19937 rng(7u);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        for (int n = 0; n < 1000; ++n) {
            Mat3 m;
            double scale = 0.0;
            for (auto& r : m) {
                for (auto& v : r) {
                    v = u(rng);
                    scale = std::max(scale, std::abs(v));
                }
            }
            const Mat3 adj = adjugate3(m);
            const double det = det3(m);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        acc += adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                               m[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                    }
                    const double expect = (i == j) ? det : 0.0;
                    worst = std::max(worst, std::abs(acc - expect) / (scale * scale * scale));
                }
            }
        }
        all_ok &= report("adjugate identity", worst <= 1e-12, worst, 1e-12);
    }

    return all_ok ? kExitOk : kExitVerifyFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-varying sinusoid frequency estimator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    auto* cmd_run = app.add_subcommand("run", "simulate a scenario and write CSV + summary");
    cmd_run->add_option("--config", config_path, "scenario config (JSON)")->required();
    cmd_run->add_option("--out", out_dir, "output directory (overrides the config's directory)");

    std::string csv_path;
    std::string plot_dir;
    auto* cmd_plot = app.add_subcommand("plotdata", "extract plot series from a run CSV");
    cmd_plot->add_option("--csv", csv_path, "run CSV path")->required();
    cmd_plot->add_option("--out", plot_dir, "output directory")->required();

    auto* cmd_verify = app.add_subcommand("verify", "run the built-in identity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (cmd_run->parsed()) {
            return run_command(config_path, out_dir);
        }
        if (cmd_plot->parsed()) {
            freqtrack::emit_plot_data(csv_path, plot_dir);
            return kExitOk;
        }
        if (cmd_verify->parsed()) {
            return verify_command();
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numeric abort: " << e.what() << '\n';
        return kExitNumericAbort;
    }
    return kExitConfigError;
}
