// Command-line front end: scenario optimization, the figure-reproduction
// sweeps, and a quick self-validation suite. Output is plot-ready CSV or JSON.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "twr/baselines.hpp"
#include "twr/channel.hpp"
#include "twr/scenario.hpp"
#include "twr/sweep.hpp"
#include "twr/three_phase.hpp"
#include "twr/two_phase.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::vector<std::string> schemes;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "scenario file (key = value lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_path, "output file (default stdout)");
    cmd->add_option("--format", opts.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--scheme", opts.schemes,
                    "scheme to run (repeatable; default: the config's protocols)");
}

twr::ScenarioConfig load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return twr::ScenarioConfig{};
    std::ifstream in(opts.config_path);
    if (!in) throw twr::ConfigError("cannot open config file " + opts.config_path);
    std::ostringstream text;
    text << in.rdbuf();
    return twr::parse_config(text.str());
}

void write_out(const CommonOpts& opts, const std::string& doc) {
    if (opts.out_path.empty()) {
        std::cout << doc;
        return;
    }
    std::ofstream out(opts.out_path, std::ios::binary);
    if (!out) throw twr::ConfigError("cannot open output file " + opts.out_path);
    out << doc;
}

std::vector<double> linear_grid(double from, double to, double step) {
    if (step <= 0.0 || to < from) throw twr::ConfigError("bad sweep grid bounds");
    std::vector<double> grid;
    for (double x = from; x <= to + 1e-9 * step; x += step) grid.push_back(x);
    return grid;
}

int run_sweep_command(const CommonOpts& opts, twr::SweepVariable variable,
                      const std::vector<double>& grid) {
    const twr::ScenarioConfig cfg = load_config(opts);
    twr::SweepSpec spec;
    spec.variable = variable;
    spec.grid = grid;
    spec.schemes = opts.schemes;
    const twr::SweepResult result = twr::run_sweep(cfg, spec);
    write_out(opts, twr::emit_results(result, opts.format));
    for (const twr::SweepRow& row : result.rows) {
        if (!row.converged) {
            std::cerr << "warning: " << row.scheme << " at " << result.variable << " = "
                      << row.value << " did not converge\n";
        }
    }
    return 0;
}

// Fast self-checks of the core math; exercised in depth by the test suite,
// repeated here so a deployed binary can vouch for itself.
int run_validation() {
    int failures = 0;
    auto expect = [&](bool ok, const std::string& what) {
        std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
        if (!ok) ++failures;
    };

    const twr::FadingSpec spec = twr::make_fading_spec(1.0, 4.0);
    const auto samples = twr::sample_csi(spec, 400, 1);
    const auto samples2 = twr::sample_csi(spec, 400, 1);
    bool same = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        same = same && samples[i].g1 == samples2[i].g1 && samples[i].g3 == samples2[i].g3;
    }
    expect(same, "channel sampling is deterministic");

    // corner sum identity
    bool corners = true;
    for (const auto& csi : samples) {
        const twr::PowerVector p{2.0, 3.0, 1.0};
        const double sum = 0.5 * twr::capacity(csi.g1 * p.pa + csi.g2 * p.pb);
        for (auto order : {twr::DecodeOrder::DecodeAFirst, twr::DecodeOrder::DecodeBFirst}) {
            const twr::RatePair r = twr::mac_corner_rates(p, csi, order);
            corners = corners && std::abs(r.ra + r.rb - sum) <= 1e-12 * std::max(1.0, sum);
        }
    }
    expect(corners, "successive-decoding corner rates satisfy the sum identity");

    // stationarity residuals of the per-state solvers
    const twr::QosPair qos = twr::make_qos_pair(1.0, 1.0);
    const twr::Weights w{0.6, 0.4};
    twr::ThreePhaseDuals d3;
    d3.lambda_a = 0.1;
    d3.lambda_b = 0.1;
    d3.lambda_r = 0.05;
    const twr::NetworkCsi relayed{2.0, 0.5, 1.0};
    const twr::PowerVector p3 = twr::alloc_r2(relayed, d3, qos, w);
    expect(p3.pa > 0.0 && std::abs(twr::r2_stationarity(p3.pa, relayed, d3, qos, w)) <= 1e-8,
           "relayed-region stationarity residual");

    const twr::NetworkCsi mac{1.2, 0.8, 0.05};
    twr::TwoPhaseDuals d2;
    d2.lambda_a = 0.08;
    d2.lambda_b = 0.08;
    d2.lambda_r = 0.05;
    d2.phi1 = 0.9;
    d2.phi2 = 0.9;
    d2.mu_a = 0.01;
    d2.mu_b = 0.01;
    const twr::PowerVector ps =
        twr::source_alloc(mac, d2, qos, w, twr::DecodeOrder::DecodeAFirst);
    expect(std::abs(ps.pa - 1.81517860) < 1e-6 && std::abs(ps.pb - 0.29575055) < 1e-6,
           "two-phase source allocation closed form");

    // a short optimization run lands on its budgets and inside the region
    twr::ScenarioConfig cfg;
    cfg.samples = 400;
    const auto ens = twr::sample_csi(spec, cfg.samples, cfg.seed);
    const twr::PolicyEvaluation ev = twr::optimize_two_phase(ens, cfg);
    bool feasible = ev.converged;
    for (int k = 0; k < 3; ++k) {
        feasible = feasible &&
                   std::abs(ev.mean_power[k] - ev.budget[k]) / ev.budget[k] <= cfg.tolerance_power;
    }
    expect(feasible, "two-phase optimization meets its power budgets");
    bool inside = true;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        inside = inside && twr::two_phase_region_contains(ev.rates[i], ev.powers[i], ens[i], 1e-6);
    }
    expect(inside, "two-phase rates lie in the achievable region");

    const twr::PolicyEvaluation e3 = twr::optimize_three_phase(ens, cfg);
    bool feas3 = e3.converged;
    for (int k = 0; k < 3; ++k) {
        feas3 = feas3 &&
                std::abs(e3.mean_power[k] - e3.budget[k]) / e3.budget[k] <= cfg.tolerance_power;
    }
    expect(feas3, "three-phase optimization meets its power budgets");

    std::cout << (failures == 0 ? "validation passed\n" : "validation FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-way relay QoS-aware power/rate adaptation"};
    app.require_subcommand(1);

    CommonOpts opt_optimize, opt_power, opt_theta, opt_relay, opt_region;

    CLI::App* cmd_optimize = app.add_subcommand("optimize", "run the configured scenario once");
    add_common(cmd_optimize, opt_optimize);

    CLI::App* cmd_power = app.add_subcommand("sweep-power", "sweep the source power in dB");
    add_common(cmd_power, opt_power);
    double p_from = 3.0, p_to = 24.0, p_step = 3.0;
    cmd_power->add_option("--from", p_from, "first source power (dB)");
    cmd_power->add_option("--to", p_to, "last source power (dB)");
    cmd_power->add_option("--step", p_step, "grid step (dB)");

    CLI::App* cmd_theta = app.add_subcommand("sweep-theta", "sweep the QoS exponent");
    add_common(cmd_theta, opt_theta);
    std::vector<double> theta_grid{0.01, 0.1, 1.0, 10.0, 100.0};
    cmd_theta->add_option("--grid", theta_grid, "exponent values");

    CLI::App* cmd_relay = app.add_subcommand("sweep-relay", "sweep the relay position");
    add_common(cmd_relay, opt_relay);
    double d_from = 0.25, d_to = 1.75, d_step = 0.25;
    cmd_relay->add_option("--from", d_from, "first relay distance");
    cmd_relay->add_option("--to", d_to, "last relay distance");
    cmd_relay->add_option("--step", d_step, "grid step");

    CLI::App* cmd_region = app.add_subcommand(
        "region", "trace the effective-capacity region by sweeping the weight");
    add_common(cmd_region, opt_region);
    double w_from = 0.1, w_to = 0.9, w_step = 0.1;
    cmd_region->add_option("--from", w_from, "first weight of direction A");
    cmd_region->add_option("--to", w_to, "last weight of direction A");
    cmd_region->add_option("--step", w_step, "grid step");

    CLI::App* cmd_validate = app.add_subcommand("validate", "run the built-in self checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_optimize->parsed()) {
            return run_sweep_command(opt_optimize, twr::SweepVariable::None, {0.0});
        }
        if (cmd_power->parsed()) {
            return run_sweep_command(opt_power, twr::SweepVariable::SourcePowerDb,
                                     linear_grid(p_from, p_to, p_step));
        }
        if (cmd_theta->parsed()) {
            return run_sweep_command(opt_theta, twr::SweepVariable::Theta, theta_grid);
        }
        if (cmd_relay->parsed()) {
            return run_sweep_command(opt_relay, twr::SweepVariable::RelayDistance,
                                     linear_grid(d_from, d_to, d_step));
        }
        if (cmd_region->parsed()) {
            return run_sweep_command(opt_region, twr::SweepVariable::WeightA,
                                     linear_grid(w_from, w_to, w_step));
        }
        if (cmd_validate->parsed()) {
            return run_validation();
        }
    } catch (const twr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const twr::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
