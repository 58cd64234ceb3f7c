// Comparison policies: two-way direct transmission without the relay,
// fixed-power variants of both relay protocols, and the static weight-based
// MAC partition.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "twr/channel.hpp"
#include "twr/effective_capacity.hpp"
#include "twr/numerics.hpp"
#include "twr/policy.hpp"
#include "twr/rate_region.hpp"
#include "twr/scenario.hpp"
#include "twr/three_phase.hpp"
#include "twr/two_phase.hpp"

namespace twr {

enum class ProtocolKind { ThreePhase, TwoPhase };

namespace detail {

// Each direction holds half the frame on the direct link; per-state powers are
// QoS water-filling with time-slot count 2. The relay gains are never read.
struct DirectEvaluator {
    std::span<const NetworkCsi> samples;
    QosPair qos = make_qos_pair(1.0, 1.0);
    Weights weights;
    std::array<double, 3> budget{};
    bool a_enabled = true;
    bool b_enabled = true;
    double phi1 = 1.0;
    double phi2 = 1.0;
    PhiAccelerator phi_acc;
    double phi_gap = 1.0;    // relative log gap at the last refresh

    std::vector<PowerVector> powers;
    std::vector<RatePair> rates;
    std::vector<double> rates_a, rates_b, pa_buf, pb_buf;

    DirectEvaluator(std::span<const NetworkCsi> s, const std::array<double, 3>& bud)
        : samples(s), budget(bud) {
        const std::size_t n = s.size();
        powers.resize(n);
        rates.resize(n);
        rates_a.resize(n);
        rates_b.resize(n);
        pa_buf.resize(n);
        pb_buf.resize(n);
    }

    DualEvaluation run(const std::vector<double>& lambda, bool update_phi = true) {
        const double la = a_enabled ? std::max(lambda[0], 1e-12) : 1e30;
        const double lb = b_enabled ? std::max(lambda[1], 1e-12) : 1e30;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double g3 = samples[i].g3;
            PowerVector p;
            p.pa = qos_waterfill(kDelta2 * la * phi1 / weights.a, qos.beta_a(), 2.0, g3);
            p.pb = qos_waterfill(kDelta2 * lb * phi2 / weights.b, qos.beta_b(), 2.0, g3);
            powers[i] = p;
            rates[i] = RatePair{0.5 * capacity(g3 * p.pa), 0.5 * capacity(g3 * p.pb)};
            rates_a[i] = rates[i].ra;
            rates_b[i] = rates[i].rb;
            pa_buf[i] = p.pa;
            pb_buf[i] = p.pb;
        }
        const double n = static_cast<double>(samples.size());
        DualEvaluation ev;
        ev.mean_power = {pairwise_sum(pa_buf) / n, pairwise_sum(pb_buf) / n, 0.0};
        ev.budget = {budget[0], budget[1], 0.0};
        const double ec_a = effective_capacity(rates_a, qos.theta_a);
        const double ec_b = effective_capacity(rates_b, qos.theta_b);
        ev.dual_value = weights.a * ec_a + weights.b * ec_b;
        for (int k = 0; k < 2; ++k) {
            ev.dual_value += lambda[k] * (ev.budget[k] - ev.mean_power[k]);
        }
        if (update_phi) {
            phi_gap = phi_acc.update(phi1, phi2, mean_exp_neg(rates_a, qos.theta_a),
                                     mean_exp_neg(rates_b, qos.theta_b), lambda);
        }
        return ev;
    }

    // Converge the expectations at fixed multipliers so that feasibility
    // refinements see the settled mean powers.
    DualEvaluation settle(const std::vector<double>& lambda, int max_rounds = 40,
                          double tol = 1e-9) {
        PhiPlateau plateau;
        DualEvaluation ev = run(lambda, true);
        for (int r = 1; r < max_rounds && !plateau.done(phi_gap, tol); ++r) {
            ev = run(lambda, true);
        }
        return ev;
    }
};

}  // namespace detail

// Two-way direct transmission between the sources, relay unused.
inline PolicyEvaluation direct_transmission_policy(std::span<const NetworkCsi> samples,
                                                   const ScenarioConfig& config) {
    const QosPair qos = make_qos_pair(config.theta_a, config.theta_b);
    const Weights w{config.weight_a, config.weight_b()};
    const std::array<double, 3> budget{config.budget_a(), config.budget_b(), 0.0};

    PolicyEvaluation result;
    result.budget = budget;

    detail::DirectEvaluator eval(samples, budget);
    eval.qos = qos;
    eval.weights = w;
    eval.a_enabled = budget[0] > 0.0;
    eval.b_enabled = budget[1] > 0.0;

    if (!eval.a_enabled && !eval.b_enabled) {
        result.powers.assign(samples.size(), PowerVector{});
        result.rates.assign(samples.size(), RatePair{});
        result.converged = true;
        return result;
    }

    const std::size_t m = std::min<std::size_t>(samples.size(), 4096);
    std::vector<double> lambda0(3, 0.0);
    {
        detail::DirectEvaluator sub(samples.subspan(0, m), budget);
        sub.qos = qos;
        sub.weights = w;
        sub.a_enabled = eval.a_enabled;
        sub.b_enabled = eval.b_enabled;
        lambda0 = detail::coordinate_warm_start(sub, lambda0, 3);
        eval.phi1 = sub.phi1;
        eval.phi2 = sub.phi2;
    }

    SubgradientConfig scfg;
    scfg.power_tolerance = config.tolerance_power;
    scfg.step_scale.resize(3);
    for (int k = 0; k < 3; ++k) {
        scfg.step_scale[k] = 0.3 * std::max(lambda0[k], 1e-4) / std::max(budget[k], 1e-3);
    }

    DualAscentResult da = dual_ascent(
        [&](const std::vector<double>& l) { return eval.run(l); }, lambda0, scfg);

    // close any residual feasibility gap the diminishing steps left open
    std::vector<double> lambda = da.multipliers;
    DualEvaluation fin = eval.settle(lambda);
    const bool feasible = detail::adaptive_budget_polish(
        [&](const std::vector<double>& l) { return eval.settle(l); }, eval.budget, lambda, fin,
        config.tolerance_power, 0.35, 120);
    da.multipliers = lambda;
    da.converged = da.converged || feasible;
    fin = eval.run(da.multipliers, false);
    result.powers = eval.powers;
    result.rates = eval.rates;
    result.ec_a = effective_capacity(eval.rates_a, qos.theta_a);
    result.ec_b = effective_capacity(eval.rates_b, qos.theta_b);
    result.objective = w.a * result.ec_a + w.b * result.ec_b;
    for (int k = 0; k < 3; ++k) {
        result.mean_power[k] = fin.mean_power[k];
        result.multipliers[k] = da.multipliers[k];
    }
    result.iterations = da.iterations;
    result.converged = da.converged;
    return result;
}

// Constant transmit powers at the budget values; only the rates adapt.
inline PolicyEvaluation fixed_power_policy(std::span<const NetworkCsi> samples,
                                           const ScenarioConfig& config, ProtocolKind protocol) {
    const QosPair qos = make_qos_pair(config.theta_a, config.theta_b);
    const Weights w{config.weight_a, config.weight_b()};
    const PowerVector fixed{config.budget_a(), config.budget_b(), config.budget_r()};

    PolicyEvaluation result;
    result.budget = {fixed.pa, fixed.pb, fixed.pr};
    result.mean_power = result.budget;
    const std::size_t n = samples.size();
    result.powers.assign(n, fixed);
    result.rates.resize(n);
    result.converged = true;

    std::vector<double> ra(n), rb(n);
    if (protocol == ProtocolKind::ThreePhase) {
        for (std::size_t i = 0; i < n; ++i) {
            result.rates[i] = three_phase_max_rates(fixed, samples[i]);
            ra[i] = result.rates[i].ra;
            rb[i] = result.rates[i].rb;
        }
    } else {
        // rates adapt optimally at the fixed powers: serve the componentwise
        // rate caps when the sum constraint allows, otherwise the best point
        // on the sum-rate face (reached by time-sharing the two decode
        // orders); the face split depends on the rate expectations through
        // the effective-capacity weights, a small fixed point
        double phi1 = 1.0;
        double phi2 = 1.0;
        detail::PhiAccelerator phi_acc;
        detail::PhiPlateau plateau;
        const std::vector<double> no_lambda;
        for (int pass = 0; pass < 200; ++pass) {
            for (std::size_t i = 0; i < n; ++i) {
                const NetworkCsi& csi = samples[i];
                const RatePair caps = bc_max_rates(fixed.pr, csi);
                const double sum = 0.5 * capacity(csi.g1 * fixed.pa + csi.g2 * fixed.pb);
                double xa = std::min(0.5 * capacity(csi.g1 * fixed.pa), caps.ra);
                double xb = std::min(0.5 * capacity(csi.g2 * fixed.pb), caps.rb);
                if (xa + xb > sum) {
                    const double lo = std::max(0.0, sum - xb);
                    const double hi = std::min(xa, sum);
                    const double split = (qos.theta_b * sum + std::log(w.a * phi2 / (w.b * phi1))) /
                                         (qos.theta_a + qos.theta_b);
                    xa = std::clamp(split, lo, hi);
                    xb = sum - xa;
                }
                result.rates[i] = RatePair{xa, xb};
                ra[i] = xa;
                rb[i] = xb;
            }
            const double gap = phi_acc.update(phi1, phi2, mean_exp_neg(ra, qos.theta_a),
                                              mean_exp_neg(rb, qos.theta_b), no_lambda);
            result.iterations = pass + 1;
            if (plateau.done(gap, 1e-10)) break;
        }
    }
    result.ec_a = effective_capacity(ra, qos.theta_a);
    result.ec_b = effective_capacity(rb, qos.theta_b);
    result.objective = w.a * result.ec_a + w.b * result.ec_b;
    return result;
}

// Two-phase optimization with the static order rule: the source with the
// smaller weight is decoded first (ties decode A first).
inline PolicyEvaluation weight_based_partition_policy(std::span<const NetworkCsi> samples,
                                                      const ScenarioConfig& config) {
    const DecodeOrder order = config.weight_b() < config.weight_a ? DecodeOrder::DecodeBFirst
                                                                 : DecodeOrder::DecodeAFirst;
    return detail::run_two_phase(samples, config, order);
}

}  // namespace twr
