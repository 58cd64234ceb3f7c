// Jointly optimal power and rate adaptation for the three-phase protocol.
// Per channel-state region the allocation is either closed-form QoS
// water-filling or the root of a one-dimensional stationarity equation; the
// global power multipliers are found by projected subgradient on the dual.
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

namespace twr {

inline constexpr double kSigma3 = 3.0 * kLn2;   // sigma = 3 ln 2

struct ThreePhaseDuals {
    double lambda_a = 0.0;
    double lambda_b = 0.0;
    double lambda_r = 0.0;
    double phi1 = 1.0;   // E[exp(-theta_A R_A)] over all regions
    double phi2 = 1.0;   // E[exp(-theta_B R_B)]
};

namespace detail {

// [ coef^{-t/(beta+t)} g^{-beta/(beta+t)} - 1/g ]+ , the QoS water-filling
// closed form with time-slot count t; coef = t ln2 * lambda * phi / weight.
inline double qos_waterfill(double coef, double beta, double t, double g) {
    if (g <= 0.0) return 0.0;
    if (coef <= 0.0) return kMaxPower;
    const double p = std::pow(coef, -t / (beta + t)) * std::pow(g, -beta / (beta + t)) - 1.0 / g;
    return std::clamp(p, 0.0, kMaxPower);
}

inline ThreePhaseDuals swap_roles(const ThreePhaseDuals& d) {
    return ThreePhaseDuals{d.lambda_b, d.lambda_a, d.lambda_r, d.phi2, d.phi1};
}

}  // namespace detail

// Region R1: both directions transmit directly, relay silent.
inline PowerVector alloc_r1(const NetworkCsi& csi, const ThreePhaseDuals& d, const QosPair& qos,
                            const Weights& w) {
    PowerVector p;
    p.pa = detail::qos_waterfill(kSigma3 * d.lambda_a * d.phi1 / w.a, qos.beta_a(), 3.0, csi.g3);
    p.pb = detail::qos_waterfill(kSigma3 * d.lambda_b * d.phi2 / w.b, qos.beta_b(), 3.0, csi.g3);
    p.pr = 0.0;
    return p;
}

// Stationarity residual of the relayed-A direction in region R2 at source
// power x, with the relay power tied so the decode-and-forward min is balanced.
inline double r2_stationarity(double x, const NetworkCsi& csi, const ThreePhaseDuals& d,
                              const QosPair& qos, const Weights& w) {
    const double lead = w.a * csi.g1 / (kSigma3 * d.phi1) *
                        std::pow(1.0 + csi.g1 * x, -(qos.beta_a() + 3.0) / 3.0);
    const double relay_cost = d.lambda_r * (csi.g1 - csi.g3) /
                              (csi.g2 * (1.0 + csi.g3 * x) * (1.0 + csi.g3 * x));
    return lead - relay_cost - d.lambda_a;
}

// Region R2: A relayed, B direct.
inline PowerVector alloc_r2(const NetworkCsi& csi, const ThreePhaseDuals& d, const QosPair& qos,
                            const Weights& w, const RootSearchConfig& root_cfg = {}) {
    PowerVector p;
    p.pb = detail::qos_waterfill(kSigma3 * d.lambda_b * d.phi2 / w.b, qos.beta_b(), 3.0, csi.g3);
    if (csi.g2 <= 0.0) {
        // Dead BC link to B: relaying cannot help, fall back to direct form.
        p.pa = detail::qos_waterfill(kSigma3 * d.lambda_a * d.phi1 / w.a, qos.beta_a(), 3.0, csi.g3);
        p.pr = 0.0;
        return p;
    }
    auto f = [&](double x) { return r2_stationarity(x, csi, d, qos, w); };
    p.pa = std::min(bisect_root(f, 0.0, 1.0, root_cfg), kMaxPower);
    p.pr = (csi.g1 - csi.g3) * p.pa / (csi.g2 * (1.0 + csi.g3 * p.pa));
    return p;
}

// Region R3 is region R2 with the two source roles swapped.
inline PowerVector alloc_r3(const NetworkCsi& csi, const ThreePhaseDuals& d, const QosPair& qos,
                            const Weights& w, const RootSearchConfig& root_cfg = {}) {
    const PowerVector swapped =
        alloc_r2(detail::swap_sources(csi), detail::swap_roles(d), detail::swap_qos(qos),
                 detail::swap_weights(w), root_cfg);
    return PowerVector{swapped.pb, swapped.pa, swapped.pr};
}

// Stationarity residual for region R4 with tau <= 1 (solve in P_A; P_B and
// P_R follow from the balanced-bottleneck ties).
inline double r4_stationarity(double x, double tau, const NetworkCsi& csi, const ThreePhaseDuals& d,
                              const QosPair& qos, const Weights& w) {
    const double u = 1.0 + (1.0 - tau) * csi.g3 * x;
    const double pb = tau * x / u;
    const double lead_a = w.a * csi.g1 / (kSigma3 * d.phi1) *
                          std::pow(1.0 + csi.g1 * x, -(qos.beta_a() + 3.0) / 3.0);
    const double lead_b = tau * w.b * csi.g2 / (kSigma3 * d.phi2 * u * u) *
                          std::pow(1.0 + csi.g2 * pb, -(qos.beta_b() + 3.0) / 3.0);
    const double relay_cost = d.lambda_r * (csi.g1 - csi.g3) /
                              (csi.g2 * (1.0 + csi.g3 * x) * (1.0 + csi.g3 * x));
    const double b_cost = tau * d.lambda_b / (u * u);
    return lead_a + lead_b - relay_cost - b_cost - d.lambda_a;
}

// Region R4: both directions relayed.
inline PowerVector alloc_r4(const NetworkCsi& csi, const ThreePhaseDuals& d, const QosPair& qos,
                            const Weights& w, const RootSearchConfig& root_cfg = {}) {
    const double tau = csi.g1 * (csi.g1 - csi.g3) / (csi.g2 * (csi.g2 - csi.g3));
    if (tau > 1.0) {
        const PowerVector swapped =
            alloc_r4(detail::swap_sources(csi), detail::swap_roles(d), detail::swap_qos(qos),
                     detail::swap_weights(w), root_cfg);
        return PowerVector{swapped.pb, swapped.pa, swapped.pr};
    }
    PowerVector p;
    auto f = [&](double x) { return r4_stationarity(x, tau, csi, d, qos, w); };
    p.pa = std::min(bisect_root(f, 0.0, 1.0, root_cfg), kMaxPower);
    const double u = 1.0 + (1.0 - tau) * csi.g3 * p.pa;
    p.pb = tau * p.pa / u;
    p.pr = (csi.g1 - csi.g3) * p.pa / (csi.g2 * (1.0 + csi.g3 * p.pa));
    return p;
}

// Boundary rates for an allocation; identical to the protocol's rate region
// maximum by construction of the allocation ties.
inline RatePair assign_rates(const NetworkCsi& csi, const PowerVector& p, ThreePhaseRegion) {
    return three_phase_max_rates(p, csi);
}

// theta -> 0 limit of alloc_r1: classical water-filling on the direct link.
inline PowerVector ergodic_alloc_r1(const NetworkCsi& csi, const ThreePhaseDuals& d,
                                    const Weights& w) {
    PowerVector p;
    const double level_a = d.lambda_a > 0.0 ? w.a / (kSigma3 * d.lambda_a) : kMaxPower;
    const double level_b = d.lambda_b > 0.0 ? w.b / (kSigma3 * d.lambda_b) : kMaxPower;
    if (csi.g3 > 0.0) {
        p.pa = std::clamp(level_a - 1.0 / csi.g3, 0.0, kMaxPower);
        p.pb = std::clamp(level_b - 1.0 / csi.g3, 0.0, kMaxPower);
    }
    p.pr = 0.0;
    return p;
}

// Per-state dual contribution of an allocation, used to select among the
// candidate stationarity structures of the shared-relay-power problem.
inline double three_phase_state_value(const NetworkCsi& csi, const PowerVector& p,
                                      const ThreePhaseDuals& d, const QosPair& qos,
                                      const Weights& w) {
    const RatePair r = three_phase_max_rates(p, csi);
    return -w.a / (qos.theta_a * d.phi1) * std::exp(-qos.theta_a * r.ra) -
           w.b / (qos.theta_b * d.phi2) * std::exp(-qos.theta_b * r.rb) - d.lambda_a * p.pa -
           d.lambda_b * p.pb - d.lambda_r * p.pr;
}

// A's rate limited by the combined direct-plus-relay hop while its one-hop cap
// stays slack: both the source and the relay margin are stationary, which
// pins the rate in closed form. Returns pa and pr; the caller supplies pb.
inline PowerVector alloc_bc_limited_a(const NetworkCsi& csi, const ThreePhaseDuals& d,
                                      const QosPair& qos, const Weights& w) {
    PowerVector p;
    if (csi.g2 <= 0.0 || csi.g3 <= 0.0 || d.lambda_a <= 0.0 || d.lambda_r <= 0.0) return p;
    const double aa = kSigma3 * d.lambda_a * d.phi1 / w.a;
    const double ar = kSigma3 * d.lambda_r * d.phi1 / w.a;
    const double lead = csi.g2 * csi.g3 / (aa * ar);
    if (lead <= 1.0) return p;
    const double ra = std::log2(lead) / (3.0 + 2.0 * qos.beta_a());
    const double e = std::exp2(-qos.beta_a() * ra);
    p.pa = std::clamp((e * csi.g3 / aa - 1.0) / csi.g3, 0.0, kMaxPower);
    p.pr = std::clamp((e * csi.g2 / ar - 1.0) / csi.g2, 0.0, kMaxPower);
    return p;
}

inline PowerVector alloc_bc_limited_b(const NetworkCsi& csi, const ThreePhaseDuals& d,
                                      const QosPair& qos, const Weights& w) {
    const PowerVector s = alloc_bc_limited_a(detail::swap_sources(csi), detail::swap_roles(d),
                                             detail::swap_qos(qos), detail::swap_weights(w));
    return PowerVector{0.0, s.pa, s.pr};
}

// A balanced while B is combined-hop limited: the shared relay power sits on
// A's balancing tie but also carries value for B, which shifts A's
// stationarity; B's rate and power follow in closed form from its margins.
inline PowerVector alloc_balanced_a_limited_b(const NetworkCsi& csi, const ThreePhaseDuals& d,
                                              const QosPair& qos, const Weights& w,
                                              const RootSearchConfig& root_cfg = {}) {
    PowerVector p;
    if (csi.g1 <= csi.g3 || csi.g2 <= 0.0 || csi.g3 <= 0.0 || d.lambda_b <= 0.0) return p;
    const double ab = kSigma3 * d.lambda_b * d.phi2 / w.b;
    auto solve_b = [&](double pr, double& rb) {
        const double bonus = capacity(csi.g1 * pr);
        rb = std::max(0.0, (std::log2(csi.g3 / ab) + bonus) / (3.0 + qos.beta_b()));
        const double e = std::exp2(-qos.beta_b() * rb);
        double pb = (e * csi.g3 / ab - 1.0) / csi.g3;
        if (pb <= 0.0) {
            pb = 0.0;
            rb = bonus / 3.0;
        }
        return std::min(pb, kMaxPower);
    };
    auto f = [&](double x) {
        const double u = 1.0 + csi.g3 * x;
        const double pr = (csi.g1 - csi.g3) * x / (csi.g2 * u);
        const double dpr = (csi.g1 - csi.g3) / (csi.g2 * u * u);
        double rb;
        solve_b(pr, rb);
        const double lead = w.a * csi.g1 / (kSigma3 * d.phi1) *
                            std::pow(1.0 + csi.g1 * x, -(qos.beta_a() + 3.0) / 3.0);
        const double benefit_b = w.b * std::exp2(-qos.beta_b() * rb) * csi.g1 /
                                 (kSigma3 * d.phi2 * (1.0 + csi.g1 * pr));
        return lead + (benefit_b - d.lambda_r) * dpr - d.lambda_a;
    };
    p.pa = std::min(bisect_root(f, 0.0, 1.0, root_cfg), kMaxPower);
    p.pr = (csi.g1 - csi.g3) * p.pa / (csi.g2 * (1.0 + csi.g3 * p.pa));
    double rb;
    p.pb = solve_b(p.pr, rb);
    return p;
}

inline PowerVector alloc_balanced_b_limited_a(const NetworkCsi& csi, const ThreePhaseDuals& d,
                                              const QosPair& qos, const Weights& w,
                                              const RootSearchConfig& root_cfg = {}) {
    const PowerVector s =
        alloc_balanced_a_limited_b(detail::swap_sources(csi), detail::swap_roles(d),
                                   detail::swap_qos(qos), detail::swap_weights(w), root_cfg);
    return PowerVector{s.pb, s.pa, s.pr};
}

// Both directions combined-hop limited: the relay power is stationary on the
// joint margin of the two directions, and each source's rate and power follow
// in closed form from its own margins at that relay power.
inline PowerVector alloc_bc_limited_both(const NetworkCsi& csi, const ThreePhaseDuals& d,
                                         const QosPair& qos, const Weights& w,
                                         const RootSearchConfig& root_cfg = {}) {
    PowerVector p;
    if (csi.g1 <= 0.0 || csi.g2 <= 0.0 || csi.g3 <= 0.0) return p;
    if (d.lambda_a <= 0.0 || d.lambda_b <= 0.0 || d.lambda_r <= 0.0) return p;
    const double aa = kSigma3 * d.lambda_a * d.phi1 / w.a;
    const double ab = kSigma3 * d.lambda_b * d.phi2 / w.b;
    auto side = [&](double pr, double cross, double a_coef, double beta, double& rate) {
        const double bonus = capacity(cross * pr);
        rate = std::max(0.0, (std::log2(csi.g3 / a_coef) + bonus) / (3.0 + beta));
        const double e = std::exp2(-beta * rate);
        double power = (e * csi.g3 / a_coef - 1.0) / csi.g3;
        if (power <= 0.0) {
            power = 0.0;
            rate = bonus / 3.0;
        }
        return std::min(power, kMaxPower);
    };
    auto f = [&](double pr) {
        double ra, rb;
        side(pr, csi.g2, aa, qos.beta_a(), ra);
        side(pr, csi.g1, ab, qos.beta_b(), rb);
        const double benefit_a = w.a * std::exp2(-qos.beta_a() * ra) * csi.g2 /
                                 (kSigma3 * d.phi1 * (1.0 + csi.g2 * pr));
        const double benefit_b = w.b * std::exp2(-qos.beta_b() * rb) * csi.g1 /
                                 (kSigma3 * d.phi2 * (1.0 + csi.g1 * pr));
        return benefit_a + benefit_b - d.lambda_r;
    };
    p.pr = std::min(bisect_root(f, 0.0, 1.0, root_cfg), kMaxPower);
    double ra, rb;
    p.pa = side(p.pr, csi.g2, aa, qos.beta_a(), ra);
    p.pb = side(p.pr, csi.g1, ab, qos.beta_b(), rb);
    return p;
}

// The relay's broadcast power serves both directions at once, so the per-state
// optimum can sit on several stationarity structures: relay silent, one
// direction's decode-forward bottleneck balanced while the other is one-hop
// limited (on either its cross link or the direct link), one direction
// combined-hop limited, or both bottlenecks balanced. Every structure is
// closed-form or a 1-D root; scoring each candidate with the true rate
// function and keeping the best solves the concave per-state problem exactly.
inline PowerVector three_phase_allocate(const NetworkCsi& csi, const ThreePhaseDuals& d,
                                        const QosPair& qos, const Weights& w,
                                        const RootSearchConfig& root_cfg = {}) {
    const bool relay_a = csi.g1 > csi.g3;
    const bool relay_b = csi.g2 > csi.g3;
    PowerVector cand[13];
    int n = 0;
    cand[n++] = alloc_r1(csi, d, qos, w);
    const double direct_pa = cand[0].pa;
    const double direct_pb = cand[0].pb;
    if (relay_a) {
        const PowerVector bal = alloc_r2(csi, d, qos, w, root_cfg);
        cand[n++] = bal;
        const PowerVector lim = alloc_bc_limited_a(csi, d, qos, w);
        cand[n++] = PowerVector{lim.pa, direct_pb, lim.pr};
        if (relay_b) {
            const double pb2 = detail::qos_waterfill(kSigma3 * d.lambda_b * d.phi2 / w.b,
                                                     qos.beta_b(), 3.0, csi.g2);
            cand[n++] = PowerVector{bal.pa, pb2, bal.pr};
            cand[n++] = PowerVector{lim.pa, pb2, lim.pr};
        }
    }
    if (relay_b) {
        const PowerVector bal = alloc_r3(csi, d, qos, w, root_cfg);
        cand[n++] = bal;
        const PowerVector lim = alloc_bc_limited_b(csi, d, qos, w);
        cand[n++] = PowerVector{direct_pa, lim.pb, lim.pr};
        if (relay_a) {
            const double pa1 = detail::qos_waterfill(kSigma3 * d.lambda_a * d.phi1 / w.a,
                                                     qos.beta_a(), 3.0, csi.g1);
            cand[n++] = PowerVector{pa1, bal.pb, bal.pr};
            cand[n++] = PowerVector{pa1, lim.pb, lim.pr};
        }
    }
    if (relay_a && relay_b) {
        cand[n++] = alloc_r4(csi, d, qos, w, root_cfg);
        cand[n++] = alloc_balanced_a_limited_b(csi, d, qos, w, root_cfg);
        cand[n++] = alloc_balanced_b_limited_a(csi, d, qos, w, root_cfg);
        cand[n++] = alloc_bc_limited_both(csi, d, qos, w, root_cfg);
    }

    int best = 0;
    double best_value = three_phase_state_value(csi, cand[0], d, qos, w);
    for (int i = 1; i < n; ++i) {
        const double v = three_phase_state_value(csi, cand[i], d, qos, w);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    return cand[best];
}

namespace detail {

struct ThreePhaseEvaluator {
    std::span<const NetworkCsi> samples;
    QosPair qos;
    Weights weights;
    std::array<double, 3> budget;
    RootSearchConfig root_cfg;
    bool relay_enabled = true;   // false when the relay has no power budget
    bool a_enabled = true;
    bool b_enabled = true;
    double phi1 = 1.0;
    double phi2 = 1.0;
    PhiAccelerator phi_acc;
    double phi_gap = 1.0;    // relative log gap at the last refresh

    std::vector<PowerVector> powers;
    std::vector<RatePair> rates;
    std::vector<double> rates_a, rates_b, pa_buf, pb_buf, pr_buf;

    explicit ThreePhaseEvaluator(std::span<const NetworkCsi> s) : samples(s) {
        const std::size_t n = s.size();
        powers.resize(n);
        rates.resize(n);
        rates_a.resize(n);
        rates_b.resize(n);
        pa_buf.resize(n);
        pb_buf.resize(n);
        pr_buf.resize(n);
    }

    DualEvaluation run(const std::vector<double>& lambda, bool update_phi = true) {
        ThreePhaseDuals d;
        d.lambda_a = lambda[0];
        d.lambda_b = lambda[1];
        d.lambda_r = lambda[2];
        d.phi1 = phi1;
        d.phi2 = phi2;
        // A disabled source is modeled by an effectively infinite power price,
        // which drives its closed forms to zero.
        ThreePhaseDuals dm = d;
        if (!a_enabled) dm.lambda_a = 1e30;
        if (!b_enabled) dm.lambda_b = 1e30;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const NetworkCsi& csi = samples[i];
            PowerVector p;
            if (!relay_enabled) {
                p = alloc_r1(csi, dm, qos, weights);   // relay silent everywhere
            } else {
                const ThreePhaseRegion reg = classify_three_phase_region(csi);
                if (reg == ThreePhaseRegion::R4 && !a_enabled) {
                    p = alloc_r3(csi, dm, qos, weights, root_cfg);
                } else if (reg == ThreePhaseRegion::R4 && !b_enabled) {
                    p = alloc_r2(csi, dm, qos, weights, root_cfg);
                } else {
                    p = three_phase_allocate(csi, dm, qos, weights, root_cfg);
                }
            }
            powers[i] = p;
            rates[i] = three_phase_max_rates(p, csi);
            rates_a[i] = rates[i].ra;
            rates_b[i] = rates[i].rb;
            pa_buf[i] = p.pa;
            pb_buf[i] = p.pb;
            pr_buf[i] = p.pr;
        }
        const double n = static_cast<double>(samples.size());
        DualEvaluation ev;
        ev.mean_power = {pairwise_sum(pa_buf) / n, pairwise_sum(pb_buf) / n,
                         pairwise_sum(pr_buf) / n};
        ev.budget = {budget[0], budget[1], budget[2]};
        const double ec_a = effective_capacity(rates_a, qos.theta_a);
        const double ec_b = effective_capacity(rates_b, qos.theta_b);
        ev.dual_value = weights.a * ec_a + weights.b * ec_b;
        for (int k = 0; k < 3; ++k) ev.dual_value += lambda[k] * (ev.budget[k] - ev.mean_power[k]);
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

// Full dual-loop optimization of the three-phase policy on a frozen sample set.
inline PolicyEvaluation optimize_three_phase(std::span<const NetworkCsi> samples,
                                             const ScenarioConfig& config) {
    const QosPair qos = make_qos_pair(config.theta_a, config.theta_b);
    const Weights w{config.weight_a, config.weight_b()};
    const std::array<double, 3> budget{config.budget_a(), config.budget_b(), config.budget_r()};

    PolicyEvaluation result;
    result.budget = budget;

    detail::ThreePhaseEvaluator eval(samples);
    eval.qos = qos;
    eval.weights = w;
    eval.budget = budget;
    eval.root_cfg.tolerance = config.tolerance_root;
    eval.a_enabled = budget[0] > 0.0;
    eval.b_enabled = budget[1] > 0.0;
    eval.relay_enabled = budget[2] > 0.0;

    if (!eval.a_enabled && !eval.b_enabled) {
        result.powers.assign(samples.size(), PowerVector{});
        result.rates.assign(samples.size(), RatePair{});
        result.converged = true;
        return result;
    }

    // Warm start on a prefix subsample, then subgradient on the full set.
    const std::size_t m = std::min<std::size_t>(samples.size(), 4096);
    std::vector<double> lambda0(3, 0.0);
    for (int k = 0; k < 3; ++k) {
        if (budget[k] > 0.0) lambda0[k] = 1.0 / (kSigma3 * (1.0 + budget[k]));
    }
    {
        detail::ThreePhaseEvaluator sub(samples.subspan(0, m));
        sub.qos = qos;
        sub.weights = w;
        sub.budget = budget;
        sub.root_cfg = eval.root_cfg;
        sub.a_enabled = eval.a_enabled;
        sub.b_enabled = eval.b_enabled;
        sub.relay_enabled = eval.relay_enabled;
        // multiplicative fixed point on the budget ratios; each update rides
        // on one expectation refresh, so the whole state co-converges
        DualEvaluation ev = sub.settle(lambda0, 20, 1e-6);
        detail::adaptive_budget_polish(
            [&](const std::vector<double>& l) { return sub.settle(l, 20, 1e-6); }, budget,
            lambda0, ev, 1e-2, 0.7, 120);
        eval.phi1 = sub.phi1;
        eval.phi2 = sub.phi2;
    }

    SubgradientConfig scfg;
    scfg.power_tolerance = config.tolerance_power;
    scfg.max_iterations = 500;
    scfg.step_scale.resize(3);
    for (int k = 0; k < 3; ++k) {
        scfg.step_scale[k] = std::max(lambda0[k], 1e-4) / std::max(budget[k], 1e-3);
    }

    DualAscentResult da = dual_ascent([&](const std::vector<double>& l) { return eval.run(l); },
                                      lambda0, scfg);

    // close any residual feasibility gap the diminishing steps left open
    std::vector<double> lambda = da.multipliers;
    DualEvaluation fin = eval.settle(lambda);
    const bool feasible = detail::adaptive_budget_polish(
        [&](const std::vector<double>& l) { return eval.settle(l); }, budget, lambda, fin,
        config.tolerance_power, 0.35, 200);
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

}  // namespace twr
