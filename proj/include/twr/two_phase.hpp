// Jointly optimal power and rate adaptation for the two-phase protocol.
// Each channel state picks a successive-decoding order in the MAC slot, source
// powers follow from the KKT system of that order, and the relay power serves
// the broadcast-slot rate constraints. Two nested multiplier loops: per-state
// rate multipliers inside, global power multipliers outside.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "twr/channel.hpp"
#include "twr/effective_capacity.hpp"
#include "twr/numerics.hpp"
#include "twr/policy.hpp"
#include "twr/rate_region.hpp"
#include "twr/scenario.hpp"

namespace twr {

inline constexpr double kDelta2 = 2.0 * kLn2;   // delta = 2 ln 2

struct TwoPhaseDuals {
    double lambda_a = 0.0;   // power multipliers, shared by all states
    double lambda_b = 0.0;
    double lambda_r = 0.0;
    double phi1 = 1.0;       // E[exp(-theta_A R_A)] under the current policy
    double phi2 = 1.0;
    double mu_a = 0.0;       // rate multipliers of the state under evaluation
    double mu_b = 0.0;
};

// Marginal utility of direction A's rate term; nonpositive blocks the direction.
inline double bc_margin_a(const TwoPhaseDuals& d, const Weights& w) {
    return w.a / d.phi1 - d.mu_a;
}

inline double bc_margin_b(const TwoPhaseDuals& d, const Weights& w) {
    return w.b / d.phi2 - d.mu_b;
}

// Water-filling coefficients of the source stationarity conditions; callers
// check the margin is positive first.
inline double alpha_a(const TwoPhaseDuals& d, const Weights& w) {
    return kDelta2 * d.lambda_a / bc_margin_a(d, w);
}

inline double alpha_b(const TwoPhaseDuals& d, const Weights& w) {
    return kDelta2 * d.lambda_b / bc_margin_b(d, w);
}

namespace detail {

inline TwoPhaseDuals swap_two_phase(const TwoPhaseDuals& d) {
    return TwoPhaseDuals{d.lambda_b, d.lambda_a, d.lambda_r, d.phi2, d.phi1, d.mu_b, d.mu_a};
}

}  // namespace detail

// Per-state dual objective contribution of a decode order at fixed powers
// (power-cost terms are order-independent and omitted).
inline double order_objective(const NetworkCsi& csi, const PowerVector& p, const TwoPhaseDuals& d,
                              const QosPair& qos, const Weights& w, DecodeOrder order) {
    const RatePair r = mac_corner_rates(p, csi, order);
    return -bc_margin_a(d, w) / qos.theta_a * std::exp(-qos.theta_a * r.ra) -
           bc_margin_b(d, w) / qos.theta_b * std::exp(-qos.theta_b * r.rb);
}

// Threshold on the B-source gain separating the two decoding orders at fixed
// source powers: below it, A's signal is decoded first. Absent when no
// positive solution exists.
inline std::optional<double> partition_threshold_g2(double g1, const PowerVector& p, double K,
                                                    const QosPair& qos,
                                                    const RootSearchConfig& cfg = {}) {
    if (!(K >= 0.0) || g1 <= 0.0 || p.pa <= 0.0 || p.pb <= 0.0) return std::nullopt;
    const double ba = qos.beta_a();
    const double bb = qos.beta_b();
    const double sa = g1 * p.pa;
    const double na = std::pow(1.0 + sa, -0.5 * ba);
    auto lhs = [&](double x) {
        const double num = std::pow(1.0 + sa / (1.0 + x * p.pb), -0.5 * ba) - na;
        const double den = std::pow(1.0 + x * p.pb / (1.0 + sa), -0.5 * bb) -
                           std::pow(1.0 + x * p.pb, -0.5 * bb);
        return num / den;
    };
    // lhs rises from (ba/bb)(1+sa)^{-ba/2} toward infinity
    if (K <= (ba / bb) * na * (1.0 + 1e-12)) return std::nullopt;
    const double lo = 1e-7 / p.pb;
    double hi = std::max(1.0, sa / p.pb);
    for (int grow = 0; lhs(hi) <= K; ++grow) {
        if (grow > 60) return std::nullopt;
        hi *= 4.0;
    }
    auto f = [&](double x) { return lhs(x) - K; };
    const double r = stationary_then_bisect(f, lo, hi, cfg);
    if (std::abs(f(r)) > 1e-6 * std::max(1.0, K)) return std::nullopt;
    return r;
}

// Companion threshold on the A-source gain: above it, A's signal is decoded
// first.
inline std::optional<double> partition_threshold_g1(double g2, const PowerVector& p, double K,
                                                    const QosPair& qos,
                                                    const RootSearchConfig& cfg = {}) {
    if (!(K > 0.0) || g2 <= 0.0 || p.pa <= 0.0 || p.pb <= 0.0) return std::nullopt;
    const double ba = qos.beta_a();
    const double bb = qos.beta_b();
    const double sb = g2 * p.pb;
    const double nb = std::pow(1.0 + sb, -0.5 * bb);
    auto lhs = [&](double x) {
        const double num = std::pow(1.0 + x * p.pa / (1.0 + sb), -0.5 * ba) -
                           std::pow(1.0 + x * p.pa, -0.5 * ba);
        const double den = std::pow(1.0 + sb / (1.0 + x * p.pa), -0.5 * bb) - nb;
        return num / den;
    };
    const double lo = 1e-7 / p.pa;
    double hi = std::max(1.0, sb / p.pa);
    for (int grow = 0; lhs(hi) >= K && grow <= 60; ++grow) hi *= 4.0;
    auto f = [&](double x) { return lhs(x) - K; };
    const double r = stationary_then_bisect(f, lo, hi, cfg);
    if (std::abs(f(r)) > 1e-6 * std::max(1.0, K)) return std::nullopt;
    return r;
}

// Successive-decoding order for one state given the current policy iterate.
// Threshold rule where a threshold exists; otherwise the two candidate
// contributions are compared directly (ties decode A first).
inline DecodeOrder decode_order(const NetworkCsi& csi, const PowerVector& p,
                                const TwoPhaseDuals& d, const QosPair& qos, const Weights& w,
                                const RootSearchConfig& cfg = {}) {
    const double ma = bc_margin_a(d, w);
    const double mb = bc_margin_b(d, w);
    if (ma > 0.0 && mb > 0.0) {
        const double K = qos.theta_a * mb / (qos.theta_b * ma);
        if (auto th = partition_threshold_g2(csi.g1, p, K, qos, cfg)) {
            return csi.g2 < *th ? DecodeOrder::DecodeAFirst : DecodeOrder::DecodeBFirst;
        }
        if (auto th = partition_threshold_g1(csi.g2, p, K, qos, cfg)) {
            return csi.g1 > *th ? DecodeOrder::DecodeAFirst : DecodeOrder::DecodeBFirst;
        }
    }
    return order_objective(csi, p, d, qos, w, DecodeOrder::DecodeAFirst) >=
                   order_objective(csi, p, d, qos, w, DecodeOrder::DecodeBFirst)
               ? DecodeOrder::DecodeAFirst
               : DecodeOrder::DecodeBFirst;
}

namespace detail {

// Source powers when A is decoded first. P_B comes from the stationarity of
// the profile in P_B (the inner maximization over P_A already applied); the
// profile is concave, so its derivative crosses zero once. Wherever P_A
// clamps to zero the interior form joins the single-user form continuously.
inline PowerVector source_alloc_a_first(const NetworkCsi& csi, const TwoPhaseDuals& d,
                                        const QosPair& qos, const Weights& w,
                                        const RootSearchConfig& cfg) {
    const double ma = bc_margin_a(d, w);
    const double mb = bc_margin_b(d, w);
    const double ba = qos.beta_a();
    const double bb = qos.beta_b();

    const bool a_open = ma > 0.0 && csi.g1 > 0.0;
    const double coef_a =
        a_open && d.lambda_a >= 1e-300 ? std::pow(alpha_a(d, w), -2.0 / (ba + 2.0)) : 0.0;
    auto pa_given_pb = [&](double pb) {
        if (!a_open) return 0.0;
        if (d.lambda_a < 1e-300) return kMaxPower;
        const double i = (1.0 + csi.g2 * pb) / csi.g1;
        return std::clamp(coef_a * std::pow(i, ba / (ba + 2.0)) - i, 0.0, kMaxPower);
    };

    PowerVector p;
    if (mb <= 0.0 || csi.g2 <= 0.0) {
        p.pa = pa_given_pb(0.0);
        return p;
    }
    if (d.lambda_b < 1e-300) {
        p.pb = kMaxPower;
        p.pa = pa_given_pb(p.pb);
        return p;
    }

    const double a2 = alpha_b(d, w);
    const bool cross = a_open && d.lambda_a >= 1e-300;
    const double c = cross ? d.lambda_a * csi.g2 / (d.lambda_b * csi.g1) : 0.0;
    const double k1 = cross ? std::pow(alpha_a(d, w) / csi.g1, -2.0 / (ba + 2.0)) : 0.0;
    auto f = [&](double x) {
        const double ib = 1.0 + csi.g2 * x;
        double v = csi.g2 / a2 * std::pow(ib, -0.5 * (bb + 2.0)) - 1.0;
        if (cross && pa_given_pb(x) > 0.0) {
            v += c * (1.0 - k1 * std::pow(ib, -2.0 / (ba + 2.0)));
        }
        return v;
    };
    p.pb = std::min(bisect_root(f, 0.0, 1.0, cfg), kMaxPower);
    p.pa = pa_given_pb(p.pb);
    return p;
}

}  // namespace detail

// MAC-phase source powers for a given decode order; the mirrored order reuses
// the A-first solver with every role swapped.
inline PowerVector source_alloc(const NetworkCsi& csi, const TwoPhaseDuals& d, const QosPair& qos,
                                const Weights& w, DecodeOrder order,
                                const RootSearchConfig& cfg = {}) {
    if (order == DecodeOrder::DecodeAFirst) {
        return detail::source_alloc_a_first(csi, d, qos, w, cfg);
    }
    const PowerVector s =
        detail::source_alloc_a_first(detail::swap_sources(csi), detail::swap_two_phase(d),
                                     detail::swap_qos(qos), detail::swap_weights(w), cfg);
    return PowerVector{s.pb, s.pa, 0.0};
}

// Broadcast-slot relay power: root of the relay stationarity condition, zero
// when the condition is already nonpositive at the origin.
inline double relay_alloc(const NetworkCsi& csi, double mu_a, double mu_b, double lambda_r,
                          const QosPair& qos, const RootSearchConfig& cfg = {}) {
    const double at_zero = mu_a * csi.g2 + mu_b * csi.g1 - kDelta2 * lambda_r;
    if (at_zero <= 0.0) return 0.0;
    if (lambda_r < 1e-300) return kMaxPower;
    const double ea = -0.5 * (qos.beta_a() + 2.0);
    const double eb = -0.5 * (qos.beta_b() + 2.0);
    auto f = [&](double x) {
        return mu_a * csi.g2 * std::pow(1.0 + csi.g2 * x, ea) +
               mu_b * csi.g1 * std::pow(1.0 + csi.g1 * x, eb) - kDelta2 * lambda_r;
    };
    return std::min(bisect_root(f, 0.0, 1.0, cfg), kMaxPower);
}

struct MuPair {
    double a = 0.0;
    double b = 0.0;
};

// Subgradient of the per-state rate constraints: positive when the MAC rate
// sits below the broadcast cap (constraint slack), negative when it exceeds it.
inline MuPair mu_subgradient(const NetworkCsi& csi, const RatePair& mac_rates, double pr,
                             const QosPair& qos) {
    const RatePair caps = bc_max_rates(pr, csi);
    return MuPair{
        std::exp(-qos.theta_a * mac_rates.ra) - std::exp(-qos.theta_a * caps.ra),
        std::exp(-qos.theta_b * mac_rates.rb) - std::exp(-qos.theta_b * caps.rb)};
}

// One projected subgradient step on the per-state rate multipliers.
inline MuPair update_mu(const NetworkCsi& csi, MuPair mu, const RatePair& mac_rates, double pr,
                        const QosPair& qos, MuPair step) {
    const MuPair g = mu_subgradient(csi, mac_rates, pr, qos);
    return MuPair{std::max(0.0, mu.a - step.a * g.a), std::max(0.0, mu.b - step.b * g.b)};
}

// Vanishing-QoS limit of the per-state allocation (weighted ergodic capacity).
// Covers the A-decoded-first case; the opposite ordering of the rate margins
// is handled by the mirrored call.
inline PowerVector ergodic_two_phase_alloc(const NetworkCsi& csi, const TwoPhaseDuals& d,
                                           const Weights& w) {
    const double xa = w.a - d.mu_a;
    const double xb = w.b - d.mu_b;
    if (xa > xb) {
        const PowerVector s = ergodic_two_phase_alloc(detail::swap_sources(csi),
                                                      detail::swap_two_phase(d),
                                                      detail::swap_weights(w));
        return PowerVector{s.pb, s.pa, s.pr};
    }

    auto pa_given_pb = [&](double pb) {
        if (xa <= 0.0 || csi.g1 <= 0.0) return 0.0;
        if (d.lambda_a < 1e-300) return kMaxPower;
        return std::clamp(xa / (kDelta2 * d.lambda_a) - (1.0 + csi.g2 * pb) / csi.g1, 0.0,
                          kMaxPower);
    };
    auto pb_alone = [&]() {
        // B alone on the MAC slot: plain water-filling at margin xb
        if (xb <= 0.0 || csi.g2 <= 0.0) return 0.0;
        if (d.lambda_b < 1e-300) return kMaxPower;
        return std::clamp(xb / (kDelta2 * d.lambda_b) - 1.0 / csi.g2, 0.0, kMaxPower);
    };

    PowerVector p;
    const double denom = d.lambda_b * csi.g1 - d.lambda_a * csi.g2;
    if (xb <= 0.0 || csi.g2 <= 0.0) {
        p.pa = pa_given_pb(0.0);
    } else if (xb > xa && denom > 0.0) {
        p.pb = std::clamp(csi.g1 * (xb - xa) / (kDelta2 * denom) - 1.0 / csi.g2, 0.0, kMaxPower);
        p.pa = pa_given_pb(p.pb);
        if (p.pa <= 0.0 && p.pb > 0.0) {
            // interior assumption on P_A failed; fall back to the corner
            const double corner = pb_alone();
            if (pa_given_pb(corner) <= 0.0) p.pb = corner;
        }
    } else if (xb > xa) {
        p.pb = pb_alone();
    } else if (denom >= 0.0) {
        // equal margins: the whole sum-rate budget goes to the cheaper gain
        p.pa = pa_given_pb(0.0);
    } else {
        p.pb = pb_alone();
    }

    const double at_zero = d.mu_a * csi.g2 + d.mu_b * csi.g1 - kDelta2 * d.lambda_r;
    if (at_zero <= 0.0) {
        p.pr = 0.0;
    } else if (d.lambda_r < 1e-300) {
        p.pr = kMaxPower;
    } else {
        const double c1 = d.lambda_r * csi.g1 * csi.g2;
        const double c2 = d.lambda_r * (csi.g1 + csi.g2) -
                          csi.g1 * csi.g2 * (d.mu_a + d.mu_b) / kDelta2;
        const double c3 = d.lambda_r - (d.mu_a * csi.g2 + d.mu_b * csi.g1) / kDelta2;
        p.pr = std::clamp((-c2 + std::sqrt(c2 * c2 - 4.0 * c1 * c3)) / (2.0 * c1), 0.0, kMaxPower);
    }
    return p;
}

namespace detail {

// Inner fixed point for one lambda: per-state order, source and relay powers,
// and rate-multiplier updates with per-state sign-history step control, plus a
// damped refresh of the rate-term expectations between passes.
struct TwoPhaseEvaluator {
    std::span<const NetworkCsi> samples;
    QosPair qos = make_qos_pair(1.0, 1.0);
    Weights weights;
    std::array<double, 3> budget{};
    RootSearchConfig root_cfg;
    bool a_enabled = true;
    bool b_enabled = true;
    double phi1 = 1.0;
    double phi2 = 1.0;
    double mu_tolerance = 1e-6;
    double phi_tolerance = 1e-6;    // relative change per refresh
    detail::PhiAccelerator phi_acc;
    int max_inner_passes = 60;      // per-state multiplier iterations
    int max_phi_rounds = 60;
    std::optional<DecodeOrder> forced_order;   // static partition baselines

    std::vector<double> mu_a, mu_b, step_a, step_b;
    std::vector<signed char> sign_a, sign_b;
    std::vector<char> pinned;   // states solved by bisection, see one_round
    std::vector<PowerVector> powers;
    std::vector<RatePair> rates;   // served rates: MAC corner capped by the BC limit
    std::vector<DecodeOrder> orders;
    std::vector<double> rates_a, rates_b, mac_a, mac_b, cap_a, cap_b, pa_buf, pb_buf, pr_buf;
    long long total_passes = 0;

    TwoPhaseEvaluator(std::span<const NetworkCsi> s, const std::array<double, 3>& bud)
        : samples(s), budget(bud) {
        const std::size_t n = s.size();
        mu_a.assign(n, 0.0);
        mu_b.assign(n, 0.0);
        step_a.assign(n, 0.5);
        step_b.assign(n, 0.5);
        sign_a.assign(n, 0);
        sign_b.assign(n, 0);
        pinned.assign(n, 0);
        powers.assign(n, PowerVector{bud[0], bud[1], 0.0});
        rates.resize(n);
        orders.assign(n, DecodeOrder::DecodeAFirst);
        rates_a.resize(n);
        rates_b.resize(n);
        mac_a.resize(n);
        mac_b.resize(n);
        cap_a.resize(n);
        cap_b.resize(n);
        pa_buf.resize(n);
        pb_buf.resize(n);
        pr_buf.resize(n);
    }

    static void adapt_step(double& step, signed char& memory, double g) {
        const signed char s = g > 0.0 ? 1 : (g < 0.0 ? -1 : 0);
        if (s != 0 && memory != 0) {
            // asymmetric factors: any oscillation pattern shrinks the step
            step = s == memory ? std::min(step * 1.2, 1e12) : std::max(step * 0.5, 1e-12);
        }
        if (s != 0) memory = s;
    }

    // One round at frozen expectations: every state's rate multipliers are
    // iterated to tolerance locally (states couple only through phi), the
    // expectations are refreshed afterwards with damping.
    double one_round(const std::vector<double>& lambda) {
        TwoPhaseDuals base;
        // a disabled source sees an effectively infinite power price; an
        // enabled one keeps a tiny floor so the allocation stays finite and
        // continuous when the outer iteration touches zero
        base.lambda_a = a_enabled ? std::max(lambda[0], 1e-12) : 1e30;
        base.lambda_b = b_enabled ? std::max(lambda[1], 1e-12) : 1e30;
        base.lambda_r = std::max(lambda[2], 1e-12);
        base.phi1 = phi1;
        base.phi2 = phi2;
        const double mu_cap_a = weights.a / phi1;
        const double mu_cap_b = weights.b / phi2;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const NetworkCsi& csi = samples[i];
            TwoPhaseDuals d = base;
            PowerVector p;
            RatePair corner, caps;
            DecodeOrder order = orders[i];

            // evaluates the per-state allocation at trial multipliers and
            // returns the rate-constraint subgradient; the decode order is the
            // one whose own allocation yields the larger dual contribution, so
            // the result is a deterministic function of the multipliers
            auto contribution = [&](DecodeOrder o, PowerVector& pv) {
                pv = source_alloc(csi, d, qos, weights, o, root_cfg);
                const RatePair r = mac_corner_rates(pv, csi, o);
                return -bc_margin_a(d, weights) / qos.theta_a * std::exp(-qos.theta_a * r.ra) -
                       bc_margin_b(d, weights) / qos.theta_b * std::exp(-qos.theta_b * r.rb) -
                       base.lambda_a * pv.pa - base.lambda_b * pv.pb;
            };
            // trial rate multipliers arrive normalized by their caps w/phi, so
            // the iteration state stays O(1) at every QoS exponent and keeps
            // its meaning across expectation refreshes
            auto probe = [&](double xa, double xb) {
                d.mu_a = xa * mu_cap_a;
                d.mu_b = xb * mu_cap_b;
                if (forced_order) {
                    order = *forced_order;
                    p = source_alloc(csi, d, qos, weights, order, root_cfg);
                } else {
                    PowerVector p1, p2;
                    const double v1 = contribution(DecodeOrder::DecodeAFirst, p1);
                    const double v2 = contribution(DecodeOrder::DecodeBFirst, p2);
                    order = v1 >= v2 ? DecodeOrder::DecodeAFirst : DecodeOrder::DecodeBFirst;
                    p = v1 >= v2 ? p1 : p2;
                }
                p.pr = relay_alloc(csi, d.mu_a, d.mu_b, base.lambda_r, qos, root_cfg);
                corner = mac_corner_rates(p, csi, order);
                caps = bc_max_rates(p.pr, csi);
                powers[i] = p;
                return mu_subgradient(csi, corner, p.pr, qos);
            };

            bool settled = pinned[i] != 0;
            if (!settled) {
                for (int it = 0; it < max_inner_passes; ++it) {
                    const MuPair g = probe(mu_a[i], mu_b[i]);
                    adapt_step(step_a[i], sign_a[i], g.a);
                    adapt_step(step_b[i], sign_b[i], g.b);
                    // a multiplier at its cap w/phi (normalized 1) zeroes its
                    // rate margin, which blocks the direction and leaves the
                    // constraint slack; larger values are never optimal, so
                    // project onto that box
                    const double na =
                        std::min(std::max(0.0, mu_a[i] - step_a[i] * g.a), 1.0);
                    const double nb =
                        std::min(std::max(0.0, mu_b[i] - step_b[i] * g.b), 1.0);
                    const double delta =
                        std::max(std::abs(na - mu_a[i]), std::abs(nb - mu_b[i]));
                    mu_a[i] = na;
                    mu_b[i] = nb;
                    if (delta < mu_tolerance) {
                        settled = true;
                        break;
                    }
                }
            }
            if (!settled) pinned[i] = 1;
            if (pinned[i]) {
                // The per-state problem is nonconvex, so the allocation can
                // jump as a function of the multipliers; across such a jump no
                // multiplier zeroes the subgradient and the projected iteration
                // orbits instead of settling. Each subgradient component is
                // still increasing in its own multiplier, so alternating
                // bisections land on the feasible side of the jump, starting
                // from a bracket grown around the previous solution. Once a
                // state needed this solver it keeps it.
                auto warm_root = [&](auto&& g, double x0, double cap) {
                    double lo = 0.0, hi = cap;
                    double w = std::max(1e-6, 1e-3 * cap);
                    if (g(x0) >= 0.0) {
                        hi = x0;
                        while (hi > 0.0) {
                            const double cand = std::max(0.0, hi - w);
                            if (g(cand) < 0.0) {
                                lo = cand;
                                break;
                            }
                            hi = cand;
                            w *= 4.0;
                        }
                        if (hi <= 0.0) return 0.0;
                    } else {
                        lo = x0;
                        while (true) {
                            const double cand = std::min(cap, lo + w);
                            if (g(cand) >= 0.0) {
                                hi = cand;
                                break;
                            }
                            if (cand >= cap) return cap;
                            lo = cand;
                            w *= 4.0;
                        }
                    }
                    for (int k = 0; k < 60 && hi - lo > 1e-8; ++k) {
                        const double mid = 0.5 * (lo + hi);
                        (g(mid) >= 0.0 ? hi : lo) = mid;
                    }
                    return hi;
                };
                mu_b[i] = warm_root([&](double x) { return probe(mu_a[i], x).b; },
                                    std::min(mu_b[i], 1.0), 1.0);
                mu_a[i] = warm_root([&](double x) { return probe(x, mu_b[i]).a; },
                                    std::min(mu_a[i], 1.0), 1.0);
                probe(mu_a[i], mu_b[i]);
            }
            orders[i] = order;
            mac_a[i] = corner.ra;
            mac_b[i] = corner.rb;
            cap_a[i] = caps.ra;
            cap_b[i] = caps.rb;
            rates[i] = RatePair{std::min(corner.ra, caps.ra), std::min(corner.rb, caps.rb)};
            rates_a[i] = rates[i].ra;
            rates_b[i] = rates[i].rb;
            pa_buf[i] = p.pa;
            pb_buf[i] = p.pb;
            pr_buf[i] = p.pr;
        }
        const double dphi = phi_acc.update(phi1, phi2, mean_exp_neg(mac_a, qos.theta_a),
                                           mean_exp_neg(mac_b, qos.theta_b), lambda);
        ++total_passes;
        return dphi;
    }

    DualEvaluation run(const std::vector<double>& lambda, bool full = true) {
        // probe evaluations (full = false) only need mean powers at bisection
        // accuracy, so they get a reduced round cap
        const int cap = full ? max_phi_rounds : std::min(max_phi_rounds, 8);
        PhiPlateau plateau;
        for (int round = 0; round < cap; ++round) {
            if (plateau.done(one_round(lambda), phi_tolerance)) break;
        }
        return assemble(lambda);
    }

    // Single interleaved iteration: the expectations converge together with
    // the outer power multipliers instead of being re-solved per step.
    DualEvaluation step(const std::vector<double>& lambda) {
        one_round(lambda);
        return assemble(lambda);
    }

    DualEvaluation assemble(const std::vector<double>& lambda) {
        const double n = static_cast<double>(samples.size());
        DualEvaluation ev;
        ev.mean_power = {pairwise_sum(pa_buf) / n, pairwise_sum(pb_buf) / n,
                         pairwise_sum(pr_buf) / n};
        ev.budget = {budget[0], budget[1], budget[2]};
        // dual value from the uncapped MAC rates; the broadcast constraints
        // enter through their multiplier terms
        const double ec_a = effective_capacity(mac_a, qos.theta_a);
        const double ec_b = effective_capacity(mac_b, qos.theta_b);
        double slack = 0.0;
        const double mu_cap_a = weights.a / phi1;
        const double mu_cap_b = weights.b / phi2;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            slack += mu_a[i] * mu_cap_a / qos.theta_a *
                     (std::exp(-qos.theta_a * mac_a[i]) - std::exp(-qos.theta_a * cap_a[i]));
            slack += mu_b[i] * mu_cap_b / qos.theta_b *
                     (std::exp(-qos.theta_b * mac_b[i]) - std::exp(-qos.theta_b * cap_b[i]));
        }
        ev.dual_value = weights.a * ec_a + weights.b * ec_b + slack / n;
        for (int k = 0; k < 3; ++k) {
            ev.dual_value += lambda[k] * (ev.budget[k] - ev.mean_power[k]);
        }
        return ev;
    }
};

// Nested-loop optimization, optionally pinned to one decode order everywhere.
inline PolicyEvaluation run_two_phase(std::span<const NetworkCsi> samples,
                                      const ScenarioConfig& config,
                                      std::optional<DecodeOrder> forced_order) {
    const QosPair qos = make_qos_pair(config.theta_a, config.theta_b);
    const Weights w{config.weight_a, config.weight_b()};
    const std::array<double, 3> budget{config.budget_a(), config.budget_b(), config.budget_r()};

    PolicyEvaluation result;
    result.budget = budget;

    const bool a_on = budget[0] > 0.0;
    const bool b_on = budget[1] > 0.0;
    if (budget[2] <= 0.0 || (!a_on && !b_on)) {
        // without relay power there is no broadcast slot, hence no traffic
        result.powers.assign(samples.size(), PowerVector{});
        result.rates.assign(samples.size(), RatePair{});
        result.converged = true;
        return result;
    }

    detail::TwoPhaseEvaluator eval(samples, budget);
    eval.qos = qos;
    eval.weights = w;
    eval.root_cfg.tolerance = config.tolerance_root;
    eval.a_enabled = a_on;
    eval.b_enabled = b_on;
    eval.forced_order = forced_order;

    // Coarse warm start on a prefix subsample, seeded at water-filling scale
    // so the first probes stay clear of the degenerate zero-multiplier state.
    const std::size_t m = std::min<std::size_t>(samples.size(), 1024);
    std::vector<double> lambda0(3, 0.0);
    for (int k = 0; k < 3; ++k) {
        if (budget[k] > 0.0) lambda0[k] = 1.0 / (kDelta2 * (1.0 + budget[k]));
    }
    {
        detail::TwoPhaseEvaluator sub(samples.subspan(0, m), budget);
        sub.qos = qos;
        sub.weights = w;
        sub.root_cfg.tolerance = std::max(config.tolerance_root, 1e-6);
        sub.a_enabled = a_on;
        sub.b_enabled = b_on;
        sub.forced_order = forced_order;
        sub.mu_tolerance = 1e-4;
        sub.max_inner_passes = 40;
        sub.phi_tolerance = 1e-5;
        sub.max_phi_rounds = 25;
        // multiplicative fixed point on the budget ratios; one expectation
        // refresh per update, so the whole state co-converges
        DualEvaluation ev = sub.run(lambda0, true);
        adaptive_budget_polish([&](const std::vector<double>& l) { return sub.run(l, true); },
                               budget, lambda0, ev, 1e-2, 0.7, 120);
        eval.phi1 = sub.phi1;
        eval.phi2 = sub.phi2;
        for (std::size_t i = 0; i < m; ++i) {
            eval.mu_a[i] = sub.mu_a[i];
            eval.mu_b[i] = sub.mu_b[i];
            eval.step_a[i] = sub.step_a[i];
            eval.step_b[i] = sub.step_b[i];
            eval.pinned[i] = sub.pinned[i];
            eval.powers[i] = sub.powers[i];
            eval.orders[i] = sub.orders[i];
        }
    }

    SubgradientConfig scfg;
    scfg.power_tolerance = config.tolerance_power;
    // mean power responds to its multiplier with elasticity ~ 2/(beta + 2),
    // so at large QoS exponents the subgradient phase barely moves and the
    // adaptive multiplicative polish does the real work; cap the iterations
    // accordingly instead of burning the full budget
    scfg.max_iterations = static_cast<int>(
        std::clamp(1500.0 / (1.0 + std::max(qos.beta_a(), qos.beta_b())), 60.0, 500.0));
    scfg.step_scale.resize(3);
    for (int k = 0; k < 3; ++k) {
        // lambda/P approximates the local inverse sensitivity of the mean
        // power, so the first step is near a Newton step
        scfg.step_scale[k] = std::max(lambda0[k], 1e-4) / std::max(budget[k], 1e-3);
    }

    // settle the expectations once at the warm-start multipliers, then let
    // them track the outer iteration one refresh per step
    eval.run(lambda0, true);
    DualAscentResult da = dual_ascent(
        [&](const std::vector<double>& l) { return eval.step(l); }, lambda0, scfg);

    // close any residual feasibility gap the diminishing steps left open
    std::vector<double> lambda = da.multipliers;
    DualEvaluation fin = eval.run(lambda, true);
    const bool feasible = adaptive_budget_polish(
        [&](const std::vector<double>& l) { return eval.run(l, true); }, budget, lambda, fin,
        config.tolerance_power, 0.7, 120);
    da.multipliers = lambda;
    da.converged = da.converged || feasible;
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

}  // namespace detail

// Full nested-loop optimization of the two-phase policy on a frozen sample set.
inline PolicyEvaluation optimize_two_phase(std::span<const NetworkCsi> samples,
                                           const ScenarioConfig& config) {
    return detail::run_two_phase(samples, config, std::nullopt);
}

}  // namespace twr
