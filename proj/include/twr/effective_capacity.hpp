// Effective capacity and the statistical-QoS tail formulas. The service
// rates are i.i.d. across frames, so the effective capacity reduces to
// -(1/theta) ln E[exp(-theta R)].
#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace twr {

inline constexpr double kLn2 = 0.6931471805599453;

// Per-direction QoS exponents and their base-2 counterparts beta = theta/ln 2.
struct QosPair {
    double theta_a;
    double theta_b;

    double beta_a() const { return theta_a / kLn2; }
    double beta_b() const { return theta_b / kLn2; }
};

inline QosPair make_qos_pair(double theta_a, double theta_b) {
    if (!(theta_a > 0.0) || !(theta_b > 0.0)) {
        throw std::domain_error("make_qos_pair: QoS exponents must be positive");
    }
    return QosPair{theta_a, theta_b};
}

namespace detail {

inline QosPair swap_qos(const QosPair& q) { return QosPair{q.theta_b, q.theta_a}; }

// Pairwise reduction; the result does not depend on how callers might chunk
// the input, so parallel producers and the serial path agree bit-exactly.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace detail

// Mean of exp(-theta * r) with a max-shift so theta*r up to ~1e4 does not
// underflow the whole average.
inline double mean_exp_neg(std::span<const double> rates, double theta) {
    if (rates.empty()) throw std::domain_error("mean_exp_neg: empty rate sequence");
    double rmin = rates[0];
    for (double r : rates) rmin = std::min(rmin, r);
    std::vector<double> shifted(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) shifted[i] = std::exp(-theta * (rates[i] - rmin));
    const double mean = detail::pairwise_sum(shifted) / static_cast<double>(rates.size());
    // Return log-domain pieces recombined: exp(-theta*rmin) * mean, but the
    // caller wants the plain value; keep it in log space where possible.
    return std::exp(-theta * rmin) * mean;
}

// Effective capacity of an i.i.d. service-rate sample, bits per channel use.
inline double effective_capacity(std::span<const double> rates, double theta) {
    if (rates.empty()) throw std::domain_error("effective_capacity: empty rate sequence");
    if (!(theta > 0.0)) throw std::domain_error("effective_capacity: theta must be positive");
    double rmin = rates[0];
    for (double r : rates) rmin = std::min(rmin, r);
    std::vector<double> shifted(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) shifted[i] = std::exp(-theta * (rates[i] - rmin));
    const double mean = detail::pairwise_sum(shifted) / static_cast<double>(rates.size());
    return rmin - std::log(mean) / theta;
}

// Weighted sum effective capacity, the optimization objective.
inline double weighted_sum_objective(std::span<const double> rates_a, std::span<const double> rates_b,
                                     const QosPair& qos, double weight_a, double weight_b) {
    if (weight_a < 0.0 || weight_b < 0.0 || std::abs(weight_a + weight_b - 1.0) > 1e-12) {
        throw std::domain_error("weighted_sum_objective: weights must be nonnegative and sum to 1");
    }
    return weight_a * effective_capacity(rates_a, qos.theta_a) +
           weight_b * effective_capacity(rates_b, qos.theta_b);
}

// P{Q > q_th} ~ exp(-theta q_th)
inline double queue_violation_prob(double theta, double q_th) {
    return std::exp(-theta * q_th);
}

// P{D > d_th} ~ exp(-theta phi(theta) d_th); phi is the arrival-process
// effective bandwidth at theta, supplied by the caller.
inline double delay_violation_prob(double theta, double phi_theta, double d_th) {
    return std::exp(-theta * phi_theta * d_th);
}

}  // namespace twr
