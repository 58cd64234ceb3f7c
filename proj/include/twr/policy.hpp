// Result of evaluating one transmission policy on a frozen channel sample set.
#pragma once

#include <array>
#include <vector>

#include "twr/rate_region.hpp"

namespace twr {

struct Weights {
    double a = 0.5;
    double b = 0.5;
};

namespace detail {

inline Weights swap_weights(const Weights& w) { return Weights{w.b, w.a}; }

}  // namespace detail

struct PolicyEvaluation {
    std::vector<PowerVector> powers;   // per-sample allocation
    std::vector<RatePair> rates;       // per-sample service rates (time fraction included)
    double ec_a = 0.0;
    double ec_b = 0.0;
    double objective = 0.0;            // weighted sum effective capacity
    std::array<double, 3> mean_power{0.0, 0.0, 0.0};
    std::array<double, 3> budget{0.0, 0.0, 0.0};
    std::array<double, 3> multipliers{0.0, 0.0, 0.0};   // lambda_A, lambda_B, lambda_R
    bool converged = false;
    int iterations = 0;

    std::array<double, 3> relative_residuals() const {
        std::array<double, 3> r{};
        for (int k = 0; k < 3; ++k) {
            const double pbar = budget[k] > 1e-30 ? budget[k] : 1.0;
            r[k] = (mean_power[k] - budget[k]) / pbar;
        }
        return r;
    }
};

}  // namespace twr
