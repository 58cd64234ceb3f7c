#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "twr/channel.hpp"
#include "twr/effective_capacity.hpp"

using namespace twr;

TEST_CASE("constant service gives back the constant") {
    const std::vector<double> flat(100, 2.0);
    CHECK(effective_capacity(flat, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
    const std::vector<double> zero(10, 0.0);
    CHECK(effective_capacity(zero, 3.0) == doctest::Approx(0.0));
}

TEST_CASE("two-point service") {
    const std::vector<double> rates{0.0, 2.0};
    const double expect = -std::log(0.5 * (1.0 + std::exp(-2.0)));
    CHECK(effective_capacity(rates, 1.0) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(effective_capacity(rates, 1.0) == doctest::Approx(0.5662191695169727).epsilon(1e-12));
    // cross-check with a large equiprobable resample
    std::vector<double> big(1000000);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = (i % 2) ? 2.0 : 0.0;
    CHECK(effective_capacity(big, 1.0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("no underflow at extreme exponents") {
    const std::vector<double> rates{10.0, 12.0, 11.0};
    const double ec = effective_capacity(rates, 1000.0);   // theta*R ~ 1e4
    CHECK(std::isfinite(ec));
    CHECK(ec == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(std::isfinite(mean_exp_neg(rates, 1000.0)));
}

TEST_CASE("domain errors") {
    const std::vector<double> empty;
    CHECK_THROWS_AS(effective_capacity(empty, 1.0), std::domain_error);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(effective_capacity(one, 0.0), std::domain_error);
    CHECK_THROWS_AS(make_qos_pair(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(weighted_sum_objective(one, one, make_qos_pair(1, 1), 0.7, 0.2),
                    std::domain_error);
}

namespace {

std::vector<double> fading_rates(std::size_t n, std::uint64_t seed) {
    const FadingSpec spec = make_fading_spec(1.0, 4.0);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = std::log2(1.0 + 5.0 * sample_csi_at(spec, seed, i).g1);
    return r;
}

}  // namespace

TEST_CASE("Jensen bound and monotonicity in the exponent") {
    const std::vector<double> rates = fading_rates(20000, 9);
    const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / rates.size();
    double prev = mean + 1e-12;
    for (double theta : {1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0}) {
        const double ec = effective_capacity(rates, theta);
        CHECK(ec <= mean + 1e-12);
        CHECK(ec <= prev + 1e-12);
        prev = ec;
    }
}

TEST_CASE("small and large exponent limits") {
    const std::vector<double> rates = fading_rates(20000, 10);
    const double n = static_cast<double>(rates.size());
    const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    var /= n;
    for (double theta : {1e-6, 1e-5, 1e-4}) {
        CHECK(std::abs(effective_capacity(rates, theta) - mean) <= theta * var + 1e-12);
    }
    const double rmin = *std::min_element(rates.begin(), rates.end());
    CHECK(effective_capacity(rates, 1000.0) ==
          doctest::Approx(rmin).epsilon(0.01));
}

TEST_CASE("weighted sum objective") {
    const std::vector<double> ra = fading_rates(5000, 11);
    const std::vector<double> rb = fading_rates(5000, 12);
    const QosPair qos = make_qos_pair(1.5, 1.5);
    CHECK(weighted_sum_objective(ra, rb, qos, 1.0, 0.0) ==
          doctest::Approx(effective_capacity(ra, qos.theta_a)).epsilon(1e-14));
    // symmetric inputs, equal weights: equals the common effective capacity
    CHECK(weighted_sum_objective(ra, ra, qos, 0.5, 0.5) ==
          doctest::Approx(effective_capacity(ra, qos.theta_a)).epsilon(1e-14));
    const double mix = weighted_sum_objective(ra, rb, qos, 0.6, 0.4);
    CHECK(mix == doctest::Approx(0.6 * effective_capacity(ra, 1.5) +
                                 0.4 * effective_capacity(rb, 1.5)).epsilon(1e-14));
}

TEST_CASE("expectation is partition independent") {
    const std::vector<double> rates = fading_rates(12345, 13);
    const double whole = mean_exp_neg(rates, 2.0);
    // serial accumulation in a different association order
    double serial = 0.0;
    for (double r : rates) serial += std::exp(-2.0 * r);
    serial /= rates.size();
    CHECK(whole == doctest::Approx(serial).epsilon(1e-13));
}

TEST_CASE("tail probability formulas") {
    CHECK(queue_violation_prob(1.0, 0.0) == 1.0);
    CHECK(queue_violation_prob(1.0, std::log(100.0)) == doctest::Approx(0.01).epsilon(1e-14));
    double prev = 1.0;
    for (double theta : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double p = queue_violation_prob(theta, 1.0);
        CHECK(p < prev);
        prev = p;
    }
    CHECK(delay_violation_prob(0.7, 1.3, 0.0) == 1.0);
    CHECK(delay_violation_prob(2.0, 1.0, 0.9) ==
          doctest::Approx(queue_violation_prob(2.0, 0.9)).epsilon(1e-15));
    CHECK(delay_violation_prob(0.5, 2.0, std::log(10.0)) == doctest::Approx(0.1).epsilon(1e-14));
}
