#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "twr/channel.hpp"

using namespace twr;

TEST_CASE("fading spec rate parameters") {
    const FadingSpec mid = make_fading_spec(1.0, 4.0);
    CHECK(mid.rate1 == doctest::Approx(1.0));
    CHECK(mid.rate2 == doctest::Approx(1.0));
    CHECK(mid.rate3 == doctest::Approx(16.0));

    const FadingSpec near = make_fading_spec(0.5, 4.0);
    CHECK(near.rate1 == doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(near.rate2 == doctest::Approx(5.0625).epsilon(1e-12));
    CHECK(near.rate3 == doctest::Approx(16.0));
    // cross-check the power by the logarithm identity nu*ln d
    CHECK(std::log(near.rate1) == doctest::Approx(4.0 * std::log(0.5)).epsilon(1e-12));

    // midpoint symmetry for arbitrary exponent
    const FadingSpec odd = make_fading_spec(1.0, 2.7);
    CHECK(odd.rate1 == doctest::Approx(odd.rate2).epsilon(1e-15));

    CHECK_THROWS_AS(make_fading_spec(0.0, 4.0), std::domain_error);
    CHECK_THROWS_AS(make_fading_spec(2.0, 4.0), std::domain_error);
    CHECK_THROWS_AS(make_fading_spec(1.0, 0.0), std::domain_error);
}

TEST_CASE("sampling is deterministic and batch-invariant") {
    const FadingSpec spec = make_fading_spec(0.8, 4.0);
    const auto a = sample_csi(spec, 100, 42);
    const auto b = sample_csi(spec, 100, 42);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].g1 == b[i].g1);
        CHECK(a[i].g2 == b[i].g2);
        CHECK(a[i].g3 == b[i].g3);
    }
    // sample k is the same alone or inside a batch
    const auto big = sample_csi(spec, 1000, 42);
    CHECK(big[57].g1 == a[57].g1);
    CHECK(big[57].g3 == a[57].g3);
    const NetworkCsi lone = sample_csi_at(spec, 42, 999);
    CHECK(lone.g2 == big[999].g2);
    // a different seed changes the draw
    const auto c = sample_csi(spec, 1, 43);
    CHECK(c[0].g1 != a[0].g1);
    CHECK_THROWS_AS(sample_csi(spec, 0, 1), std::domain_error);
}

TEST_CASE("sample moments match the exponential rates") {
    const FadingSpec spec = make_fading_spec(1.0, 4.0);
    const std::size_t n = 1000000;
    double s1 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const NetworkCsi csi = sample_csi_at(spec, 7, i);
        s1 += csi.g1;
        s3 += csi.g3;
    }
    CHECK(s1 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(s3 / n == doctest::Approx(0.0625).epsilon(0.016));
    CHECK(std::abs(s3 / n - 0.0625) < 0.001);
}

TEST_CASE("empirical CDF Kolmogorov-Smirnov") {
    const FadingSpec spec = make_fading_spec(1.3, 4.0);
    const std::size_t n = 1000000;
    const double rates[3] = {spec.rate1, spec.rate2, spec.rate3};
    for (int comp = 0; comp < 3; ++comp) {
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) {
            const NetworkCsi csi = sample_csi_at(spec, 11, i);
            xs[i] = comp == 0 ? csi.g1 : comp == 1 ? csi.g2 : csi.g3;
        }
        std::sort(xs.begin(), xs.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double model = 1.0 - std::exp(-rates[comp] * xs[i]);
            const double lo = static_cast<double>(i) / n;
            const double hi = static_cast<double>(i + 1) / n;
            ks = std::max({ks, std::abs(model - lo), std::abs(model - hi)});
        }
        CHECK(ks < 0.005);
    }
}

TEST_CASE("mirrored geometry swaps the relay links") {
    const FadingSpec fwd = make_fading_spec(0.7, 4.0);
    const FadingSpec rev = make_fading_spec(1.3, 4.0);
    CHECK(fwd.rate1 == doctest::Approx(rev.rate2).epsilon(1e-12));
    CHECK(fwd.rate2 == doctest::Approx(rev.rate1).epsilon(1e-12));
    CHECK(fwd.rate3 == rev.rate3);
    // seed-matched moments: the g1 population under d equals g2 under 2-d
    const std::size_t n = 200000;
    double m1f = 0.0, m2r = 0.0, m3f = 0.0, m3r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const NetworkCsi a = sample_csi_at(fwd, 5, i);
        const NetworkCsi b = sample_csi_at(rev, 5, i);
        m1f += a.g1;
        m2r += b.g2;
        m3f += a.g3;
        m3r += b.g3;
    }
    CHECK(m1f / n == doctest::Approx(m2r / n).epsilon(0.01));
    CHECK(m3f == m3r);   // same rate, same uniforms, identical draws
}

TEST_CASE("region classification partitions the state space") {
    CHECK(classify_three_phase_region({0.5, 0.5, 1.0}) == ThreePhaseRegion::R1);
    CHECK(classify_three_phase_region({2.0, 0.5, 1.0}) == ThreePhaseRegion::R2);
    CHECK(classify_three_phase_region({0.5, 2.0, 1.0}) == ThreePhaseRegion::R3);
    CHECK(classify_three_phase_region({2.0, 3.0, 1.0}) == ThreePhaseRegion::R4);
    // ties go to the direct-transmission side
    CHECK(classify_three_phase_region({1.0, 0.5, 1.0}) == ThreePhaseRegion::R1);
    CHECK(classify_three_phase_region({1.0, 2.0, 1.0}) == ThreePhaseRegion::R3);

    const FadingSpec spec = make_fading_spec(1.0, 4.0);
    for (std::size_t i = 0; i < 10000; ++i) {
        const NetworkCsi csi = sample_csi_at(spec, 3, i);
        int hits = 0;
        hits += (csi.g1 > csi.g3 && csi.g2 > csi.g3) ? 1 : 0;
        hits += (csi.g1 > csi.g3 && csi.g2 <= csi.g3) ? 1 : 0;
        hits += (csi.g1 <= csi.g3 && csi.g2 > csi.g3) ? 1 : 0;
        hits += (csi.g1 <= csi.g3 && csi.g2 <= csi.g3) ? 1 : 0;
        CHECK(hits == 1);
    }
}
