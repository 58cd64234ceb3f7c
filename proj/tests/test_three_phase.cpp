#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "grid_oracle.hpp"
#include "twr/channel.hpp"
#include "twr/scenario.hpp"
#include "twr/three_phase.hpp"

using namespace twr;

namespace {

const QosPair kUnitQos = make_qos_pair(1.0, 1.0);
const Weights kWeights{0.6, 0.4};

}  // namespace

TEST_CASE("direct-region allocation matches the grid oracle") {
    const NetworkCsi csi{0.2, 0.3, 1.0};
    ThreePhaseDuals d;
    d.lambda_a = 0.05;
    d.lambda_b = 0.05;
    d.phi1 = 0.8;
    d.phi2 = 0.8;
    const PowerVector p = alloc_r1(csi, d, kUnitQos, kWeights);
    const auto best = oracle::grid_max_2d(
        [&](double pa, double pb) {
            return oracle::three_phase_state_value(csi, {pa, pb, 0.0}, d, kUnitQos, kWeights);
        },
        60.0, 60.0);
    CHECK(p.pa == doctest::Approx(best.x).epsilon(1e-3));
    CHECK(p.pb == doctest::Approx(best.y).epsilon(1e-3));
    const double v = oracle::three_phase_state_value(csi, p, d, kUnitQos, kWeights);
    CHECK(v >= best.value - 1e-6);
    CHECK(p.pr == 0.0);
}

TEST_CASE("direct-region cutoff and vanishing-QoS reduction") {
    // price above the water level: zero power
    ThreePhaseDuals d;
    d.lambda_a = 10.0;
    d.phi1 = 1.0;
    const QosPair tiny = make_qos_pair(1e-8, 1e-8);
    const NetworkCsi csi{0.1, 0.1, 1.0};
    CHECK(alloc_r1(csi, d, tiny, kWeights).pa == 0.0);
    // vanishing exponent joins the classical water-filling form
    d.lambda_a = 0.05;
    d.lambda_b = 0.08;
    const PowerVector qos_limit = alloc_r1(csi, d, tiny, kWeights);
    const PowerVector classic = ergodic_alloc_r1(csi, d, kWeights);
    CHECK(qos_limit.pa == doctest::Approx(classic.pa).epsilon(1e-6));
    CHECK(qos_limit.pb == doctest::Approx(classic.pb).epsilon(1e-6));
}

TEST_CASE("classical water-filling closed form") {
    ThreePhaseDuals d;
    d.lambda_a = 0.1;
    const NetworkCsi csi{0.1, 0.1, 1.0};
    const PowerVector p = ergodic_alloc_r1(csi, d, kWeights);
    CHECK(p.pa == doctest::Approx(1.8853900817779268).epsilon(1e-12));
    // cutoff
    ThreePhaseDuals expensive = d;
    expensive.lambda_a = 5.0;
    CHECK(ergodic_alloc_r1(csi, expensive, kWeights).pa == 0.0);
    // grid cross-check of the ergodic per-state trade
    const auto best = oracle::grid_max_1d(
        [&](double x) { return kWeights.a * capacity(csi.g3 * x) / 3.0 - d.lambda_a * x; }, 40.0);
    CHECK(p.pa == doctest::Approx(best.x).epsilon(1e-3));
}

TEST_CASE("relayed-A region matches the grid oracle") {
    const NetworkCsi csi{2.0, 0.5, 1.0};
    ThreePhaseDuals d;
    d.lambda_a = 0.1;
    d.lambda_b = 0.1;
    d.lambda_r = 0.05;
    const PowerVector p = alloc_r2(csi, d, kUnitQos, kWeights);
    CHECK(classify_three_phase_region(csi) == ThreePhaseRegion::R2);
    const auto best = oracle::grid_max_2d(
        [&](double pa, double pb) {
            const PowerVector trial{pa, pb, oracle::balanced_relay_power(csi, pa)};
            return oracle::three_phase_state_value(csi, trial, d, kUnitQos, kWeights);
        },
        40.0, 40.0);
    CHECK(p.pa == doctest::Approx(best.x).epsilon(1e-3));
    CHECK(p.pb == doctest::Approx(best.y).epsilon(1e-3));
    CHECK(p.pr == doctest::Approx(oracle::balanced_relay_power(csi, best.x)).epsilon(1e-3));
    const double v = oracle::three_phase_state_value(csi, p, d, kUnitQos, kWeights);
    CHECK(v >= best.value - 1e-6);
    // stationarity residual at the interior solution
    CHECK(std::abs(r2_stationarity(p.pa, csi, d, kUnitQos, kWeights)) <= 1e-8);
}

TEST_CASE("relayed-A region degenerate cases") {
    ThreePhaseDuals d;
    d.lambda_a = 5.0;   // prohibitive price
    d.lambda_b = 0.1;
    d.lambda_r = 0.05;
    const NetworkCsi csi{2.0, 0.5, 1.0};
    const PowerVector p = alloc_r2(csi, d, kUnitQos, kWeights);
    CHECK(p.pa == 0.0);
    CHECK(p.pr == 0.0);
    // on the region boundary the relayed form joins the direct closed form
    const NetworkCsi edge{1.0 + 1e-9, 0.5, 1.0};
    ThreePhaseDuals mild;
    mild.lambda_a = 0.1;
    mild.lambda_b = 0.1;
    mild.lambda_r = 0.05;
    const PowerVector relayed = alloc_r2(edge, mild, kUnitQos, kWeights);
    const PowerVector direct = alloc_r1(edge, mild, kUnitQos, kWeights);
    CHECK(relayed.pa == doctest::Approx(direct.pa).epsilon(1e-5));
    CHECK(relayed.pr <= 1e-6);
}

TEST_CASE("relayed-B region is the exact mirror") {
    const NetworkCsi csi{0.5, 2.0, 1.0};
    ThreePhaseDuals d;
    d.lambda_a = 0.1;
    d.lambda_b = 0.1;
    d.lambda_r = 0.05;
    CHECK(classify_three_phase_region(csi) == ThreePhaseRegion::R3);
    const PowerVector p = alloc_r3(csi, d, kUnitQos, kWeights);
    const NetworkCsi swapped{2.0, 0.5, 1.0};
    ThreePhaseDuals ds = d;
    std::swap(ds.lambda_a, ds.lambda_b);
    std::swap(ds.phi1, ds.phi2);
    const PowerVector q =
        alloc_r2(swapped, ds, make_qos_pair(kUnitQos.theta_b, kUnitQos.theta_a),
                 Weights{kWeights.b, kWeights.a});
    CHECK(p.pa == q.pb);
    CHECK(p.pb == q.pa);
    CHECK(p.pr == q.pr);
    // random relayed-B draws against the oracle
    oracle::DrawStream rng(404);
    for (int t = 0; t < 4; ++t) {
        const NetworkCsi state{rng.uniform(0.05, 0.9), rng.uniform(1.1, 4.0), 1.0};
        ThreePhaseDuals dr;
        dr.lambda_a = rng.uniform(0.02, 0.3);
        dr.lambda_b = rng.uniform(0.02, 0.3);
        dr.lambda_r = rng.uniform(0.01, 0.2);
        dr.phi1 = rng.uniform(0.5, 1.0);
        dr.phi2 = rng.uniform(0.5, 1.0);
        const PowerVector got = alloc_r3(state, dr, kUnitQos, kWeights);
        const auto best = oracle::grid_max_2d(
            [&](double pb, double pa) {
                const double pr = (state.g2 - state.g3) * pb / (state.g1 * (1.0 + state.g3 * pb));
                return oracle::three_phase_state_value(state, {pa, pb, pr}, dr, kUnitQos,
                                                       kWeights);
            },
            40.0, 40.0);
        CHECK(got.pb == doctest::Approx(best.x).epsilon(2e-3));
        CHECK(got.pa == doctest::Approx(best.y).epsilon(2e-3));
        CHECK(oracle::three_phase_state_value(state, got, dr, kUnitQos, kWeights) >=
              best.value - 1e-6);
    }
}

TEST_CASE("doubly-relayed region matches the grid oracle") {
    const NetworkCsi csi{2.0, 3.0, 1.0};
    ThreePhaseDuals d;
    d.lambda_a = 0.1;
    d.lambda_b = 0.1;
    d.lambda_r = 0.05;
    CHECK(classify_three_phase_region(csi) == ThreePhaseRegion::R4);
    const PowerVector p = alloc_r4(csi, d, kUnitQos, kWeights);
    // tau > 1 here, so the solve runs in the mirrored variable; the oracle
    // scans the A power with the two ties enforced
    const double tau_m = csi.g2 * (csi.g2 - csi.g3) / (csi.g1 * (csi.g1 - csi.g3));
    const auto best = oracle::grid_max_1d(
        [&](double pb) {
            const double u = 1.0 + (1.0 - tau_m) * csi.g3 * pb;
            const double pa = tau_m * pb / u;
            const double pr = (csi.g2 - csi.g3) * pb / (csi.g1 * (1.0 + csi.g3 * pb));
            return oracle::three_phase_state_value(csi, {pa, pb, pr}, d, kUnitQos, kWeights);
        },
        40.0);
    CHECK(p.pb == doctest::Approx(best.x).epsilon(1e-3));
    CHECK(oracle::three_phase_state_value(csi, p, d, kUnitQos, kWeights) >= best.value - 1e-6);
    // both decode-and-forward bottlenecks are balanced
    const double min1a = capacity(csi.g1 * p.pa);
    const double min1b = capacity(csi.g3 * p.pa) + capacity(csi.g2 * p.pr);
    CHECK(min1a == doctest::Approx(min1b).epsilon(1e-9));
    const double min2a = capacity(csi.g2 * p.pb);
    const double min2b = capacity(csi.g3 * p.pb) + capacity(csi.g1 * p.pr);
    CHECK(min2a == doctest::Approx(min2b).epsilon(1e-9));
}

TEST_CASE("doubly-relayed region symmetry and cascade") {
    const NetworkCsi sym{2.5, 2.5, 1.0};
    ThreePhaseDuals d;
    d.lambda_a = 0.1;
    d.lambda_b = 0.1;
    d.lambda_r = 0.05;
    const QosPair qos = make_qos_pair(1.0, 1.0);
    const PowerVector p = alloc_r4(sym, d, qos, Weights{0.5, 0.5});
    CHECK(p.pa == doctest::Approx(p.pb).epsilon(1e-9));
    // prohibitive source price collapses the whole allocation
    ThreePhaseDuals pricey = d;
    pricey.lambda_a = 50.0;
    pricey.lambda_b = 50.0;
    const PowerVector zero = alloc_r4(sym, pricey, qos, Weights{0.5, 0.5});
    CHECK(zero.pa == 0.0);
    CHECK(zero.pb == 0.0);
    CHECK(zero.pr == 0.0);
}

TEST_CASE("rate assignment agrees with the region maximum") {
    const NetworkCsi csi{2.0, 0.5, 1.0};
    ThreePhaseDuals d;
    d.lambda_a = 0.1;
    d.lambda_b = 0.1;
    d.lambda_r = 0.05;
    const PowerVector p = alloc_r2(csi, d, kUnitQos, kWeights);
    const RatePair assigned = assign_rates(csi, p, ThreePhaseRegion::R2);
    const RatePair max = three_phase_max_rates(p, csi);
    CHECK(assigned.ra == max.ra);
    CHECK(assigned.rb == max.rb);
    const NetworkCsi easy{0.2, 0.2, 1.0};
    const RatePair unit = assign_rates(easy, {1.0, 1.0, 0.0}, ThreePhaseRegion::R1);
    CHECK(unit.ra == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(unit.rb == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("optimizer pins a single direct-link state to its budget") {
    // single sample, vanishing exponents: the dual loop must land on the
    // analytic single-state water-filling solution
    ScenarioConfig one;
    one.samples = 1;
    one.theta_a = 1e-6;
    one.theta_b = 1e-6;
    one.power_a_db = 3.0;
    one.power_b_db = 3.0;
    one.power_r_db = 0.0;
    const std::vector<NetworkCsi> single{NetworkCsi{0.05, 0.05, 1.1}};
    const PolicyEvaluation ev = optimize_three_phase(single, one);
    CHECK(ev.converged);
    CHECK(ev.powers[0].pa == doctest::Approx(one.budget_a()).epsilon(1e-4));
    CHECK(ev.powers[0].pb == doctest::Approx(one.budget_b()).epsilon(1e-4));
    CHECK(ev.powers[0].pr == 0.0);   // direct region, relay silent
}

TEST_CASE("optimizer feasibility and boundary rates on a small ensemble") {
    ScenarioConfig cfg;
    cfg.samples = 1500;
    const FadingSpec spec = make_fading_spec(cfg.relay_distance, cfg.path_loss_exponent);
    const std::vector<NetworkCsi> samples = sample_csi(spec, cfg.samples, cfg.seed);
    const PolicyEvaluation ev = optimize_three_phase(samples, cfg);
    CHECK(ev.converged);
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(ev.mean_power[k] - ev.budget[k]) / ev.budget[k] <= cfg.tolerance_power);
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const RatePair max = three_phase_max_rates(ev.powers[i], samples[i]);
        CHECK(ev.rates[i].ra <= max.ra + 1e-9);
        CHECK(ev.rates[i].rb <= max.rb + 1e-9);
        CHECK(ev.rates[i].ra >= max.ra - 1e-9);   // policy rides the boundary
        CHECK(ev.rates[i].rb >= max.rb - 1e-9);
    }
    // determinism of the whole optimization
    const PolicyEvaluation ev2 = optimize_three_phase(samples, cfg);
    CHECK(ev.objective == ev2.objective);
    CHECK(ev.multipliers[0] == ev2.multipliers[0]);
}

TEST_CASE("per-state dispatcher matches an unrestricted grid search") {
    // the shared relay power couples the two directions, so the dispatcher
    // must pick the best of all stationarity structures; verify against a
    // coarse-to-fine search over the full power cube
    oracle::DrawStream rng(424242);
    const Weights w{0.6, 0.4};
    int bad = 0;
    double worst = 0.0;
    for (int t = 0; t < 60; ++t) {
        const NetworkCsi csi{rng.uniform(0.01, 5.0), rng.uniform(0.01, 5.0),
                             rng.uniform(0.01, 1.0)};
        const QosPair qos = make_qos_pair(rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0));
        ThreePhaseDuals d;
        d.lambda_a = rng.uniform(0.005, 0.3);
        d.lambda_b = rng.uniform(0.005, 0.3);
        d.lambda_r = rng.uniform(0.005, 0.3);
        d.phi1 = rng.uniform(0.4, 1.0);
        d.phi2 = rng.uniform(0.4, 1.0);
        const PowerVector p = three_phase_allocate(csi, d, qos, w);
        const double got = three_phase_state_value(csi, p, d, qos, w);
        const auto best = oracle::grid_max_3d(
            [&](double pa, double pb, double pr) {
                return three_phase_state_value(csi, {pa, pb, pr}, d, qos, w);
            },
            60.0, 60.0, 40.0, 24, 6);
        const double gap = best.value - got;
        worst = std::max(worst, gap);
        if (gap > 1e-6) ++bad;
    }
    CHECK(bad == 0);
    INFO("worst gap ", worst);
}
