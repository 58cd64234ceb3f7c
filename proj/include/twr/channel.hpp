// Channel-state generation for the two-way relay geometry: log-distance
// path loss with Rayleigh small-scale fading, so every link power gain is
// exponentially distributed with a rate set by the link distance.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace twr {

// One fading realization: instantaneous link power gains, linear scale,
// noise-normalized (unit noise variance at every node).
//   g1 = |h_AR|^2, g2 = |h_BR|^2, g3 = |h_AB|^2
struct NetworkCsi {
    double g1 = 0.0;
    double g2 = 0.0;
    double g3 = 0.0;
};

// Exponential rate parameters for the three links. A and B are at distance 2
// from each other, the relay at distance d from A (and 2-d from B).
struct FadingSpec {
    double relay_distance;       // d in (0,2)
    double path_loss_exponent;   // nu > 0
    double rate1;                // d^nu        (A-R)
    double rate2;                // (2-d)^nu    (B-R)
    double rate3;                // 2^nu        (A-B)
};

inline FadingSpec make_fading_spec(double relay_distance, double path_loss_exponent) {
    if (!(relay_distance > 0.0) || !(relay_distance < 2.0)) {
        throw std::domain_error("make_fading_spec: relay_distance must lie in (0,2), got " +
                                std::to_string(relay_distance));
    }
    if (!(path_loss_exponent > 0.0)) {
        throw std::domain_error("make_fading_spec: path_loss_exponent must be positive, got " +
                                std::to_string(path_loss_exponent));
    }
    FadingSpec spec;
    spec.relay_distance = relay_distance;
    spec.path_loss_exponent = path_loss_exponent;
    spec.rate1 = std::pow(relay_distance, path_loss_exponent);
    spec.rate2 = std::pow(2.0 - relay_distance, path_loss_exponent);
    spec.rate3 = std::pow(2.0, path_loss_exponent);
    return spec;
}

namespace detail {

// SplitMix64 finalizer; used to build a counter-based stream keyed by
// (seed, sample index, component index) so that sample k is identical
// whether generated alone or inside a larger batch.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t component) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ (0xd1342543de82ef95ull * (index + 1)));
    h = mix64(h ^ (0xaf251af3b0f025b5ull * (component + 1)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
}

inline double exponential(double u, double rate) {
    return -std::log1p(-u) / rate;
}

}  // namespace detail

// Draw the k-th channel state of the stream identified by seed.
inline NetworkCsi sample_csi_at(const FadingSpec& spec, std::uint64_t seed, std::uint64_t index) {
    NetworkCsi csi;
    csi.g1 = detail::exponential(detail::uniform01(seed, index, 0), spec.rate1);
    csi.g2 = detail::exponential(detail::uniform01(seed, index, 1), spec.rate2);
    csi.g3 = detail::exponential(detail::uniform01(seed, index, 2), spec.rate3);
    return csi;
}

inline std::vector<NetworkCsi> sample_csi(const FadingSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::domain_error("sample_csi: n must be >= 1");
    std::vector<NetworkCsi> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_csi_at(spec, seed, i));
    return out;
}

// Channel-state regions of the three-phase protocol. Ties (g = g3) go to the
// direct-transmission side, matching the strict inequality in the relayed
// branch condition.
enum class ThreePhaseRegion { R1, R2, R3, R4 };

namespace detail {

inline NetworkCsi swap_sources(const NetworkCsi& csi) { return NetworkCsi{csi.g2, csi.g1, csi.g3}; }

}  // namespace detail

inline ThreePhaseRegion classify_three_phase_region(const NetworkCsi& csi) {
    const bool a_relayed = csi.g1 > csi.g3;
    const bool b_relayed = csi.g2 > csi.g3;
    if (a_relayed && b_relayed) return ThreePhaseRegion::R4;
    if (a_relayed) return ThreePhaseRegion::R2;
    if (b_relayed) return ThreePhaseRegion::R3;
    return ThreePhaseRegion::R1;
}

}  // namespace twr
