// Instantaneous achievable-rate regions of the three-phase and two-phase
// decode-and-forward protocols. Rates are in bits per channel use and carry
// the protocol's time-fraction prefactor (1/3 or 1/2).
#pragma once

#include <algorithm>
#include <cmath>

#include "twr/channel.hpp"

namespace twr {

inline constexpr double kMaxPower = 1e8;   // safety cap while multipliers are far off

struct PowerVector {
    double pa = 0.0;
    double pb = 0.0;
    double pr = 0.0;
};

struct RatePair {
    double ra = 0.0;
    double rb = 0.0;
};

// Successive-decoding order in the MAC phase. DecodeAFirst: the relay decodes
// A's signal against B's interference first, then B's signal cleanly.
enum class DecodeOrder { DecodeAFirst, DecodeBFirst };

// C(x) = log2(1 + x)
inline double capacity(double x) {
    return std::log2(1.0 + x);
}

// Maximum rate pair of the three-phase protocol at a given power vector.
// A direction uses the relay only when its relay link beats the direct link.
inline RatePair three_phase_max_rates(const PowerVector& p, const NetworkCsi& csi) {
    RatePair r;
    if (csi.g1 > csi.g3) {
        r.ra = std::min(capacity(csi.g1 * p.pa), capacity(csi.g3 * p.pa) + capacity(csi.g2 * p.pr)) / 3.0;
    } else {
        r.ra = capacity(csi.g3 * p.pa) / 3.0;
    }
    if (csi.g2 > csi.g3) {
        r.rb = std::min(capacity(csi.g2 * p.pb), capacity(csi.g3 * p.pb) + capacity(csi.g1 * p.pr)) / 3.0;
    } else {
        r.rb = capacity(csi.g3 * p.pb) / 3.0;
    }
    return r;
}

// Broadcast-phase rate caps: A's message reaches B over g2, B's over g1.
inline RatePair bc_max_rates(double pr, const NetworkCsi& csi) {
    return RatePair{0.5 * capacity(csi.g2 * pr), 0.5 * capacity(csi.g1 * pr)};
}

// Corner of the MAC pentagon selected by the successive-decoding order.
inline RatePair mac_corner_rates(const PowerVector& p, const NetworkCsi& csi, DecodeOrder order) {
    if (order == DecodeOrder::DecodeAFirst) {
        return RatePair{0.5 * capacity(csi.g1 * p.pa / (1.0 + csi.g2 * p.pb)),
                        0.5 * capacity(csi.g2 * p.pb)};
    }
    return RatePair{0.5 * capacity(csi.g1 * p.pa),
                    0.5 * capacity(csi.g2 * p.pb / (1.0 + csi.g1 * p.pa))};
}

// Membership in the two-phase region (MAC pentagon intersected with the BC
// caps), with additive tolerance because optimizer output sits on the boundary.
inline bool two_phase_region_contains(const RatePair& r, const PowerVector& p, const NetworkCsi& csi,
                                      double tol = 1e-9) {
    if (r.ra > 0.5 * capacity(csi.g1 * p.pa) + tol) return false;
    if (r.rb > 0.5 * capacity(csi.g2 * p.pb) + tol) return false;
    if (r.ra + r.rb > 0.5 * capacity(csi.g1 * p.pa + csi.g2 * p.pb) + tol) return false;
    const RatePair caps = bc_max_rates(p.pr, csi);
    if (r.ra > caps.ra + tol) return false;
    if (r.rb > caps.rb + tol) return false;
    return true;
}

}  // namespace twr
