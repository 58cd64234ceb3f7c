// Root-finding and dual-ascent primitives shared by both protocol optimizers.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace twr {

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RootSearchConfig {
    double tolerance = 1e-10;   // residual and interval
    int max_iterations = 200;
    double bracket_growth = 4.0;
};

namespace detail {

// Sign-agnostic bisection on a bracket [lo,hi] with f(lo)*f(hi) <= 0,
// followed by a few secant steps to push the residual down cheaply.
template <class F>
double bisect_bracket(F&& f, double lo, double hi, double flo, double fhi,
                      const RootSearchConfig& cfg) {
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < cfg.max_iterations; ++i) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= cfg.tolerance) return mid;
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        if (hi - lo <= cfg.tolerance * std::max(1.0, std::abs(mid))) break;
    }
    // Secant polish inside the bracket.
    double x0 = lo, x1 = hi, f0 = flo, f1 = fhi;
    for (int i = 0; i < 8 && f1 != f0; ++i) {
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 >= lo && x2 <= hi)) break;
        const double f2 = f(x2);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if (std::abs(f1) <= cfg.tolerance) return x1;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Root of a continuous, monotonically decreasing f. Returns lo when
// f(lo) <= 0 (the caller's clamp signal); expands hi geometrically until the
// bracket closes.
template <class F>
double bisect_root(F&& f, double lo, double hi, const RootSearchConfig& cfg = {}) {
    const double flo = f(lo);
    if (flo <= 0.0) return lo;
    double fhi = f(hi);
    int grow = 0;
    while (fhi > 0.0) {
        if (hi >= 1e30) return hi;   // root beyond any physical scale; callers clamp
        if (++grow > cfg.max_iterations) {
            throw NumericError("bisect_root: bracket expansion failed, last bracket [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        lo = hi;
        hi *= cfg.bracket_growth;
        fhi = f(hi);
    }
    if (fhi == 0.0) return hi;
    return detail::bisect_bracket(f, lo, hi, f(lo), fhi, cfg);
}

// Root search for functions with at most one interior stationary point.
// Locates the stationary point from the numeric derivative, picks the
// subinterval holding a sign change (the smaller root when both do), and
// bisects there. Returns a domain boundary when no sign change exists:
// lo if f(lo) <= 0, otherwise hi.
template <class F>
double stationary_then_bisect(F&& f, double lo, double hi, const RootSearchConfig& cfg = {}) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi)) {
        throw NumericError("stationary_then_bisect: non-finite endpoint value");
    }

    const double h = std::max(1e-7, 1e-7 * (hi - lo));
    auto deriv = [&](double x) { return (f(x + h) - f(x - h)) / (2.0 * h); };

    double split = std::numeric_limits<double>::quiet_NaN();
    double dlo = deriv(lo + h);
    double dhi = deriv(hi - h);
    if ((dlo <= 0.0) != (dhi <= 0.0)) {
        double a = lo + h, b = hi - h, da = dlo;
        for (int i = 0; i < 80 && b - a > cfg.tolerance * std::max(1.0, std::abs(b)); ++i) {
            const double m = 0.5 * (a + b);
            const double dm = deriv(m);
            if ((da <= 0.0) == (dm <= 0.0)) {
                a = m;
                da = dm;
            } else {
                b = m;
            }
        }
        split = 0.5 * (a + b);
    }

    // Candidate brackets, smallest-root side first.
    struct Bracket { double a, b, fa, fb; };
    std::vector<Bracket> brackets;
    if (std::isfinite(split)) {
        const double fs = f(split);
        brackets.push_back({lo, split, flo, fs});
        brackets.push_back({split, hi, fs, fhi});
    } else {
        brackets.push_back({lo, hi, flo, fhi});
    }
    for (const auto& br : brackets) {
        if ((br.fa <= 0.0) != (br.fb <= 0.0)) {
            return detail::bisect_bracket(f, br.a, br.b, br.fa, br.fb, cfg);
        }
        if (br.fa == 0.0) return br.a;
        if (br.fb == 0.0) return br.b;
    }
    return flo <= 0.0 ? lo : hi;
}

enum class StepSchedule { Diminishing, Constant };

struct SubgradientConfig {
    StepSchedule schedule = StepSchedule::Diminishing;
    std::vector<double> step_scale;      // per multiplier; s_i = scale / sqrt(iter)
    int max_iterations = 500;
    int convergence_window = 20;
    double power_tolerance = 1e-3;       // relative average-power residual
    double dual_tolerance = 1e-6;        // relative best-dual-value change over the window
};

// What one evaluation of the inner maximization reports back.
struct DualEvaluation {
    std::vector<double> mean_power;   // E[P_i] under the current policy
    std::vector<double> budget;       // Pbar_i
    double dual_value = 0.0;
};

struct DualAscentResult {
    std::vector<double> multipliers;
    double best_dual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Projected subgradient descent on the dual: lambda <- [lambda - s (Pbar - E[P])]+.
// Stops once every power constraint is met (or slack with a zero multiplier)
// and the best dual value has stabilized over the convergence window.
template <class Evaluate>
DualAscentResult dual_ascent(Evaluate&& evaluate, std::vector<double> lambda,
                             const SubgradientConfig& cfg) {
    DualAscentResult out;
    out.multipliers = lambda;
    double window_best = std::numeric_limits<double>::infinity();
    int since_window = 0;

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        const DualEvaluation ev = evaluate(lambda);
        if (!std::isfinite(ev.dual_value)) {
            throw NumericError("dual_ascent: non-finite dual value at iteration " +
                               std::to_string(iter));
        }
        out.iterations = iter;
        if (ev.dual_value < out.best_dual) {
            out.best_dual = ev.dual_value;
            out.multipliers = lambda;
        }

        bool feasible = true;
        bool stationary = true;
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            const double pbar = ev.budget[k];
            const double resid = ev.mean_power[k] - pbar;
            const double rel = std::abs(resid) / std::max(pbar, 1e-30);
            const bool slack_ok = lambda[k] <= 1e-12 && resid <= cfg.power_tolerance * std::max(pbar, 1e-30);
            if (!(rel <= cfg.power_tolerance || slack_ok)) feasible = false;
            if (!(std::abs(resid) <= 1e-14 * std::max(1.0, pbar) ||
                  (lambda[k] <= 1e-12 && resid < 0.0)))
                stationary = false;
        }
        if (feasible && stationary) {
            out.converged = true;
            out.multipliers = lambda;
            return out;
        }

        if (++since_window >= cfg.convergence_window) {
            const double improvement = window_best - out.best_dual;
            const double scale = std::max(1.0, std::abs(out.best_dual));
            if (feasible && improvement < cfg.dual_tolerance * scale &&
                std::isfinite(window_best)) {
                out.converged = true;
                out.multipliers = lambda;
                return out;
            }
            window_best = out.best_dual;
            since_window = 0;
        }

        for (std::size_t k = 0; k < lambda.size(); ++k) {
            const double step = cfg.schedule == StepSchedule::Diminishing
                                    ? cfg.step_scale[k] / std::sqrt(static_cast<double>(iter))
                                    : cfg.step_scale[k];
            // clip the subgradient so transient power blowups cannot throw
            // the multiplier far past its fixed point
            const double cap = 10.0 * std::max(ev.budget[k], 1.0);
            const double resid = std::clamp(ev.budget[k] - ev.mean_power[k], -cap, cap);
            lambda[k] = std::max(0.0, lambda[k] - step * resid);
        }
    }
    return out;
}

namespace detail {

// Gauss-Seidel rounds of one-dimensional multiplier solves on a subsample;
// a cheap starting point for the subgradient refinement. Eval must expose
// budget and run(lambda, update_state) -> DualEvaluation.
template <class Eval>
std::vector<double> coordinate_warm_start(Eval& eval, std::vector<double> lambda, int rounds) {
    RootSearchConfig coarse;
    coarse.tolerance = 1e-4;
    coarse.max_iterations = 80;
    for (int r = 0; r < rounds; ++r) {
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            if (eval.budget[k] <= 0.0) continue;
            auto g = [&](double lk) {
                std::vector<double> trial = lambda;
                trial[k] = lk;
                const DualEvaluation ev = eval.run(trial, false);
                return (ev.mean_power[k] - eval.budget[k]) / std::max(1.0, eval.budget[k]);
            };
            lambda[k] = bisect_root(g, 0.0, std::max(1e-3, 2.0 * lambda[k]), coarse);
        }
        eval.run(lambda, true);   // refresh derived state between rounds
    }
    return lambda;
}

// Log-space relaxation toward a positive target. The exp-rate expectations
// span many orders of magnitude at large QoS exponents, where arithmetic
// damping crawls; mixing the logarithms keeps the same contraction rate
// regardless of scale.
inline double geometric_mix(double prev, double target, double keep) {
    prev = std::max(prev, 1e-300);
    target = std::max(target, 1e-300);
    return std::exp(keep * std::log(prev) + (1.0 - keep) * std::log(target));
}

// Log-space fixed-point accelerator for the pair of exp-rate expectations:
// plain iteration alternated with Aitken extrapolation from successive
// residuals. The map's contraction factor approaches one as the QoS
// exponents grow, where damped iteration stalls for thousands of passes.
// Extrapolation needs two consecutive residuals under the same multipliers,
// so the cycle restarts whenever they moved.
struct PhiAccelerator {
    double delta1 = 0.0, delta2 = 0.0;
    int cycle = 0;
    std::vector<double> last_lambda;

    // Advances (phi1, phi2) toward (target1, target2); returns the
    // pre-update relative log gap, the natural convergence measure.
    double update(double& phi1, double& phi2, double target1, double target2,
                  const std::vector<double>& lambda) {
        const bool same = lambda == last_lambda;
        last_lambda = lambda;
        const double t1 = std::log(std::max(target1, 1e-300));
        const double t2 = std::log(std::max(target2, 1e-300));
        const double d1 = t1 - std::log(std::max(phi1, 1e-300));
        const double d2 = t2 - std::log(std::max(phi2, 1e-300));
        double n1 = t1;
        double n2 = t2;
        if (same && (cycle & 1)) {
            auto extrap = [](double t, double d, double dprev) {
                if (dprev == 0.0 || d == 0.0) return t;
                const double rho = std::clamp(d / dprev, -0.5, 0.98);
                return t + std::clamp(rho / (1.0 - rho) * d, -40.0, 40.0);
            };
            n1 = extrap(t1, d1, delta1);
            n2 = extrap(t2, d2, delta2);
        }
        cycle = same ? cycle + 1 : 1;
        delta1 = d1;
        delta2 = d2;
        phi1 = std::exp(n1);
        phi2 = std::exp(n2);
        return std::max(std::abs(d1), std::abs(d2));
    }
};

// Stopping rule for the accelerated phi iteration: the per-state solves are
// only exact to their root tolerances, which the exp(-theta r) map amplifies
// into a jitter floor that can sit well above any fixed tolerance. Stop at
// the tolerance or once the gap stops halving.
struct PhiPlateau {
    double best = 1e300;
    int stall = 0;
    bool done(double gap, double tol) {
        if (gap < tol) return true;
        if (gap < 0.5 * best) {
            best = gap;
            stall = 0;
            return false;
        }
        return ++stall >= 4;
    }
};

// Multiplicative feasibility refinement with per-coordinate sign-adaptive
// log-space steps (Rprop style). Mean power responds to its own multiplier
// with an elasticity that varies over orders of magnitude with the QoS
// exponent, so fixed steps either crawl or orbit the budget; growing the
// step while the budget-ratio sign holds and shrinking it without a floor on
// a flip adapts to the local sensitivity and collapses any orbit.
// `fin` must hold the evaluation at the incoming `lambda` and is left at the
// final multipliers. Returns whether every active budget is met within tol.
template <class Run>
bool adaptive_budget_polish(Run&& run, const std::array<double, 3>& budget,
                            std::vector<double>& lambda, DualEvaluation& fin,
                            double tol, double kappa0, int max_iters) {
    std::array<double, 3> step{kappa0, kappa0, kappa0};
    std::array<double, 3> dir{0.0, 0.0, 0.0};
    // a budget left slack at a vanishing price is complementary-slack
    // optimal: more power there would not raise the served rates (e.g. a
    // direction capped by the broadcast hop), so the constraint cannot bind
    auto satisfied = [&](int k) {
        if (budget[k] <= 0.0) return true;
        const double ratio = fin.mean_power[k] / budget[k];
        if (std::abs(ratio - 1.0) <= tol) return true;
        return ratio < 1.0 && lambda[k] <= 1e-10;
    };
    auto feasible = [&]() {
        for (int k = 0; k < 3; ++k) {
            if (!satisfied(k)) return false;
        }
        return true;
    };
    for (int it = 0; it < max_iters; ++it) {
        if (feasible()) return true;
        for (int k = 0; k < 3; ++k) {
            if (satisfied(k)) continue;
            const double ratio = fin.mean_power[k] / budget[k];
            const double d = ratio >= 1.0 ? 1.0 : -1.0;   // over budget: raise the price
            if (dir[k] == 0.0) {
                // first touch: size the step by the residual so a nearly
                // feasible entry is not thrown far from the budget
                const double gap = std::abs(std::log(std::clamp(ratio, 0.25, 4.0)));
                step[k] = std::min(step[k], 2.0 * gap + 1e-4);
            }
            if (dir[k] * d > 0.0) {
                step[k] = std::min(step[k] * 1.6, 6.0);
            } else if (dir[k] * d < 0.0) {
                step[k] = std::max(step[k] * 0.4, 1e-8);
            }
            dir[k] = d;
            lambda[k] = std::max(lambda[k], 1e-12) * std::exp(d * step[k]);
        }
        fin = run(lambda);
    }
    return feasible();
}

}  // namespace detail

}  // namespace twr
