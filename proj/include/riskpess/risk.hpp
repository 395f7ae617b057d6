#pragma once

// Risk functionals evaluated exactly on step (sub-)CDFs over [0, D].
//
// Every functional is written as an integral of F over [0, D]; on a
// sub-CDF this is the same as putting the missing mass at D, and any mass
// below 0 (a nonzero base) at 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "riskpess/error.hpp"
#include "riskpess/step_fn.hpp"

namespace riskpess {

/// Continuous piecewise-linear function through sorted knots, constant
/// beyond the end knots.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;

    explicit PiecewiseLinear(std::vector<std::pair<double, double>> knots)
        : knots_(std::move(knots)) {
        detail::require(knots_.size() >= 2, "piecewise-linear function needs at least 2 knots");
        for (std::size_t k = 0; k < knots_.size(); ++k) {
            detail::require(std::isfinite(knots_[k].first) && std::isfinite(knots_[k].second),
                            "non-finite knot");
            if (k > 0) {
                detail::require(knots_[k - 1].first < knots_[k].first,
                                "knot abscissae must be strictly increasing");
                detail::require(knots_[k - 1].second <= knots_[k].second,
                                "knot values must be nondecreasing");
            }
        }
    }

    double operator()(double x) const noexcept {
        if (x <= knots_.front().first) return knots_.front().second;
        if (x >= knots_.back().first) return knots_.back().second;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                   [](double v, const auto& k) { return v < k.first; });
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        if (x == x0) return y0;
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }

    double max_slope() const noexcept {
        double s = 0.0;
        for (std::size_t k = 1; k < knots_.size(); ++k) {
            s = std::max(s, (knots_[k].second - knots_[k - 1].second) /
                                (knots_[k].first - knots_[k - 1].first));
        }
        return s;
    }

    const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

    friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;

private:
    std::vector<std::pair<double, double>> knots_;
};

/// Nondecreasing g: [0,1] -> [0,1] with g(0) = 0, g(1) = 1.
class DistortionFn {
public:
    DistortionFn() : fn_({{0.0, 0.0}, {1.0, 1.0}}) {}

    explicit DistortionFn(std::vector<std::pair<double, double>> knots) : fn_(std::move(knots)) {
        const auto& k = fn_.knots();
        detail::require(k.front().first == 0.0 && k.back().first == 1.0,
                        "distortion knots must span [0, 1]");
        detail::require(k.front().second == 0.0 && k.back().second == 1.0,
                        "distortion must satisfy g(0) = 0 and g(1) = 1");
    }

    static DistortionFn identity() { return DistortionFn(); }

    /// min{x / (1 - alpha), 1}
    static DistortionFn cvar(double alpha) {
        detail::require(alpha > 0.0 && alpha < 1.0, "cvar alpha must lie in (0, 1)");
        return DistortionFn({{0.0, 0.0}, {1.0 - alpha, 1.0}, {1.0, 1.0}});
    }

    double operator()(double x) const noexcept { return fn_(x); }
    double lipschitz() const noexcept { return fn_.max_slope(); }
    const std::vector<std::pair<double, double>>& knots() const noexcept { return fn_.knots(); }

    friend bool operator==(const DistortionFn&, const DistortionFn&) = default;

private:
    PiecewiseLinear fn_;
};

namespace risk {

struct Mean {
    friend bool operator==(const Mean&, const Mean&) = default;
};
struct Variance {
    friend bool operator==(const Variance&, const Variance&) = default;
};
struct MeanVariance {
    double alpha = 0.0;
    friend bool operator==(const MeanVariance&, const MeanVariance&) = default;
};
struct Entropic {
    double alpha = 1.0;
    friend bool operator==(const Entropic&, const Entropic&) = default;
};
struct VaR {
    double alpha = 0.5;
    friend bool operator==(const VaR&, const VaR&) = default;
};
struct CVaR {
    double alpha = 0.5;
    friend bool operator==(const CVaR&, const CVaR&) = default;
};
struct Distorted {
    DistortionFn g;
    friend bool operator==(const Distorted&, const Distorted&) = default;
};
/// Gain side only; rewards are nonnegative so the loss integral vanishes.
/// u_plus is nondecreasing on [0, D] with u_plus(0) = 0.
struct CPT {
    PiecewiseLinear u_plus;
    DistortionFn w_plus;
    friend bool operator==(const CPT&, const CPT&) = default;
};

} // namespace risk

using RiskFunctional = std::variant<risk::Mean, risk::Variance, risk::MeanVariance,
                                    risk::Entropic, risk::VaR, risk::CVaR, risk::Distorted,
                                    risk::CPT>;

inline std::string risk_name(const RiskFunctional& rho) {
    static const char* names[] = {"mean", "variance", "mean_variance", "entropic",
                                  "var", "cvar", "distorted", "cpt"};
    return names[rho.index()];
}

inline void validate_risk(const RiskFunctional& rho) {
    std::visit(
        [](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, risk::MeanVariance>) {
                detail::require(std::isfinite(r.alpha), "mean_variance alpha must be finite");
            } else if constexpr (std::is_same_v<T, risk::Entropic>) {
                detail::require(std::isfinite(r.alpha) && r.alpha != 0.0,
                                "entropic alpha must be finite and nonzero");
            } else if constexpr (std::is_same_v<T, risk::VaR> || std::is_same_v<T, risk::CVaR>) {
                detail::require(r.alpha > 0.0 && r.alpha < 1.0, "alpha must lie in (0, 1)");
            } else if constexpr (std::is_same_v<T, risk::CPT>) {
                detail::require(r.u_plus(0.0) == 0.0, "cpt utility must satisfy u(0) = 0");
            }
        },
        rho);
}

namespace detail {

struct Segment {
    double lo;
    double hi;
    double F;
};

inline std::vector<Segment> segments(const StepFn& f, double D) {
    const auto pts = segment_points(D, {&f});
    std::vector<Segment> out;
    out.reserve(pts.size());
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) out.push_back({pts[j], pts[j + 1], f(pts[j])});
    return out;
}

inline double integral_mean(const std::vector<Segment>& segs) {
    double m = 0.0;
    for (const auto& s : segs) m += (s.hi - s.lo) * (1.0 - s.F);
    return m;
}

// int 2t (1 - F) dt - mean^2
inline double integral_variance(const std::vector<Segment>& segs) {
    double second = 0.0;
    for (const auto& s : segs) second += (s.hi * s.hi - s.lo * s.lo) * (1.0 - s.F);
    const double m = integral_mean(segs);
    return second - m * m;
}

} // namespace detail

/// Exact risk of a sub-CDF on [0, D]. Rejects non-monotone or out-of-range
/// input; callers monotonize_clip first.
inline double evaluate_risk(const RiskFunctional& rho, const StepFn& f,
                            const SupportInterval& support) {
    validate_risk(rho);
    detail::require(f.is_sub_cdf(),
                    "evaluate_risk: input must be nondecreasing with values in [0, 1]");
    const double D = support.upper();
    const auto segs = detail::segments(f, D);

    return std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, risk::Mean>) {
                return detail::integral_mean(segs);
            } else if constexpr (std::is_same_v<T, risk::Variance>) {
                return detail::integral_variance(segs);
            } else if constexpr (std::is_same_v<T, risk::MeanVariance>) {
                return detail::integral_mean(segs) + r.alpha * detail::integral_variance(segs);
            } else if constexpr (std::is_same_v<T, risk::Entropic>) {
                // E e^{aX} = 1 + int_0^D a e^{at} (1 - F(t)) dt, closed form per segment
                double mgf = 1.0;
                for (const auto& s : segs) {
                    mgf += (1.0 - s.F) * (std::exp(r.alpha * s.hi) - std::exp(r.alpha * s.lo));
                }
                return std::log(mgf) / r.alpha;
            } else if constexpr (std::is_same_v<T, risk::VaR>) {
                for (const auto& s : segs) {
                    if (s.F >= r.alpha) return s.lo;
                }
                return D;
            } else if constexpr (std::is_same_v<T, risk::CVaR>) {
                double v = 0.0;
                for (const auto& s : segs) {
                    v += (s.hi - s.lo) * std::min((1.0 - s.F) / (1.0 - r.alpha), 1.0);
                }
                return v;
            } else if constexpr (std::is_same_v<T, risk::Distorted>) {
                double v = 0.0;
                for (const auto& s : segs) v += (s.hi - s.lo) * r.g(1.0 - s.F);
                return v;
            } else {
                static_assert(std::is_same_v<T, risk::CPT>);
                // substituting s = u(t): int w(1 - F(t)) u'(t) dt, and u' integrates
                // to u(hi) - u(lo) on any interval where F is constant
                double v = 0.0;
                for (const auto& s : segs) v += (r.u_plus(s.hi) - r.u_plus(s.lo)) * r.w_plus(1.0 - s.F);
                return v;
            }
        },
        rho);
}

/// Sup-norm Lipschitz constant on distributions supported on [0, D].
/// VaR has none and raises NotLipschitzError.
inline double lipschitz_constant(const RiskFunctional& rho, const SupportInterval& support) {
    validate_risk(rho);
    const double D = support.upper();
    return std::visit(
        [D](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, risk::Mean>) {
                return D;
            } else if constexpr (std::is_same_v<T, risk::Variance>) {
                return 3.0 * D * D;
            } else if constexpr (std::is_same_v<T, risk::MeanVariance>) {
                return D + 3.0 * std::abs(r.alpha) * D * D;
            } else if constexpr (std::is_same_v<T, risk::Entropic>) {
                const double e = std::exp(r.alpha * D);
                return r.alpha > 0.0 ? (e - 1.0) / r.alpha : (e - 1.0) / (r.alpha * e);
            } else if constexpr (std::is_same_v<T, risk::VaR>) {
                throw NotLipschitzError(
                    "VaR has no finite sup-norm Lipschitz constant; use cvar for learning");
                return 0.0;
            } else if constexpr (std::is_same_v<T, risk::CVaR>) {
                return D / (1.0 - r.alpha);
            } else if constexpr (std::is_same_v<T, risk::Distorted>) {
                return D * r.g.lipschitz();
            } else {
                return r.u_plus(D) * r.w_plus.lipschitz();
            }
        },
        rho);
}

/// rho(F1) >= rho(F2) whenever F1 <= F2 pointwise.
inline bool is_monotone_risk(const RiskFunctional& rho) {
    if (std::holds_alternative<risk::Variance>(rho)) return false;
    if (const auto* mv = std::get_if<risk::MeanVariance>(&rho)) return mv->alpha == 0.0;
    return true;
}

} // namespace riskpess
