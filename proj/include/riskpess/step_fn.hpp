#pragma once

// Right-continuous piecewise-constant functions on the reward line.
//
// Every CDF in the library (true, estimated, model) is a StepFn. All
// operations here are exact: no sampling, no epsilon-merging of breakpoints.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "riskpess/error.hpp"

namespace riskpess {

/// Reward support [0, D].
class SupportInterval {
public:
    explicit SupportInterval(double upper) : upper_(upper) {
        detail::require(std::isfinite(upper) && upper > 0.0,
                        "support upper end D must be finite and > 0");
    }

    static constexpr double lower() noexcept { return 0.0; }
    double upper() const noexcept { return upper_; }
    bool contains(double y) const noexcept { return y >= 0.0 && y <= upper_; }

    friend bool operator==(const SupportInterval&, const SupportInterval&) = default;

private:
    double upper_;
};

/// f(t) = base for t < t_1, values[j] on [t_j, t_{j+1}).
class StepFn {
public:
    StepFn() = default;

    StepFn(double base, std::vector<double> breakpoints, std::vector<double> values)
        : base_(base), breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
        detail::require(breakpoints_.size() == values_.size(),
                        "StepFn: breakpoints and values differ in length");
        detail::require(std::isfinite(base_), "StepFn: base must be finite");
        for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
            detail::require(std::isfinite(breakpoints_[j]) && std::isfinite(values_[j]),
                            "StepFn: non-finite breakpoint or value");
            if (j > 0) {
                detail::require(breakpoints_[j - 1] < breakpoints_[j],
                                "StepFn: breakpoints must be strictly increasing");
            }
        }
    }

    static StepFn constant(double c) { return StepFn(c, {}, {}); }

    static StepFn point_mass(double at) { return StepFn(0.0, {at}, {1.0}); }

    /// Builds base_raw / divisor plus cumulative jumps / divisor. Jumps at
    /// equal locations are merged; the sum is accumulated in raw units and
    /// divided once, so integer-valued accumulations stay exact.
    static StepFn from_jumps(double base_raw, std::vector<std::pair<double, double>> jumps,
                             double divisor = 1.0) {
        std::stable_sort(jumps.begin(), jumps.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<double> bps;
        std::vector<double> vals;
        bps.reserve(jumps.size());
        vals.reserve(jumps.size());
        double acc = base_raw;
        for (std::size_t i = 0; i < jumps.size();) {
            const double t = jumps[i].first;
            while (i < jumps.size() && jumps[i].first == t) {
                acc += jumps[i].second;
                ++i;
            }
            bps.push_back(t);
            vals.push_back(acc / divisor);
        }
        return StepFn(base_raw / divisor, std::move(bps), std::move(vals));
    }

    double base() const noexcept { return base_; }
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return breakpoints_.size(); }
    bool empty() const noexcept { return breakpoints_.empty(); }

    /// Value as t -> +inf.
    double terminal() const noexcept { return values_.empty() ? base_ : values_.back(); }

    double operator()(double t) const noexcept {
        // first breakpoint strictly greater than t
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        if (it == breakpoints_.begin()) return base_;
        return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
    }

    bool is_nondecreasing() const noexcept {
        double prev = base_;
        for (double v : values_) {
            if (v < prev) return false;
            prev = v;
        }
        return true;
    }

    bool within_unit_range() const noexcept {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        return in01(base_) && std::all_of(values_.begin(), values_.end(), in01);
    }

    /// Nondecreasing with every value in [0,1]; the terminal value may be
    /// below one. A nonzero base is mass sitting below every breakpoint.
    bool is_sub_cdf() const noexcept { return is_nondecreasing() && within_unit_range(); }

    /// Sub-CDF with base 0 and terminal value 1.
    bool is_proper_cdf() const noexcept {
        return is_sub_cdf() && base_ == 0.0 && terminal() == 1.0;
    }

    /// Drops breakpoints that do not change the value.
    StepFn compacted() const {
        std::vector<double> bps;
        std::vector<double> vals;
        double prev = base_;
        for (std::size_t j = 0; j < values_.size(); ++j) {
            if (values_[j] != prev) {
                bps.push_back(breakpoints_[j]);
                vals.push_back(values_[j]);
                prev = values_[j];
            }
        }
        return StepFn(base_, std::move(bps), std::move(vals));
    }

    friend bool operator==(const StepFn&, const StepFn&) = default;

private:
    double base_ = 0.0;
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

inline double eval_step(const StepFn& f, double t) noexcept { return f(t); }

namespace detail {

inline std::vector<double> merged_breakpoints(std::initializer_list<const StepFn*> fns) {
    std::vector<double> grid;
    for (const StepFn* f : fns) {
        grid.insert(grid.end(), f->breakpoints().begin(), f->breakpoints().end());
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

/// Points 0 = p_0 < p_1 < ... < p_k = D such that every function in `fns`
/// is constant on each [p_j, p_{j+1}).
inline std::vector<double> segment_points(double D, std::initializer_list<const StepFn*> fns) {
    std::vector<double> pts{0.0};
    for (double t : merged_breakpoints(fns)) {
        if (t > 0.0 && t < D) pts.push_back(t);
    }
    pts.push_back(D);
    return pts;
}

} // namespace detail

/// sup_t |f(t) - g(t)|. Evaluated on the merged grid; the left limit at
/// each breakpoint is the value at the previous grid point (or the bases).
inline double sup_norm_distance(const StepFn& f, const StepFn& g) {
    double best = std::abs(f.base() - g.base());
    for (double t : detail::merged_breakpoints({&f, &g})) {
        best = std::max(best, std::abs(f(t) - g(t)));
    }
    return best;
}

/// sup_t |f(t)|.
inline double sup_norm(const StepFn& f) {
    double best = std::abs(f.base());
    for (double v : f.values()) best = std::max(best, std::abs(v));
    return best;
}

/// Pointwise min(max(f, 0), 1). Breakpoints are kept as-is.
inline StepFn clip_unit(const StepFn& f) {
    auto clip = [](double v) { return std::clamp(v, 0.0, 1.0); };
    std::vector<double> vals(f.values());
    for (double& v : vals) v = clip(v);
    return StepFn(clip(f.base()), f.breakpoints(), std::move(vals));
}

/// Running maximum from the left, then clip to [0,1]. The result is always
/// a sub-CDF and is never farther from any true CDF than the input.
inline StepFn monotonize_clip(const StepFn& f) {
    auto clip = [](double v) { return std::clamp(v, 0.0, 1.0); };
    double running = f.base();
    std::vector<double> vals;
    vals.reserve(f.size());
    for (double v : f.values()) {
        running = std::max(running, v);
        vals.push_back(clip(running));
    }
    return StepFn(clip(f.base()), f.breakpoints(), std::move(vals));
}

/// Equal-mass m-atom approximation F_m(t) = (1/m) sum_j 1{s_j <= t} with
/// s_j the (2j-1)/(2m)-quantile of f. ||f - F_m||_inf <= 1/(2m).
inline StepFn quantile_step_approx(const StepFn& f, int m) {
    detail::require(m >= 1, "quantile_step_approx: m must be positive");
    detail::require(f.is_proper_cdf(), "quantile_step_approx: input must be a proper CDF");
    const auto& bps = f.breakpoints();
    const auto& vals = f.values();
    std::vector<std::pair<double, double>> jumps;
    jumps.reserve(static_cast<std::size_t>(m));
    std::size_t k = 0;
    for (int j = 1; j <= m; ++j) {
        const double level = static_cast<double>(2 * j - 1) / static_cast<double>(2 * m);
        while (k < vals.size() && vals[k] < level) ++k;
        // terminal value is 1 > level, so k is always in range
        jumps.emplace_back(bps[k], 1.0);
    }
    return StepFn::from_jumps(0.0, std::move(jumps), static_cast<double>(m));
}

/// Integral of |f - g| over [0, D] for two proper CDFs.
inline double wasserstein1(const StepFn& f, const StepFn& g, const SupportInterval& support) {
    auto check = [](const StepFn& h, const char* which) {
        detail::require(h.is_sub_cdf(),
                        std::string("wasserstein1: ") + which + " is not a monotone [0,1] function");
        detail::require(std::abs(h.terminal() - 1.0) <= 1e-12,
                        std::string("wasserstein1: ") + which +
                            " is a sub-CDF; complete its mass before measuring");
    };
    check(f, "first argument");
    check(g, "second argument");
    const double D = support.upper();
    const auto pts = detail::segment_points(D, {&f, &g});
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
        total += (pts[j + 1] - pts[j]) * std::abs(f(pts[j]) - g(pts[j]));
    }
    return total;
}

/// Puts the missing mass (1 - terminal) at D so that the result is proper.
inline StepFn complete_mass_at(const StepFn& f, double D) {
    if (f.terminal() >= 1.0) return f;
    std::vector<double> bps;
    std::vector<double> vals;
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (f.breakpoints()[j] < D) {
            bps.push_back(f.breakpoints()[j]);
            vals.push_back(f.values()[j]);
        }
    }
    bps.push_back(D);
    vals.push_back(1.0);
    return StepFn(f.base(), std::move(bps), std::move(vals));
}

} // namespace riskpess
