#pragma once

// Off-policy CDF estimators over logged bandit data.
//
// For a target policy pi, row i is informative when beta(X_i, pi(X_i)) != 0.
// Uninformative rows contribute a constant completion value (1 by default,
// which is the pessimistic choice for monotone risks).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskpess/dataset.hpp"
#include "riskpess/error.hpp"
#include "riskpess/step_fn.hpp"

namespace riskpess {

enum class Completion { zero, one };

inline double completion_value(Completion c) noexcept { return c == Completion::one ? 1.0 : 0.0; }

enum class EstimatorKind { clipped_is, wis, drc };

inline std::string to_string(EstimatorKind e) {
    switch (e) {
    case EstimatorKind::clipped_is: return "clipped_is";
    case EstimatorKind::wis: return "wis";
    case EstimatorKind::drc: return "drc";
    }
    return "?";
}

/// Accepts both the long names and the CLI short forms (is, dr).
inline EstimatorKind parse_estimator(const std::string& s) {
    if (s == "clipped_is" || s == "is") return EstimatorKind::clipped_is;
    if (s == "wis") return EstimatorKind::wis;
    if (s == "drc" || s == "dr") return EstimatorKind::drc;
    throw ValidationError("unknown estimator '" + s + "' (expected is, wis or dr)");
}

struct Diagnostics {
    std::vector<std::size_t> informative_indices;
    std::size_t n = 0;
    double sigma = 0.0;        // sqrt((1/n) sum_I beta^-2)
    double sigma_prime = 0.0;  // sqrt((1/n) sum_I beta^-1)
    double r = 0.0;            // (n - |I|) / n
    std::optional<double> beta_min;
    std::optional<double> w_bar;  // mean importance weight over I

    std::size_t informative_count() const noexcept { return informative_indices.size(); }

    friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

/// Model of the conditional reward CDF G(.|x, a). Implementations must
/// return proper CDFs on [0, D].
class ConditionalCdfModel {
public:
    virtual ~ConditionalCdfModel() = default;
    virtual StepFn model_cdf(ContextId x, ActionId a) const = 0;
};

/// Model given as an explicit (context, action) -> CDF table.
class TabularCdfModel final : public ConditionalCdfModel {
public:
    explicit TabularCdfModel(std::vector<std::vector<StepFn>> cdfs) : cdfs_(std::move(cdfs)) {
        for (std::size_t x = 0; x < cdfs_.size(); ++x) {
            for (std::size_t a = 0; a < cdfs_[x].size(); ++a) {
                detail::require(cdfs_[x][a].is_proper_cdf(),
                                "model CDF for context " + std::to_string(x) + ", action " +
                                    std::to_string(a) + " is not a proper CDF");
            }
        }
    }

    StepFn model_cdf(ContextId x, ActionId a) const override {
        detail::require(x < cdfs_.size() && a < cdfs_[x].size(),
                        "model has no CDF for context " + std::to_string(x) + ", action " +
                            std::to_string(a));
        return cdfs_[x][a];
    }

    const std::vector<std::vector<StepFn>>& table() const noexcept { return cdfs_; }

private:
    std::vector<std::vector<StepFn>> cdfs_;
};

inline double target_propensity(const LoggedSample& s, const Policy& pi) {
    return s.propensities[pi(s.context)];
}

/// w_pi(X_i, A_i) = 1{A_i = pi(X_i)} / beta(X_i, pi(X_i)); zero off I_pi.
inline double importance_weight(const LoggedSample& s, const Policy& pi) {
    const ActionId target = pi(s.context);
    if (s.action != target) return 0.0;
    return 1.0 / s.propensities[target];
}

inline std::vector<std::size_t> informative_set(const Dataset& data, const Policy& pi) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
        // exact zero test; generators emit exact zeros for excluded actions
        if (target_propensity(data[i], pi) != 0.0) idx.push_back(i);
    }
    return idx;
}

inline Diagnostics diagnostics(const Dataset& data, const Policy& pi) {
    Diagnostics d;
    d.n = data.size();
    d.informative_indices = informative_set(data, pi);
    double inv_sq = 0.0;
    double inv = 0.0;
    double wsum = 0.0;
    for (std::size_t i : d.informative_indices) {
        const double b = target_propensity(data[i], pi);
        inv_sq += 1.0 / (b * b);
        inv += 1.0 / b;
        wsum += importance_weight(data[i], pi);
        d.beta_min = d.beta_min ? std::min(*d.beta_min, b) : b;
    }
    const double n = static_cast<double>(d.n);
    d.sigma = std::sqrt(inv_sq / n);
    d.sigma_prime = std::sqrt(inv / n);
    d.r = static_cast<double>(d.n - d.informative_count()) / n;
    if (!d.informative_indices.empty()) {
        d.w_bar = wsum / static_cast<double>(d.informative_count());
    }
    return d;
}

/// Unclipped IS estimate; may exceed 1.
inline StepFn is_cdf_estimate(const Dataset& data, const Policy& pi,
                              Completion completion = Completion::one) {
    std::vector<std::pair<double, double>> jumps;
    std::size_t uninformative = 0;
    for (const auto& s : data.samples()) {
        if (target_propensity(s, pi) == 0.0) {
            ++uninformative;
            continue;
        }
        const double w = importance_weight(s, pi);
        if (w != 0.0) jumps.emplace_back(s.reward, w);
    }
    const double base_raw = completion_value(completion) * static_cast<double>(uninformative);
    return StepFn::from_jumps(base_raw, std::move(jumps), static_cast<double>(data.size()));
}

inline StepFn clipped_is_estimate(const Dataset& data, const Policy& pi,
                                  Completion completion = Completion::one) {
    return clip_unit(is_cdf_estimate(data, pi, completion));
}

/// Self-normalized IS. When I_pi is empty or carries no matched action
/// (W_pi = 0) the estimate is the constant completion value.
inline StepFn wis_cdf_estimate(const Dataset& data, const Policy& pi,
                               Completion completion = Completion::one) {
    std::vector<std::pair<double, double>> matched;
    std::size_t informative = 0;
    for (const auto& s : data.samples()) {
        if (target_propensity(s, pi) == 0.0) continue;
        ++informative;
        const double w = importance_weight(s, pi);
        if (w != 0.0) matched.emplace_back(s.reward, w);
    }
    const double c = completion_value(completion);
    if (matched.empty()) return StepFn::constant(c);

    std::stable_sort(matched.begin(), matched.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    // total taken in the same order as the running sum, so the last ratio is exactly 1
    double total = 0.0;
    for (const auto& m : matched) total += m.second;

    const double n = static_cast<double>(data.size());
    const double base_raw = c * static_cast<double>(data.size() - informative);
    const double inf_count = static_cast<double>(informative);
    std::vector<double> bps;
    std::vector<double> vals;
    double acc = 0.0;
    for (std::size_t i = 0; i < matched.size();) {
        const double t = matched[i].first;
        while (i < matched.size() && matched[i].first == t) acc += matched[i++].second;
        bps.push_back(t);
        vals.push_back(std::min(1.0, (base_raw + inf_count * (acc / total)) / n));
    }
    return StepFn(base_raw / n, std::move(bps), std::move(vals));
}

namespace detail {

inline StepFn checked_model_cdf(const ConditionalCdfModel& model, ContextId x, ActionId a,
                                const SupportInterval& support) {
    StepFn g = model.model_cdf(x, a);
    require(g.is_proper_cdf(), "model CDF for context " + std::to_string(x) + ", action " +
                                   std::to_string(a) + " is not a proper CDF");
    for (double t : g.breakpoints()) {
        require(support.contains(t), "model CDF for context " + std::to_string(x) +
                                         ", action " + std::to_string(a) +
                                         " has a breakpoint outside [0, D]");
    }
    return g;
}

inline void add_scaled_jumps(std::vector<std::pair<double, double>>& jumps, const StepFn& g,
                             double scale) {
    double prev = g.base();
    for (std::size_t j = 0; j < g.size(); ++j) {
        jumps.emplace_back(g.breakpoints()[j], scale * (g.values()[j] - prev));
        prev = g.values()[j];
    }
}

} // namespace detail

/// Doubly robust estimate: model prediction plus importance-weighted
/// correction on informative rows. May be non-monotone and leave [0,1].
inline StepFn dr_cdf_estimate(const Dataset& data, const Policy& pi,
                              const ConditionalCdfModel& model) {
    std::vector<std::pair<double, double>> jumps;
    const auto& support = data.support();
    for (const auto& s : data.samples()) {
        const ActionId target = pi(s.context);
        detail::add_scaled_jumps(jumps, detail::checked_model_cdf(model, s.context, target, support),
                                 1.0);
        if (s.propensities[target] == 0.0) continue;
        const double w = importance_weight(s, pi);
        if (w == 0.0) continue;
        jumps.emplace_back(s.reward, w);
        detail::add_scaled_jumps(
            jumps, detail::checked_model_cdf(model, s.context, s.action, support), -w);
    }
    return StepFn::from_jumps(0.0, std::move(jumps), static_cast<double>(data.size()));
}

inline StepFn drc_cdf_estimate(const Dataset& data, const Policy& pi,
                               const ConditionalCdfModel& model) {
    return monotonize_clip(dr_cdf_estimate(data, pi, model));
}

/// Dispatches on the estimator kind; drc requires a model.
inline StepFn estimate_cdf(EstimatorKind kind, const Dataset& data, const Policy& pi,
                           const ConditionalCdfModel* model = nullptr,
                           Completion completion = Completion::one) {
    switch (kind) {
    case EstimatorKind::clipped_is: return clipped_is_estimate(data, pi, completion);
    case EstimatorKind::wis: return wis_cdf_estimate(data, pi, completion);
    case EstimatorKind::drc:
        if (model == nullptr) throw MissingModelError("the dr estimator requires a model");
        return drc_cdf_estimate(data, pi, *model);
    }
    throw ValidationError("unknown estimator kind");
}

} // namespace riskpess
