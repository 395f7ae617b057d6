#pragma once

// Pessimistic (lower-confidence-bound) policy selection over a finite class.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "riskpess/bounds.hpp"
#include "riskpess/dataset.hpp"
#include "riskpess/error.hpp"
#include "riskpess/estimators.hpp"
#include "riskpess/risk.hpp"

namespace riskpess {

struct PolicyReport {
    std::size_t policy_index = 0;
    double rho_hat = 0.0;
    ConfidenceRadius radius;
    double lcb = 0.0;  // rho_hat - L * radius.value
    Diagnostics diagnostics;
};

struct LearnResult {
    std::size_t selected = 0;
    std::vector<PolicyReport> reports;
    // config echo
    std::string risk;
    BoundConfig config;
    double lipschitz = 0.0;
    bool lipschitz_overridden = false;
    bool greedy = false;
    int natarajan_dim = 1;
    bool tie = false;  // more than one policy attained the maximum
};

struct SelectOptions {
    const ConditionalCdfModel* model = nullptr;
    Completion completion = Completion::one;
    /// Per-policy r-bar for the DR radius; takes precedence over config.dr_bias.
    std::vector<double> dr_bias;
    /// Replaces lipschitz_constant(rho, D); recorded in the result.
    std::optional<double> lipschitz_override;
};

/// rho(F-hat) for the chosen estimator. The estimate is already a
/// (sub-)CDF for all three estimators.
inline double plug_in_risk(const Dataset& data, const Policy& pi, const RiskFunctional& rho,
                           EstimatorKind estimator, const ConditionalCdfModel* model = nullptr,
                           Completion completion = Completion::one) {
    // VaR is rejected before any estimation work
    (void)lipschitz_constant(rho, data.support());
    return evaluate_risk(rho, estimate_cdf(estimator, data, pi, model, completion),
                         data.support());
}

inline ConfidenceRadius uniform_radius(EstimatorKind estimator, const Diagnostics& diag,
                                       std::size_t n, std::size_t K, int d_pi, double delta,
                                       std::optional<double> r_bar) {
    switch (estimator) {
    case EstimatorKind::clipped_is: return uniform_is_radius(diag, n, K, d_pi, delta);
    case EstimatorKind::wis: return uniform_wis_radius(diag, n, K, d_pi, delta);
    case EstimatorKind::drc: return uniform_dr_radius(diag, n, K, d_pi, delta, r_bar);
    }
    throw ValidationError("unknown estimator kind");
}

namespace detail {

/// argmax with smallest-index tie-break.
inline void pick_max(LearnResult& out, bool by_lcb) {
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t i = 1; i < out.reports.size(); ++i) {
        const double cur = by_lcb ? out.reports[i].lcb : out.reports[i].rho_hat;
        const double top = by_lcb ? out.reports[best].lcb : out.reports[best].rho_hat;
        if (cur > top) {
            best = i;
            tie = false;
        } else if (cur == top) {
            tie = true;
        }
    }
    out.selected = best;
    out.tie = tie;
}

inline LearnResult evaluate_class(const Dataset& data, const PolicyClass& cls,
                                  const RiskFunctional& rho, const BoundConfig& config,
                                  const SelectOptions& opts, bool need_radius) {
    config.validate();
    LearnResult out;
    out.risk = risk_name(rho);
    out.config = config;
    out.natarajan_dim = cls.natarajan_dim();
    const double L_default = lipschitz_constant(rho, data.support());
    out.lipschitz = opts.lipschitz_override.value_or(L_default);
    out.lipschitz_overridden = opts.lipschitz_override.has_value();
    if (config.estimator == EstimatorKind::drc && opts.model == nullptr) {
        throw MissingModelError("the dr estimator requires a model");
    }
    if (!opts.dr_bias.empty()) {
        require(opts.dr_bias.size() == cls.size(), "dr_bias must have one entry per policy");
    }

    const std::size_t n = data.size();
    out.reports.reserve(cls.size());
    for (std::size_t k = 0; k < cls.size(); ++k) {
        const Policy& pi = cls[k];
        pi.validate(data.num_contexts(), data.num_actions());
        PolicyReport rep;
        rep.policy_index = k;
        rep.diagnostics = diagnostics(data, pi);
        rep.rho_hat = evaluate_risk(
            rho, estimate_cdf(config.estimator, data, pi, opts.model, opts.completion),
            data.support());
        if (need_radius) {
            std::optional<double> r_bar = config.dr_bias;
            if (!opts.dr_bias.empty()) r_bar = opts.dr_bias[k];
            rep.radius = uniform_radius(config.estimator, rep.diagnostics, n, data.num_actions(),
                                        cls.natarajan_dim(), config.delta, r_bar);
        } else {
            rep.radius = ConfidenceRadius{0.0, 0.0, 0.0};
        }
        rep.lcb = rep.rho_hat - out.lipschitz * rep.radius.value;
        out.reports.push_back(std::move(rep));
    }
    return out;
}

} // namespace detail

/// argmax_pi [rho_hat_pi - L R(pi)] with uniform radii for the class.
inline LearnResult pessimistic_select(const Dataset& data, const PolicyClass& cls,
                                      const RiskFunctional& rho, const BoundConfig& config,
                                      const SelectOptions& opts = {}) {
    LearnResult out = detail::evaluate_class(data, cls, rho, config, opts, true);
    detail::pick_max(out, true);
    return out;
}

/// argmax_pi rho_hat_pi (no uncertainty penalty).
inline LearnResult greedy_select(const Dataset& data, const PolicyClass& cls,
                                 const RiskFunctional& rho, const BoundConfig& config,
                                 const SelectOptions& opts = {}) {
    LearnResult out = detail::evaluate_class(data, cls, rho, config, opts, false);
    out.greedy = true;
    detail::pick_max(out, false);
    return out;
}

struct Certificate {
    double bound;  // 2 L R(pi*)
    bool vacuous;  // R(pi*) saturated at 1
};

/// Suboptimality bound rho(pi*) - rho(selected) <= 2 L R(pi*), valid on
/// the event that every radius covers its estimation error.
inline Certificate suboptimality_certificate(const LearnResult& result, std::size_t star_index,
                                             double L) {
    detail::require(star_index < result.reports.size(), "star_index out of range");
    const double R = result.reports[star_index].radius.value;
    return {2.0 * L * R, R >= 1.0};
}

} // namespace riskpess
