#pragma once

// Monte Carlo validation harness: coverage of the confidence radii and the
// suboptimality-vs-n curve of pessimistic learning.
//
// Trials are independent; each writes its own slot and the reduction runs
// in trial order, so reports do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "riskpess/bounds.hpp"
#include "riskpess/error.hpp"
#include "riskpess/estimators.hpp"
#include "riskpess/learner.hpp"
#include "riskpess/parallel.hpp"
#include "riskpess/risk.hpp"
#include "riskpess/simlab.hpp"

namespace riskpess {

enum class CoverageMode { pointwise, uniform };

struct CoverageSpec {
    CoverageMode mode = CoverageMode::pointwise;
    std::vector<Policy> policies;  // pointwise mode uses policies[0]
    int natarajan_dim = 1;         // uniform mode
    EstimatorKind estimator = EstimatorKind::clipped_is;
    BoundFlavor flavor = BoundFlavor::hoeffding;
    double delta = 0.05;
    std::size_t n = 500;
    std::size_t trials = 2000;
    std::uint64_t seed = 0;
    Completion completion = Completion::one;
    const ConditionalCdfModel* model = nullptr;  // drc only
    std::optional<double> radius_override;       // replaces every radius
};

struct CoverageReport {
    std::string mode;
    std::string estimator;
    std::string flavor;
    double delta = 0.0;
    std::size_t n = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::size_t violations = 0;
    double violation_rate = 0.0;
    double threshold = 0.0;  // delta + 3 sqrt(delta (1 - delta) / trials)
    double ci_low = 0.0;     // Wilson 95%
    double ci_high = 0.0;
    double mean_max_error = 0.0;
    double mean_radius = 0.0;
};

inline double binomial_threshold(double delta, std::size_t trials) {
    return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.96) {
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double den = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2.0 * nn)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / den;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace detail {

struct CoverageTrial {
    bool violated = false;
    double max_error = 0.0;
    double mean_radius = 0.0;
};

} // namespace detail

inline CoverageReport coverage_experiment(const Environment& env, const BehaviorSpec& behavior,
                                          const CoverageSpec& spec, unsigned threads = 1) {
    detail::require(spec.trials >= 100, "coverage_experiment: trials must be >= 100");
    detail::require(!spec.policies.empty(), "coverage_experiment: no policy given");
    detail::require(spec.delta > 0.0 && spec.delta < 1.0, "delta must lie in (0, 1)");
    if (spec.mode == CoverageMode::pointwise) {
        detail::require(spec.estimator == EstimatorKind::clipped_is,
                        "pointwise coverage is defined for the clipped IS estimator");
    }
    if (spec.estimator == EstimatorKind::drc && spec.model == nullptr) {
        throw MissingModelError("the dr estimator requires a model");
    }
    behavior.validate_against(env);
    const std::vector<Policy> evaluated =
        spec.mode == CoverageMode::pointwise ? std::vector<Policy>{spec.policies.front()}
                                             : spec.policies;
    std::vector<StepFn> truths;
    for (const auto& pi : evaluated) truths.push_back(true_policy_cdf(env, pi));

    std::vector<detail::CoverageTrial> results(spec.trials);
    parallel_for(spec.trials, threads, [&](std::size_t t) {
        const Dataset data = sample_dataset(env, behavior, spec.n, spec.seed, t);
        detail::CoverageTrial res;
        double radius_sum = 0.0;
        for (std::size_t k = 0; k < evaluated.size(); ++k) {
            const Policy& pi = evaluated[k];
            const Diagnostics diag = diagnostics(data, pi);
            const StepFn est = estimate_cdf(spec.estimator, data, pi, spec.model, spec.completion);
            double radius = 0.0;
            if (spec.radius_override) {
                radius = *spec.radius_override;
            } else if (spec.mode == CoverageMode::pointwise) {
                radius = pointwise_bound(diag, spec.n, spec.delta, spec.flavor).value;
            } else {
                std::optional<double> r_bar;
                if (spec.estimator == EstimatorKind::drc) {
                    r_bar = oracle_dr_bias(env, *spec.model, data, pi);
                }
                radius = uniform_radius(spec.estimator, diag, spec.n, data.num_actions(),
                                        spec.natarajan_dim, spec.delta, r_bar)
                             .value;
            }
            const double err = sup_norm_distance(est, truths[k]);
            res.max_error = std::max(res.max_error, err);
            radius_sum += radius;
            if (err > radius) res.violated = true;
        }
        res.mean_radius = radius_sum / static_cast<double>(evaluated.size());
        results[t] = res;
    });

    CoverageReport rep;
    rep.mode = spec.mode == CoverageMode::pointwise ? "pointwise" : "uniform";
    rep.estimator = to_string(spec.estimator);
    rep.flavor = to_string(spec.flavor);
    rep.delta = spec.delta;
    rep.n = spec.n;
    rep.trials = spec.trials;
    rep.seed = spec.seed;
    double err_sum = 0.0;
    double rad_sum = 0.0;
    for (const auto& r : results) {
        rep.violations += r.violated ? 1 : 0;
        err_sum += r.max_error;
        rad_sum += r.mean_radius;
    }
    const double T = static_cast<double>(spec.trials);
    rep.violation_rate = static_cast<double>(rep.violations) / T;
    rep.threshold = binomial_threshold(spec.delta, spec.trials);
    std::tie(rep.ci_low, rep.ci_high) = wilson_interval(rep.violations, spec.trials);
    rep.mean_max_error = err_sum / T;
    rep.mean_radius = rad_sum / T;
    return rep;
}

// ---------------------------------------------------------------------------

struct FamilySpec {
    int d = 2;
    std::size_t K = 2;
    double beta_inf = 0.5;
    std::optional<double> delta_gap;  // absent: per-n default gap
    double base_prob = 0.5;
};

/// Explicit environment for rate curves outside the sign-instance family.
struct RateInstance {
    Environment env;
    BehaviorSpec behavior;
    std::vector<Policy> policies;
    int natarajan_dim = 1;
};

struct RateSpec {
    FamilySpec family;
    std::optional<RateInstance> instance;  // overrides family when present
    RiskFunctional rho = risk::Mean{};
    EstimatorKind estimator = EstimatorKind::clipped_is;
    double delta = 0.05;
    std::vector<std::size_t> n_grid;
    std::size_t trials_per_n = 200;
    std::uint64_t seed = 0;
    bool greedy = false;
};

struct RatePoint {
    std::size_t n = 0;
    double delta_gap = 0.0;
    double mean_gap = 0.0;
    double se = 0.0;
    double mean_w1 = 0.0;
    double violation_rate = 0.0;     // uniform coverage failed
    std::size_t certificate_exceptions = 0;  // coverage held but gap > 2 L R(pi*)
    double envelope = 0.0;           // corollary_rate value (without c L)
    bool envelope_precondition = false;
};

struct RateReport {
    std::string risk;
    std::string estimator;
    double delta = 0.0;
    std::size_t trials_per_n = 0;
    std::uint64_t seed = 0;
    double lipschitz = 0.0;
    std::vector<RatePoint> points;
    double slope = 0.0;       // least squares of log(mean_gap) on log(n)
    double slope_se = 0.0;
    std::size_t slope_points = 0;  // grid points with mean_gap > 0
    double c0 = 0.0;
    double certified_c = 0.0;
    double fitted_c = 0.0;    // geometric-mean ratio gap / (L envelope)
    bool below_certified_envelope = false;
};

namespace detail {

struct RateTrial {
    double gap = 0.0;
    double w1 = 0.0;
    bool covered = true;
    bool certificate_exception = false;
};

inline std::pair<double, double> ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    if (m < 2) return {0.0, 0.0};
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double b = sxy / sxx;
    if (m < 3) return {b, 0.0};
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = y[i] - my - b * (x[i] - mx);
        rss += e * e;
    }
    return {b, std::sqrt(rss / static_cast<double>(m - 2) / sxx)};
}

} // namespace detail

/// For each n: average over trials of rho(pi*) - rho(selected) and of
/// W1(F^{pi*}, F^{selected}). On the sign-instance family trial t uses
/// instance theta_{t mod 2^d}; an explicit instance is used for every trial.
inline RateReport rate_curve(const RateSpec& spec, unsigned threads = 1) {
    detail::require(spec.n_grid.size() >= 4, "rate_curve: n_grid needs at least 4 points");
    for (std::size_t i = 1; i < spec.n_grid.size(); ++i) {
        detail::require(spec.n_grid[i - 1] < spec.n_grid[i], "rate_curve: n_grid must increase");
    }
    detail::require(spec.trials_per_n >= 1, "rate_curve: trials_per_n must be >= 1");
    detail::require(spec.delta > 0.0 && spec.delta < 1.0, "delta must lie in (0, 1)");
    const auto& fam = spec.family;
    const SupportInterval support = spec.instance ? spec.instance->env.support() : SupportInterval(1.0);
    const double L = lipschitz_constant(spec.rho, support);
    const std::size_t n_inst = spec.instance ? 1 : std::size_t{1} << fam.d;
    const int dim = spec.instance ? spec.instance->natarajan_dim : fam.d;
    const std::size_t K = spec.instance ? spec.instance->env.num_actions() : fam.K;
    // beta_inf for the envelope: smallest propensity of the optimal policy
    double beta_inf = fam.beta_inf;

    RateReport rep;
    rep.risk = risk_name(spec.rho);
    rep.estimator = to_string(spec.estimator);
    rep.delta = spec.delta;
    rep.trials_per_n = spec.trials_per_n;
    rep.seed = spec.seed;
    rep.lipschitz = L;

    for (std::size_t gi = 0; gi < spec.n_grid.size(); ++gi) {
        const std::size_t n = spec.n_grid[gi];
        std::vector<RateInstance> family;
        double gap_used = 0.0;
        if (spec.instance) {
            family.push_back(*spec.instance);
        } else {
            for (auto& mi : minimax_family(fam.d, fam.K, fam.beta_inf, fam.delta_gap, n, fam.base_prob)) {
                gap_used = mi.delta_gap;
                family.push_back({std::move(mi.env), std::move(mi.behavior), std::move(mi.policies), fam.d});
            }
        }
        // true risks and CDFs per (instance, policy)
        std::vector<std::vector<StepFn>> true_cdf(n_inst);
        std::vector<std::vector<double>> true_rho(n_inst);
        std::vector<std::size_t> star(n_inst);
        for (std::size_t k = 0; k < n_inst; ++k) {
            for (const auto& pi : family[k].policies) {
                true_cdf[k].push_back(true_policy_cdf(family[k].env, pi));
                true_rho[k].push_back(evaluate_risk(spec.rho, true_cdf[k].back(), support));
            }
            star[k] = optimal_policy_index(family[k].env, family[k].policies, spec.rho);
            if (spec.instance) {
                beta_inf = 1.0;
                const Policy& ps = family[k].policies[star[k]];
                for (std::size_t x = 0; x < family[k].env.num_contexts(); ++x) {
                    if (family[k].env.context_probs()[x] > 0.0) {
                        beta_inf = std::min(beta_inf, family[k].behavior[x][ps(x)]);
                    }
                }
            }
        }

        std::vector<detail::RateTrial> results(spec.trials_per_n);
        parallel_for(spec.trials_per_n, threads, [&](std::size_t t) {
            const auto& inst = family[t % n_inst];
            const std::size_t k = t % n_inst;
            const std::uint64_t trial_key = static_cast<std::uint64_t>(gi) * spec.trials_per_n + t;
            const Dataset data = sample_dataset(inst.env, inst.behavior, n, spec.seed, trial_key);
            const PolicyClass cls(inst.policies, inst.natarajan_dim);
            BoundConfig cfg;
            cfg.delta = spec.delta;
            cfg.estimator = spec.estimator;
            SelectOptions opts;
            const OracleModel model(inst.env);
            if (spec.estimator == EstimatorKind::drc) {
                opts.model = &model;
                for (const auto& pi : inst.policies) {
                    opts.dr_bias.push_back(oracle_dr_bias(inst.env, model, data, pi));
                }
            }
            // radii are needed for the certificate check even in greedy mode
            const LearnResult pess = pessimistic_select(data, cls, spec.rho, cfg, opts);
            const std::size_t chosen =
                spec.greedy ? greedy_select(data, cls, spec.rho, cfg, opts).selected : pess.selected;
            detail::RateTrial res;
            res.gap = true_rho[k][star[k]] - true_rho[k][chosen];
            res.w1 = wasserstein1(true_cdf[k][star[k]], true_cdf[k][chosen], support);
            for (std::size_t p = 0; p < cls.size(); ++p) {
                const StepFn est = estimate_cdf(spec.estimator, data, cls[p], opts.model);
                if (sup_norm_distance(est, true_cdf[k][p]) > pess.reports[p].radius.value) {
                    res.covered = false;
                }
            }
            if (res.covered && !spec.greedy) {
                const auto cert = suboptimality_certificate(pess, star[k], L);
                res.certificate_exception = res.gap > cert.bound;
            }
            results[t] = res;
        });

        RatePoint pt;
        pt.n = n;
        pt.delta_gap = gap_used;
        double sum = 0.0, sum_sq = 0.0, w1 = 0.0;
        std::size_t uncovered = 0;
        for (const auto& r : results) {
            sum += r.gap;
            sum_sq += r.gap * r.gap;
            w1 += r.w1;
            uncovered += r.covered ? 0 : 1;
            pt.certificate_exceptions += r.certificate_exception ? 1 : 0;
        }
        const double T = static_cast<double>(spec.trials_per_n);
        pt.mean_gap = sum / T;
        const double var = spec.trials_per_n > 1
                               ? std::max(0.0, (sum_sq - T * pt.mean_gap * pt.mean_gap) / (T - 1.0))
                               : 0.0;
        pt.se = std::sqrt(var / T);
        pt.mean_w1 = w1 / T;
        pt.violation_rate = static_cast<double>(uncovered) / T;
        rep.points.push_back(pt);
    }

    // envelope with the smallest c0 making the precondition hold on the grid
    const double log20 = std::log(20.0 / spec.delta);
    for (const auto& pt : rep.points) {
        const double nk2 = static_cast<double>(pt.n) * static_cast<double>(K * K);
        rep.c0 = std::max(rep.c0, (log20 + dim * std::log(nk2)) /
                                      (static_cast<double>(pt.n) * beta_inf));
    }
    rep.certified_c = certified_rate_constant(rep.c0);
    std::vector<double> lx, ly;
    double log_ratio = 0.0;
    std::size_t ratio_count = 0;
    rep.below_certified_envelope = true;
    for (auto& pt : rep.points) {
        const auto env = corollary_rate(pt.n, K, dim, spec.delta, beta_inf, rep.c0);
        pt.envelope = env.value;
        pt.envelope_precondition = env.precondition_ok;
        if (pt.mean_gap > rep.certified_c * L * env.value) rep.below_certified_envelope = false;
        if (pt.mean_gap > 0.0) {
            lx.push_back(std::log(static_cast<double>(pt.n)));
            ly.push_back(std::log(pt.mean_gap));
            log_ratio += std::log(pt.mean_gap / (L * env.value));
            ++ratio_count;
        }
    }
    rep.slope_points = lx.size();
    std::tie(rep.slope, rep.slope_se) = detail::ls_slope(lx, ly);
    rep.fitted_c = ratio_count > 0 ? std::exp(log_ratio / static_cast<double>(ratio_count)) : 0.0;
    return rep;
}

} // namespace riskpess
