#pragma once

// Finite-context synthetic bandits with exact ground truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskpess/dataset.hpp"
#include "riskpess/error.hpp"
#include "riskpess/estimators.hpp"
#include "riskpess/risk.hpp"
#include "riskpess/rng.hpp"
#include "riskpess/step_fn.hpp"

namespace riskpess {

struct Atom {
    double y;
    double p;
    friend bool operator==(const Atom&, const Atom&) = default;
};

inline constexpr double kMassTol = 1e-12;

namespace detail {

/// Clamps accumulated values into [0,1] and pins the terminal value to 1.
inline StepFn pin_proper(const StepFn& f) {
    std::vector<double> vals(f.values());
    for (double& v : vals) v = std::clamp(v, 0.0, 1.0);
    if (!vals.empty()) vals.back() = 1.0;
    return StepFn(0.0, f.breakpoints(), std::move(vals));
}

} // namespace detail

/// CDF of a discrete distribution. Zero-mass atoms are dropped.
inline StepFn atoms_to_cdf(const std::vector<Atom>& atoms) {
    std::vector<std::pair<double, double>> jumps;
    double total = 0.0;
    for (const auto& a : atoms) {
        detail::require(std::isfinite(a.y) && std::isfinite(a.p) && a.p >= 0.0,
                        "atom with invalid location or mass");
        if (a.p > 0.0) jumps.emplace_back(a.y, a.p);
        total += a.p;
    }
    detail::require(!jumps.empty() && std::abs(total - 1.0) <= kMassTol,
                    "atom masses must sum to 1");
    return detail::pin_proper(StepFn::from_jumps(0.0, std::move(jumps)));
}

inline StepFn bernoulli_cdf(double p) {
    if (p <= 0.0) return StepFn::point_mass(0.0);
    if (p >= 1.0) return StepFn::point_mass(1.0);
    return StepFn(0.0, {0.0, 1.0}, {1.0 - p, 1.0});
}

/// Finite-context bandit: context distribution and a discrete reward law
/// per (context, action).
class Environment {
public:
    Environment(std::vector<double> context_probs,
                std::vector<std::vector<std::vector<Atom>>> rewards, std::size_t K,
                SupportInterval support)
        : context_probs_(std::move(context_probs)), rewards_(std::move(rewards)), K_(K),
          support_(support) {
        detail::require(!context_probs_.empty(), "environment needs at least one context");
        detail::require(K_ >= 1, "environment needs K >= 1");
        detail::require(rewards_.size() == context_probs_.size(),
                        "rewards must list every context");
        double total = 0.0;
        for (double p : context_probs_) {
            detail::require(std::isfinite(p) && p >= 0.0, "context probability must be >= 0");
            total += p;
        }
        detail::require(std::abs(total - 1.0) <= kMassTol, "context probabilities must sum to 1");
        cdfs_.resize(rewards_.size());
        for (std::size_t x = 0; x < rewards_.size(); ++x) {
            const std::string where =
                "context " + std::to_string(x);
            detail::require(rewards_[x].size() == K_, where + ": reward list must cover all K actions");
            for (std::size_t a = 0; a < K_; ++a) {
                for (const auto& atom : rewards_[x][a]) {
                    detail::require(support_.contains(atom.y),
                                    where + ", action " + std::to_string(a) +
                                        ": atom outside [0, D]");
                }
                try {
                    cdfs_[x].push_back(atoms_to_cdf(rewards_[x][a]));
                } catch (const ValidationError& e) {
                    throw ValidationError(where + ", action " + std::to_string(a) + ": " + e.what());
                }
            }
        }
    }

    std::size_t num_contexts() const noexcept { return context_probs_.size(); }
    std::size_t num_actions() const noexcept { return K_; }
    const SupportInterval& support() const noexcept { return support_; }
    const std::vector<double>& context_probs() const noexcept { return context_probs_; }
    const std::vector<std::vector<std::vector<Atom>>>& rewards() const noexcept { return rewards_; }

    /// G(. | x, a)
    const StepFn& conditional_cdf(ContextId x, ActionId a) const { return cdfs_.at(x).at(a); }

private:
    std::vector<double> context_probs_;
    std::vector<std::vector<std::vector<Atom>>> rewards_;
    std::size_t K_;
    SupportInterval support_;
    std::vector<std::vector<StepFn>> cdfs_;
};

/// The environment's own conditional CDFs as a (perfect) model.
class OracleModel final : public ConditionalCdfModel {
public:
    explicit OracleModel(const Environment& env) : env_(&env) {}
    StepFn model_cdf(ContextId x, ActionId a) const override { return env_->conditional_cdf(x, a); }

private:
    const Environment* env_;
};

/// Behavior policy: one propensity vector per context, exact zeros allowed.
class BehaviorSpec {
public:
    BehaviorSpec() = default;

    explicit BehaviorSpec(std::vector<std::vector<double>> propensities)
        : propensities_(std::move(propensities)) {
        for (std::size_t x = 0; x < propensities_.size(); ++x) {
            double total = 0.0;
            for (double p : propensities_[x]) {
                detail::require(std::isfinite(p) && p >= 0.0,
                                "behavior propensity for context " + std::to_string(x) +
                                    " is negative or non-finite");
                total += p;
            }
            detail::require(std::abs(total - 1.0) <= kPropensitySumTol,
                            "behavior propensities for context " + std::to_string(x) +
                                " do not sum to 1");
        }
    }

    const std::vector<double>& operator[](ContextId x) const { return propensities_.at(x); }
    const std::vector<std::vector<double>>& propensities() const noexcept { return propensities_; }
    std::size_t num_contexts() const noexcept { return propensities_.size(); }

    void validate_against(const Environment& env) const {
        detail::require(propensities_.size() == env.num_contexts(),
                        "behavior must list every environment context");
        for (std::size_t x = 0; x < propensities_.size(); ++x) {
            detail::require(propensities_[x].size() == env.num_actions(),
                            "behavior for context " + std::to_string(x) + " must have K entries");
        }
    }

private:
    std::vector<std::vector<double>> propensities_;
};

/// F^pi(t) = sum_x P(x) G(t | x, pi(x)).
inline StepFn true_policy_cdf(const Environment& env, const Policy& pi) {
    pi.validate(env.num_contexts(), env.num_actions());
    std::vector<std::pair<double, double>> jumps;
    for (std::size_t x = 0; x < env.num_contexts(); ++x) {
        const double px = env.context_probs()[x];
        if (px == 0.0) continue;
        detail::add_scaled_jumps(jumps, env.conditional_cdf(x, pi(x)), px);
    }
    return detail::pin_proper(StepFn::from_jumps(0.0, std::move(jumps)));
}

inline double true_risk(const Environment& env, const Policy& pi, const RiskFunctional& rho) {
    return evaluate_risk(rho, true_policy_cdf(env, pi), env.support());
}

/// Stage tags for the counter-based draws of one row.
enum class DrawStage : std::uint64_t { context = 0, action = 1, reward = 2 };

/// Draws n rows context -> action -> reward. Row i of trial t depends only
/// on (seed, t, i), so trials can be generated in any order.
inline Dataset sample_dataset(const Environment& env, const BehaviorSpec& behavior, std::size_t n,
                              std::uint64_t seed, std::uint64_t trial = 0) {
    detail::require(n >= 1, "sample_dataset: n must be >= 1");
    behavior.validate_against(env);
    const CounterRng rng(seed);
    std::vector<LoggedSample> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        LoggedSample s;
        s.context = sample_categorical(
            env.context_probs(), rng.uniform(trial, i, static_cast<std::uint64_t>(DrawStage::context)));
        s.propensities = behavior[s.context];
        s.action = sample_categorical(
            s.propensities, rng.uniform(trial, i, static_cast<std::uint64_t>(DrawStage::action)));
        const auto& atoms = env.rewards()[s.context][s.action];
        std::vector<double> masses;
        masses.reserve(atoms.size());
        for (const auto& a : atoms) masses.push_back(a.p);
        s.reward = atoms[sample_categorical(
                             masses, rng.uniform(trial, i, static_cast<std::uint64_t>(DrawStage::reward)))]
                       .y;
        rows.push_back(std::move(s));
    }
    return Dataset(std::move(rows), env.num_actions(), env.support(), env.num_contexts());
}

/// r-bar_pi = || (1/n) sum_{i not in I_pi} [model - G](. | X_i, pi) ||_inf.
inline double oracle_dr_bias(const Environment& env, const ConditionalCdfModel& model,
                             const Dataset& data, const Policy& pi) {
    std::vector<std::pair<double, double>> jumps;
    bool any = false;
    for (const auto& s : data.samples()) {
        const ActionId target = pi(s.context);
        if (s.propensities[target] != 0.0) continue;
        any = true;
        detail::add_scaled_jumps(jumps, model.model_cdf(s.context, target), 1.0);
        detail::add_scaled_jumps(jumps, env.conditional_cdf(s.context, target), -1.0);
    }
    if (!any) return 0.0;
    return sup_norm(StepFn::from_jumps(0.0, std::move(jumps), static_cast<double>(data.size())));
}

/// Index of the true-risk maximizer, smallest index on ties.
inline std::size_t optimal_policy_index(const Environment& env, const std::vector<Policy>& policies,
                                        const RiskFunctional& rho) {
    detail::require(!policies.empty(), "empty policy list");
    std::size_t best = 0;
    double best_val = true_risk(env, policies[0], rho);
    for (std::size_t k = 1; k < policies.size(); ++k) {
        const double v = true_risk(env, policies[k], rho);
        if (v > best_val) {
            best = k;
            best_val = v;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Lower-bound instance family.
//
// d contexts s_1..s_d drawn uniformly; action 0 plays the role of f_1 and
// action 1 of f_{-1} at every context. Rewards are Bern(p0 + theta_i delta)
// for action 0, Bern(p0) for action 1 and Bern(0) for any other action.
// The classic family uses p0 = 1/2; a smaller p0 keeps tail risks such as
// CVaR from saturating.
// ---------------------------------------------------------------------------

struct MinimaxInstance {
    std::vector<int> theta;  // +1 / -1
    double delta_gap = 0.0;
    double beta_inf = 0.0;
    double base_prob = 0.5;
    Environment env;
    BehaviorSpec behavior;
    std::vector<Policy> policies;  // all 2^d sign policies
    std::size_t optimal_index = 0; // pi_theta
};

/// min(sqrt(d / (24 n beta_inf)), 0.24)
inline double minimax_default_gap(int d, std::size_t n, double beta_inf) {
    return std::min(std::sqrt(static_cast<double>(d) /
                              (24.0 * static_cast<double>(n) * beta_inf)),
                    0.24);
}

/// Policy k plays action ((k >> i) & 1) at context i.
inline std::vector<Policy> sign_policies(int d) {
    std::vector<Policy> out;
    for (std::size_t k = 0; k < (std::size_t{1} << d); ++k) {
        std::vector<ActionId> table(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) table[static_cast<std::size_t>(i)] = (k >> i) & 1u;
        out.emplace_back(std::move(table));
    }
    return out;
}

inline MinimaxInstance minimax_instance(std::vector<int> theta, std::size_t K, double beta_inf,
                                        double delta_gap, double base_prob = 0.5) {
    const int d = static_cast<int>(theta.size());
    detail::require(d >= 1 && d <= 16, "minimax family: d must lie in [1, 16]");
    detail::require(K >= 2, "minimax family: K must be >= 2");
    detail::require(beta_inf > 0.0 && beta_inf <= 0.5,
                    "minimax family: beta_inf must lie in (0, 1/2]");
    detail::require(delta_gap > 0.0 && delta_gap < 0.25,
                    "minimax family: delta_gap must lie in (0, 1/4)");
    detail::require(base_prob - delta_gap >= 0.0 && base_prob + delta_gap <= 1.0,
                    "minimax family: base_prob +/- delta_gap must stay in [0, 1]");

    std::vector<std::vector<std::vector<Atom>>> rewards(static_cast<std::size_t>(d));
    std::vector<std::vector<double>> props(static_cast<std::size_t>(d));
    std::size_t opt = 0;
    auto bern = [](double p) {
        if (p <= 0.0) return std::vector<Atom>{{0.0, 1.0}};
        if (p >= 1.0) return std::vector<Atom>{{1.0, 1.0}};
        return std::vector<Atom>{{0.0, 1.0 - p}, {1.0, p}};
    };
    for (int i = 0; i < d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int th = theta[ui];
        detail::require(th == 1 || th == -1, "theta entries must be +1 or -1");
        if (th == -1) opt |= std::size_t{1} << i;
        rewards[ui].push_back(bern(base_prob + th * delta_gap));
        rewards[ui].push_back(bern(base_prob));
        for (std::size_t a = 2; a < K; ++a) rewards[ui].push_back(bern(0.0));
        if (K == 2) {
            props[ui] = {beta_inf, 1.0 - beta_inf};
        } else {
            props[ui].assign(K, (1.0 - 2.0 * beta_inf) / static_cast<double>(K - 2));
            props[ui][0] = beta_inf;
            props[ui][1] = beta_inf;
        }
    }
    std::vector<double> ctx(static_cast<std::size_t>(d), 1.0 / d);
    // uniform probabilities may not sum to exactly 1 in floating point
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < ctx.size(); ++i) s += ctx[i];
    ctx.back() = 1.0 - s;

    return MinimaxInstance{std::move(theta),
                           delta_gap,
                           beta_inf,
                           base_prob,
                           Environment(std::move(ctx), std::move(rewards), K, SupportInterval(1.0)),
                           BehaviorSpec(std::move(props)),
                           sign_policies(d),
                           opt};
}

/// theta vector for index k: theta_i = -1 iff bit i of k is set.
inline std::vector<int> theta_from_index(std::size_t k, int d) {
    std::vector<int> th(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) th[static_cast<std::size_t>(i)] = ((k >> i) & 1u) ? -1 : 1;
    return th;
}

/// All 2^d sign instances. When delta_gap is absent the default
/// sqrt(d / (24 n beta_inf)) (capped at 0.24) is used with n_for_default.
inline std::vector<MinimaxInstance> minimax_family(int d, std::size_t K, double beta_inf,
                                                   std::optional<double> delta_gap,
                                                   std::optional<std::size_t> n_for_default,
                                                   double base_prob = 0.5) {
    detail::require(!(K == 2 && beta_inf > 0.5), "minimax family: K = 2 requires beta_inf <= 1/2");
    double gap = 0.0;
    if (delta_gap) {
        gap = *delta_gap;
    } else {
        detail::require(n_for_default.has_value() && *n_for_default >= 1,
                        "minimax family: need delta_gap or n for the default gap");
        gap = minimax_default_gap(d, *n_for_default, beta_inf);
    }
    std::vector<MinimaxInstance> out;
    for (std::size_t k = 0; k < (std::size_t{1} << d); ++k) {
        out.push_back(minimax_instance(theta_from_index(k, d), K, beta_inf, gap, base_prob));
    }
    return out;
}

} // namespace riskpess
