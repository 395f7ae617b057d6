#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "riskpess/error.hpp"
#include "riskpess/step_fn.hpp"

namespace riskpess {

using ContextId = std::size_t;
using ActionId = std::size_t;

/// One logged round: context, taken action, observed reward, and the full
/// behavior propensity vector beta(x, .) at that context.
struct LoggedSample {
    ContextId context = 0;
    ActionId action = 0;
    double reward = 0.0;
    std::vector<double> propensities;

    friend bool operator==(const LoggedSample&, const LoggedSample&) = default;
};

inline constexpr double kPropensitySumTol = 1e-9;

class Dataset {
public:
    Dataset(std::vector<LoggedSample> samples, std::size_t num_actions, SupportInterval support,
            std::size_t num_contexts)
        : samples_(std::move(samples)), K_(num_actions), support_(support),
          num_contexts_(num_contexts) {
        detail::require(!samples_.empty(), "dataset must be nonempty");
        detail::require(K_ >= 1, "dataset: K must be >= 1");
        for (std::size_t i = 0; i < samples_.size(); ++i) validate_row(samples_[i], i);
    }

    const std::vector<LoggedSample>& samples() const noexcept { return samples_; }
    const LoggedSample& operator[](std::size_t i) const noexcept { return samples_[i]; }
    std::size_t size() const noexcept { return samples_.size(); }
    std::size_t num_actions() const noexcept { return K_; }
    std::size_t num_contexts() const noexcept { return num_contexts_; }
    const SupportInterval& support() const noexcept { return support_; }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    void validate_row(const LoggedSample& s, std::size_t i) const {
        const std::string where = "row " + std::to_string(i) + ": ";
        detail::require(s.context < num_contexts_, where + "context id out of range");
        detail::require(s.action < K_, where + "action id out of range");
        detail::require(support_.contains(s.reward), where + "reward outside [0, D]");
        detail::require(s.propensities.size() == K_, where + "propensity vector length != K");
        double sum = 0.0;
        for (double p : s.propensities) {
            detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0,
                            where + "propensity outside [0, 1]");
            sum += p;
        }
        detail::require(std::abs(sum - 1.0) <= kPropensitySumTol,
                        where + "propensities do not sum to 1");
        detail::require(s.propensities[s.action] > 0.0,
                        where + "logged action has zero propensity");
    }

    std::vector<LoggedSample> samples_;
    std::size_t K_;
    SupportInterval support_;
    std::size_t num_contexts_;
};

/// Deterministic policy: a total table context -> action.
class Policy {
public:
    Policy() = default;
    explicit Policy(std::vector<ActionId> table) : table_(std::move(table)) {}

    ActionId operator()(ContextId x) const {
        detail::require(x < table_.size(), "policy is not defined on context " + std::to_string(x));
        return table_[x];
    }

    const std::vector<ActionId>& table() const noexcept { return table_; }
    std::size_t num_contexts() const noexcept { return table_.size(); }

    void validate(std::size_t num_contexts, std::size_t K) const {
        detail::require(table_.size() >= num_contexts,
                        "policy table does not cover all " + std::to_string(num_contexts) +
                            " contexts");
        for (std::size_t x = 0; x < table_.size(); ++x) {
            detail::require(table_[x] < K, "policy maps context " + std::to_string(x) +
                                               " to action out of range");
        }
    }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    std::vector<ActionId> table_;
};

} // namespace riskpess
