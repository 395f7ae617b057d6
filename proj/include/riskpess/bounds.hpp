#pragma once

// Data-dependent sup-norm confidence radii for the CDF estimators, the
// rate envelope for pessimistic learning, and a brute-force Natarajan
// dimension for small finite policy classes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "riskpess/dataset.hpp"
#include "riskpess/error.hpp"
#include "riskpess/estimators.hpp"

namespace riskpess {

enum class BoundFlavor { hoeffding, bernstein };

inline std::string to_string(BoundFlavor f) {
    return f == BoundFlavor::hoeffding ? "hoeffding" : "bernstein";
}

inline BoundFlavor parse_flavor(const std::string& s) {
    if (s == "hoeffding") return BoundFlavor::hoeffding;
    if (s == "bernstein") return BoundFlavor::bernstein;
    throw ValidationError("unknown bound flavor '" + s + "' (expected hoeffding or bernstein)");
}

struct BoundConfig {
    double delta = 0.05;
    BoundFlavor flavor = BoundFlavor::hoeffding;
    EstimatorKind estimator = EstimatorKind::clipped_is;
    std::optional<double> dr_bias;  // r-bar override for every policy

    void validate() const {
        detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
        if (dr_bias) detail::require(*dr_bias >= 0.0, "dr_bias must be >= 0");
    }
};

/// value = min(deviation + bias, 1).
struct ConfidenceRadius {
    double value = 1.0;
    double deviation = 0.0;
    double bias = 0.0;

    static ConfidenceRadius make(double deviation, double bias) {
        return {std::min(deviation + bias, 1.0), deviation, bias};
    }
    static ConfidenceRadius saturated(double bias = 1.0) { return {1.0, 0.0, bias}; }
};

class PolicyClass {
public:
    PolicyClass(std::vector<Policy> policies, int natarajan_dim)
        : policies_(std::move(policies)), dim_(natarajan_dim) {
        detail::require(!policies_.empty(), "policy class must be nonempty");
        detail::require(dim_ >= 1, "Natarajan dimension must be >= 1");
    }

    const std::vector<Policy>& policies() const noexcept { return policies_; }
    const Policy& operator[](std::size_t i) const noexcept { return policies_[i]; }
    std::size_t size() const noexcept { return policies_.size(); }
    int natarajan_dim() const noexcept { return dim_; }

private:
    std::vector<Policy> policies_;
    int dim_;
};

namespace detail {

inline void check_common(std::size_t n, double delta) {
    require(n >= 1, "sample size must be >= 1");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
}

// log(c / delta) + d log(n K^2)
inline double complexity_log(double c, double delta, std::size_t n, std::size_t K, int d) {
    const double nk2 = static_cast<double>(n) * static_cast<double>(K) * static_cast<double>(K);
    return std::log(c / delta) + static_cast<double>(d) * std::log(nk2);
}

} // namespace detail

/// Single-policy radius for the clipped IS estimator.
inline ConfidenceRadius pointwise_bound(const Diagnostics& diag, std::size_t n, double delta,
                                        BoundFlavor flavor) {
    detail::check_common(n, delta);
    if (diag.informative_indices.empty()) return ConfidenceRadius::saturated(diag.r);
    const double nn = static_cast<double>(n);
    const double log_term = std::log(8.0 / delta);
    const double root = std::sqrt(8.0 / nn * log_term);
    if (flavor == BoundFlavor::hoeffding) {
        return ConfidenceRadius::make((diag.sigma + 1.0) * root, diag.r);
    }
    const double dev = (diag.sigma_prime + 1.0) * root + 2.0 * log_term / (3.0 * nn * *diag.beta_min);
    return ConfidenceRadius::make(dev, diag.r);
}

/// Uniform-over-class radius for clipped IS.
inline ConfidenceRadius uniform_is_radius(const Diagnostics& diag, std::size_t n, std::size_t K,
                                          int d_pi, double delta) {
    detail::check_common(n, delta);
    const double c = detail::complexity_log(20.0, delta, n, K, d_pi);
    const double dev = (diag.sigma + 2.0) * std::sqrt(8.0 / static_cast<double>(n) * c);
    return ConfidenceRadius::make(dev, diag.r);
}

/// eta_pi: relative deviation of the mean importance weight from 1.
/// Infinite when I_pi is empty.
inline double wis_eta(const Diagnostics& diag, std::size_t n, std::size_t K, int d_pi,
                      double delta) {
    const double m = static_cast<double>(diag.informative_count());
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    return diag.sigma * std::sqrt(nn / (2.0 * m * m) * detail::complexity_log(8.0, delta, n, K, d_pi));
}

/// Uniform radius for WIS: 1 when eta >= 1, xi otherwise.
inline ConfidenceRadius uniform_wis_radius(const Diagnostics& diag, std::size_t n, std::size_t K,
                                           int d_pi, double delta) {
    detail::check_common(n, delta);
    if (diag.informative_indices.empty()) return ConfidenceRadius::saturated(diag.r);
    const double eta = wis_eta(diag, n, K, d_pi, delta);
    if (eta >= 1.0) return ConfidenceRadius::saturated(diag.r);
    const double nn = static_cast<double>(n);
    const double c = detail::complexity_log(20.0, delta, n, K, d_pi);
    const double frac = static_cast<double>(diag.informative_count()) / nn;
    const double dev = (diag.sigma / (1.0 - eta) + 2.0) * std::sqrt(8.0 / nn * c) +
                       frac * eta / (1.0 - eta);
    return ConfidenceRadius::make(dev, diag.r);
}

/// Uniform radius for the clipped+monotonized DR estimator. r_bar is the
/// model-error bias over uninformative rows, which is not computable from
/// data alone and must be supplied.
inline ConfidenceRadius uniform_dr_radius(const Diagnostics& diag, std::size_t n, std::size_t K,
                                          int d_pi, double delta, std::optional<double> r_bar) {
    detail::check_common(n, delta);
    if (!r_bar) throw ValidationError("uniform_dr_radius: r_bar must be supplied");
    detail::require(*r_bar >= 0.0, "uniform_dr_radius: r_bar must be >= 0");
    const double c = detail::complexity_log(20.0, delta, n, K, d_pi);
    const double dev = 2.0 * (diag.sigma + 1.0) * std::sqrt(8.0 / static_cast<double>(n) * c);
    return ConfidenceRadius::make(dev, *r_bar);
}

struct RateEnvelope {
    double value;          // sqrt(d log(nK^2) log(20/delta) / (n beta_inf)), without c * L
    bool precondition_ok;  // log(20/delta) + d log(nK^2) <= c0 n beta_inf
};

/// Certified constant for the envelope: c >= 8 (4 sqrt(2) + sqrt(c0) / 3).
inline double certified_rate_constant(double c0) {
    return 8.0 * (4.0 * std::sqrt(2.0) + std::sqrt(c0) / 3.0);
}

inline RateEnvelope corollary_rate(std::size_t n, std::size_t K, int d_pi, double delta,
                                   double beta_inf, double c0) {
    detail::check_common(n, delta);
    detail::require(beta_inf > 0.0 && beta_inf <= 1.0, "beta_inf must lie in (0, 1]");
    const double nn = static_cast<double>(n);
    const double nk2 = nn * static_cast<double>(K) * static_cast<double>(K);
    const double dlog = static_cast<double>(d_pi) * std::log(nk2);
    const double value = std::sqrt(dlog * std::log(20.0 / delta) / (nn * beta_inf));
    const bool ok = std::log(20.0 / delta) + dlog <= c0 * nn * beta_inf;
    return {value, ok};
}

/// Guards for the exhaustive Natarajan search.
inline constexpr std::size_t kMaxNatarajanContexts = 12;
inline constexpr std::size_t kMaxNatarajanPolicies = 4096;

/// Largest m such that some m-subset of the contexts is shattered: there
/// are f1, f2 differing at every point of S with every f1/f2 mixture
/// realised by a policy in the class. Returns 0 when no single point is
/// shattered (e.g. a singleton class).
inline int natarajan_dim_bruteforce(const std::vector<Policy>& policies,
                                    std::size_t num_contexts) {
    if (num_contexts > kMaxNatarajanContexts || policies.size() > kMaxNatarajanPolicies) {
        throw ValidationError("natarajan_dim_bruteforce: search too large (" +
                              std::to_string(num_contexts) + " contexts, " +
                              std::to_string(policies.size()) + " policies; limits " +
                              std::to_string(kMaxNatarajanContexts) + " and " +
                              std::to_string(kMaxNatarajanPolicies) +
                              "); declare natarajan_dim explicitly");
    }
    for (const auto& p : policies) {
        detail::require(p.num_contexts() >= num_contexts,
                        "natarajan_dim_bruteforce: policy not total on the context universe");
    }
    // behaviours restricted to S packed into a 64-bit key: 5 bits per context
    auto key_of = [](const Policy& p, const std::vector<std::size_t>& S) {
        std::uint64_t k = 0;
        for (std::size_t x : S) k = (k << 5) | static_cast<std::uint64_t>(p.table()[x] & 31u);
        return k;
    };
    for (const auto& p : policies) {
        for (auto a : p.table()) {
            detail::require(a < 32, "natarajan_dim_bruteforce: action ids must be < 32");
        }
    }

    auto shattered = [&](const std::vector<std::size_t>& S) {
        const std::size_t m = S.size();
        std::unordered_set<std::uint64_t> seen;
        std::vector<std::vector<std::size_t>> restricted;
        for (const auto& p : policies) {
            if (seen.insert(key_of(p, S)).second) {
                std::vector<std::size_t> r;
                r.reserve(m);
                for (std::size_t x : S) r.push_back(p.table()[x]);
                restricted.push_back(std::move(r));
            }
        }
        if (restricted.size() < (std::size_t{1} << m)) return false;
        for (std::size_t i = 0; i < restricted.size(); ++i) {
            for (std::size_t j = i + 1; j < restricted.size(); ++j) {
                const auto& f1 = restricted[i];
                const auto& f2 = restricted[j];
                bool disjoint = true;
                for (std::size_t k = 0; k < m && disjoint; ++k) disjoint = f1[k] != f2[k];
                if (!disjoint) continue;
                bool all = true;
                for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m) && all; ++mask) {
                    std::uint64_t key = 0;
                    for (std::size_t k = 0; k < m; ++k) {
                        const auto a = ((mask >> k) & 1u) ? f1[k] : f2[k];
                        key = (key << 5) | static_cast<std::uint64_t>(a);
                    }
                    all = seen.count(key) > 0;
                }
                if (all) return true;
            }
        }
        return false;
    };

    // shattering is hereditary, so stop at the first size with no shattered subset
    int best = 0;
    for (std::size_t m = 1; m <= num_contexts; ++m) {
        if ((std::size_t{1} << m) > policies.size()) break;
        bool found = false;
        std::vector<bool> pick(num_contexts, false);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(m), true);
        do {
            std::vector<std::size_t> S;
            for (std::size_t x = 0; x < num_contexts; ++x) {
                if (pick[x]) S.push_back(x);
            }
            found = shattered(S);
        } while (!found && std::prev_permutation(pick.begin(), pick.end()));
        if (!found) break;
        best = static_cast<int>(m);
    }
    return best;
}

} // namespace riskpess
