#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace riskpess;

namespace {

const SupportInterval kUnit(1.0);

Environment two_point_env() {
    return Environment({0.5, 0.5}, {{{{0.0, 1.0}}, {{0.5, 1.0}}}, {{{1.0, 1.0}}, {{0.25, 0.5}, {0.75, 0.5}}}}, 2,
                       kUnit);
}

} // namespace

TEST(Environment, Validation) {
    EXPECT_THROW(Environment({0.5, 0.4}, {{{{0.0, 1.0}}}, {{{0.0, 1.0}}}}, 1, kUnit), ValidationError);
    EXPECT_THROW(Environment({1.0}, {{{{1.5, 1.0}}}}, 1, kUnit), ValidationError);
    EXPECT_THROW(Environment({1.0}, {{{{0.5, 0.7}}}}, 1, kUnit), ValidationError);
    EXPECT_THROW(Environment({1.0}, {{{{0.5, 1.0}}}}, 2, kUnit), ValidationError);
    try {
        BehaviorSpec({{0.5, 0.5}, {0.6, 0.3}});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("context 1"), std::string::npos) << e.what();
    }
    EXPECT_THROW(BehaviorSpec({{1.2, -0.2}}), ValidationError);
    EXPECT_THROW(BehaviorSpec({{0.5, 0.5}}).validate_against(two_point_env()), ValidationError);
}

TEST(TruePolicyCdf, Examples) {
    const Environment env = two_point_env();
    EXPECT_EQ(true_policy_cdf(env, Policy({0, 0})), StepFn(0.0, {0.0, 1.0}, {0.5, 1.0}));
    const Environment single({1.0}, {{{{0.2, 0.3}, {0.9, 0.7}}}}, 1, kUnit);
    EXPECT_EQ(true_policy_cdf(single, Policy({0})), single.conditional_cdf(0, 0));
    const StepFn mixed = true_policy_cdf(env, Policy({1, 1}));
    EXPECT_TRUE(mixed.is_proper_cdf());
    EXPECT_EQ(mixed, StepFn(0.0, {0.25, 0.5, 0.75}, {0.25, 0.75, 1.0}));
}

TEST(TruePolicyCdf, MinimaxAllPlus) {
    const double gap = 0.1;
    const auto inst = minimax_instance({1, 1}, 2, 0.5, gap);
    const StepFn F = true_policy_cdf(inst.env, inst.policies[inst.optimal_index]);
    EXPECT_EQ(inst.optimal_index, 0u);
    EXPECT_NEAR(F(0.0), 0.5 - gap, 1e-15);
    EXPECT_NEAR(F(0.99), 0.5 - gap, 1e-15);
    EXPECT_EQ(F(1.0), 1.0);
    EXPECT_NEAR(true_risk(inst.env, inst.policies[0], risk::Mean{}), 0.5 + gap, 1e-15);
}

TEST(TrueRisk, Examples) {
    const Environment pm({1.0}, {{{{0.3, 1.0}}}}, 1, kUnit);
    EXPECT_NEAR(true_risk(pm, Policy({0}), risk::Entropic{-3.0}), 0.3, 1e-12);
    const Environment bern({1.0}, {{{{0.0, 0.5}, {1.0, 0.5}}}}, 1, kUnit);
    EXPECT_DOUBLE_EQ(true_risk(bern, Policy({0}), risk::CVaR{0.5}), 1.0);
}

TEST(SampleDataset, Deterministic) {
    const Environment env = two_point_env();
    const BehaviorSpec beh({{0.3, 0.7}, {0.0, 1.0}});
    const auto a = io::dataset_to_string(sample_dataset(env, beh, 500, 42));
    EXPECT_EQ(a, io::dataset_to_string(sample_dataset(env, beh, 500, 42)));
    EXPECT_NE(a, io::dataset_to_string(sample_dataset(env, beh, 500, 43)));
    EXPECT_NE(a, io::dataset_to_string(sample_dataset(env, beh, 500, 42, 1)));
}

TEST(SampleDataset, DegenerateEnvironment) {
    const Environment env({1.0}, {{{{0.4, 1.0}}}}, 1, kUnit);
    const Dataset d = sample_dataset(env, BehaviorSpec(std::vector<std::vector<double>>{{1.0}}), 25, 1);
    for (const auto& s : d.samples()) {
        EXPECT_EQ(s.context, 0u);
        EXPECT_EQ(s.action, 0u);
        EXPECT_EQ(s.reward, 0.4);
    }
}

TEST(SampleDataset, ActionFrequenciesMatchPropensities) {
    const Environment env({1.0}, {{{{0.0, 1.0}}, {{0.5, 1.0}}, {{1.0, 1.0}}}}, 3, kUnit);
    const std::vector<double> p = {0.15, 0.25, 0.6};
    const std::size_t n = 100000;
    const Dataset d = sample_dataset(env, BehaviorSpec({p}), n, 2024);
    std::vector<double> counts(3, 0.0);
    for (const auto& s : d.samples()) counts[s.action] += 1.0;
    for (std::size_t a = 0; a < 3; ++a) {
        EXPECT_LE(std::abs(counts[a] / n - p[a]), 4.0 * std::sqrt(p[a] * (1 - p[a]) / n));
    }
}

TEST(SampleDataset, ExactZerosAreNeverDrawn) {
    const Environment env = two_point_env();
    const Dataset d = sample_dataset(env, BehaviorSpec({{0.0, 1.0}, {1.0, 0.0}}), 2000, 3);
    for (const auto& s : d.samples()) EXPECT_EQ(s.action, s.context == 0 ? 1u : 0u);
}

TEST(Minimax, DefaultGapAndValidation) {
    EXPECT_NEAR(minimax_default_gap(2, 10000, 0.5), 0.00408248290463863, 1e-15);
    EXPECT_EQ(minimax_default_gap(2, 1, 0.5), 0.24);
    EXPECT_THROW(minimax_family(2, 2, 0.6, 0.1, std::nullopt), ValidationError);
    EXPECT_THROW(minimax_family(2, 2, 0.5, std::nullopt, std::nullopt), ValidationError);
    EXPECT_THROW(minimax_instance({1, 1}, 3, 0.25, 0.3), ValidationError);
}

TEST(Minimax, SingleContextGap) {
    const auto fam = minimax_family(1, 2, 0.5, 0.05, std::nullopt);
    ASSERT_EQ(fam.size(), 2u);
    const auto& plus = fam[0];
    EXPECT_EQ(plus.theta, std::vector<int>{1});
    EXPECT_EQ(plus.policies[plus.optimal_index](0), 0u);
    EXPECT_NEAR(true_risk(plus.env, plus.policies[0], risk::Mean{}) -
                    true_risk(plus.env, plus.policies[1], risk::Mean{}),
                0.05, 1e-15);
}

TEST(Minimax, OverlapAndDominance) {
    for (std::size_t K : {2u, 3u, 5u}) {
        for (const auto& inst : minimax_family(3, K, K == 2 ? 0.3 : 0.2, 0.1, std::nullopt)) {
            const Policy& opt = inst.policies[inst.optimal_index];
            for (std::size_t x = 0; x < 3; ++x) EXPECT_GE(inst.behavior[x][opt(x)], inst.beta_inf);
            const StepFn Fopt = true_policy_cdf(inst.env, opt);
            for (const auto& pi : inst.policies) {
                const StepFn F = true_policy_cdf(inst.env, pi);
                for (double t : detail::merged_breakpoints({&Fopt, &F})) EXPECT_LE(Fopt(t), F(t));
            }
            EXPECT_EQ(optimal_policy_index(inst.env, inst.policies, risk::Mean{}), inst.optimal_index);
        }
    }
}

TEST(OracleDrBias, Examples) {
    const Environment env = two_point_env();
    const OracleModel perfect(env);
    const BehaviorSpec partial({{0.5, 0.5}, {0.0, 1.0}});
    const Dataset data = sample_dataset(env, partial, 200, 8);
    EXPECT_EQ(oracle_dr_bias(env, perfect, data, Policy({0, 0})), 0.0);
    const TabularCdfModel wrong({{StepFn::point_mass(0.0), StepFn::point_mass(0.0)},
                                 {StepFn::point_mass(0.0), StepFn::point_mass(0.0)}});
    const Dataset full = sample_dataset(env, BehaviorSpec({{0.5, 0.5}, {0.5, 0.5}}), 200, 8);
    EXPECT_EQ(oracle_dr_bias(env, wrong, full, Policy({0, 0})), 0.0);
    // context 1 is uninformative for action 0 and its truth is a point mass at D
    const Environment env2({0.5, 0.5}, {{{{0.0, 1.0}}, {{0.0, 1.0}}}, {{{1.0, 1.0}}, {{1.0, 1.0}}}}, 2, kUnit);
    const Dataset half({rptest::row(0, 0, 0.0, {0.5, 0.5}), rptest::row(1, 1, 1.0, {0.0, 1.0})}, 2, kUnit, 2);
    EXPECT_EQ(oracle_dr_bias(env2, wrong, half, Policy({0, 0})), 0.5);
}

TEST(Coverage, ThresholdAndSaturation) {
    EXPECT_NEAR(binomial_threshold(0.2, 2000), 0.2 + 3.0 * std::sqrt(0.2 * 0.8 / 2000), 1e-15);
    EXPECT_NEAR(binomial_threshold(0.2, 2000), 0.2268, 1e-4);
    const Environment env = two_point_env();
    const BehaviorSpec beh({{0.5, 0.5}, {0.1, 0.9}});
    CoverageSpec spec;
    spec.policies = {Policy({0, 0})};
    spec.trials = 100;
    spec.n = 50;
    spec.radius_override = 1.0;
    EXPECT_EQ(coverage_experiment(env, beh, spec).violations, 0u);
}

TEST(Coverage, DeterministicAcrossRerunsAndThreads) {
    const Environment env = two_point_env();
    const BehaviorSpec beh({{0.5, 0.5}, {0.0, 1.0}});
    CoverageSpec spec;
    spec.mode = CoverageMode::uniform;
    spec.policies = {Policy({0, 0}), Policy({1, 1}), Policy({0, 1})};
    spec.natarajan_dim = 2;
    spec.estimator = EstimatorKind::wis;
    spec.trials = 100;
    spec.n = 300;
    spec.seed = 99;
    const auto a = io::to_json(coverage_experiment(env, beh, spec, 1)).dump();
    EXPECT_EQ(a, io::to_json(coverage_experiment(env, beh, spec, 1)).dump());
    EXPECT_EQ(a, io::to_json(coverage_experiment(env, beh, spec, 4)).dump());
}

TEST(Coverage, PointwiseModeRequiresClippedIs) {
    CoverageSpec spec;
    spec.policies = {Policy({0, 0})};
    spec.estimator = EstimatorKind::wis;
    EXPECT_THROW(coverage_experiment(two_point_env(), BehaviorSpec({{0.5, 0.5}, {0.5, 0.5}}), spec),
                 ValidationError);
}

TEST(RateCurve, EasyInstanceReachesZeroGap) {
    const Environment env({0.5, 0.5}, {{{{0.9, 1.0}}, {{0.1, 1.0}}}, {{{0.1, 1.0}}, {{0.8, 1.0}}}}, 2, kUnit);
    RateSpec spec;
    spec.instance = RateInstance{env, BehaviorSpec({{0.5, 0.5}, {0.5, 0.5}}), sign_policies(2), 2};
    spec.n_grid = {500, 1000, 2000, 4000};
    spec.trials_per_n = 20;
    const RateReport rep = rate_curve(spec);
    EXPECT_EQ(rep.points.back().mean_gap, 0.0);
    EXPECT_EQ(rep.points.back().mean_w1, 0.0);
}

TEST(RateCurve, ReproducibleAndValidated) {
    RateSpec spec;
    spec.family = FamilySpec{2, 2, 0.5, 0.1, 0.5};
    spec.n_grid = {100, 200, 400, 800};
    spec.trials_per_n = 1;
    spec.seed = 5;
    const auto a = io::to_json(rate_curve(spec)).dump();
    EXPECT_EQ(a, io::to_json(rate_curve(spec, 3)).dump());
    spec.n_grid = {100, 200, 400};
    EXPECT_THROW(rate_curve(spec), ValidationError);
    spec.n_grid = {100, 400, 200, 800};
    EXPECT_THROW(rate_curve(spec), ValidationError);
}

TEST(RateCurve, GapShrinksWithN) {
    RateSpec spec;
    spec.family = FamilySpec{2, 2, 0.5, 0.1, 0.5};
    spec.n_grid = {200, 400, 800, 1600};
    spec.trials_per_n = 200;
    spec.seed = 17;
    const RateReport rep = rate_curve(spec, 4);
    EXPECT_LE(rep.points.back().mean_gap, rep.points.front().mean_gap);
    for (const auto& p : rep.points) EXPECT_EQ(p.certificate_exceptions, 0u);
}
