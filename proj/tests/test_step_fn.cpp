#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace riskpess;
using rptest::random_cdf;
using rptest::random_step;

TEST(StepFn, RejectsMalformedInput) {
    EXPECT_THROW(StepFn(0.0, {0.5, 0.5}, {0.1, 0.2}), ValidationError);
    EXPECT_THROW(StepFn(0.0, {0.7, 0.5}, {0.1, 0.2}), ValidationError);
    EXPECT_THROW(StepFn(0.0, {0.5}, {0.1, 0.2}), ValidationError);
    EXPECT_THROW(StepFn(NAN, {}, {}), ValidationError);
    EXPECT_THROW(SupportInterval(0.0), ValidationError);
}

TEST(StepFn, EvaluationIsRightContinuous) {
    const StepFn f(0.0, {0.5}, {1.0});
    EXPECT_EQ(eval_step(f, 0.4), 0.0);
    EXPECT_EQ(eval_step(f, 0.5), 1.0);
    const StepFn g(0.0, {0.2, 0.7}, {0.3, 1.0});
    EXPECT_EQ(eval_step(g, 0.5), 0.3);
    EXPECT_EQ(eval_step(g, 0.7), 1.0);
    EXPECT_EQ(eval_step(g, std::nextafter(0.7, 0.0)), 0.3);
    EXPECT_EQ(eval_step(g, -5.0), 0.0);
}

TEST(StepFn, RightContinuityOnRandomFunctions) {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 200; ++it) {
        const StepFn f = random_step(rng, 1.0, -1.0, 2.0);
        for (std::size_t j = 0; j < f.size(); ++j) {
            EXPECT_EQ(f(f.breakpoints()[j]), f.values()[j]);
            const double prev = j == 0 ? f.base() : f.values()[j - 1];
            EXPECT_EQ(f(std::nextafter(f.breakpoints()[j], -1.0)), prev);
        }
    }
}

TEST(StepFn, FromJumpsMergesEqualLocations) {
    const StepFn f = StepFn::from_jumps(1.0, {{0.5, 2.0}, {0.2, 1.0}, {0.5, 1.0}}, 4.0);
    EXPECT_EQ(f.base(), 0.25);
    EXPECT_EQ(f.breakpoints(), (std::vector<double>{0.2, 0.5}));
    EXPECT_EQ(f.values(), (std::vector<double>{0.5, 1.25}));
}

TEST(StepFn, CdfFlags) {
    EXPECT_TRUE(StepFn::point_mass(0.3).is_proper_cdf());
    const StepFn sub(0.0, {0.3}, {0.8});
    EXPECT_TRUE(sub.is_sub_cdf());
    EXPECT_FALSE(sub.is_proper_cdf());
    EXPECT_FALSE(StepFn(0.0, {0.3, 0.4}, {0.8, 0.5}).is_sub_cdf());
    EXPECT_FALSE(StepFn(0.0, {0.3}, {1.5}).is_sub_cdf());
}

TEST(SupNorm, WorkedExamples) {
    const StepFn a(0.0, {0.5}, {1.0});
    EXPECT_EQ(sup_norm_distance(a, a), 0.0);
    EXPECT_EQ(sup_norm_distance(a, StepFn(0.0, {0.7}, {1.0})), 1.0);
    const StepFn bern(0.0, {0.0, 1.0}, {0.5, 1.0});
    EXPECT_EQ(sup_norm_distance(bern, StepFn::point_mass(0.0)), 0.5);
}

TEST(SupNorm, IncludesBaseDifference) {
    EXPECT_EQ(sup_norm_distance(StepFn::constant(0.25), StepFn(1.0, {0.0}, {1.0})), 0.75);
}

TEST(SupNorm, IsAMetric) {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 500; ++it) {
        const StepFn f = random_step(rng, 1.0, -0.5, 1.5);
        const StepFn g = random_step(rng, 1.0, -0.5, 1.5);
        const StepFn h = random_step(rng, 1.0, -0.5, 1.5);
        const double fg = sup_norm_distance(f, g);
        EXPECT_GE(fg, 0.0);
        EXPECT_EQ(fg, sup_norm_distance(g, f));
        EXPECT_EQ(sup_norm_distance(f, f), 0.0);
        EXPECT_LE(fg, sup_norm_distance(f, h) + sup_norm_distance(h, g) + 1e-15);
        // zero distance iff equal on the merged grid including left limits
        bool equal = f.base() == g.base();
        for (double t : f.breakpoints()) equal = equal && f(t) == g(t);
        for (double t : g.breakpoints()) equal = equal && f(t) == g(t);
        EXPECT_EQ(fg == 0.0, equal);
    }
}

TEST(Clip, Examples) {
    EXPECT_EQ(clip_unit(StepFn(0.5, {0.3}, {1.2})).values(), std::vector<double>{1.0});
    const StepFn ok(0.0, {0.2, 0.4}, {0.3, 1.0});
    EXPECT_EQ(clip_unit(ok), ok);
    const StepFn c = clip_unit(StepFn(-0.1, {0.3, 0.6}, {0.4, 1.3}));
    EXPECT_EQ(c.base(), 0.0);
    EXPECT_EQ(c.values(), (std::vector<double>{0.4, 1.0}));
}

TEST(MonotonizeClip, Examples) {
    EXPECT_EQ(monotonize_clip(StepFn(0.3, {0.2, 0.5}, {0.2, 0.8})).values(),
              (std::vector<double>{0.3, 0.8}));
    const StepFn cdf(0.0, {0.1, 0.9}, {0.4, 1.0});
    EXPECT_EQ(monotonize_clip(cdf), cdf);
    const StepFn m = monotonize_clip(StepFn(0.5, {0.2, 0.5}, {0.4, 1.2}));
    EXPECT_EQ(m.base(), 0.5);
    EXPECT_EQ(m.values(), (std::vector<double>{0.5, 1.0}));
}

TEST(MonotonizeClip, OutputIsSubCdf) {
    std::mt19937_64 rng(7);
    for (int it = 0; it < 500; ++it) {
        EXPECT_TRUE(monotonize_clip(random_step(rng, 1.0, -2.0, 3.0)).is_sub_cdf());
    }
}

TEST(MonotonizeClip, NeverIncreasesErrorAgainstProperCdf) {
    std::mt19937_64 rng(13);
    for (int it = 0; it < 2000; ++it) {
        const StepFn f = random_step(rng, 1.0, -1.0, 2.0);
        const StepFn F0 = random_cdf(rng, 1.0);
        EXPECT_LE(sup_norm_distance(monotonize_clip(f), F0), sup_norm_distance(f, F0));
    }
}

TEST(QuantileApprox, Examples) {
    const StepFn pm = StepFn::point_mass(0.4);
    for (int m : {1, 3, 10}) EXPECT_EQ(sup_norm_distance(quantile_step_approx(pm, m), pm), 0.0);
    const StepFn two(0.0, {0.25, 0.75}, {0.5, 1.0});
    const StepFn q1 = quantile_step_approx(two, 1);
    EXPECT_EQ(q1, StepFn::point_mass(0.25));
    EXPECT_EQ(sup_norm_distance(q1, two), 0.5);
    EXPECT_THROW(quantile_step_approx(StepFn(0.0, {0.5}, {0.9}), 2), ValidationError);
    EXPECT_THROW(quantile_step_approx(pm, 0), ValidationError);
}

TEST(QuantileApprox, ErrorWithinHalfOverM) {
    std::mt19937_64 rng(17);
    for (int it = 0; it < 300; ++it) {
        const StepFn F = random_cdf(rng, 2.0, 8);
        for (int m = 1; m <= 50; ++m) {
            EXPECT_LE(sup_norm_distance(quantile_step_approx(F, m), F), 0.5 / m + 1e-12);
        }
        EXPECT_LE(sup_norm_distance(quantile_step_approx(F, 100), F), 0.005 + 1e-12);
    }
}

TEST(Wasserstein, Examples) {
    const SupportInterval unit(1.0);
    EXPECT_EQ(wasserstein1(StepFn::point_mass(0.0), StepFn::point_mass(1.0), unit), 1.0);
    const StepFn bern(0.0, {0.0, 1.0}, {0.5, 1.0});
    EXPECT_EQ(wasserstein1(bern, bern, unit), 0.0);
    EXPECT_EQ(wasserstein1(bern, StepFn::point_mass(0.0), unit), 0.5);
    EXPECT_THROW(wasserstein1(StepFn(0.0, {0.5}, {0.9}), bern, unit), ValidationError);
}

// Transport cost between two discrete distributions via sorted quantiles.
static double quantile_transport(std::vector<Atom> a, std::vector<Atom> b) {
    auto by_y = [](const Atom& u, const Atom& v) { return u.y < v.y; };
    std::sort(a.begin(), a.end(), by_y);
    std::sort(b.begin(), b.end(), by_y);
    double cost = 0.0;
    std::size_t i = 0, j = 0;
    double ra = a[0].p, rb = b[0].p;
    while (i < a.size() && j < b.size()) {
        const double m = std::min(ra, rb);
        cost += m * std::abs(a[i].y - b[j].y);
        ra -= m;
        rb -= m;
        if (ra <= 1e-15 && ++i < a.size()) ra = a[i].p;
        if (rb <= 1e-15 && ++j < b.size()) rb = b[j].p;
    }
    return cost;
}

TEST(Wasserstein, MatchesQuantileTransport) {
    std::mt19937_64 rng(19);
    for (int it = 0; it < 500; ++it) {
        const auto a = rptest::random_atoms(rng, 2.0);
        const auto b = rptest::random_atoms(rng, 2.0);
        EXPECT_NEAR(wasserstein1(atoms_to_cdf(a), atoms_to_cdf(b), SupportInterval(2.0)),
                    quantile_transport(a, b), 1e-9);
    }
}

TEST(StepFnJson, RoundTrip) {
    const StepFn f(0.125, {0.1, 0.30000000000000004}, {0.5, 1.0});
    const auto j = io::to_json(f);
    EXPECT_EQ(j.dump(), R"({"base":0.125,"breakpoints":[0.1,0.30000000000000004],"values":[0.5,1.0]})");
    EXPECT_EQ(io::step_fn_from_json(io::json::parse(j.dump())), f);
    EXPECT_THROW(io::step_fn_from_json(io::json::parse(R"({"base":0,"breakpoints":[],"values":[],"x":1})")),
                 ValidationError);
}
