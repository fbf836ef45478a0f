#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace mmf;
using mmf::test::kLn2;

namespace {

bool has(const std::vector<std::string>& report, const std::string& needle) {
    return std::any_of(report.begin(), report.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

EvolutionModel one_step(double a, std::vector<ShockAtom> shocks, double sigma = 1.0) {
    EvolutionModel m;
    m.s0 = 100.0;
    m.steps.push_back({a, std::move(shocks), VolatilitySpec::constant(sigma)});
    return m;
}

} // namespace

TEST(Rng, MatchesReferenceSplitmix) {
    // First splitmix64 output from state 0.
    EXPECT_EQ(CounterRng::mix(0, 0), 0xE220A8397B1DCDAFULL);
    CounterRng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    CounterRng c(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Validate, WellFormedModelHasEmptyReport) {
    EXPECT_TRUE(validate_model(one_step(0.5, {{-0.7, 0.5}, {0.7, 0.5}})).empty());
}

TEST(Validate, ReportsEachViolation) {
    EXPECT_TRUE(has(validate_model(one_step(0.5, {{0.3, 0.5}, {0.7, 0.5}})), "no negative shock at step 1"));
    EXPECT_TRUE(has(validate_model(one_step(1.2, {{-0.7, 0.5}, {0.7, 0.5}})), "a out of (0,1] at step 1"));
    EXPECT_TRUE(has(validate_model(one_step(0.0, {{-0.7, 0.5}, {0.7, 0.5}})), "a out of (0,1] at step 1"));
    EXPECT_TRUE(has(validate_model(one_step(0.5, {{-0.7, 0.5}, {0.0, 0.5}})), "no positive shock"));
    EXPECT_TRUE(has(validate_model(one_step(0.5, {{-0.7, 0.5}, {0.7, 0.4}})), "probabilities sum to"));
    EXPECT_TRUE(has(validate_model(one_step(0.5, {{-0.7, 0.5}, {-0.7, 0.2}, {0.7, 0.3}})), "duplicate eps"));
    EXPECT_THROW(require_valid(one_step(0.5, {{0.3, 0.5}, {0.7, 0.5}})), ValidationError);
}

TEST(Validate, RenormalizesOnlyNearUnity) {
    auto m = one_step(0.5, {{-0.7, 0.5}, {0.7, 0.5 + 5e-10}});
    renormalize_probabilities(m);
    EXPECT_TRUE(validate_model(m).empty());
    auto bad = one_step(0.5, {{-0.7, 0.5}, {0.7, 0.5 + 1e-6}});
    renormalize_probabilities(bad);
    EXPECT_FALSE(validate_model(bad).empty());
}

TEST(Validate, PricingOnlyAdmitsZeroExposureAndNoShocks) {
    EvolutionModel m;
    m.s0 = 100.0;
    m.pricing_only = true;
    m.steps = {{0.2, {}, VolatilitySpec::constant(1.0)}, {0.0, {}, VolatilitySpec::constant(1.0)}};
    EXPECT_TRUE(validate_model(m).empty());
}

TEST(Sigma, ConstantArchGarch) {
    EvolutionModel m = one_step(0.5, {{-0.7, 0.5}, {0.7, 0.5}}, 0.3);
    EXPECT_EQ(sigma_at(m, 1, {}), 0.3);

    m.steps[0].vol = VolatilitySpec::arch1(0.04, 0.5, 0.1);
    EXPECT_DOUBLE_EQ(sigma_at(m, 1, {}), 0.2);

    // garch recursion below the floor is clamped.
    EvolutionModel g = one_step(0.5, {{-0.7, 0.5}, {0.7, 0.5}});
    g.steps[0].vol = VolatilitySpec::garch11(1e-6, 0.1, 0.1, 0.25);
    g.steps.push_back(g.steps[0]);
    const std::vector<double> hist{-0.7};
    EXPECT_EQ(sigma_at(g, 1, {}), 0.25);
    EXPECT_EQ(sigma_at(g, 2, hist), 0.25);
}

TEST(Sigma, GarchRecursionMatchesHighPrecisionValue) {
    const auto m = test::garch_model();
    const std::vector<double> hist{-1.5};
    // sqrt(0.04 + 0.3 (0.2 * 1.5)^2 + 0.5 * 0.04)
    EXPECT_NEAR(sigma_at(m, 2, hist), 0.29495762407505251669, 1e-15);
}

TEST(Sigma, StaysAboveFloorOnRandomModels) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto m = test::random_model(seed);
        for_each_path(m, [&](const PathIndex&, const Path& p) {
            for (std::size_t n = 0; n < m.horizon(); ++n) {
                EXPECT_GT(p.sigma_seq[n], 0.0);
                EXPECT_GE(p.sigma_seq[n], m.steps[n].vol.lower_bound());
            }
        });
    }
}

TEST(Paths, HandEvaluatedPrices) {
    auto up = one_step(1.0, {{-kLn2, 0.5}, {kLn2, 0.5}});
    const Path p = price_path(up, {1});
    EXPECT_DOUBLE_EQ(p.price_seq[0], 100.0);
    EXPECT_DOUBLE_EQ(p.price_seq[1], 200.0);

    auto half = one_step(0.5, {{-kLn2, 0.5}, {kLn2, 0.5}});
    EXPECT_DOUBLE_EQ(price_path(half, {0}).price_seq[1], 75.0);
}

TEST(Paths, ZeroShockPathIsConstant) {
    EvolutionModel m = test::two_step_model();
    for (auto& st : m.steps) st.shocks = {{-kLn2, 0.25}, {0.0, 0.5}, {kLn2, 0.25}};
    const Path p = price_path(m, {1, 1});
    for (double s : p.price_seq) EXPECT_EQ(s, 100.0);
}

TEST(DeltaSplit, HandValues) {
    auto m = one_step(1.0, {{-kLn2, 0.5}, {kLn2, 0.5}});
    const auto d = delta_split(m, {}, {-kLn2, 0.5});
    EXPECT_DOUBLE_EQ(d.delta, -50.0);
    EXPECT_DOUBLE_EQ(d.minus, 50.0);
    EXPECT_EQ(d.plus, 0.0);
    EXPECT_TRUE(d.down);
    const auto u = delta_split(m, {}, {kLn2, 0.5});
    EXPECT_DOUBLE_EQ(u.delta, 100.0);
    EXPECT_EQ(u.minus, 0.0);
    EXPECT_DOUBLE_EQ(u.plus, 100.0);
    EXPECT_FALSE(u.down);
    const auto z = delta_split(m, {}, {0.0, 0.5});
    EXPECT_EQ(z.delta, 0.0);
    EXPECT_TRUE(z.down);
}

TEST(DeltaSplit, ReconstructionIsExact) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto m = test::random_model(seed);
        for (const auto& atom : m.steps[0].shocks) {
            const auto d = delta_split(m, {}, atom);
            EXPECT_EQ(d.delta, d.plus - d.minus);
        }
    }
}

TEST(Enumerate, CountsOrderAndMass) {
    const auto m2 = test::two_step_model();
    EXPECT_EQ(enumerate_paths(m2).size(), 4u);

    EvolutionModel m3;
    m3.s0 = 50.0;
    for (int i = 0; i < 3; ++i)
        m3.steps.push_back({0.4, {{-0.5, 0.2}, {0.1, 0.3}, {0.6, 0.5}}, VolatilitySpec::constant(0.7)});
    const auto paths = enumerate_paths(m3);
    ASSERT_EQ(paths.size(), 27u);
    double total = 0.0;
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const auto& [idx, p] = paths[k];
        EXPECT_EQ(prefix_linear(m3, idx), k);
        double prod = 1.0;
        for (std::size_t n = 0; n < 3; ++n) prod *= m3.steps[n].shocks[idx[n]].prob;
        EXPECT_DOUBLE_EQ(p.base_prob, prod);
        total += p.base_prob;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Enumerate, CapIsEnforced) {
    EvolutionModel m;
    m.s0 = 1.0;
    for (int i = 0; i < 8; ++i)
        m.steps.push_back({0.5, {{-0.5, 0.25}, {-0.1, 0.25}, {0.2, 0.25}, {0.7, 0.25}}, VolatilitySpec::constant(1.0)});
    EXPECT_EQ(path_count(m), 65536u);
    EXPECT_THROW(path_count(m, 1000), CapExceeded);
    EXPECT_THROW(for_each_path(m, [](const PathIndex&, const Path&) {}, 1000), CapExceeded);
}

TEST(Enumerate, StableModelsStayPositive) {
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
        const auto m = test::random_model(seed);
        ASSERT_TRUE(m.is_stable());
        double total = 0.0;
        for_each_path(m, [&](const PathIndex&, const Path& p) {
            total += p.base_prob;
            for (double s : p.price_seq) EXPECT_GT(s, 0.0);
        });
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Simulate, DeterministicAndFrequenciesMatch) {
    EXPECT_TRUE(simulate(test::two_step_model(), 0, 1).empty());
    const auto m = test::two_step_model();
    const auto a = simulate(m, 50, 9);
    const auto b = simulate(m, 50, 9);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].price_seq, b[i].price_seq);

    EvolutionModel skew;
    skew.s0 = 1.0;
    skew.steps = {test::two_point(0.5, 1.0, -0.3, 0.4, 0.3)};
    const std::size_t n = 20000;
    std::size_t downs = 0;
    for (const auto& p : simulate(skew, n, 123)) downs += p.eps_seq[0] < 0.0;
    const double sd = std::sqrt(n * 0.3 * 0.7);
    EXPECT_LT(std::abs(static_cast<double>(downs) - n * 0.3), 3.0 * sd);
}
