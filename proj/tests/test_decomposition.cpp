#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace mmf;
using mmf::test::kLn2;

namespace {

EvolutionModel unit_step(double s0 = 1.0) {
    EvolutionModel m;
    m.s0 = s0;
    m.steps = {test::two_point(1.0, 1.0, -kLn2, kLn2)};
    return m;
}

SupermartingaleSurface min_surface(const EvolutionModel& m, double c) {
    return make_surface(m, 1e-6, [c](const PathIndex&, std::span<const double> s) { return std::min(s.back(), c); });
}

SupermartingaleSurface price_surface(const EvolutionModel& m) {
    return make_surface(m, 1e-6, [&m](const PathIndex&, std::span<const double> s) { return s.back() / m.s0; });
}

std::vector<MeasureDensity> all_spot_densities(const EvolutionModel& m) {
    std::vector<MeasureDensity> out;
    for_each_selection(m, [&](const AtomPairSelection& sel) { out.push_back(spot_density(m, sel)); });
    return out;
}

bool has_failure(const DecompositionReport& r, const std::string& prefix) {
    return std::any_of(r.failures.begin(), r.failures.end(), [&](const std::string& f) { return f.rfind(prefix, 0) == 0; });
}

} // namespace

TEST(Gamma, HandValues) {
    // f = S, S_0 = 1, down ratio 0.5 with ΔS⁻ = 0.5: gamma = (1 - 0.5) / 0.5.
    const auto m = unit_step();
    EXPECT_DOUBLE_EQ(gamma_step(m, price_surface(m), 1, {}), 1.0);

    auto flat = make_surface(m, 1.0, [](const PathIndex&, std::span<const double>) { return 3.0; });
    EXPECT_EQ(gamma_step(m, flat, 1, {}), 0.0);

    // Two down atoms (ΔS⁻ = 0.75 and 0.5) with candidates 1.0 and 0.8.
    EvolutionModel two_down;
    two_down.s0 = 1.0;
    const double e1 = std::log(0.5), e2 = std::log(0.25);
    two_down.steps = {{1.0, {{e2, 0.25}, {e1, 0.25}, {kLn2, 0.5}}, VolatilitySpec::constant(1.0)}};
    SupermartingaleSurface s;
    s.floor = 1e-6;
    s.values = {{1.0}, {1.0 - 0.75, 1.0 - 0.8 * 0.5, 2.0}};
    EXPECT_DOUBLE_EQ(gamma_step(two_down, s, 1, {}), 0.8);
}

TEST(RatioBound, ConcavePassesConvexFails) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = test::random_model(seed);
        EXPECT_TRUE(check_ratio_bound(m, min_surface(m, m.s0)).passed) << "seed " << seed;
    }
    const auto m = unit_step();
    const auto sub = make_surface(m, 1e-6, [](const PathIndex&, std::span<const double> s) { return std::max(s.back(), 1.5); });
    const auto rep = check_ratio_bound(m, sub);
    EXPECT_FALSE(rep.passed);
    ASSERT_FALSE(rep.violations.empty());
    EXPECT_EQ(rep.violations.front().step, 1u);
    const auto flat = make_surface(m, 1.0, [](const PathIndex&, std::span<const double>) { return 2.0; });
    EXPECT_TRUE(check_ratio_bound(m, flat).passed);
}

TEST(Decompose, WorkedOneStepExample) {
    const auto m = unit_step();
    const auto dec = optional_decompose(m, min_surface(m, 1.0));
    EXPECT_EQ(dec.shift, 0.0);
    EXPECT_DOUBLE_EQ(dec.gamma[0][0], 1.0);
    EXPECT_DOUBLE_EQ(dec.xi0[0][0], 0.5);
    EXPECT_DOUBLE_EQ(dec.xi0[0][1], 2.0);
    EXPECT_DOUBLE_EQ(dec.g[0][0], 0.0);
    EXPECT_DOUBLE_EQ(dec.g[0][1], 1.0);
    EXPECT_DOUBLE_EQ(dec.M[0][0], 1.0);
    EXPECT_DOUBLE_EQ(dec.M[1][0], 0.5);
    EXPECT_DOUBLE_EQ(dec.M[1][1], 2.0);
    // (2/3) 0.5 + (1/3) 2 = 1 under the unique spot measure.
    const auto spots = all_spot_densities(m);
    EXPECT_TRUE(verify_decomposition(m, min_surface(m, 1.0), dec, spots).passed());
}

TEST(Decompose, MartingaleAndConstantConsumeNothing) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = test::random_model(seed);
        const auto f = price_surface(m);
        const auto dec = optional_decompose(m, f);
        for (const auto& level : dec.g)
            for (double g : level) EXPECT_NEAR(g, 0.0, 1e-10);
        for (std::size_t n = 0; n < f.values.size(); ++n)
            for (std::size_t p = 0; p < f.values[n].size(); ++p) EXPECT_NEAR(dec.M[n][p], f.values[n][p], 1e-10);
    }
    const auto m = test::garch_model();
    const auto c = make_surface(m, 1.0, [](const PathIndex&, std::span<const double>) { return 4.0; });
    const auto dec = optional_decompose(m, c);
    for (const auto& level : dec.g)
        for (double g : level) EXPECT_EQ(g, 0.0);
    for (const auto& level : dec.M)
        for (double v : level) EXPECT_EQ(v, 4.0);
}

TEST(Decompose, VerifiesAgainstSpotsAndMixtures) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = test::random_model(seed, {.max_steps = 3});
        const auto f = min_surface(m, 0.9 * m.s0);
        const auto dec = optional_decompose(m, f);
        auto dens = all_spot_densities(m);
        for (std::uint64_t k = 0; k < 5; ++k) dens.push_back(mixture_density(m, oracle::random_alpha(m, k)));
        const auto rep = verify_decomposition(m, f, dec, dens);
        EXPECT_TRUE(rep.passed()) << "seed " << seed << ": " << (rep.failures.empty() ? "" : rep.failures.front());
        EXPECT_LE(rep.max_reconstruction_residual, 1e-12);
    }
}

TEST(Decompose, TamperingIsDetected) {
    const auto m = test::random_model(3, {.max_steps = 2});
    const auto f = min_surface(m, m.s0);
    const auto dec = optional_decompose(m, f);
    const auto dens = all_spot_densities(m);

    auto neg = dec;
    // Flip the largest consumption entry negative.
    auto& row = neg.g.back();
    auto it = std::max_element(row.begin(), row.end());
    *it = -std::max(1.0, *it);
    EXPECT_TRUE(has_failure(verify_decomposition(m, f, neg, dens), "consumption negativity"));

    auto moved = dec;
    moved.M[1][0] += 0.5;
    EXPECT_TRUE(has_failure(verify_decomposition(m, f, moved, dens), "martingale residual"));
}

TEST(Decompose, RejectsNonSupermartingaleAndShiftsLowSurfaces) {
    const auto m = unit_step();
    const auto sub = make_surface(m, 1e-6, [](const PathIndex&, std::span<const double> s) { return std::max(s.back(), 1.5); });
    EXPECT_THROW(optional_decompose(m, sub), DecompositionError);

    auto low = min_surface(m, 1.0);
    low.floor = 1.0; // some values sit below the floor
    const auto dec = optional_decompose(m, low);
    EXPECT_DOUBLE_EQ(dec.shift, 1e-3);
    EXPECT_TRUE(verify_decomposition(m, low, dec, all_spot_densities(m)).passed());
}

TEST(Surface, ShapeErrors) {
    const auto m = test::two_step_model();
    SupermartingaleSurface s;
    s.floor = 1.0;
    s.values = {{1.0}, {1.0, 1.0}};
    EXPECT_THROW(optional_decompose(m, s), ValidationError);
}
