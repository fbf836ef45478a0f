#pragma once

// Shared fixtures: hand-built models and a seeded random-model generator.

#include "mmf.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace mmf::test {

inline const double kLn2 = std::log(2.0);

inline StepSpec two_point(double a, double sigma, double eps_down, double eps_up, double p_down = 0.5) {
    return {a, {{eps_down, p_down}, {eps_up, 1.0 - p_down}}, VolatilitySpec::constant(sigma)};
}

/// s0 = 100, two steps, a = 0.5, sigma = 1, shocks +-ln 2.
inline EvolutionModel two_step_model() {
    EvolutionModel m;
    m.s0 = 100.0;
    m.steps = {two_point(0.5, 1.0, -kLn2, kLn2), two_point(0.5, 1.0, -kLn2, kLn2)};
    return m;
}

/// Two GARCH(1,1) steps with three atoms each (values cross-checked at high precision).
inline EvolutionModel garch_model() {
    const auto vol = VolatilitySpec::garch11(0.04, 0.3, 0.5, 0.05);
    EvolutionModel m;
    m.s0 = 100.0;
    m.steps = {{0.6, {{-1.5, 0.3}, {-0.4, 0.3}, {0.8, 0.4}}, vol}, {0.3, {{-1.0, 0.5}, {0.5, 0.2}, {1.7, 0.3}}, vol}};
    return m;
}

struct RandomModelSpec {
    std::size_t max_steps = 4;
    std::size_t max_atoms = 4;
    double a_max = 0.9;
    bool allow_garch = true;
    bool allow_zero_eps = false;
    double sigma_lo = 0.2;
    double sigma_hi = 1.5;
};

/// Deterministic random model: each step has at least one eps < 0 and one
/// eps > 0, distinct shocks, probabilities summing to 1.
inline EvolutionModel random_model(std::uint64_t seed, const RandomModelSpec& spec = {}) {
    CounterRng rng(seed);
    EvolutionModel m;
    m.s0 = rng.uniform(10.0, 200.0);
    const std::size_t N = 1 + rng.below(spec.max_steps);
    for (std::size_t n = 0; n < N; ++n) {
        StepSpec st;
        st.a = spec.a_max * (1.0 - rng.uniform()); // (0, a_max]
        if (spec.allow_garch && rng.uniform() < 0.5) {
            const double floor = rng.uniform(0.05, 0.3);
            st.vol = VolatilitySpec::garch11(rng.uniform(0.01, 0.5), rng.uniform(0.0, 0.4), rng.uniform(0.0, 0.5), floor);
        } else {
            st.vol = VolatilitySpec::constant(rng.uniform(spec.sigma_lo, spec.sigma_hi));
        }
        const std::size_t k = 2 + rng.below(spec.max_atoms - 1);
        const std::size_t downs = 1 + rng.below(k - 1);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double eps;
            if (spec.allow_zero_eps && j == 0 && downs > 1 && rng.uniform() < 0.3)
                eps = 0.0;
            else if (j < downs)
                eps = -rng.uniform(0.05, 2.0) - 0.01 * static_cast<double>(j);
            else
                eps = rng.uniform(0.05, 2.0) + 0.01 * static_cast<double>(j);
            const double p = rng.uniform(0.2, 1.0);
            st.shocks.push_back({eps, p});
            total += p;
        }
        for (auto& a : st.shocks) a.prob /= total;
        m.steps.push_back(std::move(st));
    }
    return m;
}

/// Random exposures in (0, a_max] with N steps.
inline std::vector<double> random_exposures(CounterRng& rng, std::size_t N, double a_max = 0.9) {
    std::vector<double> a(N);
    for (auto& x : a) x = a_max * (1.0 - rng.uniform());
    return a;
}

} // namespace mmf::test
