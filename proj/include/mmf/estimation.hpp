#pragma once

// Exposure estimates a_1..a_N from one observed price path.
//
// The lowest reachable price after n steps is S_0 prod_{i<=n} (1 - a_i). The
// estimator pins those lows to tau * g_n with tau = tau0 * S_(0):
//   a_1 = 1 - tau0 (S_(0) / S_0) g_1,   a_i = 1 - g_i / g_{i-1}  (i >= 2),
// where S_(0) <= ... <= S_(N) are the order statistics of S_0..S_N and
// 1 >= g_1 >= ... >= g_N > 0 is a statistic of the ratios S_(k) / S_(N).

#include "mmf/errors.hpp"
#include "mmf/payoff.hpp"
#include "mmf/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mmf {

struct PriceSample {
    double s0 = 0.0;
    std::vector<double> obs; // S_1..S_N

    std::size_t horizon() const { return obs.size(); }

    void validate() const {
        if (obs.empty()) throw ValidationError("price sample needs at least one observation after t = 0");
        if (!(s0 > 0.0) || !std::isfinite(s0)) throw ValidationError("price at t = 0 must be finite and positive");
        for (std::size_t i = 0; i < obs.size(); ++i)
            if (!(obs[i] > 0.0) || !std::isfinite(obs[i]))
                throw ValidationError("price at t = " + std::to_string(i + 1) + " must be finite and positive");
    }
};

enum class StatisticKind { constant_one, capped_ratio, identity_tail, custom };

inline const char* to_string(StatisticKind k) {
    switch (k) {
    case StatisticKind::constant_one: return "constant_one";
    case StatisticKind::capped_ratio: return "capped_ratio";
    case StatisticKind::identity_tail: return "identity_tail";
    case StatisticKind::custom: return "custom";
    }
    return "?";
}

struct StatisticSpec {
    StatisticKind kind = StatisticKind::constant_one;
    double tau0 = 1.0;
    std::size_t tail_k = 0;      // identity_tail only
    std::vector<double> table;   // custom only: g_1..g_N
};

/// S_0..S_N sorted ascending (stable, duplicates kept).
inline std::vector<double> order_statistics(const PriceSample& sample) {
    sample.validate();
    std::vector<double> pool{sample.s0};
    pool.insert(pool.end(), sample.obs.begin(), sample.obs.end());
    std::stable_sort(pool.begin(), pool.end());
    return pool;
}

inline void check_monotone_chain(const std::vector<double>& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) throw ValidationError("statistic values must be finite");
        if (i == 0 && g[0] > 1.0) throw ValidationError("statistic requires g_1 <= 1");
        if (i > 0 && g[i] > g[i - 1])
            throw ValidationError("statistic violates g_" + std::to_string(i) + " >= g_" + std::to_string(i + 1));
    }
    if (!(g.back() > 0.0)) throw ValidationError("statistic requires g_N > 0");
}

/// g_1..g_N for the chosen statistic.
inline std::vector<double> statistic_values(const StatisticSpec& spec, const PriceSample& sample) {
    const auto os = order_statistics(sample);
    const std::size_t N = sample.horizon();
    const double top = os[N];
    std::vector<double> g(N, 1.0);
    switch (spec.kind) {
    case StatisticKind::constant_one:
        break;
    case StatisticKind::capped_ratio: {
        // g(x) = (S_0 / S_(0)) x below S_(0) / S_0, 1 above; g_i = g(S_(N-i) / S_(N)).
        const double cap = os[0] / sample.s0;
        for (std::size_t i = 1; i <= N; ++i) {
            const double x = os[N - i] / top;
            // At x == cap the product can round to 1 + ulp; the exact value is 1.
            g[i - 1] = x <= cap ? std::min(1.0, (sample.s0 / os[0]) * x) : 1.0;
        }
        break;
    }
    case StatisticKind::identity_tail: {
        // g_{N-i} = S_(i) / S_(N) for i <= k, 1 otherwise.
        if (spec.tail_k >= N) throw ValidationError("identity_tail needs k <= N - 1");
        for (std::size_t i = 0; i <= spec.tail_k; ++i) g[N - i - 1] = os[i] / top;
        break;
    }
    case StatisticKind::custom:
        if (spec.table.size() != N) throw ValidationError("custom statistic needs exactly N values");
        g = spec.table;
        break;
    }
    check_monotone_chain(g);
    return g;
}

struct EstimatedParams {
    std::vector<double> a;
    std::vector<double> g;
    std::vector<double> order_stats;
    StatisticSpec statistic;
    double s0 = 0.0;

    /// tau0 * S_(0) * g_N, the pinned lowest terminal price.
    double lowest_terminal() const { return statistic.tau0 * order_stats.front() * g.back(); }
};

inline EstimatedParams estimate_a(const PriceSample& sample, const StatisticSpec& spec) {
    if (!(spec.tau0 > 0.0 && spec.tau0 <= 1.0)) throw ValidationError("tau0 must lie in (0,1]");
    EstimatedParams est;
    est.statistic = spec;
    est.s0 = sample.s0;
    est.order_stats = order_statistics(sample);
    est.g = statistic_values(spec, sample);
    const std::size_t N = sample.horizon();
    est.a.resize(N);
    est.a[0] = 1.0 - spec.tau0 * (est.order_stats[0] / sample.s0) * est.g[0];
    if (est.a[0] < 0.0) throw ValidationError("estimate a_1 < 0: tau0 * (S_(0)/S_0) * g_1 exceeds 1");
    for (std::size_t i = 1; i < N; ++i) est.a[i] = 1.0 - est.g[i] / est.g[i - 1];
    return est;
}

struct EstimatedPrice {
    double value = 0.0;         // closed form applied to the estimated exposures
    double direct_value = 0.0;  // the same price written in order statistics
    PriceInterval interval;
    EstimatedParams params;
};

/// Super-hedge price under estimated exposures. The direct value uses the
/// lowest terminal price tau0 * S_(0) * g_N and lowest path mean
/// (S_0 + tau0 * S_(0) * Σ g_i) / (N+1) without going through a_i.
inline EstimatedPrice estimated_price(const PriceSample& sample, const StatisticSpec& spec, const Payoff& payoff) {
    if (!(payoff.kind() == PayoffKind::call || payoff.kind() == PayoffKind::put ||
          payoff.kind() == PayoffKind::asian_call || payoff.kind() == PayoffKind::asian_put))
        throw ValidationError("estimated prices cover call, put, asian_call and asian_put");
    EstimatedPrice out;
    out.params = estimate_a(sample, spec);
    const double s0 = sample.s0;
    const double K = payoff.strike();
    out.value = closed_form(payoff, s0, out.params.a);
    out.interval = non_arbitrage_interval(s0, out.params.a, payoff);

    const double tau = spec.tau0 * out.params.order_stats.front();
    const double lowest = tau * out.params.g.back();
    double gsum = 0.0;
    for (double gi : out.params.g) gsum += gi;
    const double mean_low = (s0 + tau * gsum) / static_cast<double>(sample.horizon() + 1);
    switch (payoff.kind()) {
    case PayoffKind::call: out.direct_value = lowest >= K ? std::max(s0 - K, 0.0) : s0 - lowest; break;
    case PayoffKind::put: out.direct_value = std::max(K - lowest, 0.0); break;
    case PayoffKind::asian_put: out.direct_value = std::max(K - mean_low, 0.0); break;
    case PayoffKind::asian_call: out.direct_value = mean_low >= K ? std::max(s0 - K, 0.0) : s0 - mean_low; break;
    default: break;
    }
    return out;
}

} // namespace mmf
