#pragma once

// Super-hedge prices: suprema of claim expectations over spot measures, the
// closed-form limits of those suprema, and the non-arbitrage intervals built
// from them. Prices are undiscounted.

#include "mmf/errors.hpp"
#include "mmf/measures.hpp"
#include "mmf/model.hpp"
#include "mmf/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmf {

enum class SearchMode { discrete_exhaustive, grid, coordinate_ascent };

inline const char* to_string(SearchMode m) {
    switch (m) {
    case SearchMode::discrete_exhaustive: return "discrete_exhaustive";
    case SearchMode::grid: return "grid";
    case SearchMode::coordinate_ascent: return "coordinate_ascent";
    }
    return "?";
}

struct SearchConfig {
    SearchMode mode = SearchMode::discrete_exhaustive;
    double eps_lo = -12.0;
    double eps_hi = 12.0;
    std::size_t grid_points = 49;
    double tol = 1e-12;
    std::size_t max_rounds = 100;
    std::size_t cap = kDefaultPathCap;
    /// Grid mode searches every grid combination up to this many, and falls
    /// back to coordinate ascent above it.
    std::size_t grid_exhaustive_cap = 1'000'000;

    void validate() const {
        if (!(eps_lo < 0.0 && 0.0 < eps_hi)) throw ValidationError("eps range must satisfy lo < 0 < hi");
        if (grid_points < 3) throw ValidationError("grid_points must be at least 3");
        if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    }

    /// Evenly spaced points on [eps_lo, eps_hi]; down candidates most negative
    /// first, up candidates largest first. Zero is dropped.
    std::pair<std::vector<double>, std::vector<double>> grid() const {
        std::vector<double> down, up;
        for (std::size_t i = 0; i < grid_points; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(grid_points - 1);
            const double e = i + 1 == grid_points ? eps_hi : eps_lo + t * (eps_hi - eps_lo);
            if (e < 0.0) down.push_back(e);
            if (e > 0.0) up.push_back(e);
        }
        std::reverse(up.begin(), up.end());
        return {down, up};
    }
};

struct SearchResult {
    double value = 0.0;
    /// Best model-atom selection, when the optimum came from model atoms.
    std::optional<AtomPairSelection> selection;
    /// Shock pair per step of the optimum.
    std::vector<EpsPair> eps;
    std::string provenance;
    /// For grid searches: crude one-sided bound on the distance to the limit value.
    std::optional<double> gap_bound;
    std::size_t evaluations = 0;
};

namespace detail {

/// Exhaustive pass over model-atom selections; sense = +1 maximizes, -1 minimizes.
/// Strict improvement only, so the lexicographically smallest optimum wins.
inline SearchResult search_atoms(const EvolutionModel& model, const PathFunctional& f, int sense, std::size_t cap) {
    SearchResult best;
    best.value = -sense * std::numeric_limits<double>::infinity();
    for_each_selection(
        model,
        [&](const AtomPairSelection& sel) {
            const double v = spot_expectation(model, sel, f, cap);
            ++best.evaluations;
            if (sense * v > sense * best.value) {
                best.value = v;
                best.selection = sel;
            }
        },
        cap);
    best.eps = selection_eps(model, *best.selection);
    best.provenance = "discrete_exhaustive";
    return best;
}

inline SearchResult search_grid(const EvolutionModel& model, const PathFunctional& f, int sense,
                                const SearchConfig& cfg, bool force_ascent) {
    const auto [down, up] = cfg.grid();
    const std::size_t N = model.horizon();
    const std::size_t per_step = down.size() * up.size();
    SearchResult best;
    best.value = -sense * std::numeric_limits<double>::infinity();

    bool exhaustive = !force_ascent;
    if (exhaustive) {
        std::size_t total = 1;
        for (std::size_t n = 0; n < N && exhaustive; ++n) {
            if (total > cfg.grid_exhaustive_cap / per_step) exhaustive = false;
            total *= per_step;
        }
    }

    std::vector<EpsPair> eps(N, EpsPair{down.front(), up.front()});
    auto eval = [&]() {
        ++best.evaluations;
        return detail::spot_sum(model, eps, {}, f, cfg.cap);
    };

    if (exhaustive) {
        std::function<void(std::size_t)> rec = [&](std::size_t n) {
            if (n == N) {
                const double v = eval();
                if (sense * v > sense * best.value) {
                    best.value = v;
                    best.eps = eps;
                }
                return;
            }
            for (double d : down)
                for (double u : up) {
                    eps[n] = {d, u};
                    rec(n + 1);
                }
        };
        rec(0);
        best.provenance = "grid_exhaustive";
    } else {
        // Block coordinate ascent over one step's (down, up) pair at a time,
        // starting from the widest shocks. Candidates run from large |eps| to
        // small, and only strict improvements move the point.
        best.value = eval();
        best.eps = eps;
        for (std::size_t round = 0; round < cfg.max_rounds; ++round) {
            const double before = best.value;
            for (std::size_t n = 0; n < N; ++n) {
                EpsPair keep = eps[n];
                for (double d : down)
                    for (double u : up) {
                        eps[n] = {d, u};
                        const double v = eval();
                        if (sense * v > sense * best.value) {
                            best.value = v;
                            keep = eps[n];
                        }
                    }
                eps[n] = keep;
            }
            best.eps = eps;
            if (sense * (best.value - before) < cfg.tol) break;
        }
        best.provenance = "coordinate_ascent";
    }

    double sigma_min = std::numeric_limits<double>::infinity();
    for (const auto& st : model.steps) sigma_min = std::min(sigma_min, st.vol.lower_bound());
    best.gap_bound = model.s0 * (std::exp(sigma_min * cfg.eps_lo) + std::exp(-sigma_min * cfg.eps_hi)) *
                     static_cast<double>(N);
    return best;
}

inline SearchResult search(const EvolutionModel& model, const Payoff& payoff, const SearchConfig& cfg, int sense) {
    cfg.validate();
    require_valid(model);
    const auto f = payoff.functional();
    if (cfg.mode == SearchMode::discrete_exhaustive) {
        if (model.pricing_only) throw ValidationError("discrete search needs a model with shock atoms");
        return search_atoms(model, f, sense, cfg.cap);
    }
    if (payoff.kind() == PayoffKind::path_table)
        throw ValidationError("path-table payoffs need model atoms; use discrete_exhaustive");
    SearchResult res = search_grid(model, f, sense, cfg, cfg.mode == SearchMode::coordinate_ascent);
    if (!model.pricing_only) {
        SearchResult atoms = search_atoms(model, f, sense, cfg.cap);
        res.evaluations += atoms.evaluations;
        if (sense * atoms.value > sense * res.value) {
            res.value = atoms.value;
            res.selection = atoms.selection;
            res.eps = atoms.eps;
            res.provenance += "+model_atoms";
        }
    }
    return res;
}

} // namespace detail

/// Supremum of spot expectations (the super-hedge fair price over the searched set).
///
/// discrete_exhaustive takes the exact maximum over model-atom selections. grid
/// and coordinate_ascent also treat shocks as free on the configured grid, and
/// report `gap_bound` = s0 * (e^{sigma_min lo} + e^{-sigma_min hi}) * N as a
/// rough distance to the unbounded-shock limit given by the closed forms.
inline SearchResult superhedge_sup(const EvolutionModel& model, const Payoff& payoff, const SearchConfig& cfg = {}) {
    return detail::search(model, payoff, cfg, +1);
}

struct InfResult {
    double value = 0.0;
    bool exact = false;
    std::string provenance;
};

/// Lower endpoint. Convex claims get f(S_0), reached as all shocks tend to 0;
/// other claims get the minimum over the search set, which only bounds the
/// true infimum from above.
inline InfResult superhedge_inf(const EvolutionModel& model, const Payoff& payoff, const SearchConfig& cfg = {}) {
    require_valid(model);
    if (payoff.convex()) return {payoff.at_constant_path(model.s0), true, "jensen_endpoint"};
    const SearchResult r = detail::search(model, payoff, cfg, -1);
    return {r.value, false, "upper estimate of inf (" + r.provenance + ")"};
}

// ---------------------------------------------------------------------------
// Closed forms

inline void check_closed_form_inputs(double s0, std::span<const double> a, double strike) {
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw ValidationError("s0 must be positive");
    if (!(strike > 0.0) || !std::isfinite(strike)) throw ValidationError("strike must be positive");
    if (a.empty()) throw ValidationError("exposure list must be nonempty");
    // a_i = 0 is admitted: estimated exposures may vanish.
    for (double ai : a)
        if (!(ai >= 0.0 && ai <= 1.0)) throw ValidationError("every a_i must lie in [0,1]");
}

/// prod_i (1 - a_i), left to right; exactly 0 once some a_i == 1.
inline double survival_product(std::span<const double> a) {
    double p = 1.0;
    for (double ai : a) {
        if (ai == 1.0) return 0.0;
        p *= 1.0 - ai;
    }
    return p;
}

/// (1/(N+1)) Σ_{i=0}^{N} prod_{s<=i} (1 - a_s): the mean of the lowest path over S_0.
inline double mean_min_factor(std::span<const double> a) {
    double p = 1.0, sum = 1.0;
    for (double ai : a) {
        p = ai == 1.0 ? 0.0 : p * (1.0 - ai);
        sum += p;
    }
    return sum / static_cast<double>(a.size() + 1);
}

inline double closed_form_call(double s0, std::span<const double> a, double strike) {
    check_closed_form_inputs(s0, a, strike);
    const double lowest = s0 * survival_product(a);
    return lowest >= strike ? std::max(s0 - strike, 0.0) : s0 * (1.0 - survival_product(a));
}

inline double closed_form_put(double s0, std::span<const double> a, double strike) {
    check_closed_form_inputs(s0, a, strike);
    return std::max(strike - s0 * survival_product(a), 0.0);
}

inline double closed_form_asian_put(double s0, std::span<const double> a, double strike) {
    check_closed_form_inputs(s0, a, strike);
    return std::max(strike - s0 * mean_min_factor(a), 0.0);
}

inline double closed_form_asian_call(double s0, std::span<const double> a, double strike) {
    check_closed_form_inputs(s0, a, strike);
    const double m = mean_min_factor(a);
    return s0 * m >= strike ? std::max(s0 - strike, 0.0) : s0 * (1.0 - m);
}

inline double closed_form(const Payoff& payoff, double s0, std::span<const double> a) {
    switch (payoff.kind()) {
    case PayoffKind::call: return closed_form_call(s0, a, payoff.strike());
    case PayoffKind::put: return closed_form_put(s0, a, payoff.strike());
    case PayoffKind::asian_call: return closed_form_asian_call(s0, a, payoff.strike());
    case PayoffKind::asian_put: return closed_form_asian_put(s0, a, payoff.strike());
    default: throw ValidationError("no closed form for " + payoff.name() + " payoffs");
    }
}

// ---------------------------------------------------------------------------
// Intervals and bounds

struct PriceInterval {
    double lower = 0.0;
    double upper = 0.0;
    bool attained_lower = false;
    bool attained_upper = false;
    std::string provenance_lower;
    std::string provenance_upper;

    bool point() const { return lower == upper; }
};

/// Bounds on the supremum for claims with f(0) = 0 and f(x) <= slope * x:
///   f(s0 prod(1-a)) + slope * s0 * (1 - prod(1-a))  <=  sup  <=  slope * s0.
inline PriceInterval payoff_bounds_sublinear(double s0, std::span<const double> a, double slope, const Payoff& payoff) {
    check_closed_form_inputs(s0, a, 1.0);
    if (!(slope > 0.0)) throw ValidationError("slope must be positive");
    const auto& f = payoff.curve();
    if (f(0.0) != 0.0) throw ValidationError("sublinear bound needs f(0) = 0");
    for (const auto& k : f.knots)
        if (k.y > slope * k.x) throw ValidationError("sublinear bound needs f(x) <= slope * x");
    if (f.tail_slope > slope) throw ValidationError("sublinear bound needs the tail slope <= slope");
    const double prod = survival_product(a);
    PriceInterval iv;
    iv.lower = f(s0 * prod) + slope * s0 * (1.0 - prod);
    iv.upper = slope * s0;
    iv.provenance_lower = "sublinear lower bound";
    iv.provenance_upper = "slope * s0";
    return iv;
}

/// Bounds on the supremum for claims with f(0) = cap and f <= cap:
///   f(s0 prod(1-a))  <=  sup  <=  cap, both equal to cap once some a_i = 1.
inline PriceInterval payoff_bounds_bounded(double s0, std::span<const double> a, double cap, const Payoff& payoff) {
    check_closed_form_inputs(s0, a, 1.0);
    if (!(cap > 0.0)) throw ValidationError("cap must be positive");
    const auto& f = payoff.curve();
    if (f(0.0) != cap) throw ValidationError("bounded bound needs f(0) = cap");
    for (const auto& k : f.knots)
        if (k.y > cap) throw ValidationError("bounded bound needs f <= cap");
    if (f.tail_slope > 0.0) throw ValidationError("bounded bound needs a flat tail");
    PriceInterval iv;
    iv.lower = f(s0 * survival_product(a));
    iv.upper = cap;
    iv.provenance_lower = "f(s0 * prod(1 - a))";
    iv.provenance_upper = "cap";
    return iv;
}

/// Interval of non-arbitrage prices [inf, sup] for the four vanilla kinds.
inline PriceInterval non_arbitrage_interval(double s0, std::span<const double> a, const Payoff& payoff) {
    const double K = payoff.strike();
    const double prod = payoff.kind() == PayoffKind::call || payoff.kind() == PayoffKind::put ? survival_product(a)
                                                                                             : mean_min_factor(a);
    const double sup = closed_form(payoff, s0, a); // validates inputs
    PriceInterval iv;
    iv.upper = sup;
    switch (payoff.kind()) {
    case PayoffKind::call:
        iv.lower = std::max(s0 - K, 0.0);
        if (s0 * prod >= K) {
            iv.provenance_lower = iv.provenance_upper = "call: lowest terminal price >= K, single point (s0-K)^+";
            iv.attained_lower = iv.attained_upper = true;
        } else {
            iv.provenance_lower = "call: jensen endpoint (s0-K)^+";
            iv.provenance_upper = "call: s0 (1 - prod(1-a))";
        }
        break;
    case PayoffKind::put:
        iv.lower = std::max(K - s0, 0.0);
        iv.provenance_lower = "put: jensen endpoint (K-s0)^+";
        iv.provenance_upper = prod == 0.0 ? "put: unstable asset, sup = K" : "put: (K - s0 prod(1-a))^+";
        if (iv.lower == iv.upper) iv.attained_lower = iv.attained_upper = true;
        break;
    case PayoffKind::asian_call:
        iv.lower = std::max(s0 - K, 0.0);
        if (s0 * prod >= K) {
            iv.provenance_lower = iv.provenance_upper = "asian call: lowest path mean >= K, single point (s0-K)^+";
            iv.attained_lower = iv.attained_upper = true;
        } else {
            iv.provenance_lower = "asian call: jensen endpoint (s0-K)^+";
            iv.provenance_upper = "asian call: s0 (1 - mean-min factor)";
        }
        break;
    case PayoffKind::asian_put:
        if (K <= s0 * prod) {
            iv.lower = 0.0;
            iv.provenance_lower = iv.provenance_upper = "asian put: K <= lowest path mean, single point 0";
            iv.attained_lower = iv.attained_upper = true;
        } else {
            iv.lower = std::max(K - s0, 0.0);
            iv.provenance_lower = "asian put: jensen endpoint (K-s0)^+";
            iv.provenance_upper = "asian put: (K - lowest path mean)^+";
        }
        break;
    default:
        throw ValidationError("non-arbitrage interval is defined for call, put, asian_call and asian_put only");
    }
    return iv;
}

} // namespace mmf
