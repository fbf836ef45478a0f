#pragma once

// Brute-force reference computations. These deliberately avoid the walkers,
// visitors and node recursions used by the main modules: every path or branch
// is rebuilt from scratch with a plain loop, so a disagreement points at one
// side or the other. Slow by construction.

#include "mmf/errors.hpp"
#include "mmf/measures.hpp"
#include "mmf/model.hpp"
#include "mmf/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace mmf::oracle {

struct OracleBudget {
    std::size_t max_paths = 1'000'000;
    std::size_t max_selections = 1'000'000;
    std::uint64_t seed = 0;
};

namespace detail {

/// sigma_n from the explicit recursion, restarted from step 1.
inline double sigma_of(const EvolutionModel& m, std::size_t n, const std::vector<double>& eps) {
    double sigma = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const auto& v = m.steps[i].vol;
        if (v.kind == VolKind::constant) {
            sigma = v.sigma;
            continue;
        }
        double var = v.omega0;
        if (i > 0) {
            const double shock = sigma * eps[i - 1];
            var += v.alpha1 * (shock * shock);
            if (v.kind == VolKind::garch11) var += v.beta1 * (sigma * sigma);
        }
        sigma = std::max(v.floor, std::sqrt(var));
    }
    return sigma;
}

inline double two_point_up(double sigma, double ed, double eu) {
    const double xd = std::exp(sigma * ed), xu = std::exp(sigma * eu);
    return (1.0 - xd) / (xu - xd);
}

inline double two_point_down(double sigma, double ed, double eu) {
    const double xd = std::exp(sigma * ed), xu = std::exp(sigma * eu);
    return (xu - 1.0) / (xu - xd);
}

} // namespace detail

/// Σ over every full path (mixed-radix counter) of P(path) * prod psi * payoff.
inline double brute_expectation(const EvolutionModel& model, const MeasureDensity& density,
                                const PathFunctional& payoff, const OracleBudget& budget = {}) {
    const std::size_t N = model.horizon();
    std::size_t total = 1;
    for (const auto& st : model.steps) {
        total *= st.shocks.size();
        if (total > budget.max_paths) throw CapExceeded("oracle path budget exceeded");
    }
    double sum = 0.0;
    std::vector<std::size_t> idx(N);
    std::vector<double> eps(N), prices(N + 1);
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rest = lin;
        for (std::size_t i = N; i-- > 0;) {
            idx[i] = rest % model.steps[i].shocks.size();
            rest /= model.steps[i].shocks.size();
        }
        double weight = 1.0;
        prices[0] = model.s0;
        for (std::size_t i = 0; i < N; ++i) {
            const auto& atom = model.steps[i].shocks[idx[i]];
            eps[i] = atom.eps;
            const double sigma = detail::sigma_of(model, i, eps);
            prices[i + 1] = prices[i] * (1.0 + model.steps[i].a * (std::exp(sigma * atom.eps) - 1.0));
            std::size_t prefix = 0;
            for (std::size_t k = 0; k < i; ++k) prefix = prefix * model.steps[k].shocks.size() + idx[k];
            weight *= atom.prob * density.psi(i + 1, prefix, idx[i]);
        }
        sum += weight * payoff(PathView{prices, idx});
    }
    return sum;
}

/// The spot integral written out term by term: Σ over branch masks (step 1 the
/// most significant bit, 0 = down) of prod_j psi_j * payoff.
inline double brute_spot(const EvolutionModel& model, const AtomPairSelection& sel, const PathFunctional& payoff) {
    const std::size_t N = model.horizon();
    std::vector<double> eps(N), prices(N + 1);
    std::vector<std::size_t> atoms(N);
    double sum = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << N); ++mask) {
        double weight = 1.0;
        prices[0] = model.s0;
        for (std::size_t j = 0; j < N; ++j) {
            const bool up = (mask >> (N - 1 - j)) & 1U;
            const auto& st = model.steps[j];
            const double ed = st.shocks[sel.pairs[j].down].eps;
            const double eu = st.shocks[sel.pairs[j].up].eps;
            eps[j] = up ? eu : ed;
            atoms[j] = up ? sel.pairs[j].up : sel.pairs[j].down;
            const double sigma = detail::sigma_of(model, j, eps);
            // Same rounding rule as the main path: smaller weight from its formula,
            // larger as the complement.
            double w_up = 0.0, w_down = 1.0;
            if (!std::isinf(std::exp(sigma * eu))) {
                const double pu = detail::two_point_up(sigma, ed, eu);
                const double pd = detail::two_point_down(sigma, ed, eu);
                w_up = pu <= pd ? pu : 1.0 - pd;
                w_down = pu <= pd ? 1.0 - pu : pd;
            }
            weight *= up ? w_up : w_down;
            prices[j + 1] = prices[j] * (1.0 + st.a * (std::exp(sigma * eps[j]) - 1.0));
        }
        if (weight == 0.0) continue;
        sum += weight * payoff(PathView{prices, atoms});
    }
    return sum;
}

/// Exact maximum of spot expectations over every AtomPairSelection, scanned in
/// lexicographic order with strict improvement (smallest selection wins ties).
inline std::pair<double, AtomPairSelection> brute_sup_selections(const EvolutionModel& model,
                                                                 const PathFunctional& payoff,
                                                                 const OracleBudget& budget = {}) {
    const std::size_t N = model.horizon();
    std::vector<std::vector<AtomPair>> options(N);
    std::size_t total = 1;
    for (std::size_t n = 0; n < N; ++n) {
        const auto& sh = model.steps[n].shocks;
        for (std::size_t d = 0; d < sh.size(); ++d)
            for (std::size_t u = 0; u < sh.size(); ++u)
                if (sh[d].eps < 0.0 && sh[u].eps > 0.0) options[n].push_back({d, u});
        if (options[n].empty()) throw ValidationError("no feasible selection at step " + std::to_string(n + 1));
        total *= options[n].size();
        if (total > budget.max_selections) throw CapExceeded("oracle selection budget exceeded");
    }
    double best = -std::numeric_limits<double>::infinity();
    AtomPairSelection arg;
    AtomPairSelection sel;
    sel.pairs.resize(N);
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rest = lin;
        for (std::size_t n = N; n-- > 0;) {
            sel.pairs[n] = options[n][rest % options[n].size()];
            rest /= options[n].size();
        }
        const double v = brute_spot(model, sel, payoff);
        if (v > best) {
            best = v;
            arg = sel;
        }
    }
    return {best, arg};
}

/// Strictly positive alpha per step, weights 0.5 + U[0,1) rescaled so that
/// Σ p_d p_u alpha = 1. Deterministic in `seed`.
inline AlphaDensity random_alpha(const EvolutionModel& model, std::uint64_t seed) {
    CounterRng rng(seed);
    AlphaDensity out;
    for (const auto& st : model.steps) {
        StepAlpha alpha;
        for (std::size_t j = 0; j < st.shocks.size(); ++j) (st.shocks[j].eps <= 0.0 ? alpha.down : alpha.up).push_back(j);
        alpha.weight.resize(alpha.down.size() * alpha.up.size());
        double mass = 0.0;
        for (std::size_t i = 0; i < alpha.down.size(); ++i)
            for (std::size_t j = 0; j < alpha.up.size(); ++j) {
                alpha.at(i, j) = 0.5 + rng.uniform();
                mass += st.shocks[alpha.down[i]].prob * st.shocks[alpha.up[j]].prob * alpha.at(i, j);
            }
        for (double& w : alpha.weight) w /= mass;
        out.push_back(std::move(alpha));
    }
    return out;
}

} // namespace mmf::oracle
