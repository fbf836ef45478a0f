#pragma once

// Martingale measures on the finite path space.
//
// A spot measure fixes, per step, one down atom and one up atom; the price then
// moves on a binary tree with one-step risk-neutral weights psi. An alpha
// density weights every (down, up) pair of a step; mixing the spot weights with
// it yields a density with respect to the base measure that is strictly
// positive on every atom (an equivalent martingale measure).

#include "mmf/errors.hpp"
#include "mmf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mmf {

inline constexpr std::size_t kFreeAtom = std::numeric_limits<std::size_t>::max();

/// What a payoff sees: S_0..S_N and the atom index taken at each step
/// (kFreeAtom when shocks were chosen freely rather than from the model).
struct PathView {
    std::span<const double> prices;
    std::span<const std::size_t> atoms;
};

using PathFunctional = std::function<double(const PathView&)>;

// ---------------------------------------------------------------------------
// One-step weights

struct PsiPair {
    double down = 0.0;
    double up = 0.0;
};

/// Risk-neutral weights of a two-point step with shocks eps_down <= 0 < eps_up:
///   down = (e^{s e+} - 1) / (e^{s e+} - e^{s e-}),  up = (1 - e^{s e-}) / (same).
/// The smaller weight is evaluated from the formula and the larger as its
/// complement, so down + up == 1 in floating point.
inline PsiPair psi_from_sigma(double sigma, double eps_down, double eps_up) {
    if (!(eps_down <= 0.0 && eps_up > 0.0))
        throw ValidationError("psi weights need eps_down <= 0 < eps_up");
    const double ed = std::exp(sigma * eps_down);
    const double eu = std::exp(sigma * eps_up);
    if (std::isinf(eu)) return {1.0, 0.0};
    const double den = eu - ed;
    if (!(den > 0.0)) throw ValidationError("degenerate atom pair: zero total variation");
    const double up = (1.0 - ed) / den;
    const double down = (eu - 1.0) / den;
    if (up <= down) return {1.0 - up, up};
    return {down, 1.0 - down};
}

inline PsiPair psi_weights(const EvolutionModel& model, std::span<const double> history, double eps_down,
                           double eps_up) {
    if (!(eps_down < 0.0 && eps_up > 0.0))
        throw ValidationError("psi_weights requires eps_down < 0 < eps_up");
    return psi_from_sigma(sigma_at(model, history.size() + 1, history), eps_down, eps_up);
}

// ---------------------------------------------------------------------------
// Spot measures

struct AtomPair {
    std::size_t down = 0;
    std::size_t up = 0;
    friend bool operator==(const AtomPair&, const AtomPair&) = default;
};

struct AtomPairSelection {
    std::vector<AtomPair> pairs;
    friend bool operator==(const AtomPairSelection&, const AtomPairSelection&) = default;
};

/// Shock values chosen freely per step (the search space of the grid modes).
struct EpsPair {
    double down = 0.0;
    double up = 0.0;
};

inline void validate_selection(const EvolutionModel& model, const AtomPairSelection& sel) {
    if (sel.pairs.size() != model.horizon()) throw ValidationError("selection length must equal horizon");
    for (std::size_t n = 0; n < sel.pairs.size(); ++n) {
        const auto& shocks = model.steps[n].shocks;
        const auto [d, u] = sel.pairs[n];
        const std::string at = " at step " + std::to_string(n + 1);
        if (d >= shocks.size() || u >= shocks.size()) throw ValidationError("atom index out of range" + at);
        if (!(shocks[d].eps < 0.0)) throw ValidationError("down atom must have eps < 0" + at);
        if (!(shocks[u].eps > 0.0)) throw ValidationError("up atom must have eps > 0" + at);
    }
}

inline std::vector<EpsPair> selection_eps(const EvolutionModel& model, const AtomPairSelection& sel) {
    std::vector<EpsPair> out(sel.pairs.size());
    for (std::size_t n = 0; n < sel.pairs.size(); ++n)
        out[n] = {model.steps[n].shocks[sel.pairs[n].down].eps, model.steps[n].shocks[sel.pairs[n].up].eps};
    return out;
}

namespace detail {

inline std::size_t binary_leaves(std::size_t horizon, std::size_t cap) {
    if (horizon >= 63 || (std::size_t{1} << horizon) > cap)
        throw CapExceeded("2^N spot branches exceed cap " + std::to_string(cap));
    return std::size_t{1} << horizon;
}

/// Sum over the 2^N branch sequences of prod psi_j * payoff, leaves in
/// lexicographic order (down before up), weights multiplied from step 1.
/// `atoms` may be empty (free shocks) or hold the selection's atom pairs.
inline double spot_sum(const EvolutionModel& model, std::span<const EpsPair> eps, std::span<const AtomPair> atoms,
                       const PathFunctional& payoff, std::size_t cap) {
    const std::size_t N = model.horizon();
    binary_leaves(N, cap);
    std::vector<double> prices(N + 1);
    std::vector<std::size_t> idx(N, kFreeAtom);
    std::vector<PathWalker> walkers(N + 1, PathWalker(model));
    prices[0] = model.s0;
    double total = 0.0;

    std::function<void(std::size_t, double)> rec = [&](std::size_t n, double weight) {
        if (n == N) {
            total += weight * payoff(PathView{prices, idx});
            return;
        }
        const double sigma = walkers[n].next_sigma();
        const PsiPair psi = psi_from_sigma(sigma, eps[n].down, eps[n].up);
        for (int branch = 0; branch < 2; ++branch) {
            const double w = branch == 0 ? psi.down : psi.up;
            if (w == 0.0) continue;
            walkers[n + 1] = walkers[n];
            walkers[n + 1].advance(branch == 0 ? eps[n].down : eps[n].up, sigma);
            prices[n + 1] = walkers[n + 1].price;
            if (!atoms.empty()) idx[n] = branch == 0 ? atoms[n].down : atoms[n].up;
            rec(n + 1, weight * w);
        }
    };
    rec(0, 1.0);
    return total;
}

} // namespace detail

/// Expectation of a path functional under the spot measure of `sel`.
inline double spot_expectation(const EvolutionModel& model, const AtomPairSelection& sel,
                               const PathFunctional& payoff, std::size_t cap = kDefaultPathCap) {
    validate_selection(model, sel);
    const auto eps = selection_eps(model, sel);
    return detail::spot_sum(model, eps, sel.pairs, payoff, cap);
}

/// Spot expectation with freely chosen shocks (eps_down < 0 < eps_up per step).
inline double spot_expectation(const EvolutionModel& model, std::span<const EpsPair> eps,
                               const PathFunctional& payoff, std::size_t cap = kDefaultPathCap) {
    if (eps.size() != model.horizon()) throw ValidationError("shock pair list length must equal horizon");
    for (const auto& e : eps)
        if (!(e.down < 0.0 && e.up > 0.0)) throw ValidationError("free shocks need eps_down < 0 < eps_up");
    return detail::spot_sum(model, eps, {}, payoff, cap);
}

/// Largest |E[ΔS_n | node]| / S_{n-1} over all nodes of the spot tree.
inline double spot_max_drift(const EvolutionModel& model, const AtomPairSelection& sel) {
    validate_selection(model, sel);
    const auto eps = selection_eps(model, sel);
    const std::size_t N = model.horizon();
    double worst = 0.0;
    std::function<void(const PathWalker&)> rec = [&](const PathWalker& w) {
        if (w.step == N) return;
        const std::size_t n = w.step;
        const double sigma = w.next_sigma();
        const PsiPair psi = psi_from_sigma(sigma, eps[n].down, eps[n].up);
        const double a = model.steps[n].a;
        const auto dn = split_increment(w.price, a, sigma, eps[n].down);
        const auto up = split_increment(w.price, a, sigma, eps[n].up);
        worst = std::max(worst, std::abs(psi.down * dn.delta + psi.up * up.delta) / w.price);
        for (double e : {eps[n].down, eps[n].up}) {
            PathWalker next = w;
            next.advance(e, sigma);
            rec(next);
        }
    };
    rec(PathWalker(model));
    return worst;
}

/// Indices of atoms with eps < 0 (selectable as down atoms) and eps > 0.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> selectable_atoms(const StepSpec& step) {
    std::vector<std::size_t> down, up;
    for (std::size_t j = 0; j < step.shocks.size(); ++j) {
        if (step.shocks[j].eps < 0.0) down.push_back(j);
        if (step.shocks[j].eps > 0.0) up.push_back(j);
    }
    return {down, up};
}

inline std::size_t selection_count(const EvolutionModel& model, std::size_t cap = kDefaultPathCap) {
    std::size_t count = 1;
    for (const auto& st : model.steps) {
        const auto [down, up] = selectable_atoms(st);
        const std::size_t k = down.size() * up.size();
        if (k == 0) throw ValidationError("empty feasible selection: a step lacks a strictly negative or a positive atom");
        if (count > cap / k) throw CapExceeded("selection count exceeds cap " + std::to_string(cap));
        count *= k;
    }
    return count;
}

/// Visit every AtomPairSelection; step 1 most significant, pairs ordered by
/// (down index, up index) within a step.
inline void for_each_selection(const EvolutionModel& model,
                               const std::function<void(const AtomPairSelection&)>& visit,
                               std::size_t cap = kDefaultPathCap) {
    selection_count(model, cap);
    const std::size_t N = model.horizon();
    std::vector<std::vector<AtomPair>> options(N);
    for (std::size_t n = 0; n < N; ++n) {
        const auto [down, up] = selectable_atoms(model.steps[n]);
        for (auto d : down)
            for (auto u : up) options[n].push_back({d, u});
    }
    AtomPairSelection sel;
    sel.pairs.resize(N);
    std::function<void(std::size_t)> rec = [&](std::size_t n) {
        if (n == N) {
            visit(sel);
            return;
        }
        for (const auto& p : options[n]) {
            sel.pairs[n] = p;
            rec(n + 1);
        }
    };
    rec(0);
}

// ---------------------------------------------------------------------------
// Alpha densities

/// Weights of one step over (down atom, up atom) pairs. The down set holds
/// every atom with eps <= 0, the up set every atom with eps > 0.
struct StepAlpha {
    std::vector<std::size_t> down;
    std::vector<std::size_t> up;
    std::vector<double> weight; // row-major, down.size() x up.size()

    double at(std::size_t i, std::size_t j) const { return weight[i * up.size() + j]; }
    double& at(std::size_t i, std::size_t j) { return weight[i * up.size() + j]; }
};

using AlphaDensity = std::vector<StepAlpha>;

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> sign_split(const StepSpec& step) {
    std::vector<std::size_t> down, up;
    for (std::size_t j = 0; j < step.shocks.size(); ++j) (step.shocks[j].eps <= 0.0 ? down : up).push_back(j);
    return {down, up};
}

/// Σ_{d,u} p_d p_u alpha[d][u] for one step.
inline double alpha_mass(const StepSpec& step, const StepAlpha& alpha) {
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.down.size(); ++i)
        for (std::size_t j = 0; j < alpha.up.size(); ++j)
            total += step.shocks[alpha.down[i]].prob * step.shocks[alpha.up[j]].prob * alpha.at(i, j);
    return total;
}

inline void validate_alpha(const StepSpec& step, const StepAlpha& alpha, std::size_t n, double tol = 1e-12) {
    const std::string at = " at step " + std::to_string(n);
    const auto [down, up] = sign_split(step);
    if (alpha.down != down || alpha.up != up) throw ValidationError("alpha atom sets do not match the step" + at);
    if (alpha.weight.size() != down.size() * up.size()) throw ValidationError("alpha matrix has wrong size" + at);
    for (std::size_t i = 0; i < down.size(); ++i) {
        for (std::size_t j = 0; j < up.size(); ++j) {
            if (!(alpha.at(i, j) > 0.0) || !std::isfinite(alpha.at(i, j)))
                throw ValidationError("alpha must be strictly positive" + at);
            // V = ΔS⁻(d) + ΔS⁺(u) vanishes only if both shocks are zero.
            if (step.shocks[down[i]].eps == 0.0 && step.shocks[up[j]].eps == 0.0)
                throw ValidationError("pair with zero total variation V" + at);
        }
    }
    const double mass = alpha_mass(step, alpha);
    if (std::abs(mass - 1.0) > tol) throw ValidationError("alpha not normalized" + at);
}

inline void validate_alpha(const EvolutionModel& model, const AlphaDensity& alphas) {
    if (alphas.size() != model.horizon()) throw ValidationError("alpha density needs one entry per step");
    for (std::size_t n = 0; n < alphas.size(); ++n) validate_alpha(model.steps[n], alphas[n], n + 1);
}

/// Block construction of a one-step alpha:
///   alpha⁻_i = (1 - delta_i) 1_{B_i} / P(B_i) + delta_i 1_{A⁻ \ B_i} / P(A⁻ \ B_i)
///   alpha⁺_s = (1 - mu_s) 1_{C_s} / P(C_s) + mu_s 1_{A⁺ \ C_s} / P(A⁺ \ C_s)
///   alpha(d, u) = Σ_{i,s} gamma[i][s] alpha⁻_i(d) alpha⁺_s(u)
/// A block equal to its whole sign set has no complement term.
inline StepAlpha alpha_from_partition(const StepSpec& step, const std::vector<std::vector<std::size_t>>& down_blocks,
                                      const std::vector<std::vector<std::size_t>>& up_blocks,
                                      std::span<const double> deltas, std::span<const double> mus,
                                      const std::vector<std::vector<double>>& gammas) {
    const auto [down, up] = sign_split(step);
    if (down.empty() || up.empty()) throw ValidationError("step needs atoms on both sides of zero");
    if (deltas.size() != down_blocks.size() || mus.size() != up_blocks.size())
        throw ValidationError("one delta per down block and one mu per up block required");
    if (gammas.size() != down_blocks.size()) throw ValidationError("gamma rows must match down blocks");
    double gsum = 0.0;
    for (const auto& row : gammas) {
        if (row.size() != up_blocks.size()) throw ValidationError("gamma columns must match up blocks");
        for (double g : row) {
            if (!(g >= 0.0)) throw ValidationError("gammas must be nonnegative");
            gsum += g;
        }
    }
    if (std::abs(gsum - 1.0) > 1e-12) throw ValidationError("gammas must sum to 1");

    // Per-block density over one sign set, indexed like `set`.
    auto block_density = [&](const std::vector<std::size_t>& set, const std::vector<std::size_t>& block,
                             double weight_out) {
        if (!(weight_out > 0.0 && weight_out < 1.0)) throw ValidationError("block weights must lie in (0,1)");
        std::vector<bool> in(set.size(), false);
        for (auto atom : block) {
            auto it = std::find(set.begin(), set.end(), atom);
            if (it == set.end()) throw ValidationError("block atom " + std::to_string(atom) + " not in its sign set");
            in[static_cast<std::size_t>(it - set.begin())] = true;
        }
        double p_in = 0.0, p_out = 0.0;
        for (std::size_t k = 0; k < set.size(); ++k) (in[k] ? p_in : p_out) += step.shocks[set[k]].prob;
        if (!(p_in > 0.0)) throw ValidationError("zero-probability block");
        std::vector<double> dens(set.size());
        for (std::size_t k = 0; k < set.size(); ++k) {
            if (p_out == 0.0)
                dens[k] = 1.0 / p_in;
            else
                dens[k] = in[k] ? (1.0 - weight_out) / p_in : weight_out / p_out;
        }
        return dens;
    };

    std::vector<std::vector<double>> dn, un;
    for (std::size_t i = 0; i < down_blocks.size(); ++i) dn.push_back(block_density(down, down_blocks[i], deltas[i]));
    for (std::size_t s = 0; s < up_blocks.size(); ++s) un.push_back(block_density(up, up_blocks[s], mus[s]));

    StepAlpha alpha{down, up, std::vector<double>(down.size() * up.size(), 0.0)};
    for (std::size_t i = 0; i < dn.size(); ++i)
        for (std::size_t s = 0; s < un.size(); ++s)
            for (std::size_t d = 0; d < down.size(); ++d)
                for (std::size_t u = 0; u < up.size(); ++u) alpha.at(d, u) += gammas[i][s] * dn[i][d] * un[s][u];
    return alpha;
}

// ---------------------------------------------------------------------------
// Densities with respect to the base measure

/// psi_n(history, atom) for every step, history prefix and atom. The measure
/// of a full path is base_prob * prod_n psi_n.
class MeasureDensity {
public:
    MeasureDensity() = default;

    explicit MeasureDensity(const EvolutionModel& model, std::size_t cap = kDefaultPathCap) {
        std::size_t total = 0;
        for (std::size_t n = 0; n < model.horizon(); ++n) {
            const std::size_t prefixes = mmf::prefix_count(model, n, cap);
            const std::size_t atoms = model.steps[n].shocks.size();
            total += prefixes * atoms;
            if (total > cap) throw CapExceeded("density storage exceeds cap " + std::to_string(cap));
            atoms_.push_back(atoms);
            prefixes_.push_back(prefixes);
            psi_.emplace_back(prefixes * atoms, 0.0);
        }
    }

    std::size_t horizon() const { return psi_.size(); }
    std::size_t prefix_count(std::size_t n) const { return prefixes_.at(n - 1); }
    std::size_t atom_count(std::size_t n) const { return atoms_.at(n - 1); }

    /// n is 1-based; `prefix` is the linear index of the length-(n-1) history.
    double psi(std::size_t n, std::size_t prefix, std::size_t atom) const {
        return psi_[n - 1][prefix * atoms_[n - 1] + atom];
    }
    double& psi(std::size_t n, std::size_t prefix, std::size_t atom) {
        return psi_[n - 1][prefix * atoms_[n - 1] + atom];
    }

    bool matches(const EvolutionModel& model) const {
        if (model.horizon() != horizon()) return false;
        for (std::size_t n = 0; n < horizon(); ++n)
            if (model.steps[n].shocks.size() != atoms_[n]) return false;
        return true;
    }

private:
    std::vector<std::size_t> atoms_;
    std::vector<std::size_t> prefixes_;
    std::vector<std::vector<double>> psi_;
};

namespace detail {

/// Visit each history node (n = 1..N, prefix) with the walker positioned at it.
inline void for_each_node(const EvolutionModel& model,
                          const std::function<void(std::size_t n, std::size_t prefix, const PathWalker&,
                                                   const PathIndex&)>& visit) {
    const std::size_t N = model.horizon();
    PathIndex hist;
    std::function<void(const PathWalker&, std::size_t)> rec = [&](const PathWalker& w, std::size_t prefix) {
        const std::size_t n = w.step + 1;
        visit(n, prefix, w, hist);
        if (n == N) return;
        const auto& st = model.steps[n - 1];
        const double sigma = w.next_sigma();
        for (std::size_t j = 0; j < st.shocks.size(); ++j) {
            PathWalker next = w;
            next.advance(st.shocks[j].eps, sigma);
            hist.push_back(j);
            rec(next, prefix * st.shocks.size() + j);
            hist.pop_back();
        }
    };
    if (N > 0) rec(PathWalker(model), 0);
}

} // namespace detail

/// Density of the alpha-mixture of spot measures:
///   psi(d) = Σ_u p_u alpha[d][u] ΔS⁺(u) / V(d,u),  psi(u) = Σ_d p_d alpha[d][u] ΔS⁻(d) / V(d,u),
/// with V = ΔS⁻(d) + ΔS⁺(u). The ratios ΔS±/V are the two-point weights of the
/// pair, so they are taken from psi_from_sigma.
inline MeasureDensity mixture_density(const EvolutionModel& model, const AlphaDensity& alphas,
                                      std::size_t cap = kDefaultPathCap) {
    validate_alpha(model, alphas);
    MeasureDensity density(model, cap);
    detail::for_each_node(model, [&](std::size_t n, std::size_t prefix, const PathWalker& w, const PathIndex&) {
        const auto& st = model.steps[n - 1];
        const auto& alpha = alphas[n - 1];
        const double sigma = w.next_sigma();
        for (std::size_t i = 0; i < alpha.down.size(); ++i) {
            const auto& d = st.shocks[alpha.down[i]];
            for (std::size_t j = 0; j < alpha.up.size(); ++j) {
                const auto& u = st.shocks[alpha.up[j]];
                const PsiPair pair = psi_from_sigma(sigma, d.eps, u.eps);
                const double a = alpha.at(i, j);
                density.psi(n, prefix, alpha.down[i]) += u.prob * a * pair.down;
                density.psi(n, prefix, alpha.up[j]) += d.prob * a * pair.up;
            }
        }
    });
    return density;
}

/// Spot measure written as a density: psi = weight / prob on the selected
/// atoms and 0 elsewhere (a martingale measure that is not equivalent).
inline MeasureDensity spot_density(const EvolutionModel& model, const AtomPairSelection& sel,
                                   std::size_t cap = kDefaultPathCap) {
    validate_selection(model, sel);
    MeasureDensity density(model, cap);
    detail::for_each_node(model, [&](std::size_t n, std::size_t prefix, const PathWalker& w, const PathIndex&) {
        const auto& st = model.steps[n - 1];
        const auto [d, u] = sel.pairs[n - 1];
        const PsiPair pair = psi_from_sigma(w.next_sigma(), st.shocks[d].eps, st.shocks[u].eps);
        density.psi(n, prefix, d) = pair.down / st.shocks[d].prob;
        density.psi(n, prefix, u) = pair.up / st.shocks[u].prob;
    });
    return density;
}

/// Σ over full paths of base_prob * prod psi * payoff.
inline double measure_expectation(const EvolutionModel& model, const MeasureDensity& density,
                                  const PathFunctional& payoff, std::size_t cap = kDefaultPathCap) {
    if (!density.matches(model)) throw ValidationError("density does not match model");
    double total = 0.0;
    for_each_path(
        model,
        [&](const PathIndex& idx, const Path& path) {
            double w = path.base_prob;
            std::size_t prefix = 0;
            for (std::size_t n = 1; n <= idx.size(); ++n) {
                w *= density.psi(n, prefix, idx[n - 1]);
                prefix = prefix * model.steps[n - 1].shocks.size() + idx[n - 1];
            }
            if (w != 0.0) total += w * payoff(PathView{path.price_seq, idx});
        },
        cap);
    return total;
}

struct NodeLocation {
    std::size_t step = 0;
    PathIndex history;
};

struct MartingaleReport {
    double max_normalization_residual = 0.0;
    NodeLocation worst_normalization;
    double max_drift_residual = 0.0; // |E[ΔS_n | history]| / S_{n-1}
    NodeLocation worst_drift;
    double min_psi = std::numeric_limits<double>::infinity();
    NodeLocation min_psi_at;
    double tol = 0.0;

    bool normalization_ok() const { return max_normalization_residual <= tol; }
    bool drift_ok() const { return max_drift_residual <= tol; }
    /// Probability measure with zero conditional drift everywhere.
    bool passed() const { return normalization_ok() && drift_ok(); }
    /// Strictly positive on every atom, i.e. equivalent to the base measure.
    bool equivalent() const { return min_psi > 0.0; }
};

inline MartingaleReport verify_martingale(const EvolutionModel& model, const MeasureDensity& density, double tol) {
    if (!density.matches(model)) throw ValidationError("density does not match model");
    MartingaleReport rep;
    rep.tol = tol;
    detail::for_each_node(model, [&](std::size_t n, std::size_t prefix, const PathWalker& w, const PathIndex& hist) {
        const auto& st = model.steps[n - 1];
        const double sigma = w.next_sigma();
        double mass = 0.0, drift = 0.0;
        for (std::size_t j = 0; j < st.shocks.size(); ++j) {
            const double q = st.shocks[j].prob * density.psi(n, prefix, j);
            mass += q;
            drift += q * split_increment(w.price, st.a, sigma, st.shocks[j].eps).delta;
            if (density.psi(n, prefix, j) < rep.min_psi) {
                rep.min_psi = density.psi(n, prefix, j);
                rep.min_psi_at = {n, hist};
            }
        }
        const double norm_res = std::abs(mass - 1.0);
        const double drift_res = std::abs(drift) / w.price;
        auto track = [&](double res, double& worst, NodeLocation& loc) {
            if (loc.step == 0 || res > worst) {
                worst = std::max(worst, res);
                loc = {n, hist};
            }
        };
        track(norm_res, rep.max_normalization_residual, rep.worst_normalization);
        track(drift_res, rep.max_drift_residual, rep.worst_drift);
    });
    return rep;
}

/// |E^{mixture}[payoff] - Σ_selections weight(selection) * E^{spot}[payoff]|,
/// weight = prod_n p(d_n) p(u_n) alpha_n[d_n][u_n], summed over every pair of
/// the alpha's sign sets (down atoms with eps = 0 give one-branch spot trees).
inline double integral_representation_check(const EvolutionModel& model, const AlphaDensity& alphas,
                                            const PathFunctional& payoff, std::size_t cap = kDefaultPathCap) {
    const double mixed = measure_expectation(model, mixture_density(model, alphas, cap), payoff, cap);

    const std::size_t N = model.horizon();
    std::size_t combos = 1;
    for (const auto& a : alphas) {
        const std::size_t k = a.down.size() * a.up.size();
        if (combos > cap / k) throw CapExceeded("pair enumeration exceeds cap " + std::to_string(cap));
        combos *= k;
    }
    std::vector<EpsPair> eps(N);
    std::vector<AtomPair> atoms(N);
    double integral = 0.0;
    std::function<void(std::size_t, double)> rec = [&](std::size_t n, double weight) {
        if (n == N) {
            integral += weight * detail::spot_sum(model, eps, atoms, payoff, cap);
            return;
        }
        const auto& st = model.steps[n];
        const auto& alpha = alphas[n];
        for (std::size_t i = 0; i < alpha.down.size(); ++i) {
            for (std::size_t j = 0; j < alpha.up.size(); ++j) {
                const auto& d = st.shocks[alpha.down[i]];
                const auto& u = st.shocks[alpha.up[j]];
                eps[n] = {d.eps, u.eps};
                atoms[n] = {alpha.down[i], alpha.up[j]};
                rec(n + 1, weight * d.prob * u.prob * alpha.at(i, j));
            }
        }
    };
    rec(0, 1.0);
    return std::abs(mixed - integral);
}

} // namespace mmf
