#pragma once

// Optional decomposition of a positive supermartingale f with respect to the
// whole family of martingale measures:
//
//   f_n = M_n - Σ_{i<=n} g_i,   M_n = f_0 + Σ_{i<=n} f_{i-1} (xi_i - 1),
//   xi_n = 1 + gamma_{n-1} ΔS_n,  g_n = f_{n-1} xi_n - f_n >= 0,
//
// with gamma_{n-1} = min over strictly-down atoms of (1 - f_n / f_{n-1}) / ΔS_n⁻.

#include "mmf/errors.hpp"
#include "mmf/measures.hpp"
#include "mmf/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mmf {

/// Values f_n at every history prefix, n = 0..N; values[n] is indexed by the
/// linear prefix index (prefix_linear) of length n.
struct SupermartingaleSurface {
    double floor = 0.0;
    std::vector<std::vector<double>> values;

    double at(std::size_t n, std::size_t prefix) const { return values.at(n).at(prefix); }
};

/// Build a surface by evaluating fn(history, prices S_0..S_n) at every node.
inline SupermartingaleSurface make_surface(
    const EvolutionModel& model, double floor,
    const std::function<double(const PathIndex&, std::span<const double>)>& fn) {
    SupermartingaleSurface s;
    s.floor = floor;
    s.values.resize(model.horizon() + 1);
    for (std::size_t n = 0; n <= model.horizon(); ++n) s.values[n].resize(prefix_count(model, n));
    PathIndex hist;
    std::vector<double> prices{model.s0};
    std::function<void(const PathWalker&, std::size_t)> rec = [&](const PathWalker& w, std::size_t prefix) {
        s.values[w.step][prefix] = fn(hist, prices);
        if (w.step == model.horizon()) return;
        const auto& st = model.steps[w.step];
        const double sigma = w.next_sigma();
        for (std::size_t j = 0; j < st.shocks.size(); ++j) {
            PathWalker next = w;
            next.advance(st.shocks[j].eps, sigma);
            hist.push_back(j);
            prices.push_back(next.price);
            rec(next, prefix * st.shocks.size() + j);
            hist.pop_back();
            prices.pop_back();
        }
    };
    rec(PathWalker(model), 0);
    return s;
}

inline void check_surface_shape(const EvolutionModel& model, const SupermartingaleSurface& surface) {
    if (surface.values.size() != model.horizon() + 1)
        throw ValidationError("surface must cover steps 0.." + std::to_string(model.horizon()));
    for (std::size_t n = 0; n <= model.horizon(); ++n)
        if (surface.values[n].size() != prefix_count(model, n))
            throw ValidationError("surface is missing nodes at step " + std::to_string(n));
}

namespace detail {

/// ΔS_n per atom at a node.
inline std::vector<DeltaSplit> node_increments(const EvolutionModel& model, const PathWalker& w) {
    const auto& st = model.steps[w.step];
    const double sigma = w.next_sigma();
    std::vector<DeltaSplit> out;
    out.reserve(st.shocks.size());
    for (const auto& atom : st.shocks) out.push_back(split_increment(w.price, st.a, sigma, atom.eps));
    return out;
}

inline double node_gamma(const SupermartingaleSurface& s, std::size_t n, std::size_t prefix,
                         const std::vector<DeltaSplit>& inc) {
    const double parent = s.at(n - 1, prefix);
    double gamma = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < inc.size(); ++j) {
        if (!(inc[j].minus > 0.0)) continue;
        const double ratio = s.at(n, prefix * inc.size() + j) / parent;
        gamma = std::min(gamma, (1.0 - ratio) / inc[j].minus);
    }
    if (std::isinf(gamma))
        throw ValidationError("degenerate step " + std::to_string(n) + ": no atom with ΔS⁻ > 0");
    return gamma;
}

inline void for_each_inner_node(const EvolutionModel& model,
                                const std::function<void(std::size_t n, std::size_t prefix, const PathWalker&,
                                                         const PathIndex&)>& visit) {
    detail::for_each_node(model, visit);
}

} // namespace detail

/// gamma_{n-1} at a history of length n - 1 (n is 1-based).
inline double gamma_step(const EvolutionModel& model, const SupermartingaleSurface& surface, std::size_t n,
                         const PathIndex& history) {
    if (n < 1 || n > model.horizon()) throw std::out_of_range("step index out of range");
    if (history.size() != n - 1) throw ValidationError("history length must equal n - 1");
    check_index(model, history);
    check_surface_shape(model, surface);
    PathWalker w(model);
    for (std::size_t i = 0; i < history.size(); ++i) w.advance(model.steps[i].shocks[history[i]].eps);
    return detail::node_gamma(surface, n, prefix_linear(model, history), detail::node_increments(model, w));
}

struct RatioViolation {
    std::size_t step = 0;
    PathIndex history;
    std::size_t atom = 0;
    double excess = 0.0; // f_n - f_{n-1} (1 + gamma ΔS_n), in value units
};

struct RatioReport {
    bool passed = true;
    double max_excess = 0.0;
    std::vector<RatioViolation> violations;
    std::vector<std::string> degenerate;

    std::string summary() const {
        if (passed) return "ratio bound holds";
        std::string s = "ratio bound fails (surface is not a supermartingale for the whole family):";
        for (const auto& d : degenerate) s += " " + d + ";";
        for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 5); ++i) {
            const auto& v = violations[i];
            s += " step " + std::to_string(v.step) + " atom " + std::to_string(v.atom) + " history [";
            for (std::size_t k = 0; k < v.history.size(); ++k) s += (k ? "," : "") + std::to_string(v.history[k]);
            s += "] excess " + std::to_string(v.excess) + ";";
        }
        return s;
    }
};

/// Checks f_n <= f_{n-1} (1 + gamma_{n-1} ΔS_n) + tol * max(1, f_{n-1}) at every node and atom.
inline RatioReport check_ratio_bound(const EvolutionModel& model, const SupermartingaleSurface& surface,
                                     double tol = 1e-10) {
    check_surface_shape(model, surface);
    RatioReport rep;
    detail::for_each_inner_node(model, [&](std::size_t n, std::size_t prefix, const PathWalker& w,
                                           const PathIndex& hist) {
        const auto inc = detail::node_increments(model, w);
        double gamma;
        try {
            gamma = detail::node_gamma(surface, n, prefix, inc);
        } catch (const ValidationError& e) {
            rep.passed = false;
            rep.degenerate.emplace_back(e.what());
            return;
        }
        const double parent = surface.at(n - 1, prefix);
        for (std::size_t j = 0; j < inc.size(); ++j) {
            const double excess = surface.at(n, prefix * inc.size() + j) - parent * (1.0 + gamma * inc[j].delta);
            rep.max_excess = std::max(rep.max_excess, excess);
            if (excess > tol * std::max(1.0, parent)) {
                rep.passed = false;
                rep.violations.push_back({n, hist, j, excess});
            }
        }
    });
    return rep;
}

class DecompositionError : public ValidationError {
public:
    explicit DecompositionError(RatioReport report)
        : ValidationError(report.summary()), report_(std::move(report)) {}
    const RatioReport& report() const { return report_; }

private:
    RatioReport report_;
};

struct Decomposition {
    /// Constant added to the input so every value clears the positivity floor.
    double shift = 0.0;
    /// gamma[n-1][prefix] for n = 1..N.
    std::vector<std::vector<double>> gamma;
    /// xi0[n-1][child], g[n-1][child] for n = 1..N, child = prefix * k_n + atom.
    std::vector<std::vector<double>> xi0;
    std::vector<std::vector<double>> g;
    /// M[n][prefix] for n = 0..N.
    std::vector<std::vector<double>> M;
};

/// Shift applied to a surface that dips below its floor: a = max(1, |min f|) * 1e-3.
/// Negative inputs are rejected.
inline double positivity_shift(const SupermartingaleSurface& surface) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& level : surface.values)
        for (double v : level) lo = std::min(lo, v);
    if (lo < 0.0) throw ValidationError("supermartingale surface must be nonnegative");
    if (surface.floor > 0.0 && lo >= surface.floor) return 0.0;
    return std::max(1.0, std::abs(lo)) * 1e-3;
}

inline SupermartingaleSurface shifted(SupermartingaleSurface s, double shift) {
    for (auto& level : s.values)
        for (double& v : level) v += shift;
    return s;
}

inline Decomposition optional_decompose(const EvolutionModel& model, const SupermartingaleSurface& input) {
    check_surface_shape(model, input);
    Decomposition dec;
    dec.shift = positivity_shift(input);
    const SupermartingaleSurface f = shifted(input, dec.shift);

    RatioReport rep = check_ratio_bound(model, f, 1e-10);
    if (!rep.passed) throw DecompositionError(std::move(rep));

    const std::size_t N = model.horizon();
    dec.gamma.resize(N);
    dec.xi0.resize(N);
    dec.g.resize(N);
    dec.M.resize(N + 1);
    for (std::size_t n = 0; n <= N; ++n) dec.M[n].resize(f.values[n].size());
    for (std::size_t n = 1; n <= N; ++n) {
        dec.gamma[n - 1].resize(f.values[n - 1].size());
        dec.xi0[n - 1].resize(f.values[n].size());
        dec.g[n - 1].resize(f.values[n].size());
    }
    dec.M[0][0] = f.at(0, 0);

    detail::for_each_inner_node(model, [&](std::size_t n, std::size_t prefix, const PathWalker& w, const PathIndex&) {
        const auto inc = detail::node_increments(model, w);
        const double gamma = detail::node_gamma(f, n, prefix, inc);
        const double parent = f.at(n - 1, prefix);
        dec.gamma[n - 1][prefix] = gamma;
        for (std::size_t j = 0; j < inc.size(); ++j) {
            const std::size_t child = prefix * inc.size() + j;
            const double xi = 1.0 + gamma * inc[j].delta;
            dec.xi0[n - 1][child] = xi;
            dec.g[n - 1][child] = parent * xi - f.at(n, child);
            dec.M[n][child] = dec.M[n - 1][prefix] + parent * (xi - 1.0);
        }
    });
    return dec;
}

struct DecompositionReport {
    double max_consumption_negativity = 0.0; // max(-g, 0), relative to max(1, f_{n-1})
    double max_reconstruction_residual = 0.0;
    double max_martingale_residual = 0.0;
    std::size_t densities_checked = 0;
    std::vector<std::string> failures;

    bool passed() const { return failures.empty(); }
};

/// Checks g >= 0, f_n = M_n - Σ g_i, and E^Q[M_n | history] = M_{n-1} for each
/// supplied density. Only the supplied densities are checked; the family is
/// infinite.
inline DecompositionReport verify_decomposition(const EvolutionModel& model, const SupermartingaleSurface& input,
                                                const Decomposition& dec,
                                                std::span<const MeasureDensity> densities, double tol = 1e-10) {
    check_surface_shape(model, input);
    const SupermartingaleSurface f = shifted(input, dec.shift);
    DecompositionReport rep;
    rep.densities_checked = densities.size();
    auto where = [](std::size_t n, const PathIndex& h) {
        std::string s = "step " + std::to_string(n) + " history [";
        for (std::size_t k = 0; k < h.size(); ++k) s += (k ? "," : "") + std::to_string(h[k]);
        return s + "]";
    };

    if (std::abs(dec.M[0][0] - f.at(0, 0)) > tol * std::max(1.0, std::abs(f.at(0, 0))))
        rep.failures.push_back("martingale residual: M_0 != f_0");

    // Cumulative consumption per node.
    std::vector<std::vector<double>> G(model.horizon() + 1);
    G[0] = {0.0};
    detail::for_each_inner_node(model, [&](std::size_t n, std::size_t prefix, const PathWalker&, const PathIndex& h) {
        const std::size_t k = model.steps[n - 1].shocks.size();
        if (G[n].empty()) G[n].resize(f.values[n].size());
        const double parent = f.at(n - 1, prefix);
        const double scale = std::max(1.0, std::abs(parent));
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t child = prefix * k + j;
            const double g = dec.g[n - 1][child];
            G[n][child] = G[n - 1][prefix] + g;
            const double neg = std::max(-g, 0.0) / scale;
            rep.max_consumption_negativity = std::max(rep.max_consumption_negativity, neg);
            if (neg > tol) rep.failures.push_back("consumption negativity at " + where(n, h) + " atom " + std::to_string(j));
            const double resid = std::abs(f.at(n, child) - (dec.M[n][child] - G[n][child])) /
                                 std::max(1.0, std::abs(f.at(n, child)));
            rep.max_reconstruction_residual = std::max(rep.max_reconstruction_residual, resid);
            if (resid > tol) rep.failures.push_back("reconstruction residual at " + where(n, h) + " atom " + std::to_string(j));
        }
        for (std::size_t q = 0; q < densities.size(); ++q) {
            double cond = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                cond += model.steps[n - 1].shocks[j].prob * densities[q].psi(n, prefix, j) * dec.M[n][prefix * k + j];
            const double m_parent = dec.M[n - 1][prefix];
            const double resid = std::abs(cond - m_parent) / std::max(1.0, std::abs(m_parent));
            rep.max_martingale_residual = std::max(rep.max_martingale_residual, resid);
            if (resid > tol)
                rep.failures.push_back("martingale residual at " + where(n, h) + " under density " + std::to_string(q));
        }
    });
    return rep;
}

} // namespace mmf
