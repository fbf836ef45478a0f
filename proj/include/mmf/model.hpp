#pragma once

// Finite-sample-space discrete-time evolutions
//
//   S_n = S_{n-1} * (1 + a_n * (exp(sigma_n * eps_n) - 1)),
//
// where eps_n takes finitely many values (ShockAtom) and sigma_n follows a
// constant, ARCH(1) or GARCH(1,1) law of the realized history.

#include "mmf/errors.hpp"
#include "mmf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace mmf {

struct ShockAtom {
    double eps = 0.0;
    double prob = 0.0;
};

enum class VolKind { constant, arch1, garch11 };

/// Volatility law. Recursive kinds use the previous step's realized sigma:
///   arch1:   sigma_n^2 = omega0 + alpha1 * (sigma_{n-1} eps_{n-1})^2
///   garch11: sigma_n^2 = omega0 + alpha1 * (sigma_{n-1} eps_{n-1})^2 + beta1 * sigma_{n-1}^2
/// At the first step the history terms vanish (sigma_1 = sqrt(omega0)).
/// The realized value is always max(floor, sqrt(...)).
struct VolatilitySpec {
    VolKind kind = VolKind::constant;
    double sigma = 1.0;
    double omega0 = 0.0;
    double alpha1 = 0.0;
    double beta1 = 0.0;
    double floor = 0.0;

    static VolatilitySpec constant(double sigma) { return {VolKind::constant, sigma}; }
    static VolatilitySpec arch1(double omega0, double alpha1, double floor) {
        return {VolKind::arch1, 0.0, omega0, alpha1, 0.0, floor};
    }
    static VolatilitySpec garch11(double omega0, double alpha1, double beta1, double floor) {
        return {VolKind::garch11, 0.0, omega0, alpha1, beta1, floor};
    }

    /// Lower bound on every realized sigma under this law.
    double lower_bound() const { return kind == VolKind::constant ? sigma : floor; }
};

inline const char* to_string(VolKind k) {
    switch (k) {
    case VolKind::constant: return "constant";
    case VolKind::arch1: return "arch1";
    case VolKind::garch11: return "garch11";
    }
    return "?";
}

struct StepSpec {
    double a = 1.0;
    std::vector<ShockAtom> shocks;
    VolatilitySpec vol;
};

struct EvolutionModel {
    double s0 = 1.0;
    std::vector<StepSpec> steps;
    /// Set for estimated models that carry exposures only (no shock space).
    bool pricing_only = false;

    std::size_t horizon() const { return steps.size(); }

    bool is_stable() const {
        return std::all_of(steps.begin(), steps.end(), [](const StepSpec& s) { return s.a < 1.0; });
    }

    std::vector<double> exposures() const {
        std::vector<double> out;
        out.reserve(steps.size());
        for (const auto& s : steps) out.push_back(s.a);
        return out;
    }
};

/// Per-step atom indices; a prefix (length < N) addresses a history node.
using PathIndex = std::vector<std::size_t>;

struct Path {
    std::vector<double> eps_seq;
    std::vector<double> sigma_seq;
    std::vector<double> price_seq;
    double base_prob = 1.0;
};

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> validate_model(const EvolutionModel& model) {
    std::vector<std::string> report;
    auto add = [&](const std::string& what, std::size_t step) {
        report.push_back(what + " at step " + std::to_string(step));
    };
    if (!(model.s0 > 0.0) || !std::isfinite(model.s0)) report.emplace_back("s0 must be positive");
    if (model.steps.empty()) report.emplace_back("horizon must be at least 1");

    for (std::size_t i = 0; i < model.steps.size(); ++i) {
        const auto& st = model.steps[i];
        const std::size_t n = i + 1;
        // Estimated (pricing-only) exposures may vanish.
        if (model.pricing_only) {
            if (!(st.a >= 0.0 && st.a <= 1.0)) add("a out of [0,1]", n);
        } else if (!(st.a > 0.0 && st.a <= 1.0)) {
            add("a out of (0,1]", n);
        }

        const auto& v = st.vol;
        switch (v.kind) {
        case VolKind::constant:
            if (!(v.sigma > 0.0) || !std::isfinite(v.sigma)) add("sigma must be positive", n);
            break;
        case VolKind::garch11:
            if (!(v.beta1 >= 0.0)) add("beta1 must be nonnegative", n);
            [[fallthrough]];
        case VolKind::arch1:
            if (!(v.omega0 > 0.0)) add("omega0 must be positive", n);
            if (!(v.alpha1 >= 0.0)) add("alpha1 must be nonnegative", n);
            if (!(v.floor > 0.0)) add("floor must be positive", n);
            break;
        }

        if (model.pricing_only) continue;

        if (st.shocks.empty()) {
            add("no shocks", n);
            continue;
        }
        double total = 0.0;
        bool has_neg = false, has_pos = false;
        for (std::size_t j = 0; j < st.shocks.size(); ++j) {
            const auto& atom = st.shocks[j];
            if (!(atom.prob > 0.0 && atom.prob < 1.0))
                add("probability out of (0,1) for atom " + std::to_string(j), n);
            if (!std::isfinite(atom.eps)) add("non-finite eps for atom " + std::to_string(j), n);
            total += atom.prob;
            has_neg = has_neg || atom.eps < 0.0;
            has_pos = has_pos || atom.eps > 0.0;
            for (std::size_t k = 0; k < j; ++k)
                if (st.shocks[k].eps == atom.eps) add("duplicate eps for atom " + std::to_string(j), n);
        }
        if (std::abs(total - 1.0) > 1e-12) {
            std::ostringstream os;
            os.precision(17);
            os << "probabilities sum to " << total;
            add(os.str(), n);
        }
        if (!has_neg) add("no negative shock", n);
        if (!has_pos) add("no positive shock", n);
    }
    return report;
}

inline void require_valid(const EvolutionModel& model) {
    auto report = validate_model(model);
    if (report.empty()) return;
    std::string msg = "invalid model:";
    for (const auto& r : report) msg += " " + r + ";";
    throw ValidationError(msg);
}

/// Rescale step probabilities summing to within 1e-9 of 1; larger errors are
/// left in place for validate_model to report.
inline void renormalize_probabilities(EvolutionModel& model) {
    for (auto& st : model.steps) {
        double total = 0.0;
        for (const auto& a : st.shocks) total += a.prob;
        if (total != 1.0 && std::abs(total - 1.0) <= 1e-9)
            for (auto& a : st.shocks) a.prob /= total;
    }
}

// ---------------------------------------------------------------------------
// Volatility and price recursion

/// sigma for a step given the previous step's realized sigma and shock.
inline double step_sigma(const VolatilitySpec& vol, bool first, double prev_sigma, double prev_eps) {
    if (vol.kind == VolKind::constant) return vol.sigma;
    double var = vol.omega0;
    if (!first) {
        const double shock = prev_sigma * prev_eps;
        var += vol.alpha1 * (shock * shock);
        if (vol.kind == VolKind::garch11) var += vol.beta1 * (prev_sigma * prev_sigma);
    }
    return std::max(vol.floor, std::sqrt(var));
}

/// Price multiplier of one step: 1 + a (e^{sigma eps} - 1).
inline double growth(double a, double sigma, double eps) {
    return 1.0 + a * (std::exp(sigma * eps) - 1.0);
}

/// Running state along one path; advance() applies one step.
struct PathWalker {
    const EvolutionModel* model;
    std::size_t step = 0; // number of steps already applied
    double price;
    double last_sigma = 0.0;
    double last_eps = 0.0;

    explicit PathWalker(const EvolutionModel& m) : model(&m), price(m.s0) {}

    /// sigma of the next step (step + 1) at the current node.
    double next_sigma() const {
        return step_sigma(model->steps.at(step).vol, step == 0, last_sigma, last_eps);
    }

    void advance(double eps) { advance(eps, next_sigma()); }

    void advance(double eps, double sigma) {
        price *= growth(model->steps[step].a, sigma, eps);
        last_sigma = sigma;
        last_eps = eps;
        ++step;
    }
};

/// sigma_n at a history of realized shocks (n is 1-based, history.size() == n - 1).
inline double sigma_at(const EvolutionModel& model, std::size_t n, std::span<const double> history) {
    if (n < 1 || n > model.horizon())
        throw std::out_of_range("step index " + std::to_string(n) + " out of range");
    if (history.size() != n - 1) throw ValidationError("history length must equal n - 1");
    PathWalker w(model);
    for (double e : history) w.advance(e);
    return w.next_sigma();
}

inline void check_index(const EvolutionModel& model, const PathIndex& idx) {
    if (idx.size() > model.horizon()) throw ValidationError("path index longer than horizon");
    for (std::size_t i = 0; i < idx.size(); ++i)
        if (idx[i] >= model.steps[i].shocks.size())
            throw ValidationError("atom index " + std::to_string(idx[i]) + " out of range at step " +
                                  std::to_string(i + 1));
}

/// Realized shock values along an atom-index prefix.
inline std::vector<double> eps_of(const EvolutionModel& model, const PathIndex& idx) {
    check_index(model, idx);
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = model.steps[i].shocks[idx[i]].eps;
    return out;
}

inline Path price_path(const EvolutionModel& model, const PathIndex& idx) {
    if (idx.size() != model.horizon()) throw ValidationError("path index length must equal horizon");
    check_index(model, idx);
    Path p;
    p.price_seq.push_back(model.s0);
    PathWalker w(model);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& atom = model.steps[i].shocks[idx[i]];
        const double sigma = w.next_sigma();
        w.advance(atom.eps, sigma);
        p.eps_seq.push_back(atom.eps);
        p.sigma_seq.push_back(sigma);
        p.price_seq.push_back(w.price);
        p.base_prob *= atom.prob;
    }
    return p;
}

struct DeltaSplit {
    double delta = 0.0;
    double minus = 0.0; // ΔS⁻ = max(-ΔS, 0)
    double plus = 0.0;  // ΔS⁺ = max(ΔS, 0)
    bool down = true;   // eps <= 0 belongs to the down set
};

inline DeltaSplit split_increment(double prev_price, double a, double sigma, double eps) {
    DeltaSplit d;
    d.delta = prev_price * a * (std::exp(sigma * eps) - 1.0);
    d.minus = std::max(-d.delta, 0.0);
    d.plus = std::max(d.delta, 0.0);
    d.down = eps <= 0.0;
    return d;
}

inline DeltaSplit delta_split(const EvolutionModel& model, std::span<const double> history, const ShockAtom& atom) {
    const std::size_t n = history.size() + 1;
    if (n > model.horizon()) throw ValidationError("history too long for delta_split");
    PathWalker w(model);
    for (double e : history) w.advance(e);
    return split_increment(w.price, model.steps[n - 1].a, w.next_sigma(), atom.eps);
}

// ---------------------------------------------------------------------------
// Enumeration

/// Product of atom counts over steps [0, steps); throws CapExceeded beyond cap.
inline std::size_t prefix_count(const EvolutionModel& model, std::size_t steps, std::size_t cap = kDefaultPathCap) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < steps; ++i) {
        const std::size_t k = model.steps[i].shocks.size();
        if (k != 0 && count > cap / k)
            throw CapExceeded("path count exceeds cap " + std::to_string(cap));
        count *= k;
    }
    if (count > cap) throw CapExceeded("path count exceeds cap " + std::to_string(cap));
    return count;
}

inline std::size_t path_count(const EvolutionModel& model, std::size_t cap = kDefaultPathCap) {
    return prefix_count(model, model.horizon(), cap);
}

/// Linear index of a prefix: first step most significant.
inline std::size_t prefix_linear(const EvolutionModel& model, std::span<const std::size_t> idx) {
    std::size_t lin = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) lin = lin * model.steps[i].shocks.size() + idx[i];
    return lin;
}

inline PathIndex prefix_from_linear(const EvolutionModel& model, std::size_t length, std::size_t lin) {
    PathIndex idx(length);
    for (std::size_t i = length; i-- > 0;) {
        const std::size_t k = model.steps[i].shocks.size();
        idx[i] = lin % k;
        lin /= k;
    }
    return idx;
}

/// Visit every full path once, in lexicographic atom order.
inline void for_each_path(const EvolutionModel& model,
                          const std::function<void(const PathIndex&, const Path&)>& visit,
                          std::size_t cap = kDefaultPathCap) {
    path_count(model, cap);
    const std::size_t N = model.horizon();
    PathIndex idx(N, 0);
    Path path;
    path.eps_seq.resize(N);
    path.sigma_seq.resize(N);
    path.price_seq.resize(N + 1);
    path.price_seq[0] = model.s0;
    std::vector<double> prob(N + 1, 1.0);
    std::vector<PathWalker> walkers(N + 1, PathWalker(model));

    std::function<void(std::size_t)> rec = [&](std::size_t n) {
        if (n == N) {
            path.base_prob = prob[N];
            visit(idx, path);
            return;
        }
        const auto& st = model.steps[n];
        const double sigma = walkers[n].next_sigma();
        for (std::size_t j = 0; j < st.shocks.size(); ++j) {
            idx[n] = j;
            walkers[n + 1] = walkers[n];
            walkers[n + 1].advance(st.shocks[j].eps, sigma);
            path.eps_seq[n] = st.shocks[j].eps;
            path.sigma_seq[n] = sigma;
            path.price_seq[n + 1] = walkers[n + 1].price;
            prob[n + 1] = prob[n] * st.shocks[j].prob;
            rec(n + 1);
        }
    };
    rec(0);
}

inline std::vector<std::pair<PathIndex, Path>> enumerate_paths(const EvolutionModel& model,
                                                               std::size_t cap = kDefaultPathCap) {
    std::vector<std::pair<PathIndex, Path>> out;
    for_each_path(model, [&](const PathIndex& i, const Path& p) { out.emplace_back(i, p); }, cap);
    return out;
}

/// Draw `count` independent paths; atoms chosen by inverse CDF on CounterRng(seed).
inline std::vector<Path> simulate(const EvolutionModel& model, std::size_t count, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<Path> out;
    out.reserve(count);
    PathIndex idx(model.horizon());
    for (std::size_t c = 0; c < count; ++c) {
        for (std::size_t n = 0; n < model.horizon(); ++n) {
            const auto& shocks = model.steps[n].shocks;
            const double u = rng.uniform();
            double cum = 0.0;
            std::size_t pick = shocks.size() - 1;
            for (std::size_t j = 0; j < shocks.size(); ++j) {
                cum += shocks[j].prob;
                if (u < cum) {
                    pick = j;
                    break;
                }
            }
            idx[n] = pick;
        }
        out.push_back(price_path(model, idx));
    }
    return out;
}

} // namespace mmf
