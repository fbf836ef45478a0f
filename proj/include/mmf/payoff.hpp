#pragma once

#include "mmf/errors.hpp"
#include "mmf/measures.hpp"
#include "mmf/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace mmf {

enum class PayoffKind { call, put, asian_call, asian_put, piecewise_linear, path_table };

inline const char* to_string(PayoffKind k) {
    switch (k) {
    case PayoffKind::call: return "call";
    case PayoffKind::put: return "put";
    case PayoffKind::asian_call: return "asian_call";
    case PayoffKind::asian_put: return "asian_put";
    case PayoffKind::piecewise_linear: return "piecewise_linear";
    case PayoffKind::path_table: return "path_table";
    }
    return "?";
}

struct Knot {
    double x = 0.0;
    double y = 0.0;
};

/// Piecewise-linear function on [0, inf): interpolates the knots (first knot
/// at x = 0) and continues past the last knot with `tail_slope`.
struct PiecewiseLinear {
    std::vector<Knot> knots;
    double tail_slope = 0.0;

    double operator()(double x) const {
        const auto& k = knots;
        if (x >= k.back().x) return k.back().y + tail_slope * (x - k.back().x);
        if (x <= k.front().x) return k.front().y;
        auto it = std::upper_bound(k.begin(), k.end(), x, [](double v, const Knot& kn) { return v < kn.x; });
        const Knot& hi = *it;
        const Knot& lo = *(it - 1);
        return lo.y + (hi.y - lo.y) * (x - lo.x) / (hi.x - lo.x);
    }

    std::vector<double> slopes() const {
        std::vector<double> s;
        for (std::size_t i = 1; i < knots.size(); ++i)
            s.push_back((knots[i].y - knots[i - 1].y) / (knots[i].x - knots[i - 1].x));
        s.push_back(tail_slope);
        return s;
    }

    bool convex() const {
        const auto s = slopes();
        return std::is_sorted(s.begin(), s.end());
    }
};

/// Contingent claim on a price path.
class Payoff {
public:
    static Payoff call(double strike) { return vanilla(PayoffKind::call, strike); }
    static Payoff put(double strike) { return vanilla(PayoffKind::put, strike); }
    static Payoff asian_call(double strike) { return vanilla(PayoffKind::asian_call, strike); }
    static Payoff asian_put(double strike) { return vanilla(PayoffKind::asian_put, strike); }

    /// Knots must start at x = 0, increase strictly in x, and carry values >= 0.
    /// Beyond the last knot the last segment's slope continues (0 for a single knot)
    /// and must be >= 0 so the claim stays nonnegative.
    static Payoff piecewise(std::vector<Knot> knots) {
        if (knots.empty()) throw ValidationError("piecewise payoff needs at least one knot");
        if (knots.front().x != 0.0) throw ValidationError("first knot must sit at x = 0");
        for (std::size_t i = 0; i < knots.size(); ++i) {
            if (!(knots[i].y >= 0.0) || !std::isfinite(knots[i].y))
                throw ValidationError("knot values must be finite and >= 0");
            if (i > 0 && !(knots[i].x > knots[i - 1].x)) throw ValidationError("knots must increase strictly in x");
        }
        Payoff p;
        p.kind_ = PayoffKind::piecewise_linear;
        p.curve_.knots = std::move(knots);
        const auto& k = p.curve_.knots;
        if (k.size() > 1) p.curve_.tail_slope = (k.back().y - k[k.size() - 2].y) / (k.back().x - k[k.size() - 2].x);
        if (p.curve_.tail_slope < 0.0) throw ValidationError("last segment slope must be >= 0");
        return p;
    }

    static Payoff constant(double c) { return piecewise({{0.0, c}}); }

    /// Value per full path of atom indices; paths missing from the table are an error.
    static Payoff path_table(std::map<PathIndex, double> table) {
        Payoff p;
        p.kind_ = PayoffKind::path_table;
        p.table_ = std::move(table);
        return p;
    }

    PayoffKind kind() const { return kind_; }
    double strike() const { return strike_; }
    std::string name() const { return to_string(kind_); }

    bool terminal_only() const {
        return kind_ == PayoffKind::call || kind_ == PayoffKind::put || kind_ == PayoffKind::piecewise_linear;
    }

    bool asian() const { return kind_ == PayoffKind::asian_call || kind_ == PayoffKind::asian_put; }

    /// Terminal payoffs as a piecewise-linear curve of S_N.
    const PiecewiseLinear& curve() const {
        if (!terminal_only()) throw ValidationError(name() + " payoff is not a function of S_N alone");
        return curve_;
    }

    /// Convex as a function of the path (S_0, ..., S_N).
    bool convex() const {
        if (kind_ == PayoffKind::path_table) return false;
        if (kind_ == PayoffKind::piecewise_linear) return curve_.convex();
        return true;
    }

    /// Value on the constant path S_0 = ... = S_N = s0 (the Jensen endpoint).
    double at_constant_path(double s0) const {
        if (terminal_only()) return curve_(s0);
        if (kind_ == PayoffKind::asian_call) return std::max(s0 - strike_, 0.0);
        if (kind_ == PayoffKind::asian_put) return std::max(strike_ - s0, 0.0);
        throw ValidationError("path-table payoff has no constant-path value");
    }

    double operator()(const PathView& path) const {
        switch (kind_) {
        case PayoffKind::call:
        case PayoffKind::put:
        case PayoffKind::piecewise_linear:
            return curve_(path.prices.back());
        case PayoffKind::asian_call:
        case PayoffKind::asian_put: {
            const double mean = std::accumulate(path.prices.begin(), path.prices.end(), 0.0) /
                                static_cast<double>(path.prices.size());
            return kind_ == PayoffKind::asian_call ? std::max(mean - strike_, 0.0) : std::max(strike_ - mean, 0.0);
        }
        case PayoffKind::path_table: {
            PathIndex key(path.atoms.begin(), path.atoms.end());
            if (std::find(key.begin(), key.end(), kFreeAtom) != key.end())
                throw ValidationError("path-table payoff needs model atoms, not free shocks");
            auto it = table_.find(key);
            if (it == table_.end()) throw ValidationError("path-table payoff has no entry for a visited path");
            return it->second;
        }
        }
        return 0.0;
    }

    PathFunctional functional() const {
        return [self = *this](const PathView& v) { return self(v); };
    }

private:
    static Payoff vanilla(PayoffKind kind, double strike) {
        if (!(strike > 0.0) || !std::isfinite(strike)) throw ValidationError("strike must be positive");
        Payoff p;
        p.kind_ = kind;
        p.strike_ = strike;
        if (kind == PayoffKind::call) p.curve_ = {{{0.0, 0.0}, {strike, 0.0}}, 1.0};
        if (kind == PayoffKind::put) p.curve_ = {{{0.0, strike}, {strike, 0.0}}, 0.0};
        return p;
    }

    PayoffKind kind_ = PayoffKind::call;
    double strike_ = 0.0;
    PiecewiseLinear curve_;
    std::map<PathIndex, double> table_;
};

inline PathFunctional terminal_price() {
    return [](const PathView& v) { return v.prices.back(); };
}

inline PathFunctional constant_payoff(double c) {
    return [c](const PathView&) { return c; };
}

} // namespace mmf
