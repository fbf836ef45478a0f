#pragma once

// File formats: model JSON, surface JSON and the `t,price` CSV sample.
//
// Model: {"s0": x, "pricing_only": bool?, "steps": [{"a": x,
//          "vol": {"kind": "constant", "sigma": x}
//               | {"kind": "arch1", "omega0", "alpha1", "floor"}
//               | {"kind": "garch11", "omega0", "alpha1", "beta1", "floor"},
//          "shocks": [{"eps": x, "prob": p}, ...]}, ...]}
// Unknown fields are rejected. "pricing_only" marks estimated models that
// carry exposures only; their shock lists are empty.

#include "mmf/decomposition.hpp"
#include "mmf/errors.hpp"
#include "mmf/estimation.hpp"
#include "mmf/model.hpp"
#include "mmf/report_json.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace mmf {

namespace detail {

inline void only_fields(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError(where + ": unknown field \"" + it.key() + "\"");
    }
}

inline double number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ValidationError(where + ": field \"" + key + "\" must be a number");
    return v.get<double>();
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

} // namespace detail

inline VolatilitySpec vol_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw ValidationError(where + ": vol needs a string \"kind\"");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        detail::only_fields(j, {"kind", "sigma"}, where);
        return VolatilitySpec::constant(detail::number(j, "sigma", where));
    }
    if (kind == "arch1") {
        detail::only_fields(j, {"kind", "omega0", "alpha1", "floor"}, where);
        return VolatilitySpec::arch1(detail::number(j, "omega0", where), detail::number(j, "alpha1", where),
                                     detail::number(j, "floor", where));
    }
    if (kind == "garch11") {
        detail::only_fields(j, {"kind", "omega0", "alpha1", "beta1", "floor"}, where);
        return VolatilitySpec::garch11(detail::number(j, "omega0", where), detail::number(j, "alpha1", where),
                                       detail::number(j, "beta1", where), detail::number(j, "floor", where));
    }
    throw ValidationError(where + ": unknown vol kind \"" + kind + "\"");
}

inline json vol_to_json(const VolatilitySpec& v) {
    switch (v.kind) {
    case VolKind::constant: return {{"kind", "constant"}, {"sigma", v.sigma}};
    case VolKind::arch1: return {{"kind", "arch1"}, {"omega0", v.omega0}, {"alpha1", v.alpha1}, {"floor", v.floor}};
    case VolKind::garch11:
        return {{"kind", "garch11"}, {"omega0", v.omega0}, {"alpha1", v.alpha1}, {"beta1", v.beta1}, {"floor", v.floor}};
    }
    return {};
}

/// Parse, renormalize probabilities within 1e-9 of 1, then validate.
inline EvolutionModel model_from_json(const json& j, const std::string& where = "model") {
    detail::only_fields(j, {"s0", "steps", "pricing_only"}, where);
    EvolutionModel m;
    m.s0 = detail::number(j, "s0", where);
    if (j.contains("pricing_only")) {
        if (!j.at("pricing_only").is_boolean()) throw ValidationError(where + ": \"pricing_only\" must be a boolean");
        m.pricing_only = j.at("pricing_only").get<bool>();
    }
    if (!j.contains("steps") || !j.at("steps").is_array()) throw ValidationError(where + ": \"steps\" must be an array");
    std::size_t n = 0;
    for (const auto& s : j.at("steps")) {
        const std::string at = where + " step " + std::to_string(++n);
        detail::only_fields(s, {"a", "vol", "shocks"}, at);
        StepSpec st;
        st.a = detail::number(s, "a", at);
        if (!s.contains("vol")) throw ValidationError(at + ": missing field \"vol\"");
        st.vol = vol_from_json(s.at("vol"), at);
        if (!s.contains("shocks") || !s.at("shocks").is_array())
            throw ValidationError(at + ": \"shocks\" must be an array");
        for (const auto& a : s.at("shocks")) {
            detail::only_fields(a, {"eps", "prob"}, at + " shock");
            st.shocks.push_back({detail::number(a, "eps", at), detail::number(a, "prob", at)});
        }
        m.steps.push_back(std::move(st));
    }
    renormalize_probabilities(m);
    auto problems = validate_model(m);
    if (!problems.empty()) {
        std::string msg = where + ": invalid model:";
        for (const auto& p : problems) msg += " " + p + ";";
        throw ValidationError(msg);
    }
    return m;
}

inline json model_to_json(const EvolutionModel& m) {
    json steps = json::array();
    for (const auto& st : m.steps) {
        json shocks = json::array();
        for (const auto& a : st.shocks) shocks.push_back({{"eps", a.eps}, {"prob", a.prob}});
        steps.push_back({{"a", st.a}, {"vol", vol_to_json(st.vol)}, {"shocks", shocks}});
    }
    json j = {{"s0", m.s0}, {"steps", steps}};
    if (m.pricing_only) j["pricing_only"] = true;
    return j;
}

inline EvolutionModel load_model(const std::string& path) { return model_from_json(detail::read_json_file(path), path); }

/// Estimated exposures as a pricing-only model with a unit constant-vol placeholder.
inline EvolutionModel estimated_model(const EstimatedParams& est) {
    EvolutionModel m;
    m.s0 = est.s0;
    m.pricing_only = true;
    for (double a : est.a) m.steps.push_back({a, {}, VolatilitySpec::constant(1.0)});
    return m;
}

/// {"floor": a, "nodes": [{"history": [...], "value": f}]}; every prefix of
/// every length 0..N must appear exactly once.
inline SupermartingaleSurface surface_from_json(const EvolutionModel& model, const json& j,
                                                const std::string& where = "surface") {
    detail::only_fields(j, {"floor", "nodes"}, where);
    SupermartingaleSurface s;
    s.floor = detail::number(j, "floor", where);
    const std::size_t N = model.horizon();
    s.values.resize(N + 1);
    std::vector<std::vector<bool>> seen(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
        s.values[n].assign(prefix_count(model, n), 0.0);
        seen[n].assign(s.values[n].size(), false);
    }
    if (!j.contains("nodes") || !j.at("nodes").is_array()) throw ValidationError(where + ": \"nodes\" must be an array");
    for (const auto& node : j.at("nodes")) {
        detail::only_fields(node, {"history", "value"}, where + " node");
        if (!node.contains("history") || !node.at("history").is_array())
            throw ValidationError(where + ": node \"history\" must be an array");
        PathIndex h;
        for (const auto& x : node.at("history")) {
            if (!x.is_number_unsigned()) throw ValidationError(where + ": history entries must be atom indices");
            h.push_back(x.get<std::size_t>());
        }
        if (h.size() > N) throw ValidationError(where + ": history longer than the horizon");
        for (std::size_t k = 0; k < h.size(); ++k)
            if (h[k] >= model.steps[k].shocks.size())
                throw ValidationError(where + ": atom index out of range at step " + std::to_string(k + 1));
        const std::size_t lin = prefix_linear(model, h);
        if (seen[h.size()][lin]) throw ValidationError(where + ": duplicate history");
        seen[h.size()][lin] = true;
        s.values[h.size()][lin] = detail::number(node, "value", where);
    }
    for (std::size_t n = 0; n <= N; ++n)
        for (std::size_t p = 0; p < seen[n].size(); ++p)
            if (!seen[n][p]) {
                const auto h = prefix_from_linear(model, n, p);
                std::string txt;
                for (std::size_t k = 0; k < h.size(); ++k) txt += (k ? "," : "") + std::to_string(h[k]);
                throw ValidationError(where + ": missing node for history [" + txt + "]");
            }
    return s;
}

inline json surface_to_json(const EvolutionModel& model, const SupermartingaleSurface& s) {
    json nodes = json::array();
    for (std::size_t n = 0; n < s.values.size(); ++n)
        for (std::size_t p = 0; p < s.values[n].size(); ++p)
            nodes.push_back({{"history", prefix_from_linear(model, n, p)}, {"value", s.values[n][p]}});
    return {{"floor", s.floor}, {"nodes", nodes}};
}

inline SupermartingaleSurface load_surface(const EvolutionModel& model, const std::string& path) {
    return surface_from_json(model, detail::read_json_file(path), path);
}

/// CSV with header `t,price` and rows t = 0..N in order.
inline PriceSample parse_price_csv(std::istream& in, const std::string& where = "prices") {
    std::string line;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    if (!std::getline(in, line) || trim(line) != "t,price") throw ValidationError(where + ": header must be t,price");
    std::vector<double> prices;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError(where + ": row " + std::to_string(row) + " needs t,price");
        const std::string ts = trim(line.substr(0, comma));
        const std::string ps = trim(line.substr(comma + 1));
        std::size_t used = 0;
        long long t = -1;
        double p = 0.0;
        try {
            t = std::stoll(ts, &used);
            if (used != ts.size()) throw std::invalid_argument("t");
            p = std::stod(ps, &used);
            if (used != ps.size()) throw std::invalid_argument("price");
        } catch (const std::exception&) {
            throw ValidationError(where + ": cannot parse row " + std::to_string(row));
        }
        if (t != static_cast<long long>(row))
            throw ValidationError(where + ": rows must run t = 0..N in order (row " + std::to_string(row) + ")");
        prices.push_back(p);
        ++row;
    }
    if (prices.size() < 2) throw ValidationError(where + ": need rows for t = 0 and at least t = 1");
    PriceSample s{prices.front(), std::vector<double>(prices.begin() + 1, prices.end())};
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
    return s;
}

inline PriceSample load_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open");
    return parse_price_csv(in, path);
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(path + ": cannot write");
    out << text;
}

} // namespace mmf
