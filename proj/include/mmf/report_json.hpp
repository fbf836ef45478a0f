#pragma once

// JSON output with every floating-point number written as %.17g, so reports
// round-trip exactly and are byte-identical for identical inputs.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <string>

namespace mmf {

using json = nlohmann::json;

namespace detail {

inline void dump17(const json& j, std::string& out, int indent, int depth) {
    auto newline = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            newline(depth + 1);
            out += json(it.key()).dump();
            out += indent < 0 ? ":" : ": ";
            dump17(it.value(), out, indent, depth + 1);
        }
        newline(depth);
        out += '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += '[';
        bool first = true;
        for (const auto& v : j) {
            if (!first) out += ',';
            first = false;
            newline(depth + 1);
            dump17(v, out, indent, depth + 1);
        }
        newline(depth);
        out += ']';
        return;
    }
    case json::value_t::number_float: {
        const double x = j.get<double>();
        if (!std::isfinite(x)) {
            out += "null";
            return;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out += buf;
        return;
    }
    default:
        out += j.dump();
    }
}

} // namespace detail

inline std::string dump_report(const json& j, int indent = 2) {
    std::string out;
    detail::dump17(j, out, indent, 0);
    out += '\n';
    return out;
}

} // namespace mmf
