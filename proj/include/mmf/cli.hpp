#pragma once

// Command-line front end. run_cli() is callable in-process so the tests can
// drive it with captured streams.
//
// Exit codes: 0 success, 1 validation failure (bad flags, bad files, failed
// checks), 2 budget or cap exceeded.

#include "mmf/decomposition.hpp"
#include "mmf/estimation.hpp"
#include "mmf/measures.hpp"
#include "mmf/model.hpp"
#include "mmf/model_io.hpp"
#include "mmf/oracle.hpp"
#include "mmf/payoff.hpp"
#include "mmf/pricing.hpp"
#include "mmf/report_json.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mmf::cli {

inline Payoff make_payoff(const std::string& kind, double strike) {
    if (kind == "call") return Payoff::call(strike);
    if (kind == "put") return Payoff::put(strike);
    if (kind == "asian_call") return Payoff::asian_call(strike);
    if (kind == "asian_put") return Payoff::asian_put(strike);
    throw ValidationError("--payoff: unknown payoff \"" + kind + "\"");
}

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline json selection_json(const AtomPairSelection& sel) {
    json out = json::array();
    for (const auto& p : sel.pairs) out.push_back({{"down", p.down}, {"up", p.up}});
    return out;
}

inline json eps_json(const std::vector<EpsPair>& eps) {
    json out = json::array();
    for (const auto& e : eps) out.push_back({{"down", e.down}, {"up", e.up}});
    return out;
}

inline json interval_json(const PriceInterval& iv) {
    return {{"lower", iv.lower},
            {"upper", iv.upper},
            {"attained_lower", iv.attained_lower},
            {"attained_upper", iv.attained_upper},
            {"provenance_lower", iv.provenance_lower},
            {"provenance_upper", iv.provenance_upper}};
}

inline json martingale_json(const MartingaleReport& r) {
    auto loc = [](const NodeLocation& l) { return json{{"step", l.step}, {"history", l.history}}; };
    return {{"max_normalization_residual", r.max_normalization_residual},
            {"worst_normalization", loc(r.worst_normalization)},
            {"max_drift_residual", r.max_drift_residual},
            {"worst_drift", loc(r.worst_drift)},
            {"min_psi", r.min_psi},
            {"min_psi_at", loc(r.min_psi_at)},
            {"normalization_ok", r.normalization_ok()},
            {"drift_ok", r.drift_ok()},
            {"equivalent", r.equivalent()}};
}

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

inline void emit(const std::string& path, const json& report) {
    if (!path.empty()) write_text(path, dump_report(report));
}

// ---------------------------------------------------------------------------
// Commands

struct PriceArgs {
    std::string model, payoff, method = "closed", out;
    double strike = 0.0;
    std::vector<double> eps_range{-12.0, 12.0};
    std::size_t grid_points = 49;
};

inline int cmd_price(const PriceArgs& args, Streams io) {
    const EvolutionModel model = load_model(args.model);
    const Payoff payoff = make_payoff(args.payoff, args.strike);
    const auto a = model.exposures();
    json report = {{"payoff", args.payoff}, {"strike", args.strike}, {"method", args.method}};
    double value = 0.0;
    if (args.method == "closed") {
        value = closed_form(payoff, model.s0, a);
        report["argmax_selection"] = nullptr;
        report["provenance"] = "closed_form";
    } else if (args.method == "exhaustive" || args.method == "grid") {
        SearchConfig cfg;
        cfg.mode = args.method == "grid" ? SearchMode::grid : SearchMode::discrete_exhaustive;
        if (args.eps_range.size() != 2) throw ValidationError("--eps-range: expected LO,HI");
        cfg.eps_lo = args.eps_range[0];
        cfg.eps_hi = args.eps_range[1];
        cfg.grid_points = args.grid_points;
        const SearchResult r = superhedge_sup(model, payoff, cfg);
        value = r.value;
        report["argmax_selection"] = r.selection ? selection_json(*r.selection) : json(nullptr);
        report["argmax_eps"] = eps_json(r.eps);
        report["provenance"] = r.provenance;
        report["evaluations"] = r.evaluations;
        if (r.gap_bound) report["gap_bound"] = *r.gap_bound;
    } else {
        throw ValidationError("--method: expected closed, exhaustive or grid");
    }
    report["value"] = value;
    const PriceInterval iv = non_arbitrage_interval(model.s0, a, payoff);
    report["interval"] = interval_json(iv);
    io.out << args.payoff << " K=" << fmt(args.strike) << " method=" << args.method << ": value " << fmt(value)
           << "  interval [" << fmt(iv.lower) << ", " << fmt(iv.upper) << "]  (" << report["provenance"].get<std::string>()
           << ")\n";
    emit(args.out, report);
    return 0;
}

inline int cmd_interval(const PriceArgs& args, Streams io) {
    const EvolutionModel model = load_model(args.model);
    const Payoff payoff = make_payoff(args.payoff, args.strike);
    const PriceInterval iv = non_arbitrage_interval(model.s0, model.exposures(), payoff);
    json report = {{"payoff", args.payoff}, {"strike", args.strike}, {"interval", interval_json(iv)}};
    io.out << args.payoff << " K=" << fmt(args.strike) << ": [" << fmt(iv.lower) << ", " << fmt(iv.upper) << "]\n"
           << "  lower: " << iv.provenance_lower << "\n  upper: " << iv.provenance_upper << "\n";
    emit(args.out, report);
    return 0;
}

struct EstimateArgs {
    std::string prices, statistic = "constant_one", out, report;
    std::size_t tail_k = 0;
    double tau0 = 1.0;
};

inline int cmd_estimate(const EstimateArgs& args, Streams io) {
    const PriceSample sample = load_price_csv(args.prices);
    StatisticSpec spec;
    spec.tau0 = args.tau0;
    spec.tail_k = args.tail_k;
    if (args.statistic == "constant_one") spec.kind = StatisticKind::constant_one;
    else if (args.statistic == "capped_ratio") spec.kind = StatisticKind::capped_ratio;
    else if (args.statistic == "identity_tail") spec.kind = StatisticKind::identity_tail;
    else throw ValidationError("--statistic: expected constant_one, capped_ratio or identity_tail");
    const EstimatedParams est = estimate_a(sample, spec);

    io.out << "estimated a (" << args.statistic << ", tau0=" << fmt(args.tau0) << "):";
    for (double a : est.a) io.out << " " << fmt(a);
    io.out << "\nlowest terminal price " << fmt(est.lowest_terminal()) << "\n";

    emit(args.out, model_to_json(estimated_model(est)));
    json report = {{"statistic", args.statistic},
                   {"tau0", args.tau0},
                   {"s0", sample.s0},
                   {"a", est.a},
                   {"g", est.g},
                   {"order_statistics", est.order_stats},
                   {"lowest_terminal", est.lowest_terminal()},
                   {"survival_product", survival_product(est.a)}};
    if (spec.kind == StatisticKind::identity_tail) report["tail_k"] = args.tail_k;
    emit(args.report, report);
    return 0;
}

struct VerifyArgs {
    std::string model, out;
    std::uint64_t seed = 0;
    double tol = 1e-9;
};

inline int cmd_verify(const VerifyArgs& args, Streams io) {
    const EvolutionModel model = load_model(args.model);
    if (model.pricing_only) throw ValidationError(args.model + ": verify needs shock atoms (pricing-only model)");
    const AlphaDensity alphas = oracle::random_alpha(model, args.seed);
    const MartingaleReport mix = verify_martingale(model, mixture_density(model, alphas), args.tol);

    double spot_drift = 0.0;
    std::size_t spots = 0;
    for_each_selection(model, [&](const AtomPairSelection& sel) {
        spot_drift = std::max(spot_drift, spot_max_drift(model, sel));
        ++spots;
    });

    const double s0 = model.s0;
    const double rep_one = integral_representation_check(model, alphas, constant_payoff(1.0));
    const double rep_sn = integral_representation_check(model, alphas, terminal_price()) / s0;
    const double rep_call = integral_representation_check(model, alphas, Payoff::call(s0).functional()) / s0;
    const double rep_max = std::max({rep_one, rep_sn, rep_call});

    const bool ok = mix.passed() && mix.equivalent() && spot_drift <= args.tol && rep_max <= args.tol;
    json report = {{"alpha_seed", args.seed},
                   {"tol", args.tol},
                   {"mixture", martingale_json(mix)},
                   {"spot_measures_checked", spots},
                   {"spot_max_drift", spot_drift},
                   {"integral_representation", {{"one", rep_one}, {"terminal_price", rep_sn}, {"call_at_s0", rep_call}}},
                   {"max_residual", std::max({mix.max_normalization_residual, mix.max_drift_residual, spot_drift, rep_max})},
                   {"passed", ok}};
    io.out << "mixture (seed " << args.seed << "): normalization " << fmt(mix.max_normalization_residual) << ", drift "
           << fmt(mix.max_drift_residual) << ", min psi " << fmt(mix.min_psi) << (mix.equivalent() ? " (equivalent)" : " (NOT equivalent)")
           << "\nspot measures: " << spots << " checked, max drift " << fmt(spot_drift)
           << "\nintegral representation: max deviation " << fmt(rep_max) << "\n"
           << (ok ? "PASS" : "FAIL") << " at tol " << fmt(args.tol) << "\n";
    emit(args.out, report);
    return ok ? 0 : 1;
}

struct DecomposeArgs {
    std::string model, surface, out;
    std::uint64_t seed = 0;
    std::size_t mixtures = 10;
    std::size_t max_spots = 10'000;
};

inline int cmd_decompose(const DecomposeArgs& args, Streams io) {
    const EvolutionModel model = load_model(args.model);
    if (model.pricing_only) throw ValidationError(args.model + ": decompose needs shock atoms (pricing-only model)");
    const SupermartingaleSurface surface = load_surface(model, args.surface);
    Decomposition dec;
    try {
        dec = optional_decompose(model, surface);
    } catch (const DecompositionError& e) {
        io.err << "error: " << args.surface << ": " << e.what() << "\n";
        return 1;
    }

    std::vector<MeasureDensity> densities;
    const std::size_t spots = selection_count(model);
    if (spots <= args.max_spots)
        for_each_selection(model, [&](const AtomPairSelection& sel) { densities.push_back(spot_density(model, sel)); });
    for (std::size_t k = 0; k < args.mixtures; ++k)
        densities.push_back(mixture_density(model, oracle::random_alpha(model, args.seed + k)));
    const DecompositionReport check = verify_decomposition(model, surface, dec, densities);

    json nodes = json::array();
    for (std::size_t n = 0; n < model.horizon(); ++n) {
        const std::size_t k = model.steps[n].shocks.size();
        for (std::size_t p = 0; p < dec.gamma[n].size(); ++p) {
            json atoms = json::array();
            for (std::size_t j = 0; j < k; ++j)
                atoms.push_back({{"xi0", dec.xi0[n][p * k + j]}, {"g", dec.g[n][p * k + j]}});
            nodes.push_back({{"history", prefix_from_linear(model, n, p)},
                             {"gamma", dec.gamma[n][p]},
                             {"atoms", atoms},
                             {"M", dec.M[n][p]}});
        }
    }
    const std::string scope = "checked against " + std::string(spots <= args.max_spots ? "all " : "no ") +
                              std::to_string(spots) + " spot measures and " + std::to_string(args.mixtures) +
                              " sampled mixture densities; the full family is infinite";
    json report = {{"shift", dec.shift},
                   {"nodes", nodes},
                   {"verification",
                    {{"passed", check.passed()},
                     {"scope", scope},
                     {"densities_checked", check.densities_checked},
                     {"max_consumption_negativity", check.max_consumption_negativity},
                     {"max_reconstruction_residual", check.max_reconstruction_residual},
                     {"max_martingale_residual", check.max_martingale_residual},
                     {"failures", check.failures}}}};
    io.out << "decomposition: " << nodes.size() << " nodes, shift " << fmt(dec.shift) << "\n"
           << "verification " << (check.passed() ? "PASS" : "FAIL") << " (" << scope << ")\n";
    for (const auto& f : check.failures) io.out << "  " << f << "\n";
    emit(args.out, report);
    return check.passed() ? 0 : 1;
}

struct OracleArgs {
    std::string model, payoff = "call", out;
    double strike = 0.0;
    std::uint64_t seed = 0;
};

/// sup: brute selection scan vs discrete_exhaustive (must agree exactly).
inline int cmd_oracle_sup(const OracleArgs& args, Streams io) {
    const EvolutionModel model = load_model(args.model);
    const Payoff payoff = make_payoff(args.payoff, args.strike);
    const auto [brute, arg] = oracle::brute_sup_selections(model, payoff.functional());
    const SearchResult main = superhedge_sup(model, payoff);
    const bool same = brute == main.value && arg == *main.selection;
    io.out << "oracle sup " << fmt(brute) << ", discrete_exhaustive " << fmt(main.value) << (same ? " (identical)" : " (MISMATCH)") << "\n";
    emit(args.out, {{"oracle", brute}, {"primary", main.value}, {"argmax_selection", selection_json(arg)}, {"identical", same}});
    return same ? 0 : 1;
}

/// expectation: brute path sum vs measure_expectation under random_alpha(seed).
inline int cmd_oracle_expectation(const OracleArgs& args, Streams io) {
    const EvolutionModel model = load_model(args.model);
    const Payoff payoff = make_payoff(args.payoff, args.strike);
    const MeasureDensity density = mixture_density(model, oracle::random_alpha(model, args.seed));
    const double brute = oracle::brute_expectation(model, density, payoff.functional());
    const double main = measure_expectation(model, density, payoff.functional());
    const double rel = std::abs(brute - main) / std::max(1.0, std::abs(brute));
    const bool ok = rel <= 1e-12;
    io.out << "oracle expectation " << fmt(brute) << ", primary " << fmt(main) << ", relative gap " << fmt(rel) << "\n";
    emit(args.out, {{"oracle", brute}, {"primary", main}, {"relative_gap", rel}, {"passed", ok}});
    return ok ? 0 : 1;
}

/// alpha: print the random alpha density for a seed.
inline int cmd_oracle_alpha(const OracleArgs& args, Streams io) {
    const EvolutionModel model = load_model(args.model);
    const AlphaDensity alphas = oracle::random_alpha(model, args.seed);
    json steps = json::array();
    for (std::size_t n = 0; n < alphas.size(); ++n) {
        const auto& al = alphas[n];
        steps.push_back({{"step", n + 1}, {"down", al.down}, {"up", al.up}, {"weight", al.weight}});
        io.out << "step " << n + 1 << ": " << al.down.size() << "x" << al.up.size() << " weights, mass "
               << fmt(alpha_mass(model.steps[n], al)) << "\n";
    }
    emit(args.out, {{"seed", args.seed}, {"alphas", steps}});
    return 0;
}

// ---------------------------------------------------------------------------
// Dispatch

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Martingale-measure pricing, decomposition and estimation tools", "mmf"};
    app.require_subcommand(1);

    PriceArgs price;
    auto* p = app.add_subcommand("price", "super-hedge price of a vanilla claim");
    p->add_option("--model", price.model, "model JSON")->required();
    p->add_option("--payoff", price.payoff, "call|put|asian_call|asian_put")->required();
    p->add_option("--strike", price.strike, "strike K")->required();
    p->add_option("--method", price.method, "closed|exhaustive|grid")->capture_default_str();
    p->add_option("--eps-range", price.eps_range, "grid shock range LO,HI")->delimiter(',')->expected(2);
    p->add_option("--grid-points", price.grid_points, "grid points on the shock range")->capture_default_str();
    p->add_option("--out", price.out, "write the JSON report here");

    PriceArgs interval;
    auto* iv = app.add_subcommand("interval", "non-arbitrage price interval");
    iv->add_option("--model", interval.model, "model JSON")->required();
    iv->add_option("--payoff", interval.payoff, "call|put|asian_call|asian_put")->required();
    iv->add_option("--strike", interval.strike, "strike K")->required();
    iv->add_option("--out", interval.out, "write the JSON report here");

    EstimateArgs estimate;
    auto* es = app.add_subcommand("estimate", "estimate exposures from a price path");
    es->add_option("--prices", estimate.prices, "CSV with header t,price")->required();
    es->add_option("--statistic", estimate.statistic, "constant_one|capped_ratio|identity_tail")->capture_default_str();
    es->add_option("--tail-k", estimate.tail_k, "k for identity_tail");
    es->add_option("--tau0", estimate.tau0, "tau0 in (0,1]")->capture_default_str();
    es->add_option("--out", estimate.out, "write the estimated model JSON here");
    es->add_option("--report", estimate.report, "write the estimation report JSON here");

    VerifyArgs verify;
    auto* ve = app.add_subcommand("verify", "check the martingale family on a model");
    ve->add_option("--model", verify.model, "model JSON")->required();
    ve->add_option("--alphas", verify.seed, "seed of the random alpha density")->capture_default_str();
    ve->add_option("--tol", verify.tol, "tolerance")->capture_default_str();
    ve->add_option("--out", verify.out, "write the JSON report here");

    DecomposeArgs decompose;
    auto* de = app.add_subcommand("decompose", "optional decomposition of a supermartingale surface");
    de->add_option("--model", decompose.model, "model JSON")->required();
    de->add_option("--surface", decompose.surface, "surface JSON")->required();
    de->add_option("--seed", decompose.seed, "seed of the first sampled mixture density")->capture_default_str();
    de->add_option("--mixtures", decompose.mixtures, "sampled mixture densities to verify against")->capture_default_str();
    de->add_option("--out", decompose.out, "write the JSON report here");

    OracleArgs orc;
    auto* orc_app = app.add_subcommand("oracle", "brute-force cross-checks");
    orc_app->require_subcommand(1);
    auto add_oracle = [&](const char* name, const char* what, bool payoff) {
        auto* sub = orc_app->add_subcommand(name, what);
        sub->add_option("--model", orc.model, "model JSON")->required();
        if (payoff) {
            sub->add_option("--payoff", orc.payoff, "call|put|asian_call|asian_put")->capture_default_str();
            sub->add_option("--strike", orc.strike, "strike K")->required();
        }
        sub->add_option("--seed", orc.seed, "alpha seed")->capture_default_str();
        sub->add_option("--out", orc.out, "write the JSON report here");
        return sub;
    };
    auto* o_sup = add_oracle("sup", "brute selection scan vs discrete_exhaustive", true);
    auto* o_exp = add_oracle("expectation", "brute path sum vs measure_expectation", true);
    auto* o_alpha = add_oracle("alpha", "print random_alpha(seed)", false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    Streams io{out, err};
    try {
        if (*p) return cmd_price(price, io);
        if (*iv) return cmd_interval(interval, io);
        if (*es) return cmd_estimate(estimate, io);
        if (*ve) return cmd_verify(verify, io);
        if (*de) return cmd_decompose(decompose, io);
        if (*o_sup) return cmd_oracle_sup(orc, io);
        if (*o_exp) return cmd_oracle_expectation(orc, io);
        if (*o_alpha) return cmd_oracle_alpha(orc, io);
    } catch (const CapExceeded& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace mmf::cli
