#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "histkit/runner.hpp"
#include "histkit/rayset.hpp"
#include "histkit/scenarios.hpp"

namespace {

using histkit::Json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw histkit::ContractViolation("cannot read file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

histkit::Scenario load_scenario(const std::string& path, const histkit::Tolerances& tol) {
    return histkit::parse_scenario(read_file(path), tol);
}

struct Emitter {
    std::string format = "text";
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void emit(Json report) const {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report["elapsed_seconds"] = secs;
        if (format == "json")
            std::cout << report.dump(2) << "\n";
        else
            std::cout << histkit::render_report_text(report);
    }
};

// Wraps a single CLI-built query as a one-entry report.
Json single_query_report(const histkit::Scenario& s, const Json& query, const histkit::Tolerances& tol) {
    Json rep = histkit::report_header(tol);
    rep["scenario"] = s.name;
    Json entry;
    entry["query"] = query;
    entry["result"] = histkit::run_query(s, query, tol, /*capture_family_errors=*/false);
    rep["results"] = Json::array({std::move(entry)});
    return rep;
}

const Json& only_result(const Json& rep) { return rep["results"][0]["result"]; }

int run_demo_ks(const Emitter& out, const histkit::Tolerances& tol) {
    Json rep = histkit::report_header(tol);
    rep["scenario"] = "ks";
    Json results = Json::array();
    std::size_t failed = 0;
    auto add = [&](const std::string& rays, histkit::SearchMode mode) {
        histkit::SearchOptions opts;
        opts.mode = mode;
        Json entry;
        entry["query"] = Json{{"op", "color"},
                              {"rays", rays},
                              {"mode", mode == histkit::SearchMode::exhaustive ? "exhaustive"
                                                                               : "backtracking"}};
        entry["result"] = histkit::color_result(histkit::ks_dataset(rays), opts, tol);
        if (entry["result"].value("sat", true)) ++failed;  // every dataset here must be uncolorable
        results.push_back(std::move(entry));
    };
    add("cabello18", histkit::SearchMode::exhaustive);
    add("cabello18", histkit::SearchMode::backtracking);
    add("peres33", histkit::SearchMode::backtracking);
    rep["results"] = std::move(results);
    rep["expected"] = Json{{"total", 3}, {"failed", failed}, {"failures", Json::array()}};
    out.emit(std::move(rep));
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decoherent-histories toolkit: families, probabilities, consistency checks,\n"
                 "history logic, and two-valued coloring of projector context sets."};
    app.require_subcommand(1);
    app.fallthrough();

    Emitter out;
    double eps_flag = 0.0;
    app.add_option("--format", out.format, "output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    auto* eps_opt =
        app.add_option("--eps", eps_flag,
                       "decoherence tolerance (overrides HISTKIT_EPS_DECOHERENCE and the default)");

    std::string file, family, history, mode = "medium", spec_a, spec_b, rays, name, out_path;

    auto* check = app.add_subcommand("check", "consistency check of one family in a scenario file");
    check->add_option("file", file, "scenario file")->required();
    check->add_option("--family", family, "family name")->required();
    check->add_option("--mode", mode, "medium or weak")
        ->check(CLI::IsMember({"medium", "weak"}))
        ->capture_default_str();

    auto* prob = app.add_subcommand("prob", "history probabilities in one family");
    prob->add_option("file", file, "scenario file")->required();
    prob->add_option("--family", family, "family name")->required();
    prob->add_option("--history", history, "history spec @<time>:<selector>[;...]");

    auto* implies = app.add_subcommand("implies", "probabilistic implication a => b inside one family");
    implies->add_option("file", file, "scenario file")->required();
    implies->add_option("--family", family, "family name")->required();
    implies->add_option("--a", spec_a, "antecedent history spec")->required();
    implies->add_option("--b", spec_b, "consequent history spec")->required();

    auto* color = app.add_subcommand("color", "search for a two-valued assignment over a ray set");
    color->add_option("--rays", rays, "bundled ray-set name or file path")->required();
    std::string search_mode = "backtracking";
    color->add_option("--mode", search_mode, "search engine")
        ->check(CLI::IsMember({"backtracking", "exhaustive"}))
        ->capture_default_str();
    std::optional<std::uint64_t> seed;
    color->add_option("--seed", seed, "randomize the branching order");
    bool enumerate = false;
    color->add_flag("--enumerate", enumerate, "enumerate all satisfying assignments");

    auto* demo = app.add_subcommand("demo", "run a bundled scenario (or a scenario file) end to end");
    demo->add_option("name", name, "spin-half|two-slit|three-box|spin1-chain|ks, or a file path")
        ->required();

    auto* export_demo = app.add_subcommand("export-demo", "write a bundled scenario or ray set to a file");
    export_demo->add_option("name", name, "spin-half|two-slit|three-box|spin1-chain|cabello18|peres33")
        ->required();
    export_demo->add_option("-o,--output", out_path, "destination path")->required();

    for (auto* sc : {check, prob, implies, color, demo, export_demo}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message
        return 2;
    }

    histkit::Tolerances tol;
    try {
        if (eps_opt->count() > 0) {
            tol.eps_decoherence = eps_flag;
        } else if (const char* env = std::getenv("HISTKIT_EPS_DECOHERENCE")) {
            try {
                std::size_t used = 0;
                tol.eps_decoherence = std::stod(env, &used);
                if (used != std::string(env).size()) throw std::invalid_argument(env);
            } catch (const std::exception&) {
                throw histkit::ContractViolation(
                    std::string("HISTKIT_EPS_DECOHERENCE is not a number: '") + env + "'");
            }
        }
        if (!(tol.eps_decoherence > 0.0) || tol.eps_decoherence < tol.eps_prob) {
            std::ostringstream os;
            os << "decoherence tolerance must be positive and at least " << tol.eps_prob;
            throw histkit::ContractViolation(os.str());
        }

        if (check->parsed()) {
            histkit::Scenario s = load_scenario(file, tol);
            Json q{{"op", "check"}, {"family", family}, {"mode", mode}};
            Json rep = single_query_report(s, q, tol);
            bool passed = only_result(rep).value("passed", false);
            out.emit(std::move(rep));
            return passed ? 0 : 1;
        }
        if (prob->parsed()) {
            histkit::Scenario s = load_scenario(file, tol);
            Json q{{"op", "prob"}, {"family", family}};
            if (!history.empty()) q["history"] = history;
            out.emit(single_query_report(s, q, tol));
            return 0;
        }
        if (implies->parsed()) {
            histkit::Scenario s = load_scenario(file, tol);
            Json q{{"op", "implies"}, {"family", family}, {"a", spec_a}, {"b", spec_b}};
            Json rep = single_query_report(s, q, tol);
            bool holds = only_result(rep).value("verdict", "") == "holds";
            out.emit(std::move(rep));
            return holds ? 0 : 1;
        }
        if (color->parsed()) {
            histkit::SearchOptions opts;
            opts.mode = search_mode == "exhaustive" ? histkit::SearchMode::exhaustive
                                                    : histkit::SearchMode::backtracking;
            opts.seed = seed;
            opts.enumerate_all = enumerate;
            histkit::ContextSet cs = histkit::ks_dataset(rays);
            Json rep = histkit::report_header(tol);
            Json entry;
            entry["query"] = Json{{"op", "color"}, {"rays", rays}, {"mode", search_mode}};
            if (seed) entry["query"]["seed"] = *seed;
            if (enumerate) entry["query"]["enumerate"] = true;
            entry["result"] = histkit::color_result(cs, opts, tol);
            bool sat = entry["result"].value("sat", false);
            rep["results"] = Json::array({std::move(entry)});
            out.emit(std::move(rep));
            return sat ? 0 : 1;
        }
        if (demo->parsed()) {
            if (name == "ks") return run_demo_ks(out, tol);
            histkit::Scenario s = [&] {
                for (const auto& d : histkit::demo_names())
                    if (name == d) return histkit::demo_scenario(name);
                return load_scenario(name, tol);
            }();
            Json rep = histkit::run_scenario_report(s, tol);
            std::size_t failed =
                rep.contains("expected") ? rep["expected"].value("failed", std::size_t{0}) : 0;
            out.emit(std::move(rep));
            return failed == 0 ? 0 : 1;
        }
        if (export_demo->parsed()) {
            std::string text;
            bool is_rayset =
                std::find(histkit::bundled_rayset_names().begin(), histkit::bundled_rayset_names().end(),
                          name) != histkit::bundled_rayset_names().end();
            for (const auto& d : histkit::demo_names())
                if (name == d && name != "ks") {
                    text = histkit::serialize_scenario(histkit::demo_scenario(name));
                    is_rayset = false;
                }
            if (text.empty() && name == "ks")
                throw histkit::ContractViolation(
                    "'ks' is a pair of ray sets, not one scenario; export 'cabello18' or 'peres33'");
            if (text.empty() && is_rayset) text = histkit::bundled_rayset_text(name);
            if (text.empty())
                throw histkit::ContractViolation(
                    "nothing bundled under '" + name +
                    "' (scenarios: spin-half, two-slit, three-box, spin1-chain; rays: cabello18, "
                    "peres33, spin1-chain)");
            std::ofstream o(out_path);
            if (!o) throw histkit::ContractViolation("cannot write '" + out_path + "'");
            o << text;
            std::cout << "wrote " << out_path << " (" << text.size() << " bytes)\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;  // unreachable: a subcommand is required
}
