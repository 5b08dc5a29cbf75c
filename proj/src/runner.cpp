#include "histkit/runner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "histkit/linalg.hpp"

namespace histkit {

namespace {

const Json& arg(const Json& q, const char* key) {
    auto it = q.find(key);
    if (it == q.end())
        throw ContractViolation("query '" + q.value("op", "?") + "' is missing argument '" + key + "'");
    return *it;
}

std::string mask_bits(const Mask& m) {
    std::string s;
    for (auto b : m) s += b ? '1' : '0';
    return s;
}

Json run_check(const Scenario& s, const Json& q, const Tolerances& tol) {
    const ScenarioFamily& f = find_family(s, arg(q, "family").get<std::string>());
    std::string mode_name = q.value("mode", "medium");
    ConsistencyMode mode;
    if (mode_name == "medium")
        mode = ConsistencyMode::medium;
    else if (mode_name == "weak")
        mode = ConsistencyMode::weak;
    else
        throw ContractViolation("check mode must be 'medium' or 'weak', got '" + mode_name + "'");
    Tolerances t = tol;
    if (q.contains("eps")) t.eps_decoherence = q["eps"].get<double>();
    ConsistencyReport rep = check_family(f.family, s.initial_state, mode, t);

    Json out;
    out["kind"] = "consistency";
    out["family"] = f.name;
    out["mode"] = mode_name;
    out["passed"] = rep.passed;
    out["degree"] = rep.degree;
    out["worst_raw"] = rep.worst_raw;
    out["worst_normalized"] = rep.worst_normalized;
    if (!rep.worst_pair.first.empty() || !rep.worst_pair.second.empty())
        out["worst_pair"] = Json::array({rep.worst_pair.first, rep.worst_pair.second});
    out["trace_sum"] = rep.trace_sum;
    Json probs;
    for (const auto& [label, p] : rep.probabilities) probs[label] = p;
    out["probabilities"] = std::move(probs);
    return out;
}

Json run_prob(const Scenario& s, const Json& q, const Tolerances& tol) {
    const ScenarioFamily& f = find_family(s, arg(q, "family").get<std::string>());
    Json out;
    if (q.contains("history")) {
        std::string spec = q["history"].get<std::string>();
        History h = resolve_history_spec(s, f, spec);
        out["kind"] = "probability";
        out["family"] = f.name;
        out["history"] = spec;
        out["label"] = h.label;
        out["p"] = probability(h, f.family, s.initial_state, tol);
        return out;
    }
    out["kind"] = "probabilities";
    out["family"] = f.name;
    Json table;
    double total = 0.0;
    for (const History& h : enumerate_fine(f.family)) {
        double p = probability(h, f.family, s.initial_state, tol);
        table[h.label] = p;
        total += p;
    }
    out["table"] = std::move(table);
    out["total"] = total;
    return out;
}

Json run_implies(const Scenario& s, const Json& q, const Tolerances& tol) {
    const ScenarioFamily& f = find_family(s, arg(q, "family").get<std::string>());
    History a = resolve_history_spec(s, f, arg(q, "a").get<std::string>());
    History b = resolve_history_spec(s, f, arg(q, "b").get<std::string>());
    ImplicationReport rep = implies(a, b, f.family, s.initial_state, tol);
    Json out;
    out["kind"] = "implication";
    out["family"] = f.name;
    out["a"] = a.label;
    out["b"] = b.label;
    out["verdict"] = rep.verdict == ImplicationVerdict::holds
                         ? "holds"
                         : rep.verdict == ImplicationVerdict::fails ? "fails" : "undefined";
    out["p_a"] = rep.p_a;
    out["p_ab"] = rep.p_ab;
    out["ratio"] = rep.ratio;
    out["family_decoherent"] = rep.family_decoherent;
    return out;
}

Json run_conjoin(const Scenario& s, const Json& q, const Tolerances& tol) {
    const ScenarioFamily& f = find_family(s, arg(q, "family").get<std::string>());
    History a = resolve_history_spec(s, f, arg(q, "a").get<std::string>());
    const ScenarioFamily& fb =
        q.contains("b_family") ? find_family(s, q["b_family"].get<std::string>()) : f;
    History b = resolve_history_spec(s, fb, arg(q, "b").get<std::string>());
    History c = conjoin_histories(a, b, f.family, tol);
    Json out;
    out["kind"] = "conjunction";
    out["family"] = f.name;
    out["label"] = c.label;
    Json masks = Json::array();
    for (const auto& e : c.entries) masks.push_back(mask_bits(e.mask));
    out["masks"] = std::move(masks);
    out["p"] = probability(c, f.family, s.initial_state, tol);
    return out;
}

Json run_additivity(const Scenario& s, const Json& q, const Tolerances& tol) {
    const ScenarioFamily& f = find_family(s, arg(q, "family").get<std::string>());
    std::size_t budget = q.value("budget", 100000);
    std::uint64_t seed = q.value("seed", 12345);
    AdditivityReport rep = additivity_audit(f.family, s.initial_state, tol, budget, seed);
    Json out;
    out["kind"] = "additivity";
    out["family"] = f.name;
    out["max_discrepancy"] = rep.max_discrepancy;
    out["worst"] = rep.worst_label;
    out["within_tolerance"] = rep.within_tolerance;
    out["sampled"] = rep.sampled;
    out["combos_checked"] = rep.combos_checked;
    return out;
}

Json run_fringe(const Scenario& s, const Json& q) {
    const ScenarioFamily& f = find_family(s, arg(q, "family").get<std::string>());
    History through = resolve_history_spec(s, f, q.value("through", ""));
    const std::size_t last = f.family.slice_count() - 1;
    const Decomposition& dec = f.family.decomps[last];

    // Sweep the last slice against the fixed earlier events: with
    // B = U_last C_prefix, A = B w B^dagger is computed once and each member
    // costs only Tr[A Q_j] (= p of the history ending in Q_j).
    const Eigen::Index dim = s.initial_state.rows();
    Matrix b = Matrix::Identity(dim, dim);
    for (std::size_t m = 0; m < last; ++m) b = through.entries[m].matrix * (f.family.unitaries[m] * b);
    b = f.family.unitaries[last] * b;
    Matrix a = b * s.initial_state * b.adjoint();

    Json profile;
    std::vector<double> p(dec.members.size(), 0.0);
    for (std::size_t j = 0; j < dec.members.size(); ++j) {
        double pj = dec.members[j].transpose().cwiseProduct(a).sum().real();
        p[j] = std::max(pj, 0.0);
        profile[dec.labels[j]] = p[j];
    }
    int maxima = 0;
    for (std::size_t j = 1; j + 1 < p.size(); ++j)
        if (p[j] > p[j - 1] && p[j] > p[j + 1]) ++maxima;
    double hi = *std::max_element(p.begin(), p.end());
    double lo = *std::min_element(p.begin(), p.end());
    Json out;
    out["kind"] = "fringe";
    out["family"] = f.name;
    out["profile"] = std::move(profile);
    out["maxima"] = maxima;
    out["visibility"] = hi + lo > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
    return out;
}

Json run_contrary(const Scenario& s, const Json& q, const Tolerances& tol) {
    const ScenarioFamily& fa = find_family(s, arg(q, "a_family").get<std::string>());
    const ScenarioFamily& fb = find_family(s, arg(q, "b_family").get<std::string>());
    History a = resolve_history_spec(s, fa, arg(q, "a").get<std::string>());
    History b = resolve_history_spec(s, fb, arg(q, "b").get<std::string>());
    int slice = q.value("slice", 1);
    if (slice < 1 || static_cast<std::size_t>(slice) > a.entries.size() ||
        static_cast<std::size_t>(slice) > b.entries.size())
        throw ContractViolation("contrary: slice " + std::to_string(slice) + " out of range");
    const Matrix& qa = a.entries[static_cast<std::size_t>(slice - 1)].matrix;
    const Matrix& qb = b.entries[static_cast<std::size_t>(slice - 1)].matrix;
    double product = std::max(max_norm(qa * qb), max_norm(qb * qa));
    double gap = max_norm(qa - (Matrix::Identity(qa.rows(), qa.cols()) - qb));
    Json out;
    out["kind"] = "contrary";
    out["product_norm"] = product;
    out["complement_gap"] = gap;
    out["contrary"] = product <= tol.eps_structure && gap > tol.eps_structure;
    return out;
}

const ContextSet& scenario_contexts(const Scenario& s) {
    if (!s.contexts)
        throw ContractViolation("scenario '" + s.name + "' has no contexts section");
    return *s.contexts;
}

Json run_propagate(const Scenario& s, const Json& q, const Tolerances& tol) {
    const ContextSet& cs = scenario_contexts(s);
    const Json& seed = arg(q, "seed");
    if (!seed.is_object()) throw ContractViolation("propagate: 'seed' must map labels to 0/1");
    Valuation v(cs.elements.size());
    for (auto it = seed.begin(); it != seed.end(); ++it) {
        int idx = find_element(cs, it.key());
        if (idx < 0) throw ContractViolation("propagate: no element labeled '" + it.key() + "'");
        int val = it.value().get<int>();
        if (val != 0 && val != 1) throw ContractViolation("propagate: seed values must be 0 or 1");
        v.assignment[static_cast<std::size_t>(idx)] = static_cast<std::int8_t>(val);
    }
    PropagationOutcome out = propagate_truth(v, cs, tol);
    Json j;
    j["kind"] = "propagation";
    j["conflict"] = out.conflict;
    if (out.conflict) {
        j["conflict_detail"] = out.conflict_detail;
        if (out.conflict_context >= 0) j["conflict_context"] = out.conflict_context;
    }
    Json forced;
    for (std::size_t i = 0; i < cs.elements.size(); ++i)
        if (out.forced.assignment[i] >= 0)
            forced[cs.elements[i].label] = static_cast<int>(out.forced.assignment[i]);
    j["forced"] = std::move(forced);
    return j;
}

Json run_axioms(const Scenario& s, const Tolerances& tol) {
    PbaAxiomReport rep = verify_pba_axioms(scenario_contexts(s), tol);
    Json out;
    out["kind"] = "axioms";
    out["all_passed"] = rep.all_passed;
    Json axioms = Json::array();
    for (const auto& ax : rep.axioms) {
        Json a;
        a["passed"] = ax.passed;
        a["worst_residual"] = ax.worst_residual;
        if (!ax.witness.empty()) a["witness"] = ax.witness;
        axioms.push_back(std::move(a));
    }
    out["axioms"] = std::move(axioms);
    return out;
}

Json valuation_json(const ContextSet& cs, const Valuation& v) {
    Json out;
    for (std::size_t i = 0; i < cs.elements.size(); ++i)
        out[cs.elements[i].label] = static_cast<int>(v.assignment[i]);
    return out;
}

Json run_color_query(const Scenario& s, const Json& q, const Tolerances& tol) {
    SearchOptions opts;
    std::string mode = q.value("mode", "backtracking");
    if (mode == "backtracking")
        opts.mode = SearchMode::backtracking;
    else if (mode == "exhaustive")
        opts.mode = SearchMode::exhaustive;
    else
        throw ContractViolation("color mode must be 'backtracking' or 'exhaustive', got '" + mode + "'");
    if (q.contains("seed")) opts.seed = q["seed"].get<std::uint64_t>();
    opts.enumerate_all = q.value("enumerate", false);
    return color_result(scenario_contexts(s), opts, tol);
}

}  // namespace

Json report_header(const Tolerances& tol) {
    Json rep;
    rep["tool"] = Json{{"name", "histkit"}, {"version", kVersion}};
    rep["tolerances"] = Json{{"eps_structure", tol.eps_structure},
                             {"eps_decoherence", tol.eps_decoherence},
                             {"eps_prob", tol.eps_prob}};
    return rep;
}

Json color_result(const ContextSet& cs, const SearchOptions& opts, const Tolerances& tol) {
    SearchResult res = search_valuation(cs, opts, tol);
    Json out;
    out["kind"] = "coloring";
    out["mode"] = opts.mode == SearchMode::exhaustive ? "exhaustive" : "backtracking";
    out["elements"] = cs.elements.size();
    out["contexts"] = cs.contexts.size();
    out["sat"] = res.sat;
    out["nodes"] = res.stats.nodes;
    out["max_depth"] = res.stats.max_depth;
    if (opts.enumerate_all) {
        out["solution_count"] = res.solutions.size();
        if (res.solutions.size() <= 50) {
            Json sols = Json::array();
            for (const auto& v : res.solutions) sols.push_back(valuation_json(cs, v));
            out["solutions"] = std::move(sols);
        }
    }
    if (res.sat && res.valuation) out["valuation"] = valuation_json(cs, *res.valuation);
    return out;
}

Json run_query(const Scenario& s, const Json& query, const Tolerances& tol, bool capture_family_errors) {
    std::string op = arg(query, "op").get<std::string>();
    try {
        if (op == "check") return run_check(s, query, tol);
        if (op == "prob") return run_prob(s, query, tol);
        if (op == "implies") return run_implies(s, query, tol);
        if (op == "conjoin") return run_conjoin(s, query, tol);
        if (op == "additivity") return run_additivity(s, query, tol);
        if (op == "fringe") return run_fringe(s, query);
        if (op == "contrary") return run_contrary(s, query, tol);
        if (op == "propagate") return run_propagate(s, query, tol);
        if (op == "axioms") return run_axioms(s, tol);
        if (op == "color") return run_color_query(s, query, tol);
    } catch (const SingleFamilyViolation& e) {
        if (!capture_family_errors) throw;
        return Json{{"kind", "error"}, {"error_kind", "single-family-violation"}, {"message", e.what()}};
    } catch (const IncommensurableError& e) {
        if (!capture_family_errors) throw;
        return Json{{"kind", "error"}, {"error_kind", "incommensurable"}, {"message", e.what()}};
    }
    throw ContractViolation("unknown query op '" + op + "'");
}

namespace {

bool approx_ok(const Json& actual, const Json& value, double tol) {
    if (!actual.is_number() || !value.is_number()) return false;
    return std::abs(actual.get<double>() - value.get<double>()) <= tol;
}

bool ordered_ok(const Json& actual, const Json& value, const std::string& op) {
    if (!actual.is_number() || !value.is_number()) return false;
    double a = actual.get<double>(), v = value.get<double>();
    if (op == "lt") return a < v;
    if (op == "le") return a <= v;
    if (op == "gt") return a > v;
    return a >= v;
}

}  // namespace

Json run_scenario_report(const Scenario& s, const Tolerances& tol) {
    Json rep = report_header(tol);
    rep["scenario"] = s.name;
    Json results = Json::array();
    for (const auto& q : s.queries) {
        Json entry;
        entry["query"] = q;
        entry["result"] = run_query(s, q, tol, /*capture_family_errors=*/true);
        results.push_back(std::move(entry));
    }
    rep["results"] = std::move(results);

    if (!s.expected.empty()) {
        Json failures = Json::array();
        for (const auto& e : s.expected) {
            int qi = e.value("query", -1);
            std::string path = e.value("path", "");
            std::string op = e.value("op", "eq");
            Json actual;  // null when missing
            if (qi >= 0 && static_cast<std::size_t>(qi) < s.queries.size()) {
                const Json& result = rep["results"][qi]["result"];
                try {
                    Json::json_pointer ptr(path);
                    if (result.contains(ptr)) actual = result[ptr];
                } catch (const Json::exception&) {
                    throw ValidationError("expected: '" + path + "' is not a valid result path");
                }
            }
            bool ok = false;
            const Json& value = e.contains("value") ? e["value"] : Json();
            if (op == "eq")
                ok = actual == value;
            else if (op == "ne")
                ok = !actual.is_null() && actual != value;
            else if (op == "approx")
                ok = approx_ok(actual, value, e.value("tol", 1e-12));
            else if (op == "lt" || op == "le" || op == "gt" || op == "ge")
                ok = ordered_ok(actual, value, op);
            else
                throw ContractViolation("unknown expectation op '" + op + "'");
            if (!ok) {
                Json f = e;
                f["actual"] = actual;
                failures.push_back(std::move(f));
            }
        }
        rep["expected"] = Json{{"total", s.expected.size()},
                               {"failed", failures.size()},
                               {"failures", std::move(failures)}};
    }
    return rep;
}

namespace {

std::string short_num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

void render_result(std::ostringstream& os, const Json& r) {
    std::string kind = r.value("kind", "?");
    if (kind == "consistency") {
        os << "check family=" << r.value("family", "?") << " mode=" << r.value("mode", "?") << " -> "
           << (r.value("passed", false) ? "PASS" : "FAIL") << "  degree=" << short_num(r.value("degree", 0.0))
           << " worst_normalized=" << short_num(r.value("worst_normalized", 0.0))
           << " trace_sum=" << short_num(r.value("trace_sum", 0.0));
        if (r.contains("worst_pair"))
            os << " worst_pair=(" << r["worst_pair"][0].get<std::string>() << ", "
               << r["worst_pair"][1].get<std::string>() << ")";
        os << "\n";
        if (r.contains("probabilities"))
            for (auto it = r["probabilities"].begin(); it != r["probabilities"].end(); ++it)
                os << "    p[" << it.key() << "] = " << short_num(it.value().get<double>()) << "\n";
    } else if (kind == "probabilities") {
        os << "probabilities family=" << r.value("family", "?") << "\n";
        for (auto it = r["table"].begin(); it != r["table"].end(); ++it)
            os << "    p[" << it.key() << "] = " << short_num(it.value().get<double>()) << "\n";
        os << "    total = " << short_num(r.value("total", 0.0)) << "\n";
    } else if (kind == "probability") {
        os << "prob family=" << r.value("family", "?") << " history=" << r.value("label", "?") << " -> "
           << short_num(r.value("p", 0.0)) << "\n";
    } else if (kind == "implication") {
        os << "implies family=" << r.value("family", "?") << " " << r.value("a", "?") << " => "
           << r.value("b", "?") << " -> " << r.value("verdict", "?")
           << "  p_a=" << short_num(r.value("p_a", 0.0)) << " p_ab=" << short_num(r.value("p_ab", 0.0))
           << " ratio=" << short_num(r.value("ratio", 0.0)) << "\n";
    } else if (kind == "conjunction") {
        os << "conjoin -> " << r.value("label", "?") << "  p=" << short_num(r.value("p", 0.0)) << "\n";
    } else if (kind == "additivity") {
        os << "additivity family=" << r.value("family", "?") << " -> max_discrepancy="
           << short_num(r.value("max_discrepancy", 0.0)) << " at " << r.value("worst", "?")
           << (r.value("within_tolerance", false) ? " (within tolerance)" : " (violated)") << "\n";
    } else if (kind == "fringe") {
        os << "fringe family=" << r.value("family", "?") << " -> maxima=" << r.value("maxima", 0)
           << " visibility=" << short_num(r.value("visibility", 0.0)) << "\n";
    } else if (kind == "contrary") {
        os << "contrary -> " << (r.value("contrary", false) ? "true" : "false")
           << "  product_norm=" << short_num(r.value("product_norm", 0.0))
           << " complement_gap=" << short_num(r.value("complement_gap", 0.0)) << "\n";
    } else if (kind == "propagation") {
        os << "propagate -> " << (r.value("conflict", false) ? "CONFLICT" : "consistent") << "\n";
        if (r.contains("conflict_detail")) os << "    " << r["conflict_detail"].get<std::string>() << "\n";
        if (r.contains("forced"))
            for (auto it = r["forced"].begin(); it != r["forced"].end(); ++it)
                os << "    h[" << it.key() << "] = " << it.value().get<int>() << "\n";
    } else if (kind == "axioms") {
        os << "axioms -> " << (r.value("all_passed", false) ? "all nine hold" : "FAILED") << "\n";
        if (r.contains("axioms")) {
            const Json& ax = r["axioms"];
            for (std::size_t i = 0; i < ax.size(); ++i) {
                os << "    axiom " << (i + 1) << ": " << (ax[i].value("passed", false) ? "pass" : "FAIL")
                   << " (residual " << short_num(ax[i].value("worst_residual", 0.0));
                if (ax[i].contains("witness")) os << ", witness " << ax[i]["witness"].get<std::string>();
                os << ")\n";
            }
        }
    } else if (kind == "coloring") {
        os << "color mode=" << r.value("mode", "?") << " elements=" << r.value("elements", std::size_t{0})
           << " contexts=" << r.value("contexts", std::size_t{0}) << " -> "
           << (r.value("sat", false) ? "SAT" : "UNSAT") << "  nodes=" << r.value("nodes", std::uint64_t{0})
           << " max_depth=" << r.value("max_depth", std::size_t{0});
        if (r.contains("solution_count")) os << " solutions=" << r["solution_count"].get<std::size_t>();
        os << "\n";
        if (r.contains("valuation")) {
            os << "    valuation:";
            for (auto it = r["valuation"].begin(); it != r["valuation"].end(); ++it)
                os << " " << it.key() << "=" << it.value().get<int>();
            os << "\n";
        }
    } else if (kind == "error") {
        os << "error (" << r.value("error_kind", "?") << "): " << r.value("message", "") << "\n";
    } else {
        os << r.dump() << "\n";
    }
}

}  // namespace

std::string render_report_text(const Json& report) {
    std::ostringstream os;
    if (report.contains("tool"))
        os << report["tool"].value("name", "histkit") << " " << report["tool"].value("version", "") << "\n";
    if (report.contains("scenario")) os << "scenario: " << report["scenario"].get<std::string>() << "\n";
    if (report.contains("tolerances")) {
        const Json& t = report["tolerances"];
        os << "tolerances: eps_structure=" << short_num(t.value("eps_structure", 0.0))
           << " eps_decoherence=" << short_num(t.value("eps_decoherence", 0.0))
           << " eps_prob=" << short_num(t.value("eps_prob", 0.0)) << "\n";
    }
    if (report.contains("results")) {
        const Json& results = report["results"];
        for (std::size_t i = 0; i < results.size(); ++i) {
            os << "[" << (i + 1) << "] ";
            render_result(os, results[i].contains("result") ? results[i]["result"] : results[i]);
        }
    }
    if (report.contains("expected")) {
        const Json& ex = report["expected"];
        std::size_t total = ex.value("total", std::size_t{0});
        std::size_t failed = ex.value("failed", std::size_t{0});
        os << "expected: " << (total - failed) << "/" << total << " assertions hold\n";
        if (failed > 0)
            for (const auto& f : ex["failures"])
                os << "    FAILED query " << f.value("query", -1) << " path " << f.value("path", "")
                   << " op " << f.value("op", "") << " value " << f["value"].dump() << " actual "
                   << f["actual"].dump() << "\n";
    }
    if (report.contains("elapsed_seconds"))
        os << "elapsed: " << short_num(report["elapsed_seconds"].get<double>()) << " s\n";
    return os.str();
}

}  // namespace histkit
