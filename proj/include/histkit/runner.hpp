#pragma once

#include <string>
#include <vector>

#include "histkit/scenario.hpp"

namespace histkit {

// Report skeleton: tool identity and the tolerance set in force.  Results
// and the expected-assertion summary are appended by the callers below;
// elapsed time is attached last, outside the deterministic subtree.
Json report_header(const Tolerances& tol);

// Executes one query object ({"op": ..., ...}) against a materialized
// scenario and returns the result document.  With capture_family_errors,
// single-family violations and incommensurability are reported as
// {"kind": "error", ...} results instead of propagating — scenario query
// lists use this so deliberate violation probes are part of the report.
Json run_query(const Scenario& s, const Json& query, const Tolerances& tol,
               bool capture_family_errors = false);

// Runs the scenario's own query list and evaluates its expected assertions.
// Returns a full report (header + scenario + results + expected).
Json run_scenario_report(const Scenario& s, const Tolerances& tol);

// Coloring search over an arbitrary context set (the ray-file front end).
Json color_result(const ContextSet& cs, const SearchOptions& opts, const Tolerances& tol);

// Human-readable rendering of any report produced above.
std::string render_report_text(const Json& report);

}  // namespace histkit
