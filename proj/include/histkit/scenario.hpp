#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histkit/decoherence.hpp"
#include "histkit/hislogic.hpp"
#include "histkit/histories.hpp"

namespace histkit {

// Scenario documents are JSON; ordered_json keeps key order stable so that
// an exported file re-serializes byte-for-byte.
using Json = nlohmann::ordered_json;

// Scalar/array encoding shared by documents and reports: a complex number is
// a plain JSON number when purely real, else [re, im].
Json json_from_complex(const Complex& z);
Json json_from_vector(const Vector& v);
Json json_from_matrix(const Matrix& m);
Complex complex_from_json(const Json& j, const std::string& where);
Vector vector_from_json(const Json& j, const std::string& where);
Matrix matrix_from_json(const Json& j, const std::string& where);

// One named decomposition at one of the scenario's instants.  time_index is
// 1-based into the scenario times; masks are named coarse grainings over the
// members, written as 0/1 strings.
struct ScenarioDecomposition {
    std::string name;
    int time_index = 0;
    Decomposition decomp;
    std::vector<std::pair<std::string, Mask>> masks;
};

// A family as declared in the document plus its validated realization.
// decomp_refs maps each slice to the scenario decomposition it came from
// (for named-mask lookup when resolving history specs).
struct ScenarioFamily {
    std::string name;
    Family family;
    std::vector<int> decomp_refs;
};

struct Scenario {
    std::string name;
    Json doc;  // canonical document; serialize_scenario dumps exactly this
    int dim = 0;
    double t0 = 0.0;
    std::vector<double> times;
    Matrix initial_state;
    std::vector<ScenarioDecomposition> decompositions;
    std::vector<ScenarioFamily> families;
    std::optional<ContextSet> contexts;  // present when the document has a contexts section
    std::vector<Json> queries;
    std::vector<Json> expected;
};

// Builds and validates every part of the document (state, dynamics,
// decompositions, families, contexts).  Validation failures name the
// offending section, the residual, and the threshold.
Scenario materialize_scenario(Json doc, const Tolerances& tol = {});

Scenario parse_scenario(const std::string& text, const Tolerances& tol = {});

std::string serialize_scenario(const Scenario& s);

const ScenarioFamily& find_family(const Scenario& s, const std::string& name);

// History specs select one coarse event per slice: "@<time>:<selector>"
// joined by ';', where <time> is the scenario time index the slice's
// decomposition sits at and <selector> is a 0/1 string over the slice's
// members, a named mask of the underlying decomposition, or a
// comma-separated list of member labels.  Slices without a clause get the
// identity event.
History resolve_history_spec(const Scenario& s, const ScenarioFamily& f, const std::string& spec);

}  // namespace histkit
