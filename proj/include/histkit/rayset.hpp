#pragma once

#include <string>
#include <vector>

#include "histkit/hislogic.hpp"

namespace histkit {

// Plain-text ray-set format, one record per line:
//   ray <id> <c1> ... <cd>     components either real or re+imi (e.g. 0.5-0.5i)
//   basis <id1> ... <idd>      a context; pairwise orthogonal within 1e-8
// Blank lines and lines starting with '#' are ignored.
struct Ray {
    std::string id;
    Vector components;  // normalized on load
};

struct RaySet {
    int dim = 0;
    std::vector<Ray> rays;
    std::vector<std::vector<int>> bases;  // indices into rays
};

inline constexpr double kRayOrthoEps = 1e-8;

RaySet parse_rayset(const std::string& text);
std::string serialize_rayset(const RaySet& rs);

// Rays become rank-1 one-time events at t = 0 (labels = ray ids, duplicates
// up to phase merged), bases become contexts.  No algebraic closure.
ContextSet context_set_from_rays(const RaySet& rs, const Tolerances& tol = {});

// Bundled dataset registry ("cabello18", "peres33", "spin1-chain") plus
// filesystem fallback; "<name>.rays" also resolves to a bundled name when no
// such file exists.
const std::vector<std::string>& bundled_rayset_names();
std::string bundled_rayset_text(const std::string& name);  // throws ContractViolation if unknown
RaySet load_rayset(const std::string& name_or_path);

}  // namespace histkit
