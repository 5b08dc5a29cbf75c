#include "histkit/scenario.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "histkit/linalg.hpp"
#include "histkit/rayset.hpp"

#include <Eigen/Eigenvalues>

namespace histkit {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ValidationError(where + ": " + what);
}

std::string num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

double number_at(const Json& j, const std::string& where) {
    if (!j.is_number()) bad(where, "expected a number");
    return j.get<double>();
}

const Json& field(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) bad(where, std::string("missing required field '") + key + "'");
    return *it;
}

}  // namespace

Json json_from_complex(const Complex& z) {
    if (z.imag() == 0.0) return z.real();
    return Json::array({z.real(), z.imag()});
}

Json json_from_vector(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_from_complex(v(i)));
    return out;
}

Json json_from_matrix(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json_from_complex(m(r, c)));
        out.push_back(std::move(row));
    }
    return out;
}

Complex complex_from_json(const Json& j, const std::string& where) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return Complex(j[0].get<double>(), j[1].get<double>());
    bad(where, "expected a real number or a [re, im] pair");
}

Vector vector_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where, "expected a non-empty array of scalars");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) bad(where, "expected a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Matrix m;
    for (std::size_t r = 0; r < rows; ++r) {
        const Json& row = j[r];
        std::string rw = where + "[" + std::to_string(r) + "]";
        if (!row.is_array() || row.empty()) bad(rw, "expected a non-empty array of scalars");
        if (r == 0) {
            cols = row.size();
            m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            bad(rw, "ragged matrix: row has " + std::to_string(row.size()) + " entries, expected " +
                        std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                complex_from_json(row[c], rw + "[" + std::to_string(c) + "]");
    }
    return m;
}

namespace {

Matrix parse_state(const Json& doc, int dim, const Tolerances& tol) {
    const Json& st = field(doc, "state", "state");
    if (!st.is_object()) bad("state", "expected an object with a 'kind' field");
    std::string kind = field(st, "kind", "state").get<std::string>();
    if (kind == "pure") {
        Vector v = vector_from_json(field(st, "vector", "state"), "state.vector");
        if (v.size() != dim)
            bad("state.vector", "has " + std::to_string(v.size()) + " entries, dimension is " +
                                    std::to_string(dim));
        double n = v.norm();
        if (!(n > 0.0)) bad("state.vector", "zero (or non-finite) vector");
        v /= n;
        return Matrix(v * v.adjoint());
    }
    if (kind == "density") {
        Matrix w = matrix_from_json(field(st, "matrix", "state"), "state.matrix");
        if (w.rows() != dim || w.cols() != dim)
            bad("state.matrix", "is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                                    ", dimension is " + std::to_string(dim));
        double herm = hermiticity_residual(w);
        if (!(herm <= tol.eps_structure))
            bad("state.matrix", "not Hermitian (residual " + num(herm) + " vs threshold " +
                                    num(tol.eps_structure) + ")");
        Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
        double lo = es.eigenvalues().minCoeff();
        if (!(lo >= -tol.eps_structure))
            bad("state.matrix", "not positive semidefinite (smallest eigenvalue " + num(lo) +
                                    " vs threshold -" + num(tol.eps_structure) + ")");
        double tr = std::abs(w.trace() - Complex(1.0, 0.0));
        if (!(tr <= tol.eps_structure))
            bad("state.matrix", "trace differs from 1 by " + num(tr) + " (threshold " +
                                    num(tol.eps_structure) + ")");
        return w;
    }
    bad("state.kind", "unknown kind '" + kind + "' (use 'pure' or 'density')");
}

// Per-interval propagator factory over the scenario grid; index 0 is t0 and
// index k >= 1 is times[k-1].
struct Dynamics {
    std::string kind;
    Matrix generator;
    Matrix gen_vecs;             // generator eigenpairs, decomposed once
    Eigen::VectorXd gen_vals;
    std::vector<Matrix> unitaries;
    const std::vector<double>* times = nullptr;
    double t0 = 0.0;
    int dim = 0;
    Tolerances tol;

    double instant(int idx) const { return idx == 0 ? t0 : (*times)[static_cast<std::size_t>(idx - 1)]; }

    Matrix interval(int from, int to) const {
        if (kind == "trivial") return Matrix::Identity(dim, dim);
        if (kind == "generator") {
            double dt = instant(to) - instant(from);
            Vector phases(gen_vals.size());
            for (Eigen::Index k = 0; k < gen_vals.size(); ++k)
                phases(k) = std::exp(Complex(0.0, -gen_vals(k) * dt));
            return gen_vecs * phases.asDiagonal() * gen_vecs.adjoint();
        }
        Matrix u = Matrix::Identity(dim, dim);
        for (int k = from + 1; k <= to; ++k) u = unitaries[static_cast<std::size_t>(k - 1)] * u;
        return u;
    }
};

Dynamics parse_dynamics(const Json& doc, int dim, const std::vector<double>& times, double t0,
                        const Tolerances& tol) {
    Dynamics dyn;
    dyn.times = &times;
    dyn.t0 = t0;
    dyn.dim = dim;
    dyn.tol = tol;
    const Json& dj = field(doc, "dynamics", "dynamics");
    if (!dj.is_object()) bad("dynamics", "expected an object with a 'kind' field");
    dyn.kind = field(dj, "kind", "dynamics").get<std::string>();
    if (dyn.kind == "trivial") return dyn;
    if (dyn.kind == "generator") {
        dyn.generator = matrix_from_json(field(dj, "matrix", "dynamics"), "dynamics.matrix");
        if (dyn.generator.rows() != dim || dyn.generator.cols() != dim)
            bad("dynamics.matrix", "must be " + std::to_string(dim) + "x" + std::to_string(dim));
        double herm = hermiticity_residual(dyn.generator);
        if (!(herm <= tol.eps_structure))
            bad("dynamics.matrix", "generator not Hermitian (residual " + num(herm) +
                                       " vs threshold " + num(tol.eps_structure) + ")");
        Eigen::SelfAdjointEigenSolver<Matrix> es(dyn.generator);
        if (es.info() != Eigen::Success)
            bad("dynamics.matrix", "eigendecomposition of the generator failed");
        dyn.gen_vals = es.eigenvalues();
        dyn.gen_vecs = es.eigenvectors();
        return dyn;
    }
    if (dyn.kind == "unitaries") {
        const Json& arr = field(dj, "matrices", "dynamics");
        if (!arr.is_array() || arr.size() != times.size())
            bad("dynamics.matrices", "need exactly one unitary per instant (" +
                                         std::to_string(times.size()) + ")");
        for (std::size_t k = 0; k < arr.size(); ++k) {
            std::string where = "dynamics.matrices[" + std::to_string(k) + "]";
            Matrix u = matrix_from_json(arr[k], where);
            if (u.rows() != dim || u.cols() != dim)
                bad(where, "must be " + std::to_string(dim) + "x" + std::to_string(dim));
            double res = unitarity_residual(u);
            if (!(res <= tol.eps_structure))
                bad(where, "not unitary (residual " + num(res) + " vs threshold " +
                               num(tol.eps_structure) + ")");
            dyn.unitaries.push_back(std::move(u));
        }
        return dyn;
    }
    bad("dynamics.kind", "unknown kind '" + dyn.kind + "' (use 'trivial', 'generator', or 'unitaries')");
}

Mask parse_mask_bits(const std::string& bits, std::size_t members, const std::string& where) {
    if (bits.size() != members)
        bad(where, "mask '" + bits + "' has " + std::to_string(bits.size()) + " bits, decomposition has " +
                       std::to_string(members) + " members");
    Mask m(members, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1') bad(where, "mask '" + bits + "' must be a 0/1 string");
        m[i] = bits[i] == '1' ? 1 : 0;
    }
    return m;
}

std::vector<ScenarioDecomposition> parse_decompositions(const Json& doc, int dim,
                                                        std::size_t n_times, const Tolerances& tol) {
    const Json& arr = field(doc, "decompositions", "decompositions");
    if (!arr.is_array() || arr.empty()) bad("decompositions", "expected a non-empty array");
    std::vector<ScenarioDecomposition> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const Json& dj = arr[i];
        std::string where = "decompositions[" + std::to_string(i) + "]";
        if (!dj.is_object()) bad(where, "expected an object");
        ScenarioDecomposition sd;
        sd.name = field(dj, "name", where).get<std::string>();
        where = "decompositions[" + sd.name + "]";
        if (!names.insert(sd.name).second) bad(where, "duplicate decomposition name");
        sd.time_index = field(dj, "time_index", where).get<int>();
        if (sd.time_index < 1 || static_cast<std::size_t>(sd.time_index) > n_times)
            bad(where, "time_index " + std::to_string(sd.time_index) + " outside 1.." +
                           std::to_string(n_times));
        const Json& members = field(dj, "members", where);
        if (!members.is_array() || members.empty()) bad(where, "'members' must be a non-empty array");
        std::set<std::string> labels;
        for (std::size_t k = 0; k < members.size(); ++k) {
            const Json& mj = members[k];
            std::string mw = where + ".members[" + std::to_string(k) + "]";
            if (!mj.is_object()) bad(mw, "expected an object");
            std::string label = field(mj, "label", mw).get<std::string>();
            if (!labels.insert(label).second) bad(mw, "duplicate member label '" + label + "'");
            Matrix p;
            if (mj.contains("span")) {
                const Json& span = mj["span"];
                if (!span.is_array() || span.empty()) bad(mw, "'span' must be a non-empty array");
                std::vector<Vector> vecs;
                for (std::size_t v = 0; v < span.size(); ++v)
                    vecs.push_back(vector_from_json(span[v], mw + ".span[" + std::to_string(v) + "]"));
                for (const auto& v : vecs)
                    if (v.size() != dim) bad(mw, "span vector dimension differs from " + std::to_string(dim));
                try {
                    p = projector_from_span(vecs, tol);
                } catch (const ValidationError& e) {
                    bad(mw, e.what());
                }
            } else if (mj.contains("matrix")) {
                p = matrix_from_json(mj["matrix"], mw + ".matrix");
                if (p.rows() != dim || p.cols() != dim)
                    bad(mw, "projector must be " + std::to_string(dim) + "x" + std::to_string(dim));
                double h = hermiticity_residual(p);
                if (!(h <= tol.eps_structure))
                    bad(mw, "not Hermitian (residual " + num(h) + " vs threshold " +
                                num(tol.eps_structure) + ")");
            } else {
                bad(mw, "member needs either 'span' or 'matrix'");
            }
            sd.decomp.members.push_back(std::move(p));
            sd.decomp.labels.push_back(std::move(label));
        }
        sd.decomp.time_index = sd.time_index;
        DecompositionReport rep = validate_decomposition(sd.decomp, tol);
        if (!rep.passed)
            bad(where, "members must form a projective decomposition: sum-to-identity residual " +
                           num(rep.sum_residual) + ", orthogonality residual " + num(rep.ortho_residual) +
                           " vs threshold " + num(tol.eps_structure));
        if (dj.contains("masks")) {
            const Json& masks = dj["masks"];
            if (!masks.is_object()) bad(where, "'masks' must be an object of name -> bit string");
            for (auto it = masks.begin(); it != masks.end(); ++it)
                sd.masks.emplace_back(it.key(),
                                      parse_mask_bits(it.value().get<std::string>(),
                                                      sd.decomp.members.size(), where + ".masks." + it.key()));
        }
        out.push_back(std::move(sd));
    }
    return out;
}

std::vector<ScenarioFamily> parse_families(const Json& doc, const std::vector<ScenarioDecomposition>& decs,
                                           const std::vector<double>& times, double t0,
                                           const Dynamics& dyn, const Tolerances& tol) {
    const Json& arr = field(doc, "families", "families");
    if (!arr.is_array() || arr.empty()) bad("families", "expected a non-empty array");
    std::vector<ScenarioFamily> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const Json& fj = arr[i];
        std::string where = "families[" + std::to_string(i) + "]";
        if (!fj.is_object()) bad(where, "expected an object");
        ScenarioFamily sf;
        sf.name = field(fj, "name", where).get<std::string>();
        where = "families[" + sf.name + "]";
        if (!names.insert(sf.name).second) bad(where, "duplicate family name");
        const Json& slices = field(fj, "slices", where);
        if (!slices.is_array() || slices.empty()) bad(where, "'slices' must be a non-empty array");

        TimeGrid grid;
        grid.t0 = t0;
        std::vector<Decomposition> fam_decs;
        std::vector<Matrix> fam_unitaries;
        int prev_idx = 0;
        for (std::size_t k = 0; k < slices.size(); ++k) {
            std::string name = slices[k].get<std::string>();
            auto it = std::find_if(decs.begin(), decs.end(),
                                   [&](const ScenarioDecomposition& d) { return d.name == name; });
            if (it == decs.end()) bad(where, "unknown decomposition '" + name + "'");
            if (it->time_index <= prev_idx)
                bad(where, "slices out of order: '" + name + "' at time_index " +
                               std::to_string(it->time_index) + " does not come after index " +
                               std::to_string(prev_idx));
            grid.slices.push_back(times[static_cast<std::size_t>(it->time_index - 1)]);
            Decomposition d = it->decomp;
            d.time_index = static_cast<int>(k + 1);  // family-local slice position
            fam_decs.push_back(std::move(d));
            fam_unitaries.push_back(dyn.interval(prev_idx, it->time_index));
            sf.decomp_refs.push_back(static_cast<int>(it - decs.begin()));
            prev_idx = it->time_index;
        }
        try {
            sf.family = make_family(std::move(grid), std::move(fam_decs), std::move(fam_unitaries),
                                    sf.name, tol);
        } catch (const ValidationError& e) {
            bad(where, e.what());
        } catch (const ContractViolation& e) {
            bad(where, e.what());
        }
        out.push_back(std::move(sf));
    }
    return out;
}

ContextSet parse_contexts(const Json& cj, const Tolerances& tol) {
    if (!cj.is_object()) bad("contexts", "expected an object");
    std::string text = field(cj, "rays", "contexts").get<std::string>();
    RaySet rs;
    try {
        rs = parse_rayset(text);
    } catch (const ValidationError& e) {
        bad("contexts.rays", e.what());
    }
    if (cj.contains("subset")) {
        const Json& sub = cj["subset"];
        if (!sub.is_array()) bad("contexts.subset", "expected an array of ray ids");
        std::set<std::string> keep;
        for (const auto& idj : sub) keep.insert(idj.get<std::string>());
        RaySet filtered;
        filtered.dim = rs.dim;
        std::vector<int> remap(rs.rays.size(), -1);
        for (std::size_t i = 0; i < rs.rays.size(); ++i)
            if (keep.count(rs.rays[i].id)) {
                remap[i] = static_cast<int>(filtered.rays.size());
                filtered.rays.push_back(rs.rays[i]);
                keep.erase(rs.rays[i].id);
            }
        if (!keep.empty()) bad("contexts.subset", "unknown ray id '" + *keep.begin() + "'");
        for (const auto& b : rs.bases) {
            std::vector<int> nb;
            for (int idx : b)
                if (remap[static_cast<std::size_t>(idx)] >= 0)
                    nb.push_back(remap[static_cast<std::size_t>(idx)]);
            if (nb.size() == b.size()) filtered.bases.push_back(std::move(nb));
        }
        rs = std::move(filtered);
    }

    std::string build = cj.value("build", "pba");
    ContextSet cs;
    try {
        if (build == "pba") {
            std::vector<OneTimeHistory> elems;
            for (const auto& r : rs.rays)
                elems.push_back(OneTimeHistory{projector_onto(r.components), 0.0, r.id});
            cs = build_pba(elems, tol);
        } else if (build == "plain") {
            cs = context_set_from_rays(rs, tol);
        } else {
            bad("contexts.build", "unknown build mode '" + build + "' (use 'pba' or 'plain')");
        }
    } catch (const ValidationError& e) {
        bad("contexts", e.what());
    }

    if (cj.contains("renames")) {
        const Json& ren = cj["renames"];
        if (!ren.is_object()) bad("contexts.renames", "expected an object of new-label -> ray id list");
        for (auto it = ren.begin(); it != ren.end(); ++it) {
            if (find_element(cs, it.key()) >= 0)
                bad("contexts.renames", "label '" + it.key() + "' already names an element");
            Matrix sum;
            std::string members;
            for (const auto& idj : it.value()) {
                std::string id = idj.get<std::string>();
                auto rit = std::find_if(rs.rays.begin(), rs.rays.end(),
                                        [&](const Ray& r) { return r.id == id; });
                if (rit == rs.rays.end())
                    bad("contexts.renames", "rename '" + it.key() + "' uses unknown ray id '" + id + "'");
                Matrix p = projector_onto(rit->components);
                sum = sum.size() == 0 ? p : Matrix(sum + p);
                members += (members.empty() ? "" : ", ") + id;
            }
            if (sum.size() == 0) bad("contexts.renames", "rename '" + it.key() + "' lists no rays");
            int idx = find_element(cs, sum, 0.0, tol);
            if (idx < 0)
                bad("contexts.renames", "rename '" + it.key() + "': no element equals the sum of [" +
                                            members + "]");
            cs.elements[static_cast<std::size_t>(idx)].label = it.key();
        }
    }
    return cs;
}

}  // namespace

Scenario materialize_scenario(Json doc, const Tolerances& tol) {
    if (!doc.is_object()) throw ValidationError("scenario document must be a JSON object");
    Scenario s;
    s.doc = std::move(doc);
    s.name = s.doc.value("name", "scenario");

    const Json& dimj = field(s.doc, "dimension", "dimension");
    if (!dimj.is_number_integer() || dimj.get<int>() < 1)
        bad("dimension", "expected a positive integer");
    s.dim = dimj.get<int>();

    s.t0 = s.doc.contains("t0") ? number_at(s.doc["t0"], "t0") : 0.0;
    const Json& tj = field(s.doc, "times", "times");
    if (!tj.is_array() || tj.empty()) bad("times", "expected a non-empty array of instants");
    for (std::size_t i = 0; i < tj.size(); ++i)
        s.times.push_back(number_at(tj[i], "times[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i + 1 < s.times.size(); ++i)
        if (!(s.times[i] < s.times[i + 1])) bad("times", "instants must be strictly increasing");
    if (!(s.t0 <= s.times.front())) bad("times", "first instant precedes t0");

    s.initial_state = parse_state(s.doc, s.dim, tol);
    Dynamics dyn = parse_dynamics(s.doc, s.dim, s.times, s.t0, tol);
    s.decompositions = parse_decompositions(s.doc, s.dim, s.times.size(), tol);
    s.families = parse_families(s.doc, s.decompositions, s.times, s.t0, dyn, tol);
    if (s.doc.contains("contexts")) s.contexts = parse_contexts(s.doc["contexts"], tol);

    if (s.doc.contains("queries")) {
        const Json& qs = s.doc["queries"];
        if (!qs.is_array()) bad("queries", "expected an array");
        for (std::size_t i = 0; i < qs.size(); ++i) {
            if (!qs[i].is_object() || !qs[i].contains("op"))
                bad("queries[" + std::to_string(i) + "]", "expected an object with an 'op' field");
            s.queries.push_back(qs[i]);
        }
    }
    if (s.doc.contains("expected")) {
        const Json& ex = s.doc["expected"];
        if (!ex.is_array()) bad("expected", "expected an array");
        for (const auto& e : ex) s.expected.push_back(e);
    }
    return s;
}

Scenario parse_scenario(const std::string& text, const Tolerances& tol) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string("scenario file is not valid JSON: ") + e.what());
    }
    return materialize_scenario(std::move(doc), tol);
}

std::string serialize_scenario(const Scenario& s) { return s.doc.dump(2) + "\n"; }

const ScenarioFamily& find_family(const Scenario& s, const std::string& name) {
    for (const auto& f : s.families)
        if (f.name == name) return f;
    std::string known;
    for (const auto& f : s.families) known += (known.empty() ? "" : ", ") + f.name;
    throw ContractViolation("no family named '" + name + "' in scenario '" + s.name + "' (families: " +
                            known + ")");
}

History resolve_history_spec(const Scenario& s, const ScenarioFamily& f, const std::string& spec) {
    const std::size_t slices = f.family.slice_count();
    std::vector<Mask> masks;
    for (std::size_t k = 0; k < slices; ++k)
        masks.emplace_back(f.family.decomps[k].members.size(), 1);  // identity by default
    std::vector<bool> seen(slices, false);

    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t sep = spec.find(';', pos);
        std::string clause = spec.substr(pos, sep == std::string::npos ? std::string::npos : sep - pos);
        pos = sep == std::string::npos ? spec.size() : sep + 1;
        if (clause.empty()) continue;
        if (clause[0] != '@')
            throw ContractViolation("history spec clause '" + clause + "' must start with '@<time>:'");
        std::size_t colon = clause.find(':');
        if (colon == std::string::npos)
            throw ContractViolation("history spec clause '" + clause + "' is missing ':'");
        int tidx = 0;
        try {
            tidx = std::stoi(clause.substr(1, colon - 1));
        } catch (const std::exception&) {
            throw ContractViolation("history spec clause '" + clause + "' has a non-numeric time index");
        }
        // clauses address slices by the scenario time index their decomposition sits at
        std::size_t slice = slices;
        for (std::size_t k = 0; k < slices; ++k)
            if (s.decompositions[static_cast<std::size_t>(f.decomp_refs[k])].time_index == tidx) {
                slice = k;
                break;
            }
        if (slice == slices) {
            std::string have;
            for (std::size_t k = 0; k < slices; ++k) {
                if (k) have += ", ";
                have += std::to_string(
                    s.decompositions[static_cast<std::size_t>(f.decomp_refs[k])].time_index);
            }
            throw ContractViolation("history spec @" + std::to_string(tidx) +
                                    " matches no slice of family '" + f.name + "' (time indices: " +
                                    have + ")");
        }
        if (seen[slice]) throw ContractViolation("history spec repeats slice @" + std::to_string(tidx));
        seen[slice] = true;

        const Decomposition& dec = f.family.decomps[slice];
        const ScenarioDecomposition& sdec =
            s.decompositions[static_cast<std::size_t>(f.decomp_refs[slice])];
        std::string sel = clause.substr(colon + 1);
        Mask m;
        bool bits = !sel.empty() && sel.size() == dec.members.size() &&
                    std::all_of(sel.begin(), sel.end(), [](char c) { return c == '0' || c == '1'; });
        if (bits) {
            m = parse_mask_bits(sel, dec.members.size(), "history spec");
        } else {
            auto named = std::find_if(sdec.masks.begin(), sdec.masks.end(),
                                      [&](const auto& nm) { return nm.first == sel; });
            if (named != sdec.masks.end()) {
                m = named->second;
            } else {
                m.assign(dec.members.size(), 0);
                std::size_t p = 0;
                while (p <= sel.size()) {
                    std::size_t comma = sel.find(',', p);
                    std::string label =
                        sel.substr(p, comma == std::string::npos ? std::string::npos : comma - p);
                    p = comma == std::string::npos ? sel.size() + 1 : comma + 1;
                    if (label.empty()) continue;
                    auto lit = std::find(dec.labels.begin(), dec.labels.end(), label);
                    if (lit == dec.labels.end())
                        throw ContractViolation("history spec selector '" + label + "' matches no mask, "
                                                "member label, or bit string of decomposition '" +
                                                sdec.name + "'");
                    m[static_cast<std::size_t>(lit - dec.labels.begin())] = 1;
                }
                bool any = std::any_of(m.begin(), m.end(), [](std::uint8_t b) { return b != 0; });
                if (!any)
                    throw ContractViolation("history spec clause '" + clause + "' selects no member");
            }
        }
        masks[slice] = std::move(m);
    }
    return make_history(f.family, masks);
}

}  // namespace histkit
