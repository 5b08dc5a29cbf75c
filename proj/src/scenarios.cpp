#include "histkit/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "histkit/linalg.hpp"
#include "histkit/rayset.hpp"

namespace histkit {

namespace {

Json member_span(const std::string& label, const std::vector<Vector>& vecs) {
    Json span = Json::array();
    for (const auto& v : vecs) span.push_back(json_from_vector(v));
    return Json{{"label", label}, {"span", span}};
}

Vector onehot(int dim, int k) {
    Vector v = Vector::Zero(dim);
    v(k) = Complex(1.0, 0.0);
    return v;
}

Json expect(int query, const std::string& path, const std::string& op, Json value) {
    return Json{{"query", query}, {"path", path}, {"op", op}, {"value", std::move(value)}};
}

Json expect_approx(int query, const std::string& path, double value, double tol) {
    return Json{{"query", query}, {"path", path}, {"op", "approx"}, {"value", value}, {"tol", tol}};
}

}  // namespace

Scenario spin_half() {
    Json doc;
    doc["name"] = "spin-half";
    doc["dimension"] = 2;
    doc["t0"] = 0.0;
    doc["times"] = Json::array({1.0});
    doc["state"] = Json{{"kind", "pure"}, {"vector", Json::array({1.0, 1.0})}};
    doc["dynamics"] = Json{{"kind", "trivial"}};
    doc["decompositions"] = Json::array({Json{
        {"name", "zbasis"},
        {"time_index", 1},
        {"members", Json::array({member_span("z_up", {onehot(2, 0)}), member_span("z_down", {onehot(2, 1)})})},
    }});
    doc["families"] = Json::array({Json{{"name", "zbasis"}, {"slices", Json::array({"zbasis"})}}});
    doc["queries"] = Json::array({
        Json{{"op", "prob"}, {"family", "zbasis"}},
        Json{{"op", "check"}, {"family", "zbasis"}, {"mode", "medium"}},
    });
    doc["expected"] = Json::array({
        expect_approx(0, "/table/z_up", 0.5, 1e-12),
        expect_approx(0, "/table/z_down", 0.5, 1e-12),
        expect_approx(0, "/total", 1.0, 1e-12),
        expect(1, "/passed", "eq", true),
        expect(1, "/degree", "le", 1e-12),
    });
    return materialize_scenario(std::move(doc));
}

Scenario two_slit(int n, double slit_left, double slit_right, double sigma, int bins, double flight) {
    if (n < 64 || (n & (n - 1)) != 0)
        throw ContractViolation("two_slit: grid size must be a power of two >= 64");
    if (bins < 2 || n % bins != 0)
        throw ContractViolation("two_slit: bin count must divide the grid size");
    if (!(sigma > 0.0)) throw ContractViolation("two_slit: slit width must be positive");

    const int center = n / 2;
    const int w = static_cast<int>(std::ceil(3.0 * sigma));
    const int x1 = center + static_cast<int>(std::lround(slit_left));
    const int x2 = center + static_cast<int>(std::lround(slit_right));
    if (x1 - w < 0 || x2 + w >= n) throw ContractViolation("two_slit: slit windows leave the grid");
    if (x1 + w >= x2 - w) throw ContractViolation("two_slit: slit windows overlap");

    // Emitted state: the two truncated Gaussian branches that survive the
    // aperture, normalized on parse.
    const double c1 = center + slit_left, c2 = center + slit_right;
    Vector psi = Vector::Zero(n);
    for (int x = x1 - w; x <= x1 + w; ++x) psi(x) = std::exp(-(x - c1) * (x - c1) / (4.0 * sigma * sigma));
    for (int x = x2 - w; x <= x2 + w; ++x) psi(x) = std::exp(-(x - c2) * (x - c2) / (4.0 * sigma * sigma));

    // Free lattice Hamiltonian (2 - S - S^dag)/2 with periodic wrap.
    Matrix h = Matrix::Zero(n, n);
    for (int x = 0; x < n; ++x) {
        h(x, x) = 1.0;
        h(x, (x + 1) % n) -= 0.5;
        h((x + 1) % n, x) -= 0.5;
    }

    auto window = [&](int lo, int hi) {
        std::vector<Vector> vs;
        for (int x = lo; x <= hi; ++x) vs.push_back(onehot(n, x));
        return vs;
    };
    std::vector<Vector> absorbed;
    for (int x = 0; x < n; ++x)
        if (!(x >= x1 - w && x <= x1 + w) && !(x >= x2 - w && x <= x2 + w))
            absorbed.push_back(onehot(n, x));

    Json bins_members = Json::array();
    const int per = n / bins;
    int width = static_cast<int>(std::to_string(bins - 1).size());
    for (int j = 0; j < bins; ++j) {
        char label[32];
        std::snprintf(label, sizeof label, "bin%0*d", width, j);
        bins_members.push_back(member_span(label, window(j * per, (j + 1) * per - 1)));
    }

    Json doc;
    doc["name"] = "two-slit";
    doc["dimension"] = n;
    doc["t0"] = 0.0;
    doc["times"] = Json::array({0.0, flight});
    doc["state"] = Json{{"kind", "pure"}, {"vector", json_from_vector(psi)}};
    doc["dynamics"] = Json{{"kind", "generator"}, {"matrix", json_from_matrix(h)}};
    doc["decompositions"] = Json::array({
        Json{{"name", "slits"},
             {"time_index", 1},
             {"members", Json::array({member_span("delta1", window(x1 - w, x1 + w)),
                                      member_span("delta2", window(x2 - w, x2 + w)),
                                      member_span("absorbed", absorbed)})}},
        Json{{"name", "union"},
             {"time_index", 1},
             {"members", Json::array({[&] {
                              auto vs = window(x1 - w, x1 + w);
                              auto more = window(x2 - w, x2 + w);
                              vs.insert(vs.end(), more.begin(), more.end());
                              return member_span("slits_open", vs);
                          }(),
                          member_span("absorbed", absorbed)})}},
        Json{{"name", "bins"}, {"time_index", 2}, {"members", bins_members}},
    });
    doc["families"] = Json::array({
        Json{{"name", "onetime"}, {"slices", Json::array({"slits"})}},
        Json{{"name", "union"}, {"slices", Json::array({"union", "bins"})}},
        Json{{"name", "twotimes"}, {"slices", Json::array({"slits", "bins"})}},
    });
    doc["queries"] = Json::array({
        Json{{"op", "check"}, {"family", "onetime"}, {"mode", "medium"}},
        Json{{"op", "check"}, {"family", "union"}, {"mode", "medium"}},
        Json{{"op", "check"}, {"family", "twotimes"}, {"mode", "medium"}},
        Json{{"op", "additivity"}, {"family", "twotimes"}},
        Json{{"op", "fringe"}, {"family", "union"}, {"through", "@1:10"}},
    });
    doc["expected"] = Json::array({
        expect(0, "/passed", "eq", true),
        expect(1, "/passed", "eq", true),
        expect(2, "/passed", "eq", false),
        expect(2, "/degree", "gt", 1e-3),
        expect(3, "/max_discrepancy", "gt", 0.01),
        expect(3, "/within_tolerance", "eq", false),
        expect(4, "/maxima", "ge", 3),
        expect(4, "/visibility", "gt", 0.2),
    });
    return materialize_scenario(std::move(doc));
}

Scenario three_box() {
    Json doc;
    doc["name"] = "three-box";
    doc["dimension"] = 3;
    doc["t0"] = 0.0;
    doc["times"] = Json::array({1.0, 2.0});
    doc["state"] = Json{{"kind", "pure"}, {"vector", Json::array({1.0, 1.0, 1.0})}};
    doc["dynamics"] = Json{{"kind", "trivial"}};

    Vector e0 = onehot(3, 0), e1 = onehot(3, 1), e2 = onehot(3, 2);
    Vector phi(3), u1(3), u2(3);
    phi << 1.0, 1.0, -1.0;
    u1 << 1.0, -1.0, 0.0;  // orthogonal complement of phi
    u2 << 1.0, 1.0, 2.0;

    doc["decompositions"] = Json::array({
        Json{{"name", "boxA"},
             {"time_index", 1},
             {"members", Json::array({member_span("A", {e0}), member_span("notA", {e1, e2})})}},
        Json{{"name", "boxB"},
             {"time_index", 1},
             {"members", Json::array({member_span("B", {e1}), member_span("notB", {e0, e2})})}},
        Json{{"name", "post"},
             {"time_index", 2},
             {"members", Json::array({member_span("phi", {phi}), member_span("notphi", {u1, u2})})}},
    });
    doc["families"] = Json::array({
        Json{{"name", "boxA"}, {"slices", Json::array({"boxA", "post"})}},
        Json{{"name", "boxB"}, {"slices", Json::array({"boxB", "post"})}},
    });
    doc["queries"] = Json::array({
        Json{{"op", "check"}, {"family", "boxA"}, {"mode", "medium"}},
        Json{{"op", "check"}, {"family", "boxB"}, {"mode", "medium"}},
        Json{{"op", "implies"}, {"family", "boxA"}, {"a", "@2:phi"}, {"b", "@1:A;@2:phi"}},
        Json{{"op", "implies"}, {"family", "boxB"}, {"a", "@2:phi"}, {"b", "@1:B;@2:phi"}},
        Json{{"op", "prob"}, {"family", "boxA"}, {"history", "@2:phi"}},
        Json{{"op", "conjoin"}, {"family", "boxA"}, {"a", "@1:A"}, {"b", "@1:B"}, {"b_family", "boxB"}},
        Json{{"op", "contrary"},
             {"a_family", "boxA"},
             {"a", "@1:A"},
             {"b_family", "boxB"},
             {"b", "@1:B"},
             {"slice", 1}},
    });
    doc["expected"] = Json::array({
        expect(0, "/passed", "eq", true),
        expect(1, "/passed", "eq", true),
        expect(2, "/verdict", "eq", "holds"),
        expect_approx(2, "/ratio", 1.0, 1e-9),
        expect(3, "/verdict", "eq", "holds"),
        expect_approx(3, "/ratio", 1.0, 1e-9),
        expect_approx(4, "/p", 1.0 / 9.0, 1e-9),
        expect(5, "/error_kind", "eq", "single-family-violation"),
        expect(6, "/contrary", "eq", true),
        expect(6, "/product_norm", "le", 1e-10),
        expect(6, "/complement_gap", "ge", 0.5),
    });
    return materialize_scenario(std::move(doc));
}

namespace {

// Middle (m = 0) eigenvector of a spin component, phase-fixed so the
// largest-magnitude entry is real positive.
Vector m0_eigenvector(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    if (es.info() != Eigen::Success) throw std::logic_error("internal: spin eigensolver failed");
    Vector v = es.eigenvectors().col(1);
    if (std::abs(es.eigenvalues()(1)) > 1e-12)
        throw std::logic_error("internal: middle spin eigenvalue is not 0");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(best))) best = i;
    v *= std::conj(v(best)) / std::abs(v(best));
    if (max_norm(s * v) > 1e-12) throw std::logic_error("internal: m=0 eigenvector check failed");
    return v;
}

std::string degree_tag(double theta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", theta * 180.0 / std::numbers::pi);
    return buf;
}

}  // namespace

Scenario spin1_chain(const std::vector<double>& thetas) {
    if (thetas.empty()) throw ContractViolation("spin1_chain: need at least one rotation angle");
    for (double t : thetas)
        if (!(t > 0.0) || !(t < std::numbers::pi / 2))
            throw ContractViolation("spin1_chain: rotation angle must lie strictly between 0 and pi/2");
    for (std::size_t i = 0; i < thetas.size(); ++i)
        for (std::size_t j = i + 1; j < thetas.size(); ++j)
            if (std::abs(thetas[i] - thetas[j]) < 1e-12)
                throw ContractViolation("spin1_chain: rotation angles must be pairwise distinct");

    const double isq = 1.0 / std::numbers::sqrt2;
    const Complex im(0.0, 1.0);
    Matrix sx = Matrix::Zero(3, 3), sy = Matrix::Zero(3, 3), sz = Matrix::Zero(3, 3);
    sx(0, 1) = sx(1, 0) = sx(1, 2) = sx(2, 1) = isq;
    sy(0, 1) = -im * isq;
    sy(1, 0) = im * isq;
    sy(1, 2) = -im * isq;
    sy(2, 1) = im * isq;
    sz(0, 0) = 1.0;
    sz(2, 2) = -1.0;

    // alpha, beta, gamma: m = 0 rays along z, y, x (the squared-component
    // observables share them as 0-eigenvectors).
    Vector alpha = m0_eigenvector(sz);
    Vector beta = m0_eigenvector(sy);
    Vector gamma = m0_eigenvector(sx);

    RaySet rs;
    rs.dim = 3;
    rs.rays.push_back(Ray{"alpha", alpha});
    rs.rays.push_back(Ray{"beta", beta});
    rs.rays.push_back(Ray{"gamma", gamma});
    rs.bases.push_back({0, 1, 2});

    std::vector<std::string> tags;
    for (double theta : thetas) {
        Matrix rot = propagator(sz, theta);
        std::string tag = degree_tag(theta);
        tags.push_back(tag);
        int base = static_cast<int>(rs.rays.size());
        rs.rays.push_back(Ray{"beta_" + tag, Vector(rot * beta)});
        rs.rays.push_back(Ray{"gamma_" + tag, Vector(rot * gamma)});
        rs.bases.push_back({0, base, base + 1});
    }

    Json doc;
    doc["name"] = "spin1-chain";
    doc["dimension"] = 3;
    doc["t0"] = 0.0;
    doc["times"] = Json::array({1.0});
    doc["state"] = Json{{"kind", "density"}, {"matrix", json_from_matrix(Matrix::Identity(3, 3) / 3.0)}};
    doc["dynamics"] = Json{{"kind", "trivial"}};

    Json decs = Json::array();
    Json fams = Json::array();
    decs.push_back(Json{{"name", "xyz"},
                        {"time_index", 1},
                        {"members", Json::array({member_span("alpha", {alpha}), member_span("beta", {beta}),
                                                 member_span("gamma", {gamma})})}});
    fams.push_back(Json{{"name", "xyz"}, {"slices", Json::array({"xyz"})}});
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const std::string& tag = tags[k];
        const Vector& b = rs.rays[3 + 2 * k].components;
        const Vector& g = rs.rays[4 + 2 * k].components;
        decs.push_back(Json{{"name", "xyz_" + tag},
                            {"time_index", 1},
                            {"members", Json::array({member_span("alpha", {alpha}),
                                                     member_span("beta_" + tag, {b}),
                                                     member_span("gamma_" + tag, {g})})}});
        fams.push_back(Json{{"name", "xyz_" + tag}, {"slices", Json::array({"xyz_" + tag})}});
    }
    doc["decompositions"] = std::move(decs);
    doc["families"] = std::move(fams);

    Json renames;
    renames["sigma2_x"] = Json::array({"alpha", "beta"});
    renames["sigma2_y"] = Json::array({"alpha", "gamma"});
    renames["sigma2_z"] = Json::array({"beta", "gamma"});
    for (const auto& tag : tags) {
        renames["sigma2_x_" + tag] = Json::array({"alpha", "beta_" + tag});
        renames["sigma2_y_" + tag] = Json::array({"alpha", "gamma_" + tag});
    }
    doc["contexts"] = Json{{"rays", serialize_rayset(rs)}, {"build", "pba"}, {"renames", renames}};

    Json queries = Json::array();
    Json expected = Json::array();
    queries.push_back(Json{{"op", "check"}, {"family", "xyz"}, {"mode", "medium"}});
    expected.push_back(expect(0, "/passed", "eq", true));
    for (std::size_t k = 0; k < tags.size(); ++k) {
        queries.push_back(Json{{"op", "check"}, {"family", "xyz_" + tags[k]}, {"mode", "medium"}});
        expected.push_back(expect(static_cast<int>(k + 1), "/passed", "eq", true));
    }
    int qprop = static_cast<int>(queries.size());
    queries.push_back(Json{{"op", "propagate"}, {"seed", Json{{"alpha", 1}}}});
    expected.push_back(expect(qprop, "/conflict", "eq", false));
    expected.push_back(expect(qprop, "/forced/alpha", "eq", 1));
    expected.push_back(expect(qprop, "/forced/sigma2_x", "eq", 1));
    expected.push_back(expect(qprop, "/forced/sigma2_y", "eq", 1));
    expected.push_back(expect(qprop, "/forced/sigma2_z", "eq", 0));
    for (const auto& tag : tags) {
        expected.push_back(expect(qprop, "/forced/beta_" + tag, "eq", 0));
        expected.push_back(expect(qprop, "/forced/gamma_" + tag, "eq", 0));
        expected.push_back(expect(qprop, "/forced/sigma2_x_" + tag, "eq", 1));
        expected.push_back(expect(qprop, "/forced/sigma2_y_" + tag, "eq", 1));
    }
    int qax = static_cast<int>(queries.size());
    queries.push_back(Json{{"op", "axioms"}});
    expected.push_back(expect(qax, "/all_passed", "eq", true));
    doc["queries"] = std::move(queries);
    doc["expected"] = std::move(expected);
    return materialize_scenario(std::move(doc));
}

ContextSet ks_dataset(const std::string& name) { return context_set_from_rays(load_rayset(name)); }

const std::vector<std::string>& demo_names() {
    static const std::vector<std::string> names = {"spin-half", "two-slit", "three-box", "spin1-chain",
                                                   "ks"};
    return names;
}

Scenario demo_scenario(const std::string& name) {
    if (name == "spin-half") return spin_half();
    if (name == "two-slit") return two_slit();
    if (name == "three-box") return three_box();
    if (name == "spin1-chain") return spin1_chain();
    std::string known;
    for (const auto& n : demo_names()) known += (known.empty() ? "" : ", ") + n;
    throw ContractViolation("no bundled scenario named '" + name + "' (demos: " + known + ")");
}

}  // namespace histkit
