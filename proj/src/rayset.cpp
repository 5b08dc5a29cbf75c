#include "histkit/rayset.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace histkit {

namespace {

double parse_real(const std::string& s, int line_no) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        used = std::string::npos;
    }
    if (used != s.size())
        throw ValidationError("ray file line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return x;
}

Complex parse_component(const std::string& tok, int line_no) {
    if (tok.empty() || (tok.back() != 'i' && tok.back() != 'I')) return {parse_real(tok, line_no), 0.0};
    std::string body = tok.substr(0, tok.size() - 1);
    // split at the last +/- that is not an exponent sign and not leading
    std::size_t split = std::string::npos;
    for (std::size_t p = body.size(); p-- > 1;) {
        if ((body[p] == '+' || body[p] == '-') && body[p - 1] != 'e' && body[p - 1] != 'E') {
            split = p;
            break;
        }
    }
    if (split == std::string::npos) return {0.0, parse_real(body, line_no)};
    return {parse_real(body.substr(0, split), line_no), parse_real(body.substr(split), line_no)};
}

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_component(Complex z) {
    if (z.imag() == 0.0) return format_real(z.real());
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
    return buf;
}

}  // namespace

RaySet parse_rayset(const std::string& text) {
    RaySet rs;
    std::map<std::string, int> index;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::pair<int, std::vector<std::string>>> basis_lines;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind) || kind[0] == '#') continue;
        if (kind == "ray") {
            std::string id;
            if (!(ls >> id))
                throw ValidationError("ray file line " + std::to_string(line_no) + ": missing ray id");
            if (index.count(id))
                throw ValidationError("ray file line " + std::to_string(line_no) + ": duplicate ray id '" +
                                      id + "'");
            std::vector<Complex> comps;
            std::string tok;
            while (ls >> tok) comps.push_back(parse_component(tok, line_no));
            if (comps.empty())
                throw ValidationError("ray file line " + std::to_string(line_no) + ": ray '" + id +
                                      "' has no components");
            if (rs.dim == 0) rs.dim = static_cast<int>(comps.size());
            if (static_cast<int>(comps.size()) != rs.dim)
                throw ValidationError("ray file line " + std::to_string(line_no) + ": ray '" + id +
                                      "' has " + std::to_string(comps.size()) + " components, expected " +
                                      std::to_string(rs.dim));
            Vector v(rs.dim);
            for (int k = 0; k < rs.dim; ++k) v(k) = comps[static_cast<std::size_t>(k)];
            double n = v.norm();
            if (n == 0.0)
                throw ValidationError("ray file line " + std::to_string(line_no) + ": ray '" + id +
                                      "' is the zero vector");
            index[id] = static_cast<int>(rs.rays.size());
            rs.rays.push_back({id, v / n});
        } else if (kind == "basis") {
            std::vector<std::string> ids;
            std::string id;
            while (ls >> id) ids.push_back(id);
            basis_lines.emplace_back(line_no, std::move(ids));
        } else {
            throw ValidationError("ray file line " + std::to_string(line_no) + ": unknown record '" +
                                  kind + "'");
        }
    }
    if (rs.rays.empty()) throw ValidationError("ray file defines no rays");

    for (auto& [bline, ids] : basis_lines) {
        std::string basis_name;
        for (const auto& id : ids) basis_name += (basis_name.empty() ? "" : " ") + id;
        if (static_cast<int>(ids.size()) != rs.dim)
            throw ValidationError("ray file line " + std::to_string(bline) + ": basis (" + basis_name +
                                  ") has " + std::to_string(ids.size()) + " members, expected " +
                                  std::to_string(rs.dim));
        std::vector<int> basis;
        for (const auto& id : ids) {
            auto it = index.find(id);
            if (it == index.end())
                throw ValidationError("ray file line " + std::to_string(bline) + ": unknown ray id '" +
                                      id + "'");
            basis.push_back(it->second);
        }
        for (std::size_t i = 0; i < basis.size(); ++i)
            for (std::size_t j = i + 1; j < basis.size(); ++j) {
                double ov = std::abs(rs.rays[basis[i]].components.dot(rs.rays[basis[j]].components));
                if (!(ov <= kRayOrthoEps))
                    throw ValidationError("ray file line " + std::to_string(bline) + ": basis (" +
                                          basis_name + ") is not orthogonal: |<" + ids[i] + "|" + ids[j] +
                                          ">| = " + format_real(ov) + " exceeds " +
                                          format_real(kRayOrthoEps));
            }
        rs.bases.push_back(std::move(basis));
    }
    return rs;
}

std::string serialize_rayset(const RaySet& rs) {
    std::string out;
    for (const auto& r : rs.rays) {
        out += "ray " + r.id;
        for (Eigen::Index k = 0; k < r.components.size(); ++k)
            out += " " + format_component(r.components(k));
        out += "\n";
    }
    for (const auto& b : rs.bases) {
        out += "basis";
        for (int idx : b) out += " " + rs.rays[static_cast<std::size_t>(idx)].id;
        out += "\n";
    }
    return out;
}

ContextSet context_set_from_rays(const RaySet& rs, const Tolerances& tol) {
    std::vector<OneTimeHistory> elements;
    elements.reserve(rs.rays.size());
    for (const auto& r : rs.rays) elements.push_back({projector_onto(r.components), 0.0, r.id});
    // sums of d near-orthogonal rank-1 projectors reach identity only within
    // about d times the ray tolerance, hence the widened context threshold
    double context_eps = std::max(tol.eps_structure, 4.0 * rs.dim * kRayOrthoEps);
    return make_context_set(std::move(elements), rs.bases, tol, context_eps);
}

}  // namespace histkit
