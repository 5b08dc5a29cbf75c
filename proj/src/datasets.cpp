#include "histkit/rayset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

// Generated by tools/make_datasets.py -- do not edit by hand.

namespace histkit {

namespace {

constexpr const char* k_cabello18 = R"RAYS(# 18 rays / 9 bases in dimension 4; admits no {0,1} coloring
ray v1 0 0 0 1
ray v2 0 0 1 0
ray v3 1 1 0 0
ray v4 1 -1 0 0
ray v5 0 1 0 0
ray v6 1 0 1 0
ray v7 1 0 -1 0
ray v8 1 -1 1 -1
ray v9 1 -1 -1 1
ray v10 0 0 1 1
ray v11 1 1 1 1
ray v12 0 1 0 -1
ray v13 1 0 0 1
ray v14 1 0 0 -1
ray v15 0 1 -1 0
ray v16 1 1 -1 1
ray v17 1 1 1 -1
ray v18 -1 1 1 1
basis v1 v2 v3 v4
basis v1 v5 v6 v7
basis v8 v9 v3 v10
basis v8 v11 v7 v12
basis v2 v5 v13 v14
basis v9 v11 v14 v15
basis v16 v17 v4 v10
basis v16 v18 v6 v12
basis v17 v18 v13 v15
)RAYS";

constexpr const char* k_peres33 = R"RAYS(# 33 rays in dimension 3 with their complete orthogonal triads
ray p1 1 0 0
ray p2 0 1 0
ray p3 0 0 1
ray p4 0 1 1
ray p5 0 1 -1
ray p6 1 0 1
ray p7 1 0 -1
ray p8 1 1 0
ray p9 1 -1 0
ray p10 0 1.4142135623730951 1
ray p11 0 1.4142135623730951 -1
ray p12 0 1 1.4142135623730951
ray p13 0 1 -1.4142135623730951
ray p14 1.4142135623730951 0 1
ray p15 1.4142135623730951 0 -1
ray p16 1 0 1.4142135623730951
ray p17 1 0 -1.4142135623730951
ray p18 1.4142135623730951 1 0
ray p19 1.4142135623730951 -1 0
ray p20 1 1.4142135623730951 0
ray p21 1 -1.4142135623730951 0
ray p22 1.4142135623730951 1 1
ray p23 1.4142135623730951 1 -1
ray p24 1.4142135623730951 -1 1
ray p25 1.4142135623730951 -1 -1
ray p26 1 1.4142135623730951 1
ray p27 1 1.4142135623730951 -1
ray p28 1 -1.4142135623730951 -1
ray p29 1 -1.4142135623730951 1
ray p30 1 1 1.4142135623730951
ray p31 1 -1 1.4142135623730951
ray p32 1 -1 -1.4142135623730951
ray p33 1 1 -1.4142135623730951
basis p1 p2 p3
basis p1 p4 p5
basis p1 p10 p13
basis p1 p11 p12
basis p2 p6 p7
basis p2 p14 p17
basis p2 p15 p16
basis p3 p8 p9
basis p3 p18 p21
basis p3 p19 p20
basis p4 p23 p24
basis p5 p22 p25
basis p6 p27 p28
basis p7 p26 p29
basis p8 p31 p32
basis p9 p30 p33
)RAYS";

constexpr const char* k_spin1_chain = R"RAYS(# spin-1 m=0 triples sharing the z ray, rotated about z
ray alpha 0 1 0
ray beta 0.7071067811865475 0 0.7071067811865475
ray gamma 0.7071067811865475 0 -0.7071067811865475
ray beta_15 0.6830127018922193-0.1830127018922193i 0 0.6830127018922193+0.1830127018922193i
ray gamma_15 0.6830127018922193-0.1830127018922193i 0 -0.6830127018922193-0.1830127018922193i
ray beta_30 0.6123724356957945-0.35355339059327368i 0 0.6123724356957945+0.35355339059327368i
ray gamma_30 0.6123724356957945-0.35355339059327368i 0 -0.6123724356957945-0.35355339059327368i
ray beta_45 0.5-0.49999999999999989i 0 0.5+0.49999999999999989i
ray gamma_45 0.5-0.49999999999999989i 0 -0.5-0.49999999999999989i
ray beta_60 0.3535533905932738-0.61237243569579447i 0 0.3535533905932738+0.61237243569579447i
ray gamma_60 0.3535533905932738-0.61237243569579447i 0 -0.3535533905932738-0.61237243569579447i
ray beta_75 0.1830127018922193-0.6830127018922193i 0 0.1830127018922193+0.6830127018922193i
ray gamma_75 0.1830127018922193-0.6830127018922193i 0 -0.1830127018922193-0.6830127018922193i
basis alpha beta gamma
basis alpha beta_15 gamma_15
basis alpha beta_30 gamma_30
basis alpha beta_45 gamma_45
basis alpha beta_60 gamma_60
basis alpha beta_75 gamma_75
)RAYS";

struct Entry {
    const char* name;
    const char* text;
};

constexpr Entry kBundled[] = {
    {"cabello18", k_cabello18},
    {"peres33", k_peres33},
    {"spin1-chain", k_spin1_chain},
};

}  // namespace

const std::vector<std::string>& bundled_rayset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& e : kBundled) out.emplace_back(e.name);
        return out;
    }();
    return names;
}

std::string bundled_rayset_text(const std::string& name) {
    for (const auto& e : kBundled)
        if (name == e.name) return e.text;
    throw ContractViolation("no bundled ray set named '" + name + "'");
}

RaySet load_rayset(const std::string& name_or_path) {
    for (const auto& e : kBundled)
        if (name_or_path == e.name) return parse_rayset(e.text);
    if (std::filesystem::exists(name_or_path)) {
        std::ifstream in(name_or_path);
        if (!in) throw ValidationError("cannot read ray file '" + name_or_path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_rayset(buf.str());
    }
    if (name_or_path.size() > 5 && name_or_path.ends_with(".rays")) {
        std::string stem = name_or_path.substr(0, name_or_path.size() - 5);
        for (const auto& e : kBundled)
            if (stem == e.name) return parse_rayset(e.text);
    }
    std::string names;
    for (const auto& e : kBundled) names += std::string(names.empty() ? "" : ", ") + e.name;
    throw ContractViolation("ray set '" + name_or_path + "' is neither a bundled name (" + names +
                            ") nor an existing file");
}

}  // namespace histkit
