#!/usr/bin/env python3
"""Regenerates the bundled ray-set files and src/datasets.cpp.

The ray sets are standard Kochen–Specker test data: Cabello's 18-vector /
9-basis set in dimension 4, the Peres 33-ray set in dimension 3 (orthogonal
triads computed here), and shared-axis spin-1 triple pairs at several
rotation angles.
"""

import itertools
import math
import os
import sys

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)

ORTHO_EPS = 1e-12


def fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e6:
        return str(int(x))
    return repr(float(x))


def fmt_component(z: complex) -> str:
    if isinstance(z, (int, float)) or z.imag == 0:
        return fmt_real(float(np.real(z)))
    return f"{fmt_real(z.real)}{z.imag:+.17g}i"


def rayset_text(rays, bases, header):
    lines = [f"# {header}"]
    for rid, v in rays:
        lines.append("ray " + rid + " " + " ".join(fmt_component(c) for c in v))
    for basis in bases:
        lines.append("basis " + " ".join(basis))
    return "\n".join(lines) + "\n"


def check_bases(rays, bases):
    vecs = {rid: np.asarray(v, dtype=complex) for rid, v in rays}
    for basis in bases:
        for a, b in itertools.combinations(basis, 2):
            ova = abs(np.vdot(vecs[a] / np.linalg.norm(vecs[a]), vecs[b] / np.linalg.norm(vecs[b])))
            assert ova < 1e-10, (basis, a, b, ova)


def cabello18():
    v = {
        "v1": (0, 0, 0, 1), "v2": (0, 0, 1, 0), "v3": (1, 1, 0, 0), "v4": (1, -1, 0, 0),
        "v5": (0, 1, 0, 0), "v6": (1, 0, 1, 0), "v7": (1, 0, -1, 0), "v8": (1, -1, 1, -1),
        "v9": (1, -1, -1, 1), "v10": (0, 0, 1, 1), "v11": (1, 1, 1, 1), "v12": (0, 1, 0, -1),
        "v13": (1, 0, 0, 1), "v14": (1, 0, 0, -1), "v15": (0, 1, -1, 0), "v16": (1, 1, -1, 1),
        "v17": (1, 1, 1, -1), "v18": (-1, 1, 1, 1),
    }
    bases = [
        ["v1", "v2", "v3", "v4"], ["v1", "v5", "v6", "v7"], ["v8", "v9", "v3", "v10"],
        ["v8", "v11", "v7", "v12"], ["v2", "v5", "v13", "v14"], ["v9", "v11", "v14", "v15"],
        ["v16", "v17", "v4", "v10"], ["v16", "v18", "v6", "v12"], ["v17", "v18", "v13", "v15"],
    ]
    rays = [(rid, v[rid]) for rid in sorted(v, key=lambda s: int(s[1:]))]
    check_bases(rays, bases)
    counts = {rid: sum(rid in b for b in bases) for rid, _ in rays}
    assert all(c == 2 for c in counts.values()), counts
    return rays, bases


def peres33():
    s = math.sqrt(2.0)
    cand = []
    # axes
    for i in range(3):
        v = [0.0, 0.0, 0.0]
        v[i] = 1.0
        cand.append(tuple(v))
    # one zero, two unit entries
    for zero in range(3):
        for sign in (1.0, -1.0):
            v = [1.0, 1.0, 1.0]
            v[zero] = 0.0
            v[(zero + 2) % 3] = sign
            cand.append(tuple(v))
    # one zero, one unit, one sqrt2
    for zero in range(3):
        others = [k for k in range(3) if k != zero]
        for big in others:
            small = [k for k in others if k != big][0]
            for sign in (1.0, -1.0):
                v = [0.0, 0.0, 0.0]
                v[big] = sign * s
                v[small] = 1.0
                cand.append(tuple(v))
    # two unit entries, one sqrt2
    for big in range(3):
        others = [k for k in range(3) if k != big]
        for s1 in (1.0, -1.0):
            for s2 in (1.0, -1.0):
                v = [0.0, 0.0, 0.0]
                v[big] = s
                v[others[0]] = s1
                v[others[1]] = s2
                cand.append(tuple(v))
    # canonical sign: first nonzero positive
    def canon(v):
        for c in v:
            if abs(c) > 1e-12:
                if c < 0:
                    return tuple(-x for x in v)
                return tuple(v)
        raise AssertionError

    uniq = []
    for v in map(canon, cand):
        if not any(np.allclose(v, u, atol=1e-12) for u in uniq):
            uniq.append(v)
    assert len(uniq) == 33, len(uniq)

    arr = [np.asarray(v) / np.linalg.norm(v) for v in uniq]
    triads = []
    for i, j, k in itertools.combinations(range(33), 3):
        if (
            abs(float(arr[i] @ arr[j])) < ORTHO_EPS
            and abs(float(arr[i] @ arr[k])) < ORTHO_EPS
            and abs(float(arr[j] @ arr[k])) < ORTHO_EPS
        ):
            triads.append((i, j, k))
    covered = set(itertools.chain.from_iterable(triads))
    assert covered == set(range(33)), sorted(set(range(33)) - covered)

    ids = [f"p{n+1}" for n in range(33)]
    rays = [(ids[n], uniq[n]) for n in range(33)]
    bases = [[ids[i], ids[j], ids[k]] for i, j, k in triads]
    check_bases(rays, bases)
    print(f"peres33: {len(triads)} complete triads, all 33 rays covered")
    return rays, bases


def spin1_chain(angles_deg=(15, 30, 45, 60, 75)):
    isq = 1.0 / math.sqrt(2.0)
    rays = [
        ("alpha", (0.0, 1.0, 0.0)),
        ("beta", (isq, 0.0, isq)),
        ("gamma", (isq, 0.0, -isq)),
    ]
    bases = [["alpha", "beta", "gamma"]]
    for deg in angles_deg:
        th = math.radians(deg)
        e_m = complex(math.cos(th), -math.sin(th)) * isq
        e_p = complex(math.cos(th), math.sin(th)) * isq
        rays.append((f"beta_{deg}", (e_m, 0.0, e_p)))
        rays.append((f"gamma_{deg}", (e_m, 0.0, -e_p)))
        bases.append(["alpha", f"beta_{deg}", f"gamma_{deg}"])
    check_bases(rays, bases)
    return rays, bases


CPP_TEMPLATE = """#include "histkit/rayset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

// Generated by tools/make_datasets.py -- do not edit by hand.

namespace histkit {{

namespace {{

{literals}

struct Entry {{
    const char* name;
    const char* text;
}};

constexpr Entry kBundled[] = {{
{entries}
}};

}}  // namespace

const std::vector<std::string>& bundled_rayset_names() {{
    static const std::vector<std::string> names = [] {{
        std::vector<std::string> out;
        for (const auto& e : kBundled) out.emplace_back(e.name);
        return out;
    }}();
    return names;
}}

std::string bundled_rayset_text(const std::string& name) {{
    for (const auto& e : kBundled)
        if (name == e.name) return e.text;
    throw ContractViolation("no bundled ray set named '" + name + "'");
}}

RaySet load_rayset(const std::string& name_or_path) {{
    for (const auto& e : kBundled)
        if (name_or_path == e.name) return parse_rayset(e.text);
    if (std::filesystem::exists(name_or_path)) {{
        std::ifstream in(name_or_path);
        if (!in) throw ValidationError("cannot read ray file '" + name_or_path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_rayset(buf.str());
    }}
    if (name_or_path.size() > 5 && name_or_path.ends_with(".rays")) {{
        std::string stem = name_or_path.substr(0, name_or_path.size() - 5);
        for (const auto& e : kBundled)
            if (stem == e.name) return parse_rayset(e.text);
    }}
    std::string names;
    for (const auto& e : kBundled) names += std::string(names.empty() ? "" : ", ") + e.name;
    throw ContractViolation("ray set '" + name_or_path + "' is neither a bundled name (" + names +
                            ") nor an existing file");
}}

}}  // namespace histkit
"""


def main():
    sets = {
        "cabello18": cabello18(),
        "peres33": peres33(),
        "spin1-chain": spin1_chain(),
    }
    headers = {
        "cabello18": "18 rays / 9 bases in dimension 4; admits no {0,1} coloring",
        "peres33": "33 rays in dimension 3 with their complete orthogonal triads",
        "spin1-chain": "spin-1 m=0 triples sharing the z ray, rotated about z",
    }
    os.makedirs(os.path.join(ROOT, "data"), exist_ok=True)
    texts = {}
    for name, (rays, bases) in sets.items():
        text = rayset_text(rays, bases, headers[name])
        texts[name] = text
        path = os.path.join(ROOT, "data", f"{name}.rays")
        with open(path, "w") as f:
            f.write(text)
        print(f"wrote {path}: {len(rays)} rays, {len(bases)} bases")

    literals = []
    entries = []
    for name, text in texts.items():
        var = "k_" + name.replace("-", "_")
        literals.append(f'constexpr const char* {var} = R"RAYS({text})RAYS";')
        entries.append(f'    {{"{name}", {var}}},')
    cpp = CPP_TEMPLATE.format(literals="\n\n".join(literals), entries="\n".join(entries))
    cpp_path = os.path.join(ROOT, "src", "datasets.cpp")
    with open(cpp_path, "w") as f:
        f.write(cpp)
    print(f"wrote {cpp_path}")


if __name__ == "__main__":
    sys.exit(main())
