#include "histkit/hislogic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace histkit {

namespace {

Matrix identity_like(const Matrix& m) { return Matrix::Identity(m.rows(), m.cols()); }

std::string time_mismatch_msg(const OneTimeHistory& a, const OneTimeHistory& b) {
    std::ostringstream os;
    os << "one-time connective across different instants (" << a.time << " vs " << b.time << ")";
    return os.str();
}

}  // namespace

OneTimeHistory combine(const OneTimeHistory& a, const OneTimeHistory& b, Connective op,
                       const Tolerances& tol) {
    if (a.projector.rows() != b.projector.rows())
        throw ContractViolation("combine: operand dimensions differ");
    if (a.time != b.time) throw ContractViolation(time_mismatch_msg(a, b));
    if (!commutes(a.projector, b.projector, tol))
        throw IncommensurableError("no common family: projectors of '" + a.label + "' and '" + b.label +
                                   "' do not commute");
    OneTimeHistory out;
    out.time = a.time;
    if (op == Connective::conjunction) {
        out.projector = a.projector * b.projector;
        out.label = "(" + a.label + "&" + b.label + ")";
    } else {
        out.projector = a.projector + b.projector - a.projector * b.projector;
        out.label = "(" + a.label + "|" + b.label + ")";
    }
    return out;
}

OneTimeHistory negate(const OneTimeHistory& a) {
    return {identity_like(a.projector) - a.projector, a.time, "!" + a.label};
}

History conjoin_histories(const History& a, const History& b, const Family& f, const Tolerances& tol) {
    auto ma = express_in_family(a, f, tol);
    if (!ma)
        throw SingleFamilyViolation("history '" + a.label + "' is not a coarse graining of family '" +
                                    f.name + "'; no joint probability exists");
    auto mb = express_in_family(b, f, tol);
    if (!mb)
        throw SingleFamilyViolation("history '" + b.label + "' is not a coarse graining of family '" +
                                    f.name + "'; no joint probability exists");
    std::vector<Mask> conj(ma->size());
    for (std::size_t m = 0; m < ma->size(); ++m) {
        conj[m] = Mask((*ma)[m].size(), 0);
        for (std::size_t k = 0; k < conj[m].size(); ++k) conj[m][k] = (*ma)[m][k] & (*mb)[m][k];
    }
    return make_history(f, conj);
}

ImplicationReport implies(const History& a, const History& b, const Family& f, const Matrix& w,
                          const Tolerances& tol) {
    History ab = conjoin_histories(a, b, f, tol);
    auto ma = express_in_family(a, f, tol);  // success guaranteed by the line above
    ImplicationReport rep;
    rep.family_decoherent = check_family(f, w, ConsistencyMode::medium, tol).passed;
    rep.p_a = probability(make_history(f, *ma), f, w, tol);
    rep.p_ab = probability(ab, f, w, tol);
    if (!rep.family_decoherent || rep.p_a <= tol.eps_prob) {
        rep.verdict = ImplicationVerdict::undefined;
        return rep;
    }
    rep.ratio = rep.p_ab / rep.p_a;
    rep.verdict = std::abs(rep.ratio - 1.0) <= 10.0 * tol.eps_decoherence ? ImplicationVerdict::holds
                                                                          : ImplicationVerdict::fails;
    return rep;
}

int find_element(const ContextSet& c, const std::string& label) {
    for (std::size_t i = 0; i < c.elements.size(); ++i)
        if (c.elements[i].label == label) return static_cast<int>(i);
    return -1;
}

int find_element(const ContextSet& c, const Matrix& projector, double time, const Tolerances& tol) {
    for (std::size_t i = 0; i < c.elements.size(); ++i) {
        const auto& e = c.elements[i];
        if (e.time == time && e.projector.rows() == projector.rows() &&
            max_norm(e.projector - projector) <= tol.eps_structure)
            return static_cast<int>(i);
    }
    return -1;
}

namespace {

void validate_elements(const std::vector<OneTimeHistory>& elements, const Tolerances& tol) {
    if (elements.empty()) return;
    const Eigen::Index dim = elements.front().projector.rows();
    const double t = elements.front().time;
    for (const auto& e : elements) {
        if (e.projector.rows() != dim || e.projector.cols() != dim)
            throw ContractViolation("context-set elements must share one dimension ('" + e.label + "')");
        if (e.time != t)
            throw ContractViolation("context-set elements must share one time instant ('" + e.label + "')");
        if (!check_projector(e.projector, tol)) {
            std::ostringstream os;
            os << "element '" << e.label << "' is not a projector (hermiticity residual "
               << hermiticity_residual(e.projector) << ", idempotence residual "
               << idempotence_residual(e.projector) << ", threshold " << tol.eps_structure << ")";
            throw ValidationError(os.str());
        }
    }
}

// first-match deduplication; old-index -> new-index map
std::vector<int> dedup_elements(std::vector<OneTimeHistory>& elements, const Tolerances& tol) {
    std::vector<OneTimeHistory> unique;
    std::vector<int> remap(elements.size());
    for (std::size_t i = 0; i < elements.size(); ++i) {
        int hit = -1;
        for (std::size_t u = 0; u < unique.size(); ++u)
            if (elements[i].time == unique[u].time &&
                max_norm(elements[i].projector - unique[u].projector) <= tol.eps_structure) {
                hit = static_cast<int>(u);
                break;
            }
        if (hit < 0) {
            unique.push_back(std::move(elements[i]));
            hit = static_cast<int>(unique.size()) - 1;
        }
        remap[i] = hit;
    }
    elements = std::move(unique);
    return remap;
}

}  // namespace

ContextSet make_context_set(std::vector<OneTimeHistory> elements, std::vector<std::vector<int>> contexts,
                            const Tolerances& tol, double context_eps) {
    if (context_eps < 0.0) context_eps = tol.eps_structure;
    validate_elements(elements, tol);
    auto remap = dedup_elements(elements, tol);

    ContextSet c;
    c.elements = std::move(elements);
    c.dim = c.elements.empty() ? 0 : static_cast<int>(c.elements.front().projector.rows());

    std::vector<char> covered(c.elements.size(), 0);
    for (std::size_t k = 0; k < contexts.size(); ++k) {
        std::vector<int> ctx;
        for (int old : contexts[k]) {
            if (old < 0 || old >= static_cast<int>(remap.size()))
                throw ContractViolation("context references an element index out of range");
            ctx.push_back(remap[old]);
        }
        std::sort(ctx.begin(), ctx.end());
        for (std::size_t i = 1; i < ctx.size(); ++i)
            if (ctx[i] == ctx[i - 1])
                throw ValidationError("context " + std::to_string(k + 1) + " lists element '" +
                                      c.elements[ctx[i]].label + "' twice (or two copies of one ray)");
        Matrix sum = Matrix::Zero(c.dim, c.dim);
        double ortho = 0.0;
        for (std::size_t i = 0; i < ctx.size(); ++i) {
            sum += c.elements[ctx[i]].projector;
            for (std::size_t j = i + 1; j < ctx.size(); ++j)
                ortho = std::max(ortho,
                                 max_norm(c.elements[ctx[i]].projector * c.elements[ctx[j]].projector));
        }
        double sum_res = max_norm(sum - Matrix::Identity(c.dim, c.dim));
        if (!(sum_res <= context_eps) || !(ortho <= context_eps)) {
            std::ostringstream os;
            os << "context " << k + 1 << " is not an exhaustive exclusive decomposition (sum residual "
               << sum_res << ", orthogonality residual " << ortho << ", threshold " << context_eps << ")";
            throw ValidationError(os.str());
        }
        for (int e : ctx) covered[e] = 1;
        if (std::find(c.contexts.begin(), c.contexts.end(), ctx) == c.contexts.end())
            c.contexts.push_back(std::move(ctx));
    }
    for (std::size_t e = 0; e < covered.size(); ++e)
        if (!covered[e])
            throw ValidationError("element '" + c.elements[e].label + "' belongs to no context");
    return c;
}

ContextSet build_pba(const std::vector<OneTimeHistory>& elements, const Tolerances& tol,
                     std::size_t closure_cap) {
    ContextSet c;
    if (elements.empty()) {  // the two-element algebra over the trivial space
        c.dim = 1;
        c.elements.push_back({Matrix::Zero(1, 1), 0.0, "0"});
        c.elements.push_back({Matrix::Identity(1, 1), 0.0, "1"});
        return c;
    }
    validate_elements(elements, tol);
    c.elements = elements;
    dedup_elements(c.elements, tol);
    c.dim = static_cast<int>(c.elements.front().projector.rows());
    const double t = c.elements.front().time;
    const std::size_t n_input = c.elements.size();
    const Matrix id = Matrix::Identity(c.dim, c.dim);

    // contexts: every subset of nonzero inputs, pairwise orthogonal, summing
    // to the identity (such a set is automatically maximal)
    std::vector<char> nonzero(n_input);
    for (std::size_t i = 0; i < n_input; ++i)
        nonzero[i] = max_norm(c.elements[i].projector) > tol.eps_structure;
    std::vector<std::vector<char>> ortho(n_input, std::vector<char>(n_input, 0));
    for (std::size_t i = 0; i < n_input; ++i)
        for (std::size_t j = i + 1; j < n_input; ++j)
            ortho[i][j] = ortho[j][i] =
                max_norm(c.elements[i].projector * c.elements[j].projector) <= tol.eps_structure;

    std::vector<int> current;
    auto extend = [&](auto&& self, std::size_t start, const Matrix& sum) -> void {
        if (!current.empty() && max_norm(sum - id) <= tol.eps_structure) {
            c.contexts.push_back(current);
            return;
        }
        for (std::size_t k = start; k < n_input; ++k) {
            if (!nonzero[k]) continue;
            bool ok = true;
            for (int e : current)
                if (!ortho[static_cast<std::size_t>(e)][k]) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            current.push_back(static_cast<int>(k));
            self(self, k + 1, sum + c.elements[k].projector);
            current.pop_back();
        }
    };
    extend(extend, 0, Matrix::Zero(c.dim, c.dim));

    std::vector<char> covered(n_input, 0);
    for (const auto& ctx : c.contexts)
        for (int e : ctx) covered[static_cast<std::size_t>(e)] = 1;
    for (std::size_t e = 0; e < n_input; ++e) {
        // zero elements join the algebra through closure instead
        if (nonzero[e] && !covered[e])
            throw ValidationError("element '" + c.elements[e].label +
                                  "' belongs to no exhaustive orthogonal decomposition in the input");
    }

    // closure: 0 and 1, plus every coarse graining of every context
    auto add_element = [&](Matrix p, const std::string& label) {
        if (find_element(c, p, t, tol) >= 0) return;
        if (c.elements.size() >= closure_cap)
            throw EnumerationOverflow("partial-algebra closure exceeds cap of " +
                                      std::to_string(closure_cap) + " elements");
        c.elements.push_back({std::move(p), t, label});
    };
    add_element(Matrix::Zero(c.dim, c.dim), "0");
    add_element(id, "1");
    for (const auto& ctx : c.contexts) {
        const std::size_t k = ctx.size();
        if (k < 3) continue;  // all strict coarse grainings are the members themselves
        for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << k); ++mask) {
            if (std::popcount(mask) < 2) continue;
            Matrix q = Matrix::Zero(c.dim, c.dim);
            std::string label;
            for (std::size_t b = 0; b < k; ++b)
                if (mask & (std::uint64_t{1} << b)) {
                    q += c.elements[ctx[b]].projector;
                    if (!label.empty()) label += "+";
                    label += c.elements[ctx[b]].label;
                }
            add_element(std::move(q), label);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// constraint compilation shared by propagation and search

namespace {

struct Compiled {
    int n = 0;
    std::vector<std::pair<int, std::int8_t>> forced;  // zero/identity elements
    struct PairCon {
        bool exclusive;  // true: not both 1; false: not both 0
        int a, b;
        int context_hint;
    };
    std::vector<PairCon> pairs;
    struct LinkCon {
        bool is_meet;  // h(r) = h(a) AND h(b); otherwise OR
        int a, b, r;
    };
    std::vector<LinkCon> links;
    std::vector<std::vector<int>> ctx_adj, pair_adj, link_adj;
};

Compiled compile_constraints(const ContextSet& c, const Tolerances& tol) {
    Compiled cc;
    cc.n = static_cast<int>(c.elements.size());
    const int n = cc.n;
    cc.ctx_adj.resize(n);
    cc.pair_adj.resize(n);
    cc.link_adj.resize(n);
    if (n == 0) return cc;
    const Matrix id = Matrix::Identity(c.elements.front().projector.rows(),
                                       c.elements.front().projector.cols());

    for (int i = 0; i < n; ++i) {
        const Matrix& p = c.elements[i].projector;
        if (max_norm(p) <= tol.eps_structure)
            cc.forced.emplace_back(i, std::int8_t{0});
        else if (max_norm(p - id) <= tol.eps_structure)
            cc.forced.emplace_back(i, std::int8_t{1});
    }

    for (std::size_t k = 0; k < c.contexts.size(); ++k)
        for (int e : c.contexts[k]) cc.ctx_adj[e].push_back(static_cast<int>(k));

    auto context_hint = [&](int a, int b) {
        for (std::size_t k = 0; k < c.contexts.size(); ++k) {
            const auto& ctx = c.contexts[k];
            if (std::find(ctx.begin(), ctx.end(), a) != ctx.end() &&
                std::find(ctx.begin(), ctx.end(), b) != ctx.end())
                return static_cast<int>(k);
        }
        return -1;
    };

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const Matrix& pi = c.elements[i].projector;
            const Matrix& pj = c.elements[j].projector;
            if (!commutes(pi, pj, tol)) continue;
            Matrix meet = pi * pj;
            Matrix join = pi + pj - meet;
            if (max_norm(meet) <= tol.eps_structure) {
                cc.pairs.push_back({true, i, j, context_hint(i, j)});
                cc.pair_adj[i].push_back(static_cast<int>(cc.pairs.size()) - 1);
                cc.pair_adj[j].push_back(static_cast<int>(cc.pairs.size()) - 1);
            } else if (int r = find_element(c, meet, c.elements[i].time, tol); r >= 0) {
                cc.links.push_back({true, i, j, r});
                int id_link = static_cast<int>(cc.links.size()) - 1;
                cc.link_adj[i].push_back(id_link);
                cc.link_adj[j].push_back(id_link);
                if (r != i && r != j) cc.link_adj[r].push_back(id_link);
            }
            if (max_norm(join - id) <= tol.eps_structure) {
                cc.pairs.push_back({false, i, j, context_hint(i, j)});
                cc.pair_adj[i].push_back(static_cast<int>(cc.pairs.size()) - 1);
                cc.pair_adj[j].push_back(static_cast<int>(cc.pairs.size()) - 1);
            } else if (int r = find_element(c, join, c.elements[i].time, tol); r >= 0) {
                cc.links.push_back({false, i, j, r});
                int id_link = static_cast<int>(cc.links.size()) - 1;
                cc.link_adj[i].push_back(id_link);
                cc.link_adj[j].push_back(id_link);
                if (r != i && r != j) cc.link_adj[r].push_back(id_link);
            }
        }
    return cc;
}

struct ConflictInfo {
    bool hit = false;
    int context = -1;
    std::string detail;
};

class PropagationEngine {
  public:
    PropagationEngine(const ContextSet& c, Compiled cc) : c_(c), cc_(std::move(cc)) {}

    const Compiled& compiled() const { return cc_; }

    // seeds the structurally forced values (zero -> 0, identity -> 1)
    bool seed_forced(Valuation& v, std::vector<int>& dirty, ConflictInfo* cf) const {
        for (auto [e, val] : cc_.forced)
            if (!set(v, e, val, dirty, cf, -1, "structurally forced element")) return false;
        return true;
    }

    // closes v under all rules starting from the dirty elements;
    // false means contradiction
    bool run(Valuation& v, std::vector<int> dirty, ConflictInfo* cf) const {
        for (std::size_t head = 0; head < dirty.size(); ++head) {
            int e = dirty[head];
            for (int k : cc_.ctx_adj[e])
                if (!apply_context(v, k, dirty, cf)) return false;
            for (int k : cc_.pair_adj[e])
                if (!apply_pair(v, cc_.pairs[k], dirty, cf)) return false;
            for (int k : cc_.link_adj[e])
                if (!apply_link(v, cc_.links[k], dirty, cf)) return false;
        }
        return true;
    }

  private:
    const ContextSet& c_;
    Compiled cc_;

    const std::string& label(int e) const { return c_.elements[e].label; }

    bool fail(ConflictInfo* cf, int ctx, std::string detail) const {
        if (cf && !cf->hit) {
            cf->hit = true;
            cf->context = ctx;
            cf->detail = std::move(detail);
        }
        return false;
    }

    bool set(Valuation& v, int e, std::int8_t val, std::vector<int>& dirty, ConflictInfo* cf, int ctx,
             const char* why) const {
        auto& slot = v.assignment[e];
        if (slot == val) return true;
        if (slot != -1)
            return fail(cf, ctx, "element '" + label(e) + "' forced to both values (" + why + ")");
        slot = val;
        dirty.push_back(e);
        return true;
    }

    bool apply_context(Valuation& v, int k, std::vector<int>& dirty, ConflictInfo* cf) const {
        const auto& ctx = c_.contexts[k];
        int ones = 0, unassigned = 0, last_open = -1, first_one = -1;
        for (int e : ctx) {
            if (v[e] == 1) {
                ++ones;
                if (first_one < 0) first_one = e;
            } else if (v[e] == -1) {
                ++unassigned;
                last_open = e;
            }
        }
        if (ones > 1)
            return fail(cf, k, "two true elements in one context (context " + std::to_string(k + 1) + ")");
        if (ones == 1) {
            for (int e : ctx)
                if (e != first_one && v[e] == -1 &&
                    !set(v, e, 0, dirty, cf, k, "sibling of a true element"))
                    return false;
            return true;
        }
        if (unassigned == 0)
            return fail(cf, k, "all elements false in context " + std::to_string(k + 1));
        if (unassigned == 1) return set(v, last_open, 1, dirty, cf, k, "last open element of a context");
        return true;
    }

    bool apply_pair(Valuation& v, const Compiled::PairCon& p, std::vector<int>& dirty,
                    ConflictInfo* cf) const {
        if (p.exclusive) {
            if (v[p.a] == 1 && v[p.b] == 1)
                return fail(cf, p.context_hint, "orthogonal elements '" + label(p.a) + "' and '" +
                                                    label(p.b) + "' both true");
            if (v[p.a] == 1) return set(v, p.b, 0, dirty, cf, p.context_hint, "orthogonal to a true element");
            if (v[p.b] == 1) return set(v, p.a, 0, dirty, cf, p.context_hint, "orthogonal to a true element");
            return true;
        }
        if (v[p.a] == 0 && v[p.b] == 0)
            return fail(cf, p.context_hint,
                        "exhaustive pair '" + label(p.a) + "', '" + label(p.b) + "' both false");
        if (v[p.a] == 0) return set(v, p.b, 1, dirty, cf, p.context_hint, "join with a false element is 1");
        if (v[p.b] == 0) return set(v, p.a, 1, dirty, cf, p.context_hint, "join with a false element is 1");
        return true;
    }

    bool apply_link(Valuation& v, const Compiled::LinkCon& l, std::vector<int>& dirty,
                    ConflictInfo* cf) const {
        auto va = v[l.a], vb = v[l.b], vr = v[l.r];
        const char* why = l.is_meet ? "meet law" : "join law";
        if (l.is_meet) {
            if (va == 1 && vb == 1 && !set(v, l.r, 1, dirty, cf, -1, why)) return false;
            if ((va == 0 || vb == 0) && !set(v, l.r, 0, dirty, cf, -1, why)) return false;
            if (vr == 1 && (!set(v, l.a, 1, dirty, cf, -1, why) || !set(v, l.b, 1, dirty, cf, -1, why)))
                return false;
            if (vr == 0) {
                if (va == 1 && !set(v, l.b, 0, dirty, cf, -1, why)) return false;
                if (vb == 1 && !set(v, l.a, 0, dirty, cf, -1, why)) return false;
            }
            return true;
        }
        if ((va == 1 || vb == 1) && !set(v, l.r, 1, dirty, cf, -1, why)) return false;
        if (va == 0 && vb == 0 && !set(v, l.r, 0, dirty, cf, -1, why)) return false;
        if (vr == 0 && (!set(v, l.a, 0, dirty, cf, -1, why) || !set(v, l.b, 0, dirty, cf, -1, why)))
            return false;
        if (vr == 1) {
            if (va == 0 && !set(v, l.b, 1, dirty, cf, -1, why)) return false;
            if (vb == 0 && !set(v, l.a, 1, dirty, cf, -1, why)) return false;
        }
        return true;
    }
};

}  // namespace

bool Valuation::complete() const {
    return std::all_of(assignment.begin(), assignment.end(), [](std::int8_t x) { return x != -1; });
}

HomomorphismReport check_homomorphism(const Valuation& v, const ContextSet& c, const Tolerances& tol) {
    if (v.assignment.size() != c.elements.size())
        throw ContractViolation("valuation size does not match the element count");
    if (!v.complete()) throw ContractViolation("check_homomorphism requires a complete valuation");

    HomomorphismReport rep;
    auto violate = [&](const std::string& what) { rep.violations.push_back(what); };
    const std::size_t n = c.elements.size();
    if (n == 0) {
        rep.passed = true;
        return rep;
    }
    const Matrix id = Matrix::Identity(c.elements.front().projector.rows(),
                                       c.elements.front().projector.cols());

    for (std::size_t k = 0; k < c.contexts.size(); ++k) {
        int ones = 0;
        for (int e : c.contexts[k]) ones += v[e] == 1;
        ++rep.checks;
        if (ones != 1)
            violate("context " + std::to_string(k + 1) + " has " + std::to_string(ones) +
                    " true elements (needs exactly 1)");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Matrix& p = c.elements[i].projector;
        if (max_norm(p) <= tol.eps_structure) {
            ++rep.checks;
            if (v[i] != 0) violate("null element '" + c.elements[i].label + "' valued 1");
        } else if (max_norm(p - id) <= tol.eps_structure) {
            ++rep.checks;
            if (v[i] != 1) violate("identity element '" + c.elements[i].label + "' valued 0");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const Matrix& pi = c.elements[i].projector;
            const Matrix& pj = c.elements[j].projector;
            if (!commutes(pi, pj, tol)) continue;
            Matrix meet = pi * pj;
            Matrix join = pi + pj - meet;
            // meet/join against the always-present distinguished elements 0, 1
            if (max_norm(meet) <= tol.eps_structure) {
                ++rep.checks;
                if (v[i] == 1 && v[j] == 1)
                    violate("orthogonal elements '" + c.elements[i].label + "' and '" +
                            c.elements[j].label + "' both true (meet law with 0)");
            } else if (int r = find_element(c, meet, c.elements[i].time, tol); r >= 0) {
                ++rep.checks;
                if (v[r] != (v[i] & v[j]))
                    violate("meet law broken on '" + c.elements[i].label + "', '" + c.elements[j].label +
                            "' -> '" + c.elements[r].label + "'");
            }
            if (max_norm(join - id) <= tol.eps_structure) {
                ++rep.checks;
                if (v[i] == 0 && v[j] == 0)
                    violate("exhaustive pair '" + c.elements[i].label + "', '" + c.elements[j].label +
                            "' both false (join law with 1)");
            } else if (int r = find_element(c, join, c.elements[i].time, tol); r >= 0) {
                ++rep.checks;
                if (v[r] != (v[i] | v[j]))
                    violate("join law broken on '" + c.elements[i].label + "', '" + c.elements[j].label +
                            "' -> '" + c.elements[r].label + "'");
            }
        }
    rep.passed = rep.violations.empty();
    return rep;
}

PropagationOutcome propagate_truth(const Valuation& seeds, const ContextSet& c, const Tolerances& tol) {
    if (seeds.assignment.size() != c.elements.size())
        throw ContractViolation("seed valuation size does not match the element count");
    for (auto s : seeds.assignment)
        if (s != -1 && s != 0 && s != 1) throw ContractViolation("seed values must be -1, 0, or 1");

    PropagationEngine engine(c, compile_constraints(c, tol));
    PropagationOutcome out;
    out.forced = seeds;
    std::vector<int> dirty;
    for (std::size_t e = 0; e < seeds.assignment.size(); ++e)
        if (seeds.assignment[e] != -1) dirty.push_back(static_cast<int>(e));
    ConflictInfo cf;
    if (!engine.seed_forced(out.forced, dirty, &cf) || !engine.run(out.forced, std::move(dirty), &cf)) {
        out.conflict = true;
        out.conflict_context = cf.context;
        out.conflict_detail = cf.detail;
    }
    return out;
}

namespace {

void record_solution(SearchResult& res, const Valuation& v, bool enumerate_all) {
    if (!res.sat) {
        res.sat = true;
        res.valuation = v;
    }
    if (enumerate_all) res.solutions.push_back(v);
}

// Backtracking over propagated partial valuations.
class BacktrackSearch {
  public:
    BacktrackSearch(const PropagationEngine& engine, const std::vector<int>& order, bool enumerate_all)
        : engine_(engine), order_(order), enumerate_all_(enumerate_all) {}

    SearchResult run(Valuation root) {
        dfs(std::move(root), 0);
        std::sort(res_.solutions.begin(), res_.solutions.end(),
                  [](const Valuation& a, const Valuation& b) { return a.assignment < b.assignment; });
        if (res_.sat && !res_.solutions.empty()) res_.valuation = res_.solutions.front();
        return std::move(res_);
    }

  private:
    const PropagationEngine& engine_;
    const std::vector<int>& order_;
    bool enumerate_all_;
    SearchResult res_;

    // returns true when the search can stop (found a model, not enumerating)
    bool dfs(Valuation v, std::size_t depth) {
        ++res_.stats.nodes;
        res_.stats.max_depth = std::max(res_.stats.max_depth, depth);
        int pick = -1;
        for (int e : order_)
            if (v[e] == -1) {
                pick = e;
                break;
            }
        if (pick < 0) {
            record_solution(res_, v, enumerate_all_);
            return !enumerate_all_;
        }
        for (std::int8_t val : {std::int8_t{1}, std::int8_t{0}}) {
            Valuation next = v;
            next.assignment[pick] = val;
            if (engine_.run(next, {pick}, nullptr) && dfs(std::move(next), depth + 1)) return true;
        }
        return false;
    }
};

// Plain enumeration in index order with per-index constraint checks; no
// propagation machinery beyond the compiled constraint list itself.
class ExhaustiveSearch {
  public:
    ExhaustiveSearch(const ContextSet& c, const Compiled& cc, const Tolerances& tol, bool enumerate_all)
        : c_(c), cc_(cc), tol_(tol), enumerate_all_(enumerate_all) {
        const int n = cc.n;
        check_at_.resize(n);
        for (const auto& [e, val] : cc.forced) forced_at_[e] = val;
        for (std::size_t k = 0; k < c.contexts.size(); ++k) {
            int last = *std::max_element(c.contexts[k].begin(), c.contexts[k].end());
            check_at_[last].push_back({Kind::context, static_cast<int>(k)});
        }
        for (std::size_t k = 0; k < cc.pairs.size(); ++k)
            check_at_[std::max(cc.pairs[k].a, cc.pairs[k].b)].push_back({Kind::pair, static_cast<int>(k)});
        for (std::size_t k = 0; k < cc.links.size(); ++k)
            check_at_[std::max({cc.links[k].a, cc.links[k].b, cc.links[k].r})].push_back(
                {Kind::link, static_cast<int>(k)});
    }

    SearchResult run() {
        Valuation v(static_cast<std::size_t>(cc_.n));
        dfs(v, 0);
        std::sort(res_.solutions.begin(), res_.solutions.end(),
                  [](const Valuation& a, const Valuation& b) { return a.assignment < b.assignment; });
        if (res_.sat && !res_.solutions.empty()) res_.valuation = res_.solutions.front();
        return std::move(res_);
    }

  private:
    enum class Kind { context, pair, link };
    struct Check {
        Kind kind;
        int index;
    };

    const ContextSet& c_;
    const Compiled& cc_;
    const Tolerances& tol_;
    bool enumerate_all_;
    std::vector<std::vector<Check>> check_at_;
    std::map<int, std::int8_t> forced_at_;
    SearchResult res_;

    bool ok_so_far(const Valuation& v, int idx) const {
        if (auto it = forced_at_.find(idx); it != forced_at_.end() && v[idx] != it->second) return false;
        for (const auto& chk : check_at_[idx]) {
            switch (chk.kind) {
                case Kind::context: {
                    int ones = 0;
                    for (int e : c_.contexts[chk.index]) ones += v[e] == 1;
                    if (ones != 1) return false;
                    break;
                }
                case Kind::pair: {
                    const auto& p = cc_.pairs[chk.index];
                    if (p.exclusive && v[p.a] == 1 && v[p.b] == 1) return false;
                    if (!p.exclusive && v[p.a] == 0 && v[p.b] == 0) return false;
                    break;
                }
                case Kind::link: {
                    const auto& l = cc_.links[chk.index];
                    std::int8_t expect = l.is_meet ? (v[l.a] & v[l.b]) : (v[l.a] | v[l.b]);
                    if (v[l.r] != expect) return false;
                    break;
                }
            }
        }
        return true;
    }

    bool dfs(Valuation& v, int idx) {
        ++res_.stats.nodes;
        res_.stats.max_depth = std::max(res_.stats.max_depth, static_cast<std::size_t>(idx));
        if (idx == cc_.n) {
            if (!check_homomorphism(v, c_, tol_).passed)
                throw std::logic_error("internal: exhaustive solution fails the homomorphism check");
            record_solution(res_, v, enumerate_all_);
            return !enumerate_all_;
        }
        for (std::int8_t val : {std::int8_t{0}, std::int8_t{1}}) {
            v.assignment[idx] = val;
            if (ok_so_far(v, idx) && dfs(v, idx + 1)) return true;
            v.assignment[idx] = -1;
        }
        return false;
    }
};

}  // namespace

SearchResult search_valuation(const ContextSet& c, const SearchOptions& opts, const Tolerances& tol) {
    Compiled cc = compile_constraints(c, tol);

    if (opts.mode == SearchMode::exhaustive) {
        if (c.elements.size() > opts.exhaustive_cap)
            throw EnumerationOverflow("exhaustive search limited to " +
                                      std::to_string(opts.exhaustive_cap) + " elements, set has " +
                                      std::to_string(c.elements.size()));
        return ExhaustiveSearch(c, cc, tol, opts.enumerate_all).run();
    }

    PropagationEngine engine(c, std::move(cc));
    Valuation root(c.elements.size());
    std::vector<int> dirty;
    if (!engine.seed_forced(root, dirty, nullptr) || !engine.run(root, std::move(dirty), nullptr)) {
        SearchResult res;  // structurally contradictory before any decision
        return res;
    }
    std::vector<int> order(c.elements.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    if (opts.seed) {
        std::mt19937_64 rng(*opts.seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    return BacktrackSearch(engine, order, opts.enumerate_all).run(std::move(root));
}

namespace {

// Track the worst residual seen for one axiom; NaN counts as worse than
// anything so non-finite matrices can never pass.
void note_residual(AxiomResult& ax, double r, const std::string& witness) {
    if (!(r <= ax.worst_residual)) {
        ax.worst_residual = r;
        ax.witness = witness;
    }
}

}  // namespace

PbaAxiomReport verify_pba_axioms(const ContextSet& c, const Tolerances& tol) {
    PbaAxiomReport rep;
    const std::size_t n = c.elements.size();
    if (n == 0) return rep;

    const double eps = tol.eps_structure;
    const Matrix one = Matrix::Identity(static_cast<Eigen::Index>(c.dim), static_cast<Eigen::Index>(c.dim));

    auto mat = [&](std::size_t i) -> const Matrix& { return c.elements[i].projector; };
    auto lbl = [&](std::size_t i) -> const std::string& { return c.elements[i].label; };
    auto meet = [](const Matrix& a, const Matrix& b) { return Matrix(a * b); };
    auto join = [](const Matrix& a, const Matrix& b) { return Matrix(a + b - a * b); };
    auto comm = [](const Matrix& a, const Matrix& b) { return max_norm(a * b - b * a); };

    // Commensurability grid, reused by the pair/triple axioms.
    std::vector<std::vector<double>> cr(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<char>> ok(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double r = comm(mat(i), mat(j));
            cr[i][j] = cr[j][i] = r;
            ok[i][j] = ok[j][i] = (r <= eps) ? 1 : 0;
        }

    for (std::size_t i = 0; i < n; ++i) {
        const Matrix& x = mat(i);
        const Matrix xc = one - x;
        // reflexivity: x commutes with itself
        note_residual(rep.axioms[0], cr[i][i], "x=" + lbl(i));
        // zero and identity are commensurable with everything
        note_residual(rep.axioms[2],
                      std::max(comm(Matrix::Zero(x.rows(), x.cols()), x), comm(one, x)), "x=" + lbl(i));
        // idempotence of the join
        note_residual(rep.axioms[5], max_norm(join(x, x) - x), "x=" + lbl(i));
        // unit laws against the ambient zero and identity
        double unit = std::max(std::max(max_norm(join(Matrix::Zero(x.rows(), x.cols()), x) - x),
                                        max_norm(join(x, Matrix::Zero(x.rows(), x.cols())) - x)),
                               std::max(max_norm(meet(one, x) - x), max_norm(meet(x, one) - x)));
        note_residual(rep.axioms[6], unit, "x=" + lbl(i));
        // excluded middle / non-contradiction against the complement
        double mid = std::max(max_norm(meet(x, xc)), max_norm(join(x, xc) - one));
        note_residual(rep.axioms[7], mid, "x=" + lbl(i));
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !ok[i][j]) continue;
            const std::string w = "x=" + lbl(i) + ", y=" + lbl(j);
            // symmetry of commensurability
            note_residual(rep.axioms[1], cr[j][i], w);
            // commensurable with y implies commensurable with its complement
            note_residual(rep.axioms[3], comm(mat(i), one - mat(j)), w);
        }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (!ok[i][j]) continue;
            for (std::size_t k = j + 1; k < n; ++k) {
                if (!ok[i][k] || !ok[j][k]) continue;
                const Matrix& x = mat(i);
                const Matrix& y = mat(j);
                const Matrix& z = mat(k);
                const std::string w = "x=" + lbl(i) + ", y=" + lbl(j) + ", z=" + lbl(k);
                // closure: x stays commensurable with y∨z and y∧z
                note_residual(rep.axioms[4], std::max(comm(x, join(y, z)), comm(x, meet(y, z))), w);
                // distributivity both ways around
                double d1 = max_norm(meet(x, join(y, z)) - join(meet(x, y), meet(x, z)));
                double d2 = max_norm(join(x, meet(y, z)) - meet(join(x, y), join(x, z)));
                note_residual(rep.axioms[8], std::max(d1, d2), w);
            }
        }

    rep.all_passed = true;
    for (auto& ax : rep.axioms) {
        ax.passed = ax.worst_residual <= eps;
        rep.all_passed = rep.all_passed && ax.passed;
    }
    return rep;
}

}  // namespace histkit
