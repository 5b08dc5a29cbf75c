#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "histkit/decoherence.hpp"
#include "histkit/histories.hpp"

namespace histkit {

// A single-time event: one projector at one instant.  The Boolean
// connectives below are defined only at a single time and only between
// commuting projectors.
struct OneTimeHistory {
    Matrix projector;
    double time = 0.0;
    std::string label;
};

enum class Connective { conjunction, disjunction };

// conjunction -> Q_a Q_b; disjunction -> Q_a + Q_b - Q_a Q_b.  Requires the
// same time and commuting projectors; non-commuting operands have no joint
// family and raise IncommensurableError.
OneTimeHistory combine(const OneTimeHistory& a, const OneTimeHistory& b, Connective op,
                       const Tolerances& tol = {});

// 1 - Q.
OneTimeHistory negate(const OneTimeHistory& a);

// Slice-wise conjunction of two coarse histories of family f: both operands
// are re-expressed as masks over f (SingleFamilyViolation when impossible)
// and combined by bitwise AND.  A slice where the masks are disjoint yields
// the zero event there (the null history).
History conjoin_histories(const History& a, const History& b, const Family& f, const Tolerances& tol = {});

enum class ImplicationVerdict { holds, fails, undefined };

// Probabilistic implication a => b inside one family: holds when
// p[a AND b] / p[a] is 1 within 10*eps_decoherence.  Undefined when the
// family is not medium-decoherent or p[a] is below eps_prob.  Histories not
// expressible in f raise SingleFamilyViolation.
struct ImplicationReport {
    ImplicationVerdict verdict = ImplicationVerdict::undefined;
    double p_a = 0.0;
    double p_ab = 0.0;
    double ratio = 0.0;
    bool family_decoherent = false;
};

ImplicationReport implies(const History& a, const History& b, const Family& f, const Matrix& w,
                          const Tolerances& tol = {});

// Carrier of a partial Boolean algebra of one-time events: the elements,
// and the contexts (exhaustive exclusive decompositions) among them.
// Elements are unique up to same_history; commensurability is commutation.
struct ContextSet {
    std::vector<OneTimeHistory> elements;
    std::vector<std::vector<int>> contexts;
    int dim = 0;
};

int find_element(const ContextSet& c, const std::string& label);
int find_element(const ContextSet& c, const Matrix& projector, double time, const Tolerances& tol = {});

// Validating constructor without closure: deduplicates elements, remaps
// contexts, checks every context is projective (residuals <= context_eps,
// defaulting to eps_structure) and that every element sits in a context.
ContextSet make_context_set(std::vector<OneTimeHistory> elements, std::vector<std::vector<int>> contexts,
                            const Tolerances& tol = {}, double context_eps = -1.0);

// Full algebra builder: deduplicates the input, discovers every maximal
// orthogonal decomposition among the input elements as a context, then
// closes under all coarse grainings of each context plus complements
// (which adds the zero and identity elements).  Derived elements get
// "+"-joined labels.  Throws EnumerationOverflow past closure_cap.
ContextSet build_pba(const std::vector<OneTimeHistory>& elements, const Tolerances& tol = {},
                     std::size_t closure_cap = 100000);

struct AxiomResult {
    bool passed = true;
    double worst_residual = 0.0;
    std::string witness;
};

// Numerically verifies the nine partial-Boolean-algebra axioms, with
// commensurability = commutation, meet = product, join = a + b - ab,
// complement = 1 - a.  Axioms quantifying over pairs/triples only apply to
// commensurable ones.  Failures carry a witnessing element combination.
struct PbaAxiomReport {
    std::array<AxiomResult, 9> axioms;
    bool all_passed = true;
};

PbaAxiomReport verify_pba_axioms(const ContextSet& c, const Tolerances& tol = {});

// Truth assignment over a ContextSet's elements; -1 marks unassigned.
struct Valuation {
    std::vector<std::int8_t> assignment;

    explicit Valuation(std::size_t n = 0) : assignment(n, -1) {}
    bool complete() const;
    std::int8_t operator[](std::size_t i) const { return assignment[i]; }
};

// Two-valued homomorphism laws, checked directly against the matrices:
// exactly one true element per context, h(0)=0, h(1)=1, complement law for
// every complement pair present in the set, meet/join laws for every
// commuting pair whose meet/join is present.  v must be complete.
struct HomomorphismReport {
    bool passed = false;
    std::size_t checks = 0;
    std::vector<std::string> violations;
};

HomomorphismReport check_homomorphism(const Valuation& v, const ContextSet& c, const Tolerances& tol = {});

// Unit propagation: closes the seed assignment under the context rules
// (a 1 forces siblings to 0, all-but-one 0 forces the last to 1), the
// complement law, and meet/join identifications between elements.  A
// contradiction is reported as a result, with the witnessing context when
// one exists.
struct PropagationOutcome {
    bool conflict = false;
    Valuation forced;
    int conflict_context = -1;
    std::string conflict_detail;
};

PropagationOutcome propagate_truth(const Valuation& seeds, const ContextSet& c, const Tolerances& tol = {});

enum class SearchMode { backtracking, exhaustive };

struct SearchOptions {
    SearchMode mode = SearchMode::backtracking;
    bool enumerate_all = false;
    std::optional<std::uint64_t> seed;  // randomizes the branching order
    std::size_t exhaustive_cap = 30;
};

struct SearchStats {
    std::uint64_t nodes = 0;
    std::size_t max_depth = 0;
};

// Search for a two-valued homomorphism.  backtracking: depth-first with
// propagate_truth at every decision, branching on the lowest-index
// unassigned element, value 1 first (or a seeded random order).
// exhaustive: plain enumeration of all assignments with per-constraint
// pruning and no propagation — the independent oracle; limited to
// exhaustive_cap elements.  With enumerate_all, solutions holds every
// satisfying valuation in lexicographic order.
struct SearchResult {
    bool sat = false;
    std::optional<Valuation> valuation;
    std::vector<Valuation> solutions;
    SearchStats stats;
};

SearchResult search_valuation(const ContextSet& c, const SearchOptions& opts = {},
                              const Tolerances& tol = {});

}  // namespace histkit
