#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "histkit/histories.hpp"

namespace histkit {

struct ClassOperator {
    std::string label;
    Matrix matrix;
};

// Chain operator of h in f: the product, right to left, of each interval
// propagator followed by that slice's event projector.  With every event
// equal to the identity this collapses to the full propagator from t0 to
// the last slice.
ClassOperator class_operator(const History& h, const Family& f);

// Tr[C w C^dagger], clamped to zero when within eps_prob below it.  w must
// be a density matrix.
double probability(const History& h, const Family& f, const Matrix& w, const Tolerances& tol = {});

// Dense matrix of pairwise functional values over all fine histories of a
// family, D(i, j) = Tr[C_i w C_j^dagger].  Row/column order follows
// enumerate_fine.  Throws EnumerationOverflow when the family has more fine
// histories than dense_cap.
struct DecoherenceMatrix {
    std::vector<std::string> labels;
    Matrix entries;
    Matrix initial_state;
};

DecoherenceMatrix decoherence_functional(const Family& f, const Matrix& w, const Tolerances& tol = {},
                                         std::size_t dense_cap = 2000);

enum class ConsistencyMode { weak, medium };

// weak: only the real parts of off-diagonal entries must vanish.
// medium: full magnitudes must vanish.  Off-diagonal entries are compared
// after normalizing by sqrt(D_ii D_jj); pairs where either diagonal is at
// most eps_prob hold vacuously.  degree is the largest normalized magnitude
// over non-vacuous pairs regardless of mode.
struct ConsistencyReport {
    ConsistencyMode mode = ConsistencyMode::medium;
    bool passed = false;
    std::pair<std::string, std::string> worst_pair;
    double worst_raw = 0.0;
    double worst_normalized = 0.0;
    double degree = 0.0;
    double trace_sum = 0.0;
    std::vector<std::pair<std::string, double>> probabilities;  // the diagonal
};

ConsistencyReport check_consistency(const DecoherenceMatrix& d, ConsistencyMode mode,
                                    const Tolerances& tol = {});

// Full check of a family against an initial density.  Families with at most
// dense_cap fine histories go through the dense matrix; larger ones are
// checked pair by pair without materializing it (class operators are still
// cached, so memory grows with the history count times dim^2).
ConsistencyReport check_family(const Family& f, const Matrix& w, ConsistencyMode mode,
                               const Tolerances& tol = {}, std::size_t dense_cap = 2000);

// Probability additivity sweep: for every slice, every unordered member
// pair there, and every fine assignment elsewhere, compare p[union] against
// the sum of the two fine probabilities.  When the combination count
// exceeds the budget a seeded uniform sample of that size is drawn instead.
struct AdditivityReport {
    double max_discrepancy = 0.0;
    std::string worst_label;
    bool within_tolerance = false;  // max <= 10 * eps_decoherence
    bool sampled = false;
    std::size_t combos_checked = 0;
};

AdditivityReport additivity_audit(const Family& f, const Matrix& w, const Tolerances& tol = {},
                                  std::size_t budget = 100000, std::uint64_t seed = 12345);

}  // namespace histkit
