#include "histkit/decoherence.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace histkit {

namespace {

void require_density(const Matrix& w, int dim, const Tolerances& tol, const char* where) {
    if (w.rows() != dim || w.cols() != dim) {
        std::ostringstream os;
        os << where << ": state has dimension " << w.rows() << "x" << w.cols() << ", family has " << dim;
        throw ContractViolation(os.str());
    }
    if (!check_density(w, tol)) {
        std::ostringstream os;
        os << where << ": initial state is not a density matrix (hermiticity residual "
           << hermiticity_residual(w) << ", trace " << w.trace() << ", threshold " << tol.eps_structure
           << ")";
        throw ValidationError(os.str());
    }
}

double clamp_probability(double p, const Tolerances& tol, const std::string& label) {
    if (p < -tol.eps_prob) {
        std::ostringstream os;
        os << "probability of '" << label << "' came out " << p << ", below -" << tol.eps_prob;
        throw ValidationError(os.str());
    }
    return p < 0.0 ? 0.0 : p;
}

Matrix chain_product(const std::vector<const Matrix*>& events, const std::vector<Matrix>& unitaries) {
    Matrix c = *events.front() * unitaries.front();
    for (std::size_t m = 1; m < events.size(); ++m)
        c = *events[m] * (unitaries[m] * c);
    return c;
}

std::size_t fine_total(const Family& f, std::size_t cap) {
    std::size_t total = 1;
    for (const auto& d : f.decomps) {
        if (d.members.size() > cap / total)
            throw EnumerationOverflow("family '" + f.name + "': fine history count exceeds cap");
        total *= d.members.size();
    }
    return total;
}

// Class operators of every fine history, in enumerate_fine order, without
// materializing History objects.
std::vector<Matrix> fine_class_operators(const Family& f, std::size_t cap) {
    const std::size_t total = fine_total(f, cap);
    const std::size_t n = f.slice_count();
    std::vector<Matrix> out;
    out.reserve(total);
    std::vector<std::size_t> idx(n, 0);
    std::vector<const Matrix*> events(n);
    for (std::size_t count = 0; count < total; ++count) {
        for (std::size_t m = 0; m < n; ++m) events[m] = &f.decomps[m].members[idx[m]];
        out.push_back(chain_product(events, f.unitaries));
        for (std::size_t m = n; m-- > 0;) {
            if (++idx[m] < f.decomps[m].members.size()) break;
            idx[m] = 0;
        }
    }
    return out;
}

std::vector<std::string> fine_labels(const Family& f) {
    const std::size_t n = f.slice_count();
    std::size_t total = 1;
    for (const auto& d : f.decomps) total *= d.members.size();
    std::vector<std::string> out;
    out.reserve(total);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t count = 0; count < total; ++count) {
        std::string label;
        for (std::size_t m = 0; m < n; ++m) {
            if (m) label += "&";
            label += f.decomps[m].labels[idx[m]];
        }
        out.push_back(std::move(label));
        for (std::size_t m = n; m-- > 0;) {
            if (++idx[m] < f.decomps[m].members.size()) break;
            idx[m] = 0;
        }
    }
    return out;
}

// Factor w = S S^dagger from the spectral decomposition, keeping positive modes.
// Chains then act on the R columns of S instead of on full matrices.
Matrix state_factor(const Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(w);
    if (es.info() != Eigen::Success)
        throw ValidationError("decoherence_functional: eigendecomposition of the state failed");
    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k) > 0.0) ++r;
    Matrix s(w.rows(), r);
    Eigen::Index c = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k) > 0.0) s.col(c++) = std::sqrt(es.eigenvalues()(k)) * es.eigenvectors().col(k);
    return s;
}

// Stacked images y_i = vec(C_i S) of every fine history, in enumerate_fine
// order; intermediate products are shared along common history prefixes.
Matrix fine_chain_images(const Family& f, const Matrix& seed, std::size_t cap) {
    const std::size_t total = fine_total(f, cap);
    const std::size_t nsl = f.slice_count();
    const Eigen::Index len = seed.rows() * seed.cols();
    Matrix y(len, static_cast<Eigen::Index>(total));
    Eigen::Index col = 0;
    auto walk = [&](auto&& self, std::size_t m, const Matrix& img) -> void {
        const Matrix staged = f.unitaries[m] * img;
        for (const auto& q : f.decomps[m].members) {
            Matrix next = q * staged;
            if (m + 1 == nsl)
                y.col(col++) = Eigen::Map<const Vector>(next.data(), len);
            else
                self(self, m + 1, next);
        }
    };
    walk(walk, 0, seed);
    return y;
}

struct PairScan {
    ConsistencyMode mode;
    const Tolerances& tol;
    ConsistencyReport rep;

    PairScan(ConsistencyMode m, const Tolerances& t) : mode(m), tol(t) {
        rep.mode = m;
        rep.worst_pair = {"", ""};
    }

    void diagonal(const std::string& label, double p) {
        rep.trace_sum += p;
        rep.probabilities.emplace_back(label, clamp_probability(p, tol, label));
    }

    void off_diagonal(const std::string& li, const std::string& lj, Complex dij, double pi, double pj) {
        if (pi <= tol.eps_prob || pj <= tol.eps_prob) return;  // vacuous pair
        double denom = std::sqrt(pi * pj);
        double mag = std::abs(dij) / denom;
        rep.degree = std::max(rep.degree, mag);
        double raw = mode == ConsistencyMode::weak ? std::abs(dij.real()) : std::abs(dij);
        double normalized = raw / denom;
        if (normalized > rep.worst_normalized) {
            rep.worst_normalized = normalized;
            rep.worst_raw = raw;
            rep.worst_pair = {li, lj};
        }
    }

    ConsistencyReport finish() {
        rep.passed = rep.worst_normalized <= tol.eps_decoherence;
        return std::move(rep);
    }
};

}  // namespace

ClassOperator class_operator(const History& h, const Family& f) {
    if (h.times != f.grid.slices || h.entries.size() != f.slice_count())
        throw ContractViolation("history does not live on this family's time grid");
    std::vector<const Matrix*> events;
    events.reserve(h.entries.size());
    for (const auto& e : h.entries) {
        if (e.matrix.rows() != f.dim() || e.matrix.cols() != f.dim())
            throw ContractViolation("history event dimension does not match the family");
        events.push_back(&e.matrix);
    }
    return {h.label, chain_product(events, f.unitaries)};
}

double probability(const History& h, const Family& f, const Matrix& w, const Tolerances& tol) {
    require_density(w, f.dim(), tol, "probability");
    Matrix c = class_operator(h, f).matrix;
    Matrix cw = c * w;
    double p = cw.cwiseProduct(c.conjugate()).sum().real();  // Tr[C w C^dagger]
    return clamp_probability(p, tol, h.label);
}

DecoherenceMatrix decoherence_functional(const Family& f, const Matrix& w, const Tolerances& tol,
                                         std::size_t dense_cap) {
    require_density(w, f.dim(), tol, "decoherence_functional");
    // With w = S S^dagger, D(i;j) = Tr[C_i w C_j^dagger] = <vec(C_j S), vec(C_i S)>,
    // so D is the (transposed) Gram matrix of the chain images and comes out
    // exactly Hermitian with nonnegative diagonal.
    Matrix y = fine_chain_images(f, state_factor(w), dense_cap);
    DecoherenceMatrix d;
    d.labels = fine_labels(f);
    d.initial_state = w;
    d.entries = (y.adjoint() * y).transpose();
    return d;
}

ConsistencyReport check_consistency(const DecoherenceMatrix& d, ConsistencyMode mode, const Tolerances& tol) {
    const auto k = static_cast<std::size_t>(d.entries.rows());
    if (d.entries.cols() != d.entries.rows() || d.labels.size() != k)
        throw ContractViolation("decoherence matrix is not square or labels do not match");
    PairScan scan(mode, tol);
    for (std::size_t i = 0; i < k; ++i) scan.diagonal(d.labels[i], d.entries(i, i).real());
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            scan.off_diagonal(d.labels[i], d.labels[j], d.entries(i, j), d.entries(i, i).real(),
                              d.entries(j, j).real());
    return scan.finish();
}

ConsistencyReport check_family(const Family& f, const Matrix& w, ConsistencyMode mode, const Tolerances& tol,
                               std::size_t dense_cap) {
    require_density(w, f.dim(), tol, "check_family");
    std::size_t total = 1;
    bool dense = true;
    for (const auto& d : f.decomps) {
        total *= d.members.size();
        if (total > dense_cap) {
            dense = false;
            break;
        }
    }
    if (dense) return check_consistency(decoherence_functional(f, w, tol, dense_cap), mode, tol);

    // Pairwise streaming for large families; same arithmetic, no K x K matrix.
    auto ops = fine_class_operators(f, std::size_t{1000000});
    auto labels = fine_labels(f);
    const std::size_t k = ops.size();
    std::vector<double> diag(k);
    for (std::size_t i = 0; i < k; ++i) diag[i] = (ops[i] * w * ops[i].adjoint()).trace().real();
    PairScan scan(mode, tol);
    for (std::size_t i = 0; i < k; ++i) scan.diagonal(labels[i], diag[i]);
    for (std::size_t j = 0; j < k; ++j) {
        Matrix wcj = w * ops[j].adjoint();
        for (std::size_t i = 0; i < j; ++i) {
            Complex dij = (ops[i].transpose().cwiseProduct(wcj)).sum();
            scan.off_diagonal(labels[i], labels[j], dij, diag[i], diag[j]);
        }
    }
    return scan.finish();
}

AdditivityReport additivity_audit(const Family& f, const Matrix& w, const Tolerances& tol,
                                  std::size_t budget, std::uint64_t seed) {
    require_density(w, f.dim(), tol, "additivity_audit");
    const std::size_t n = f.slice_count();
    std::vector<std::size_t> sizes(n);
    for (std::size_t m = 0; m < n; ++m) sizes[m] = f.decomps[m].members.size();

    // combos per slice: unordered member pair there x fine assignment elsewhere
    std::vector<std::uint64_t> per_slice(n), others(n);
    std::uint64_t total = 0;
    bool overflow = false;
    for (std::size_t m = 0; m < n; ++m) {
        std::uint64_t rest = 1;
        for (std::size_t mm = 0; mm < n; ++mm) {
            if (mm == m) continue;
            if (rest > (std::uint64_t{1} << 62) / sizes[mm]) overflow = true;
            rest *= sizes[mm];
        }
        others[m] = rest;
        std::uint64_t pairs = sizes[m] * (sizes[m] - 1) / 2;
        per_slice[m] = pairs * rest;
        total += per_slice[m];
    }

    if (overflow)
        throw EnumerationOverflow("additivity_audit: combination space does not fit in 64 bits");
    AdditivityReport rep;
    if (total == 0) {  // every slice has a single member: nothing to compare
        rep.within_tolerance = true;
        return rep;
    }
    rep.sampled = total > budget;
    std::uint64_t checks = rep.sampled ? budget : total;

    // Small families: merging members a,b at one slice sums the two fine chain
    // operators, so p(a∪b) − p_a − p_b = 2 Re D(i;j). One decoherence matrix
    // then answers every combo. Larger families recompute coarse chains.
    constexpr std::uint64_t dmat_cap = 2000;
    std::uint64_t fine_count = 1;
    bool have_dmat = true;
    for (auto s : sizes) {
        if (s > dmat_cap / fine_count) {
            have_dmat = false;
            break;
        }
        fine_count *= s;
    }
    Matrix dmat;
    if (have_dmat) dmat = decoherence_functional(f, w, tol, dmat_cap).entries;

    std::vector<std::uint64_t> stride(n);
    stride[n - 1] = 1;
    for (std::size_t m = n - 1; m-- > 0;) stride[m] = stride[m + 1] * sizes[m + 1];

    std::mt19937_64 rng(seed);
    auto decode_pair = [&](std::size_t m, std::uint64_t pair_idx) {
        // decode the unordered pair (a < b) at slice m from its rank
        std::size_t a = 0;
        std::uint64_t r = pair_idx;
        while (r >= sizes[m] - 1 - a) {
            r -= sizes[m] - 1 - a;
            ++a;
        }
        return std::pair<std::size_t, std::size_t>(a, a + 1 + static_cast<std::size_t>(r));
    };
    auto masks_for = [&](std::size_t m, std::size_t a, std::size_t b, std::uint64_t rest_idx) {
        std::vector<Mask> masks(n);
        std::uint64_t rr = rest_idx;
        for (std::size_t mm = n; mm-- > 0;) {
            masks[mm] = Mask(sizes[mm], 0);
            if (mm == m) continue;
            masks[mm][static_cast<std::size_t>(rr % sizes[mm])] = 1;
            rr /= sizes[mm];
        }
        masks[m][a] = 1;
        masks[m][b] = 1;
        return masks;
    };
    auto run_combo = [&](std::size_t m, std::uint64_t pair_idx, std::uint64_t rest_idx) {
        auto [a, b] = decode_pair(m, pair_idx);
        double disc;
        if (have_dmat) {
            std::uint64_t base = 0, rr = rest_idx;
            for (std::size_t mm = n; mm-- > 0;) {
                if (mm == m) continue;
                base += (rr % sizes[mm]) * stride[mm];
                rr /= sizes[mm];
            }
            auto i = static_cast<Eigen::Index>(base + a * stride[m]);
            auto j = static_cast<Eigen::Index>(base + b * stride[m]);
            disc = std::abs(2.0 * dmat(i, j).real());
        } else {
            auto masks = masks_for(m, a, b, rest_idx);
            auto prob_of = [&](const std::vector<Mask>& mk) {
                std::vector<Matrix> events;
                events.reserve(n);
                for (std::size_t mm = 0; mm < n; ++mm)
                    events.push_back(coarse_projector(f.decomps[mm], mk[mm]));
                Matrix c = Matrix(events.front() * f.unitaries.front());
                for (std::size_t mm = 1; mm < n; ++mm) c = events[mm] * (f.unitaries[mm] * c);
                Matrix cw = c * w;
                return cw.cwiseProduct(c.conjugate()).sum().real();
            };
            double p_union = prob_of(masks);
            masks[m][b] = 0;
            double p_a = prob_of(masks);
            masks[m][a] = 0;
            masks[m][b] = 1;
            double p_b = prob_of(masks);
            disc = std::abs(p_union - p_a - p_b);
        }
        if (disc > rep.max_discrepancy) {
            rep.max_discrepancy = disc;
            rep.worst_label = history_label(f, masks_for(m, a, b, rest_idx));
        }
    };

    if (!rep.sampled) {
        for (std::size_t m = 0; m < n; ++m) {
            std::uint64_t pairs = sizes[m] * (sizes[m] - 1) / 2;
            for (std::uint64_t p = 0; p < pairs; ++p)
                for (std::uint64_t rest = 0; rest < others[m]; ++rest) run_combo(m, p, rest);
        }
    } else {
        std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
        for (std::uint64_t c = 0; c < checks; ++c) {
            std::uint64_t r = pick(rng);
            std::size_t m = 0;
            while (r >= per_slice[m]) r -= per_slice[m++];
            run_combo(m, r / others[m], r % others[m]);
        }
    }
    rep.combos_checked = checks;
    rep.within_tolerance = rep.max_discrepancy <= 10.0 * tol.eps_decoherence;
    return rep;
}

}  // namespace histkit
