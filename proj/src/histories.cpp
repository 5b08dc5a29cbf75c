#include "histkit/histories.hpp"

#include <algorithm>
#include <sstream>

namespace histkit {

void validate_grid(const TimeGrid& grid) {
    if (grid.slices.empty())
        throw ContractViolation("time grid needs at least one slice");
    if (grid.t0 > grid.slices.front())
        throw ContractViolation("time grid: t0 lies after the first slice");
    for (std::size_t m = 1; m < grid.slices.size(); ++m)
        if (grid.slices[m] <= grid.slices[m - 1])
            throw ContractViolation("time grid: slice times must be strictly increasing");
}

DecompositionReport validate_decomposition(const Decomposition& d, const Tolerances& tol) {
    if (d.members.empty())
        throw ContractViolation("decomposition has no members");
    if (d.labels.size() != d.members.size())
        throw ContractViolation("decomposition labels do not match member count");
    const Eigen::Index dim = d.members.front().rows();
    for (const auto& p : d.members)
        if (p.rows() != dim || p.cols() != dim)
            throw ContractViolation("decomposition members must be square matrices of one dimension");

    DecompositionReport rep;
    Matrix sum = Matrix::Zero(dim, dim);
    for (const auto& p : d.members) sum += p;
    rep.sum_residual = max_norm(sum - Matrix::Identity(dim, dim));
    for (std::size_t k = 0; k < d.members.size(); ++k)
        for (std::size_t j = 0; j < d.members.size(); ++j) {
            if (k == j) continue;
            rep.ortho_residual = std::max(rep.ortho_residual, max_norm(d.members[k] * d.members[j]));
        }
    rep.passed = rep.sum_residual <= tol.eps_structure && rep.ortho_residual <= tol.eps_structure;
    return rep;
}

Matrix coarse_projector(const Decomposition& d, const Mask& mask) {
    if (mask.size() != d.members.size())
        throw ContractViolation("mask length does not match decomposition member count");
    const Eigen::Index dim = d.members.front().rows();
    Matrix q = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < mask.size(); ++k)
        if (mask[k]) q += d.members[k];
    return q;
}

int Family::dim() const {
    if (decomps.empty() || decomps.front().members.empty()) return 0;
    return static_cast<int>(decomps.front().members.front().rows());
}

namespace {

void validate_family(const Family& f, const Tolerances& tol) {
    validate_grid(f.grid);
    if (f.decomps.size() != f.grid.slices.size())
        throw ContractViolation("family '" + f.name + "': need one decomposition per slice");
    if (f.unitaries.size() != f.grid.slices.size())
        throw ContractViolation("family '" + f.name + "': need one propagator per slice interval");
    const int dim = f.dim();
    for (std::size_t m = 0; m < f.decomps.size(); ++m) {
        if (f.decomps[m].time_index != static_cast<int>(m) + 1) {
            std::ostringstream os;
            os << "family '" << f.name << "': decomposition at slice " << m + 1 << " carries time index "
               << f.decomps[m].time_index;
            throw ContractViolation(os.str());
        }
        auto rep = validate_decomposition(f.decomps[m], tol);
        if (!rep.passed) {
            std::ostringstream os;
            os << "family '" << f.name << "': decomposition at slice " << m + 1
               << " is not projective (sum residual " << rep.sum_residual << ", orthogonality residual "
               << rep.ortho_residual << ", threshold " << tol.eps_structure << ")";
            throw ValidationError(os.str());
        }
        for (std::size_t k = 0; k < f.decomps[m].members.size(); ++k)
            if (!check_projector(f.decomps[m].members[k], tol)) {
                std::ostringstream os;
                os << "family '" << f.name << "': member '" << f.decomps[m].labels[k] << "' at slice "
                   << m + 1 << " is not a projector (hermiticity residual "
                   << hermiticity_residual(f.decomps[m].members[k]) << ", idempotence residual "
                   << idempotence_residual(f.decomps[m].members[k]) << ", threshold " << tol.eps_structure
                   << ")";
                throw ValidationError(os.str());
            }
    }
    for (std::size_t m = 0; m < f.unitaries.size(); ++m) {
        if (f.unitaries[m].rows() != dim || f.unitaries[m].cols() != dim)
            throw ContractViolation("family '" + f.name + "': propagator dimension mismatch");
        double res = unitarity_residual(f.unitaries[m]);
        if (!(res <= tol.eps_structure)) {  // negated so NaN residuals fail too
            std::ostringstream os;
            os << "family '" << f.name << "': interval propagator " << m + 1 << " is not unitary (residual "
               << res << ", threshold " << tol.eps_structure << ")";
            throw ValidationError(os.str());
        }
    }
}

}  // namespace

Family make_family(TimeGrid grid, std::vector<Decomposition> decomps, std::vector<Matrix> unitaries,
                   std::string name, const Tolerances& tol) {
    Family f{std::move(grid), std::move(decomps), std::move(unitaries), std::move(name)};
    validate_family(f, tol);
    return f;
}

Family make_family_generated(TimeGrid grid, std::vector<Decomposition> decomps, const Matrix& h,
                             std::string name, const Tolerances& tol) {
    validate_grid(grid);
    std::vector<Matrix> unitaries;
    unitaries.reserve(grid.slices.size());
    double prev = grid.t0;
    for (double t : grid.slices) {
        unitaries.push_back(propagator(h, t - prev, tol));
        prev = t;
    }
    return make_family(std::move(grid), std::move(decomps), std::move(unitaries), std::move(name), tol);
}

std::string history_label(const Family& f, const std::vector<Mask>& masks) {
    if (masks.size() != f.slice_count())
        throw ContractViolation("history needs one mask per slice");
    std::string out;
    for (std::size_t m = 0; m < masks.size(); ++m) {
        const auto& d = f.decomps[m];
        const auto& mask = masks[m];
        if (mask.size() != d.members.size())
            throw ContractViolation("mask length does not match decomposition member count");
        std::size_t ones = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
        std::string part;
        if (ones == 0) {
            part = "0";
        } else if (ones == mask.size()) {
            part = "1";
        } else if (ones == 1) {
            part = d.labels[static_cast<std::size_t>(std::find(mask.begin(), mask.end(), 1) - mask.begin())];
        } else {
            part = "[";
            bool first = true;
            for (std::size_t k = 0; k < mask.size(); ++k)
                if (mask[k]) {
                    if (!first) part += "+";
                    part += d.labels[k];
                    first = false;
                }
            part += "]";
        }
        if (m) out += "&";
        out += part;
    }
    return out;
}

History make_history(const Family& f, const std::vector<Mask>& masks) {
    History h;
    h.label = history_label(f, masks);  // also validates shapes
    h.times = f.grid.slices;
    h.entries.reserve(masks.size());
    for (std::size_t m = 0; m < masks.size(); ++m)
        h.entries.push_back({masks[m], coarse_projector(f.decomps[m], masks[m])});
    return h;
}

std::vector<History> enumerate_fine(const Family& f, std::size_t cap) {
    std::size_t total = 1;
    for (const auto& d : f.decomps) {
        if (d.members.size() > cap / total) {
            std::ostringstream os;
            os << "family '" << f.name << "': fine history count exceeds cap " << cap;
            throw EnumerationOverflow(os.str());
        }
        total *= d.members.size();
    }
    std::vector<History> out;
    out.reserve(total);
    const std::size_t n = f.slice_count();
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t count = 0; count < total; ++count) {
        std::vector<Mask> masks(n);
        for (std::size_t m = 0; m < n; ++m) {
            masks[m] = Mask(f.decomps[m].members.size(), 0);
            masks[m][idx[m]] = 1;
        }
        out.push_back(make_history(f, masks));
        // last slice runs fastest: first slice is the most significant digit
        for (std::size_t m = n; m-- > 0;) {
            if (++idx[m] < f.decomps[m].members.size()) break;
            idx[m] = 0;
        }
    }
    return out;
}

bool same_history(const History& a, const History& b, const Tolerances& tol) {
    if (a.times != b.times) return false;
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t m = 0; m < a.entries.size(); ++m) {
        const Matrix& pa = a.entries[m].matrix;
        const Matrix& pb = b.entries[m].matrix;
        if (pa.rows() != pb.rows() || pa.cols() != pb.cols()) return false;
        if (max_norm(pa - pb) > tol.eps_structure) return false;
    }
    return true;
}

std::optional<std::vector<Mask>> express_in_family(const History& h, const Family& f, const Tolerances& tol) {
    if (h.times != f.grid.slices) return std::nullopt;
    if (h.entries.size() != f.slice_count()) return std::nullopt;
    std::vector<Mask> masks;
    masks.reserve(h.entries.size());
    for (std::size_t m = 0; m < h.entries.size(); ++m) {
        const Matrix& q = h.entries[m].matrix;
        const auto& d = f.decomps[m];
        if (q.rows() != d.members.front().rows()) return std::nullopt;
        Mask mask(d.members.size(), 0);
        for (std::size_t k = 0; k < d.members.size(); ++k) {
            const Matrix& p = d.members[k];
            Matrix pq = p * q;
            if (max_norm(pq) <= tol.eps_structure) {
                mask[k] = 0;  // member entirely outside the event
            } else if (max_norm(pq - p) <= tol.eps_structure) {
                mask[k] = 1;  // member entirely inside
            } else {
                return std::nullopt;  // straddles the member: not a coarse graining
            }
        }
        if (max_norm(coarse_projector(d, mask) - q) > tol.eps_structure) return std::nullopt;
        masks.push_back(std::move(mask));
    }
    return masks;
}

}  // namespace histkit
