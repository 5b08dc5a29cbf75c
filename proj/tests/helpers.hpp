// Shared random fixtures for the test suite.  Everything is seeded so
// failures reproduce.
#pragma once

#include <histkit/decoherence.hpp>
#include <histkit/histories.hpp>
#include <histkit/linalg.hpp>

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace testutil {

using histkit::Complex;
using histkit::Matrix;
using histkit::Vector;

inline Matrix randn_complex(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix z(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) z(i, j) = Complex(g(rng), g(rng));
    return z;
}

// Haar-distributed unitary: QR of a Ginibre matrix with the R diagonal
// phases folded back in.
inline Matrix haar_unitary(int n, std::mt19937_64& rng) {
    Matrix z = randn_complex(n, rng);
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) {
        Complex d = r(i, i);
        q.col(i) *= d / std::abs(d);
    }
    return q;
}

inline Vector random_pure_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
    v.normalize();
    return v;
}

inline Matrix random_density(int n, std::mt19937_64& rng) {
    Matrix z = randn_complex(n, rng);
    Matrix w = z * z.adjoint();
    w /= w.trace().real();
    return w;
}

// Partition the columns of a Haar unitary into groups; each group spans one
// member of a projective decomposition.
inline histkit::Decomposition random_decomposition(int dim, int members, int time_index,
                                                   std::mt19937_64& rng) {
    Matrix u = haar_unitary(dim, rng);
    std::vector<int> sizes(static_cast<std::size_t>(members), 1);
    int extra = dim - members;
    std::uniform_int_distribution<int> pick(0, members - 1);
    while (extra-- > 0) sizes[static_cast<std::size_t>(pick(rng))]++;

    histkit::Decomposition d;
    d.time_index = time_index;
    int col = 0;
    for (int m = 0; m < members; ++m) {
        Matrix p = Matrix::Zero(dim, dim);
        for (int k = 0; k < sizes[static_cast<std::size_t>(m)]; ++k) {
            p += u.col(col) * u.col(col).adjoint();
            ++col;
        }
        d.members.push_back(p);
        d.labels.push_back("m" + std::to_string(m));
    }
    return d;
}

struct RandomFamilySpec {
    int dim = 3;
    int slices = 2;
    int max_members = 3;  // per slice, capped at dim
};

inline histkit::Family random_family(const RandomFamilySpec& spec, std::mt19937_64& rng) {
    histkit::TimeGrid grid;
    grid.t0 = 0.0;
    for (int k = 1; k <= spec.slices; ++k) grid.slices.push_back(static_cast<double>(k));

    std::vector<histkit::Decomposition> decomps;
    std::uniform_int_distribution<int> nmem(2, std::min(spec.max_members, spec.dim));
    for (int k = 0; k < spec.slices; ++k)
        decomps.push_back(random_decomposition(spec.dim, nmem(rng), k + 1, rng));

    std::vector<Matrix> unitaries;
    for (int k = 0; k < spec.slices; ++k) unitaries.push_back(haar_unitary(spec.dim, rng));

    return histkit::make_family(grid, decomps, unitaries, "rand");
}

}  // namespace testutil
