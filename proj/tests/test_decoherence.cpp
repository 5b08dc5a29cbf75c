#include <doctest.h>

#include <histkit/decoherence.hpp>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"

using namespace histkit;
using doctest::Contains;

namespace {

Family qutrit_boxes() {
    // dim 3, trivial dynamics: {A, notA} at t1, {phi, notphi} at t2
    Vector a(3), phi(3);
    a << 1.0, 0.0, 0.0;
    phi << 1.0, 1.0, -1.0;
    Matrix pa = projector_onto(a);
    Matrix pphi = projector_onto(phi);
    Decomposition d1{1, {pa, Matrix::Identity(3, 3) - pa}, {"A", "notA"}};
    Decomposition d2{2, {pphi, Matrix::Identity(3, 3) - pphi}, {"phi", "notphi"}};
    return make_family({0.0, {1.0, 2.0}}, {d1, d2}, {Matrix::Identity(3, 3), Matrix::Identity(3, 3)},
                       "boxes");
}

DecoherenceMatrix hand_matrix(Complex off, double d0 = 0.5, double d1 = 0.5) {
    DecoherenceMatrix d;
    d.labels = {"a", "b"};
    d.entries = Matrix::Zero(2, 2);
    d.entries(0, 0) = d0;
    d.entries(1, 1) = d1;
    d.entries(0, 1) = off;
    d.entries(1, 0) = std::conj(off);
    return d;
}

// independent additivity sweep: walk every slice, member pair, and fine
// assignment elsewhere, comparing three direct probability() calls
double brute_force_additivity(const Family& f, const Matrix& w) {
    std::size_t slices = f.slice_count();
    double worst = 0.0;
    for (std::size_t s = 0; s < slices; ++s) {
        std::size_t n = f.decomps[s].members.size();
        std::vector<std::size_t> sizes;
        for (std::size_t k = 0; k < slices; ++k)
            if (k != s) sizes.push_back(f.decomps[k].members.size());
        std::size_t rest = 1;
        for (std::size_t m : sizes) rest *= m;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                for (std::size_t r = 0; r < rest; ++r) {
                    std::vector<Mask> base(slices);
                    std::size_t code = r;
                    for (std::size_t k = slices; k-- > 0;) {
                        if (k == s) continue;
                        std::size_t m = f.decomps[k].members.size();
                        base[k].assign(m, 0);
                        base[k][code % m] = 1;
                        code /= m;
                    }
                    auto with = [&](std::size_t a, std::size_t b) {
                        std::vector<Mask> masks = base;
                        masks[s].assign(n, 0);
                        masks[s][a] = 1;
                        if (b != a) masks[s][b] = 1;
                        return probability(make_history(f, masks), f, w);
                    };
                    double disc = std::abs(with(i, j) - with(i, i) - with(j, j));
                    worst = std::max(worst, disc);
                }
    }
    return worst;
}

}  // namespace

TEST_CASE("class_operator collapses to the propagator on identity events") {
    std::mt19937_64 rng(3);
    TimeGrid grid{0.0, {1.0, 2.0}};
    std::vector<Decomposition> ds = {testutil::random_decomposition(3, 2, 1, rng),
                                     testutil::random_decomposition(3, 3, 2, rng)};
    std::vector<Matrix> us = {testutil::haar_unitary(3, rng), testutil::haar_unitary(3, rng)};
    Family f = make_family(grid, ds, us, "cls");

    History everything = make_history(f, {Mask{1, 1}, Mask{1, 1, 1}});
    ClassOperator c = class_operator(everything, f);
    CHECK(max_norm(c.matrix - us[1] * us[0]) < 1e-12);

    History nothing = make_history(f, {Mask{1, 1}, Mask{0, 0, 0}});
    CHECK(max_norm(class_operator(nothing, f).matrix) == 0.0);

    History fine = make_history(f, {Mask{0, 1}, Mask{0, 0, 1}});
    Matrix want = ds[1].members[2] * us[1] * ds[0].members[1] * us[0];
    CHECK(max_norm(class_operator(fine, f).matrix - want) < 1e-12);
}

TEST_CASE("class_operator rejects foreign histories") {
    std::mt19937_64 rng(9);
    TimeGrid grid{0.0, {1.0}};
    Family f = make_family(grid, {testutil::random_decomposition(3, 3, 1, rng)},
                           {testutil::haar_unitary(3, rng)}, "f3");
    Family g = make_family({0.0, {2.0}}, {testutil::random_decomposition(3, 3, 1, rng)},
                           {testutil::haar_unitary(3, rng)}, "g3");
    History h = make_history(g, {Mask{1, 0, 0}});
    CHECK_THROWS_WITH_AS(class_operator(h, f), Contains("time grid"), ContractViolation);

    Family f4 = make_family({0.0, {2.0}}, {testutil::random_decomposition(4, 2, 1, rng)},
                            {testutil::haar_unitary(4, rng)}, "f4");
    CHECK_THROWS_WITH_AS(class_operator(h, f4), Contains("dimension"), ContractViolation);
}

TEST_CASE("probability basics") {
    Vector plus(2), up(2), down(2);
    plus << 1.0, 1.0;
    up << 1.0, 0.0;
    down << 0.0, 1.0;
    Decomposition z{1, {projector_onto(up), projector_onto(down)}, {"z_up", "z_down"}};
    Family f = make_family({0.0, {1.0}}, {z}, {Matrix::Identity(2, 2)}, "spin");
    Matrix w = projector_onto(plus);

    CHECK(probability(make_history(f, {Mask{1, 0}}), f, w) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(probability(make_history(f, {Mask{0, 1}}), f, w) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(probability(make_history(f, {Mask{1, 1}}), f, w) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probability(make_history(f, {Mask{0, 0}}), f, w) == 0.0);

    CHECK_THROWS_AS(probability(make_history(f, {Mask{1, 0}}), f, 2.0 * w), ValidationError);
}

TEST_CASE("postselected box probability") {
    Family f = qutrit_boxes();
    Vector psi(3);
    psi << 1.0, 1.0, 1.0;
    Matrix w = projector_onto(psi);
    // identity at t1, phi at t2: the chain is P_phi alone and |<phi|psi>|^2 = 1/9
    double p = probability(make_history(f, {Mask{1, 1}, Mask{1, 0}}), f, w);
    CHECK(p == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("probability is invariant under member relabeling") {
    std::mt19937_64 rng(13);
    testutil::RandomFamilySpec spec;
    spec.dim = 4;
    spec.slices = 2;
    Family f = testutil::random_family(spec, rng);
    Matrix w = testutil::random_density(4, rng);

    Family g = f;  // reverse member order at slice 0
    std::reverse(g.decomps[0].members.begin(), g.decomps[0].members.end());
    std::reverse(g.decomps[0].labels.begin(), g.decomps[0].labels.end());

    std::size_t n0 = f.decomps[0].members.size();
    for (std::size_t i = 0; i < n0; ++i) {
        Mask mf(n0, 0), mg(n0, 0);
        mf[i] = 1;
        mg[n0 - 1 - i] = 1;
        Mask rest(f.decomps[1].members.size(), 1);
        double pf = probability(make_history(f, {mf, rest}), f, w);
        double pg = probability(make_history(g, {mg, rest}), g, w);
        CHECK(pf == doctest::Approx(pg).epsilon(1e-12));
    }
}

TEST_CASE("decoherence functional invariants on random families") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 12; ++trial) {
        testutil::RandomFamilySpec spec;
        spec.dim = 2 + static_cast<int>(rng() % 4);
        spec.slices = 1 + static_cast<int>(rng() % 2);
        Family f = testutil::random_family(spec, rng);
        Matrix w = testutil::random_density(spec.dim, rng);

        DecoherenceMatrix d = decoherence_functional(f, w);
        std::vector<History> fine = enumerate_fine(f);
        REQUIRE(d.entries.rows() == static_cast<Eigen::Index>(fine.size()));
        REQUIRE(d.labels.size() == fine.size());

        CHECK(max_norm(d.entries - d.entries.adjoint()) < 1e-12);
        CHECK(std::abs(d.entries.sum() - Complex(1.0, 0.0)) < 1e-9);  // sum rule: all chains add to U
        for (Eigen::Index i = 0; i < d.entries.rows(); ++i) {
            std::size_t k = static_cast<std::size_t>(i);
            CHECK(d.entries(i, i).real() >= -1e-12);
            CHECK(std::abs(d.entries(i, i).imag()) < 1e-12);
            CHECK(d.labels[k] == fine[k].label);
            CHECK(d.entries(i, i).real() ==
                  doctest::Approx(probability(fine[k], f, w)).epsilon(1e-10));
        }
    }
}

TEST_CASE("decoherence functional honors the dense cap") {
    std::mt19937_64 rng(103);
    testutil::RandomFamilySpec spec;
    spec.dim = 4;
    spec.slices = 2;
    Family f = testutil::random_family(spec, rng);
    Matrix w = testutil::random_density(4, rng);
    CHECK_THROWS_AS(decoherence_functional(f, w, {}, 2), EnumerationOverflow);
    CHECK_THROWS_AS(decoherence_functional(f, 2.0 * w), ValidationError);
}

TEST_CASE("weak and medium consistency on hand-built matrices") {
    SUBCASE("purely imaginary off-diagonal: weak yes, medium no") {
        DecoherenceMatrix d = hand_matrix(Complex(0.0, 0.2));
        ConsistencyReport weak = check_consistency(d, ConsistencyMode::weak);
        ConsistencyReport medium = check_consistency(d, ConsistencyMode::medium);
        CHECK(weak.passed);
        CHECK_FALSE(medium.passed);
        CHECK(medium.degree == doctest::Approx(0.4));
        CHECK(weak.degree == doctest::Approx(0.4));  // degree ignores the mode
        CHECK(medium.worst_pair == std::pair<std::string, std::string>{"a", "b"});
        CHECK(medium.worst_raw == doctest::Approx(0.2));
        CHECK(medium.worst_normalized == doctest::Approx(0.4));
        CHECK(medium.trace_sum == doctest::Approx(1.0));
        REQUIRE(medium.probabilities.size() == 2);
        CHECK(medium.probabilities[0].second == doctest::Approx(0.5));
    }
    SUBCASE("real off-diagonal fails both") {
        DecoherenceMatrix d = hand_matrix(Complex(0.1, 0.0));
        CHECK_FALSE(check_consistency(d, ConsistencyMode::weak).passed);
        CHECK_FALSE(check_consistency(d, ConsistencyMode::medium).passed);
    }
    SUBCASE("vacuous pair: zero-probability branch never counts") {
        DecoherenceMatrix d = hand_matrix(Complex(0.5, 0.0), 1.0, 0.0);
        ConsistencyReport r = check_consistency(d, ConsistencyMode::medium);
        CHECK(r.passed);
        CHECK(r.degree == 0.0);
    }
    SUBCASE("exactly decoherent") {
        DecoherenceMatrix d = hand_matrix(Complex(0.0, 0.0));
        ConsistencyReport r = check_consistency(d, ConsistencyMode::medium);
        CHECK(r.passed);
        CHECK(r.degree == 0.0);
        CHECK(r.trace_sum == doctest::Approx(1.0));
    }
}

TEST_CASE("medium consistency implies weak consistency") {
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 8; ++trial) {
        testutil::RandomFamilySpec spec;
        spec.dim = 3 + static_cast<int>(rng() % 3);
        spec.slices = 2;
        Family f = testutil::random_family(spec, rng);
        Matrix w = testutil::random_density(spec.dim, rng);
        DecoherenceMatrix d = decoherence_functional(f, w);
        ConsistencyReport medium = check_consistency(d, ConsistencyMode::medium);
        ConsistencyReport weak = check_consistency(d, ConsistencyMode::weak);
        if (medium.passed) CHECK(weak.passed);
        CHECK(weak.degree == doctest::Approx(medium.degree));
    }
}

TEST_CASE("one-time families are automatically decoherent") {
    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 20; ++trial) {
        int dim = 2 + static_cast<int>(rng() % 7);
        testutil::RandomFamilySpec spec;
        spec.dim = dim;
        spec.slices = 1;
        spec.max_members = dim;
        Family f = testutil::random_family(spec, rng);
        Matrix w = testutil::random_density(dim, rng);
        ConsistencyReport r = check_family(f, w, ConsistencyMode::medium);
        CHECK(r.passed);
        CHECK(r.degree < 1e-10);
        CHECK(r.trace_sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("dense and streaming checks agree") {
    std::mt19937_64 rng(113);
    testutil::RandomFamilySpec spec;
    spec.dim = 4;
    spec.slices = 2;
    Family f = testutil::random_family(spec, rng);
    Matrix w = testutil::random_density(4, rng);

    ConsistencyReport dense = check_family(f, w, ConsistencyMode::medium);
    ConsistencyReport stream = check_family(f, w, ConsistencyMode::medium, {}, 1);
    CHECK(dense.passed == stream.passed);
    CHECK(dense.degree == doctest::Approx(stream.degree).epsilon(1e-12));
    CHECK(dense.worst_raw == doctest::Approx(stream.worst_raw).epsilon(1e-12));
    CHECK(dense.worst_normalized == doctest::Approx(stream.worst_normalized).epsilon(1e-12));
    CHECK(dense.trace_sum == doctest::Approx(stream.trace_sum).epsilon(1e-12));
    CHECK(dense.worst_pair == stream.worst_pair);
}

TEST_CASE("union probability decomposes into the pair functional") {
    std::mt19937_64 rng(127);
    testutil::RandomFamilySpec spec;
    spec.dim = 4;
    spec.slices = 2;
    Family f = testutil::random_family(spec, rng);
    Matrix w = testutil::random_density(4, rng);
    DecoherenceMatrix d = decoherence_functional(f, w);

    std::size_t n0 = f.decomps[0].members.size();
    std::size_t n1 = f.decomps[1].members.size();
    REQUIRE(n0 >= 2);
    // histories sharing the slice-1 member, differing at slice 0
    for (std::size_t b = 0; b < n1; ++b) {
        Mask m1(n1, 0);
        m1[b] = 1;
        Mask first(n0, 0), second(n0, 0), both(n0, 0);
        first[0] = 1;
        second[1] = 1;
        both[0] = 1;
        both[1] = 1;
        double pu = probability(make_history(f, {both, m1}), f, w);
        double pa = probability(make_history(f, {first, m1}), f, w);
        double pb = probability(make_history(f, {second, m1}), f, w);
        Eigen::Index ia = static_cast<Eigen::Index>(0 * n1 + b);
        Eigen::Index ib = static_cast<Eigen::Index>(1 * n1 + b);
        double interference = 2.0 * d.entries(ia, ib).real();
        CHECK(pu - pa - pb == doctest::Approx(interference).epsilon(1e-9));
    }
}

TEST_CASE("additivity audit matches a direct sweep") {
    std::mt19937_64 rng(131);
    TimeGrid grid{0.0, {1.0, 2.0}};
    std::vector<Decomposition> ds = {testutil::random_decomposition(4, 2, 1, rng),
                                     testutil::random_decomposition(4, 3, 2, rng)};
    std::vector<Matrix> us = {testutil::haar_unitary(4, rng), testutil::haar_unitary(4, rng)};
    Family f = make_family(grid, ds, us, "audit");
    Matrix w = testutil::random_density(4, rng);

    AdditivityReport rep = additivity_audit(f, w);
    CHECK_FALSE(rep.sampled);
    CHECK(rep.combos_checked == 9);  // 1*3 pairs at slice 0 + 3*2 at slice 1
    double oracle = brute_force_additivity(f, w);
    CHECK(rep.max_discrepancy == doctest::Approx(oracle).epsilon(1e-12));
    CHECK_FALSE(rep.worst_label.empty());

    AdditivityReport again = additivity_audit(f, w);
    CHECK(again.max_discrepancy == rep.max_discrepancy);
    CHECK(again.worst_label == rep.worst_label);
    CHECK(again.combos_checked == rep.combos_checked);
}

TEST_CASE("additivity audit samples when over budget") {
    std::mt19937_64 rng(137);
    TimeGrid grid{0.0, {1.0, 2.0}};
    std::vector<Decomposition> ds = {testutil::random_decomposition(4, 2, 1, rng),
                                     testutil::random_decomposition(4, 3, 2, rng)};
    std::vector<Matrix> us = {testutil::haar_unitary(4, rng), testutil::haar_unitary(4, rng)};
    Family f = make_family(grid, ds, us, "budget");
    Matrix w = testutil::random_density(4, rng);

    AdditivityReport rep = additivity_audit(f, w, {}, 4, 99);
    CHECK(rep.sampled);
    CHECK(rep.combos_checked == 4);
    AdditivityReport again = additivity_audit(f, w, {}, 4, 99);
    CHECK(again.max_discrepancy == rep.max_discrepancy);
    CHECK(again.worst_label == rep.worst_label);

    AdditivityReport full = additivity_audit(f, w);
    CHECK(rep.max_discrepancy <= full.max_discrepancy + 1e-15);
}

TEST_CASE("additivity holds exactly on a decoherent family") {
    // diagonal decompositions, trivial dynamics, any diagonal-ish state
    std::mt19937_64 rng(139);
    Decomposition d1{1, {}, {}};
    Decomposition d2{2, {}, {}};
    for (int k = 0; k < 3; ++k) {
        Matrix p = Matrix::Zero(3, 3);
        p(k, k) = 1.0;
        d1.members.push_back(p);
        d1.labels.push_back("a" + std::to_string(k));
        d2.members.push_back(p);
        d2.labels.push_back("b" + std::to_string(k));
    }
    Family f = make_family({0.0, {1.0, 2.0}}, {d1, d2},
                           {Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, "classical");
    Matrix w = testutil::random_density(3, rng);
    w = 0.5 * (w + w.adjoint());
    Matrix diag = Matrix::Zero(3, 3);
    for (int k = 0; k < 3; ++k) diag(k, k) = w(k, k);
    diag /= diag.trace().real();

    AdditivityReport rep = additivity_audit(f, diag);
    CHECK(rep.within_tolerance);
    CHECK(rep.max_discrepancy < 1e-10);
    ConsistencyReport cons = check_family(f, diag, ConsistencyMode::medium);
    CHECK(cons.passed);
}
