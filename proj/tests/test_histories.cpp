#include <doctest.h>

#include <histkit/histories.hpp>

#include "helpers.hpp"

using namespace histkit;
using doctest::Contains;

namespace {

Decomposition diag_basis(int dim, int time_index) {
    Decomposition d;
    d.time_index = time_index;
    for (int k = 0; k < dim; ++k) {
        Matrix p = Matrix::Zero(dim, dim);
        p(k, k) = 1.0;
        d.members.push_back(p);
        d.labels.push_back("e" + std::to_string(k));
    }
    return d;
}

Family two_slice_family(int dim, std::mt19937_64& rng) {
    TimeGrid grid{0.0, {1.0, 2.0}};
    std::vector<Decomposition> decomps = {testutil::random_decomposition(dim, 2, 1, rng),
                                          testutil::random_decomposition(dim, dim, 2, rng)};
    std::vector<Matrix> us = {testutil::haar_unitary(dim, rng), testutil::haar_unitary(dim, rng)};
    return make_family(grid, decomps, us, "pair");
}

}  // namespace

TEST_CASE("validate_grid rejects disorder") {
    CHECK_NOTHROW(validate_grid({0.0, {1.0, 2.0, 3.0}}));
    CHECK_NOTHROW(validate_grid({1.0, {1.0}}));  // t0 may coincide with the first slice
    CHECK_THROWS_WITH_AS(validate_grid({0.0, {}}), Contains("at least one slice"), ContractViolation);
    CHECK_THROWS_WITH_AS(validate_grid({2.0, {1.0}}), Contains("t0 lies after"), ContractViolation);
    CHECK_THROWS_WITH_AS(validate_grid({0.0, {1.0, 1.0}}), Contains("strictly increasing"),
                         ContractViolation);
}

TEST_CASE("validate_decomposition measures residuals") {
    Decomposition good = diag_basis(3, 1);
    DecompositionReport rep = validate_decomposition(good);
    CHECK(rep.passed);
    CHECK(rep.sum_residual == 0.0);
    CHECK(rep.ortho_residual == 0.0);

    Decomposition leaky;  // two members of a qutrit basis: sum misses e2
    leaky.time_index = 1;
    leaky.members = {good.members[0], good.members[1]};
    leaky.labels = {"a", "b"};
    rep = validate_decomposition(leaky);
    CHECK_FALSE(rep.passed);
    CHECK(rep.sum_residual == doctest::Approx(1.0));

    Decomposition overlapping;
    Vector plus(2), up(2);
    plus << 1.0, 1.0;
    up << 1.0, 0.0;
    overlapping.time_index = 1;
    overlapping.members = {projector_onto(up), projector_onto(plus)};
    overlapping.labels = {"up", "plus"};
    rep = validate_decomposition(overlapping);
    CHECK_FALSE(rep.passed);
    CHECK(rep.ortho_residual > 0.1);

    Decomposition empty;
    CHECK_THROWS_WITH_AS(validate_decomposition(empty), Contains("no members"), ContractViolation);

    Decomposition mislabeled = diag_basis(2, 1);
    mislabeled.labels.pop_back();
    CHECK_THROWS_WITH_AS(validate_decomposition(mislabeled), Contains("labels"), ContractViolation);
}

TEST_CASE("coarse_projector unions members") {
    std::mt19937_64 rng(5);
    Decomposition d = testutil::random_decomposition(4, 3, 1, rng);

    Matrix all = coarse_projector(d, Mask{1, 1, 1});
    CHECK(max_norm(all - Matrix::Identity(4, 4)) < 1e-12);
    Matrix none = coarse_projector(d, Mask{0, 0, 0});
    CHECK(max_norm(none) == 0.0);

    Matrix left = coarse_projector(d, Mask{1, 0, 1});
    Matrix right = coarse_projector(d, Mask{0, 1, 0});
    CHECK(max_norm(left + right - Matrix::Identity(4, 4)) < 1e-12);  // complements
    CHECK(check_projector(left));

    CHECK_THROWS_WITH_AS(coarse_projector(d, Mask{1, 0}), Contains("mask length"), ContractViolation);
}

TEST_CASE("make_family validates everything") {
    std::mt19937_64 rng(17);
    TimeGrid grid{0.0, {1.0, 2.0}};
    std::vector<Decomposition> decomps = {diag_basis(2, 1), diag_basis(2, 2)};
    std::vector<Matrix> us = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};

    Family f = make_family(grid, decomps, us, "plain");
    CHECK(f.dim() == 2);
    CHECK(f.slice_count() == 2);

    SUBCASE("slice/time-index mismatch") {
        auto wrong = decomps;
        wrong[1].time_index = 7;
        CHECK_THROWS_WITH_AS(make_family(grid, wrong, us, "bad"), Contains("carries time index"),
                             ContractViolation);
    }
    SUBCASE("propagator count") {
        CHECK_THROWS_WITH_AS(make_family(grid, decomps, {Matrix::Identity(2, 2)}, "bad"),
                             Contains("one propagator per slice"), ContractViolation);
    }
    SUBCASE("non-unitary propagator") {
        auto bent = us;
        bent[0] = 0.5 * Matrix::Identity(2, 2);
        CHECK_THROWS_AS(make_family(grid, decomps, bent, "bad"), ValidationError);
    }
    SUBCASE("non-projective slice") {
        auto leaky = decomps;
        leaky[0].members[1] = 0.5 * leaky[0].members[1];
        CHECK_THROWS_AS(make_family(grid, leaky, us, "bad"), ValidationError);
    }
}

TEST_CASE("make_family_generated uses the matrix exponential") {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 1) = 1.0;
    h(1, 0) = 1.0;
    TimeGrid grid{0.0, {0.5, 1.5}};
    Family f = make_family_generated(grid, {diag_basis(2, 1), diag_basis(2, 2)}, h, "gen");
    CHECK(max_norm(f.unitaries[0] - propagator(h, 0.5)) < 1e-12);
    CHECK(max_norm(f.unitaries[1] - propagator(h, 1.0)) < 1e-12);
}

TEST_CASE("enumerate_fine is lexicographic, first slice most significant") {
    std::mt19937_64 rng(29);
    TimeGrid grid{0.0, {1.0, 2.0}};
    std::vector<Decomposition> decomps = {testutil::random_decomposition(3, 2, 1, rng),
                                          testutil::random_decomposition(3, 3, 2, rng)};
    std::vector<Matrix> us = {testutil::haar_unitary(3, rng), testutil::haar_unitary(3, rng)};
    Family f = make_family(grid, decomps, us, "six");

    std::vector<History> fine = enumerate_fine(f);
    REQUIRE(fine.size() == 6);
    CHECK(fine[0].label == "m0&m0");
    CHECK(fine[1].label == "m0&m1");
    CHECK(fine[2].label == "m0&m2");
    CHECK(fine[3].label == "m1&m0");
    CHECK(fine[5].label == "m1&m2");
    for (const History& h : fine) {
        REQUIRE(h.entries.size() == 2);
        CHECK(h.times == std::vector<double>{1.0, 2.0});
    }

    // distinct members at each slice partition the identity
    Matrix sum0 = fine[0].entries[0].matrix + fine[3].entries[0].matrix;
    CHECK(max_norm(sum0 - Matrix::Identity(3, 3)) < 1e-12);
    Matrix sum1 = fine[0].entries[1].matrix + fine[1].entries[1].matrix + fine[2].entries[1].matrix;
    CHECK(max_norm(sum1 - Matrix::Identity(3, 3)) < 1e-12);

    CHECK_THROWS_WITH_AS(enumerate_fine(f, 5), Contains("exceeds cap"), EnumerationOverflow);
}

TEST_CASE("history_label formats") {
    std::mt19937_64 rng(31);
    TimeGrid grid{0.0, {1.0, 2.0}};
    std::vector<Decomposition> decomps = {diag_basis(3, 1), diag_basis(3, 2)};
    std::vector<Matrix> us = {Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
    Family f = make_family(grid, decomps, us, "labels");

    CHECK(history_label(f, {Mask{1, 0, 0}, Mask{0, 1, 0}}) == "e0&e1");
    CHECK(history_label(f, {Mask{1, 1, 0}, Mask{0, 0, 1}}) == "[e0+e1]&e2");
    CHECK(history_label(f, {Mask{1, 1, 1}, Mask{1, 0, 0}}) == "1&e0");
    CHECK(history_label(f, {Mask{0, 0, 0}, Mask{1, 1, 1}}) == "0&1");
}

TEST_CASE("make_history builds the chosen coarse events") {
    std::mt19937_64 rng(37);
    Family f = two_slice_family(4, rng);
    History h = make_history(f, {Mask{1, 0}, Mask{0, 1, 0, 1}});
    CHECK(h.entries[0].matrix.isApprox(f.decomps[0].members[0], 1e-14));
    CHECK(max_norm(h.entries[1].matrix - f.decomps[1].members[1] - f.decomps[1].members[3]) < 1e-14);
    CHECK(h.times == f.grid.slices);
    CHECK_THROWS_WITH_AS(make_history(f, {Mask{1, 0}}), Contains("one mask per slice"),
                         ContractViolation);
    CHECK_THROWS_AS(make_history(f, {Mask{1}, Mask{0, 1, 0, 1}}), ContractViolation);
}

TEST_CASE("same_history compares events and times") {
    std::mt19937_64 rng(43);
    Family f = two_slice_family(3, rng);
    History a = make_history(f, {Mask{1, 0}, Mask{0, 1, 1}});
    History b = make_history(f, {Mask{1, 0}, Mask{0, 1, 1}});
    History c = make_history(f, {Mask{0, 1}, Mask{0, 1, 1}});
    CHECK(same_history(a, a));
    CHECK(same_history(a, b));
    CHECK(same_history(b, a));
    CHECK_FALSE(same_history(a, c));

    History shifted = a;
    shifted.times[1] += 0.5;  // different grid, unequal but not an error
    CHECK_FALSE(same_history(a, shifted));

    History nudged = a;
    nudged.entries[0].matrix(0, 0) += 1e-13;  // below eps_structure
    CHECK(same_history(a, nudged));
}

TEST_CASE("express_in_family recovers masks") {
    std::mt19937_64 rng(47);
    Family f = two_slice_family(4, rng);
    std::vector<Mask> masks = {Mask{0, 1}, Mask{1, 0, 1, 0}};
    History h = make_history(f, masks);
    auto got = express_in_family(h, f);
    REQUIRE(got.has_value());
    CHECK(*got == masks);

    // an event straddling members of the slice decomposition has no mask
    History alien = h;
    Vector probe = testutil::random_pure_state(4, rng);
    Vector v0 = f.decomps[0].members[0] * probe;
    Vector v1 = f.decomps[0].members[1] * probe;
    Vector lean = 0.6 * v0.normalized() + 0.8 * v1.normalized();
    alien.entries[0].matrix = projector_onto(lean);
    alien.entries[0].mask.clear();
    CHECK_FALSE(express_in_family(alien, f).has_value());

    History offgrid = h;
    offgrid.times[0] += 0.25;
    CHECK_FALSE(express_in_family(offgrid, f).has_value());
}
