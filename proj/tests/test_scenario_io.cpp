#include <doctest.h>

#include <histkit/runner.hpp>
#include <histkit/scenario.hpp>
#include <histkit/scenarios.hpp>

#include "helpers.hpp"

using namespace histkit;
using doctest::Contains;

namespace {

// toy qutrit document exercising matrix members, span members, named masks,
// trivial dynamics, and a two-slice family
Json toy_doc() {
    Json doc;
    doc["name"] = "toy";
    doc["dimension"] = 3;
    doc["t0"] = 0.0;
    doc["times"] = Json::array({1.0, 2.0});
    doc["state"] = Json{{"kind", "pure"}, {"vector", Json::array({1.0, 1.0, 1.0})}};
    doc["dynamics"] = Json{{"kind", "trivial"}};
    Json first{
        {"name", "first"},
        {"time_index", 1},
        {"members",
         Json::array({Json{{"label", "a"},
                           {"matrix", Json::array({Json::array({1.0, 0.0, 0.0}),
                                                   Json::array({0.0, 0.0, 0.0}),
                                                   Json::array({0.0, 0.0, 0.0})})}},
                      Json{{"label", "rest"},
                           {"matrix", Json::array({Json::array({0.0, 0.0, 0.0}),
                                                   Json::array({0.0, 1.0, 0.0}),
                                                   Json::array({0.0, 0.0, 1.0})})}}})},
        {"masks", Json{{"justa", "10"}, {"everything", "11"}}},
    };
    Json second{
        {"name", "second"},
        {"time_index", 2},
        {"members", Json::array({Json{{"label", "p"}, {"span", Json::array({Json::array({0.0, 1.0, 0.0})})}},
                                 Json{{"label", "q"}, {"span", Json::array({Json::array({0.0, 0.0, 1.0})})}},
                                 Json{{"label", "r"}, {"span", Json::array({Json::array({1.0, 0.0, 0.0})})}}})},
    };
    doc["decompositions"] = Json::array({first, second});
    doc["families"] = Json::array({Json{{"name", "fam"}, {"slices", Json::array({"first", "second"})}}});
    return doc;
}

}  // namespace

TEST_CASE("complex/vector/matrix JSON encoding") {
    CHECK(json_from_complex(Complex(3.0, 0.0)) == Json(3.0));
    CHECK(json_from_complex(Complex(1.0, 2.0)) == Json::array({1.0, 2.0}));
    CHECK(complex_from_json(Json(2.5), "t") == Complex(2.5, 0.0));
    CHECK(complex_from_json(Json::array({0.0, -1.0}), "t") == Complex(0.0, -1.0));
    CHECK_THROWS_AS(complex_from_json(Json("x"), "t"), ValidationError);

    std::mt19937_64 rng(303);
    Vector v = testutil::random_pure_state(4, rng);
    Vector v2 = vector_from_json(json_from_vector(v), "t");
    CHECK((v - v2).norm() < 1e-15);
    Matrix m = testutil::randn_complex(3, rng);
    Matrix m2 = matrix_from_json(json_from_matrix(m), "t");
    CHECK(max_norm(m - m2) < 1e-15);
}

TEST_CASE("bundled scenarios round-trip byte-for-byte") {
    for (const std::string& name : {"spin-half", "three-box", "spin1-chain"}) {
        Scenario s = demo_scenario(name);
        std::string text = serialize_scenario(s);
        Scenario back = parse_scenario(text);
        CHECK(serialize_scenario(back) == text);
        CHECK(back.name == s.name);
        CHECK(back.dim == s.dim);
        CHECK(back.families.size() == s.families.size());
    }
}

TEST_CASE("round-tripped scenarios reproduce their reports exactly") {
    for (const std::string& name : {"spin-half", "three-box"}) {
        Scenario s = demo_scenario(name);
        Scenario back = parse_scenario(serialize_scenario(s));
        Json a = run_scenario_report(s, Tolerances{});
        Json b = run_scenario_report(back, Tolerances{});
        CHECK(a.dump() == b.dump());
        CHECK(a["expected"]["failed"].get<int>() == 0);
    }
}

TEST_CASE("toy document materializes with spans, masks, and defaults") {
    Scenario s = materialize_scenario(toy_doc());
    CHECK(s.dim == 3);
    CHECK(s.times == std::vector<double>{1.0, 2.0});
    CHECK(check_density(s.initial_state));  // pure vector normalized into a density
    REQUIRE(s.families.size() == 1);
    const ScenarioFamily& fam = s.families[0];
    CHECK(fam.family.slice_count() == 2);
    CHECK(fam.decomp_refs == std::vector<int>{0, 1});

    SUBCASE("bit-string selectors") {
        History h = resolve_history_spec(s, fam, "@1:10;@2:010");
        auto masks = express_in_family(h, fam.family);
        REQUIRE(masks.has_value());
        CHECK(*masks == std::vector<Mask>{Mask{1, 0}, Mask{0, 1, 0}});
    }
    SUBCASE("named masks and label lists") {
        History h = resolve_history_spec(s, fam, "@1:justa;@2:p,q");
        auto masks = express_in_family(h, fam.family);
        REQUIRE(masks.has_value());
        CHECK(*masks == std::vector<Mask>{Mask{1, 0}, Mask{1, 1, 0}});
    }
    SUBCASE("omitted slices default to the identity event") {
        History h = resolve_history_spec(s, fam, "@2:q");
        auto masks = express_in_family(h, fam.family);
        REQUIRE(masks.has_value());
        CHECK(*masks == std::vector<Mask>{Mask{1, 1}, Mask{0, 1, 0}});
        History everything = resolve_history_spec(s, fam, "");
        CHECK(probability(everything, fam.family, s.initial_state) == doctest::Approx(1.0));
    }
    SUBCASE("spec errors") {
        CHECK_THROWS_WITH_AS(resolve_history_spec(s, fam, "@3:10"),
                             Contains("matches no slice of family 'fam' (time indices: 1, 2)"),
                             ContractViolation);
        CHECK_THROWS_WITH_AS(resolve_history_spec(s, fam, "@1:10;@1:01"), Contains("repeats slice @1"),
                             ContractViolation);
        CHECK_THROWS_WITH_AS(resolve_history_spec(s, fam, "1:10"), Contains("must start with"),
                             ContractViolation);
        CHECK_THROWS_WITH_AS(resolve_history_spec(s, fam, "@x:10"), Contains("non-numeric"),
                             ContractViolation);
        CHECK_THROWS_WITH_AS(resolve_history_spec(s, fam, "@1"), Contains("missing ':'"),
                             ContractViolation);
        CHECK_THROWS_WITH_AS(resolve_history_spec(s, fam, "@1:zebra"), Contains("matches no mask"),
                             ContractViolation);
        CHECK_THROWS_WITH_AS(resolve_history_spec(s, fam, "@2:,"), Contains("selects no member"),
                             ContractViolation);
    }
    SUBCASE("find_family lists what exists") {
        CHECK(find_family(s, "fam").name == "fam");
        CHECK_THROWS_WITH_AS(find_family(s, "nope"),
                             Contains("no family named 'nope' in scenario 'toy' (families: fam)"),
                             ContractViolation);
    }
}

TEST_CASE("three-box mask specs reproduce the hand computation") {
    Scenario s = three_box();
    const ScenarioFamily& fam = find_family(s, "boxA");
    History h = resolve_history_spec(s, fam, "@1:10;@2:10");
    CHECK(h.label == "A&phi");
    CHECK(probability(h, fam.family, s.initial_state) == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
}

TEST_CASE("validation failures name section, residual, and threshold") {
    SUBCASE("leaky decomposition sum") {
        Json doc = toy_doc();
        doc["decompositions"][0]["members"][1]["matrix"][2][2] = 0.9;  // sum now diag(1,1,0.9)
        try {
            materialize_scenario(doc);
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("decompositions[first]") != std::string::npos);
            CHECK(msg.find("projective decomposition") != std::string::npos);
            CHECK(msg.find("0.1") != std::string::npos);
            CHECK(msg.find("1e-10") != std::string::npos);
        }
    }
    SUBCASE("non-Hermitian member") {
        Json doc = toy_doc();
        doc["decompositions"][0]["members"][0]["matrix"][0][1] = 0.5;
        CHECK_THROWS_WITH_AS(materialize_scenario(doc), Contains("not Hermitian"), ValidationError);
    }
    SUBCASE("overlapping span") {
        Json doc = toy_doc();
        doc["decompositions"][1]["members"][0]["span"] =
            Json::array({Json::array({0.0, 1.0, 0.0}), Json::array({0.0, 1.0, 0.1})});
        CHECK_THROWS_WITH_AS(materialize_scenario(doc), Contains("overlap"), ValidationError);
    }
    SUBCASE("bad state") {
        Json doc = toy_doc();
        doc["state"]["vector"] = Json::array({0.0, 0.0, 0.0});
        CHECK_THROWS_WITH_AS(materialize_scenario(doc), Contains("zero"), ValidationError);
        doc["state"] = Json{{"kind", "density"}, {"matrix", json_from_matrix(Matrix::Identity(3, 3))}};
        CHECK_THROWS_AS(materialize_scenario(doc), ValidationError);  // trace 3
    }
    SUBCASE("non-unitary dynamics") {
        Json doc = toy_doc();
        doc["dynamics"] = Json{
            {"kind", "unitaries"},
            {"matrices", Json::array({json_from_matrix(Matrix::Identity(3, 3)),
                                      json_from_matrix(0.5 * Matrix::Identity(3, 3))})},
        };
        CHECK_THROWS_WITH_AS(materialize_scenario(doc), Contains("not unitary"), ValidationError);
    }
    SUBCASE("mask with wrong width") {
        Json doc = toy_doc();
        doc["decompositions"][0]["masks"]["justa"] = "101";
        CHECK_THROWS_WITH_AS(materialize_scenario(doc), Contains("has 3 bits, decomposition has 2"),
                             ValidationError);
    }
    SUBCASE("times out of order") {
        Json doc = toy_doc();
        doc["times"] = Json::array({2.0, 1.0});
        CHECK_THROWS_WITH_AS(materialize_scenario(doc), Contains("strictly increasing"), ValidationError);
    }
    SUBCASE("not JSON at all") {
        CHECK_THROWS_WITH_AS(parse_scenario("פלוטוניום"), Contains("not valid JSON"), ValidationError);
    }
}

TEST_CASE("generator dynamics agree with explicit propagators") {
    Json doc = toy_doc();
    Matrix h = Matrix::Zero(3, 3);
    h(0, 1) = Complex(0.0, -1.0);
    h(1, 0) = Complex(0.0, 1.0);
    h(2, 2) = 2.0;
    doc["dynamics"] = Json{{"kind", "generator"}, {"matrix", json_from_matrix(h)}};
    Scenario s = materialize_scenario(doc);
    const Family& fam = s.families[0].family;
    CHECK(max_norm(fam.unitaries[0] - propagator(h, 1.0)) < 1e-12);  // t0=0 to t=1
    CHECK(max_norm(fam.unitaries[1] - propagator(h, 1.0)) < 1e-12);  // t=1 to t=2

    Json bent = toy_doc();
    Matrix g = Matrix::Zero(3, 3);
    g(0, 1) = 1.0;  // not Hermitian
    bent["dynamics"] = Json{{"kind", "generator"}, {"matrix", json_from_matrix(g)}};
    CHECK_THROWS_WITH_AS(materialize_scenario(bent), Contains("generator not Hermitian"),
                         ValidationError);
}

TEST_CASE("scenario reports evaluate expected assertions") {
    Json doc = toy_doc();
    doc["queries"] = Json::array({Json{{"op", "prob"}, {"family", "fam"}, {"history", "@1:justa"}}});
    doc["expected"] = Json::array({Json{{"query", 0}, {"path", "/p"}, {"op", "approx"},
                                        {"value", 1.0 / 3.0}, {"tol", 1e-9}}});
    Scenario s = materialize_scenario(doc);
    Json report = run_scenario_report(s, Tolerances{});
    CHECK(report["expected"]["failed"].get<int>() == 0);
    CHECK(report["results"][0]["result"]["p"].get<double>() == doctest::Approx(1.0 / 3.0));

    // a wrong expectation is reported, not thrown
    doc["expected"][0]["value"] = 0.5;
    Json failing = run_scenario_report(materialize_scenario(doc), Tolerances{});
    CHECK(failing["expected"]["failed"].get<int>() == 1);
    CHECK(failing["expected"]["failures"].size() == 1);

    // a well-formed pointer to a missing key fails the assertion with a null actual
    doc["expected"][0]["path"] = "/no/such/key";
    Json missing = run_scenario_report(materialize_scenario(doc), Tolerances{});
    CHECK(missing["expected"]["failed"].get<int>() == 1);
    CHECK(missing["expected"]["failures"][0]["actual"].is_null());

    // a malformed pointer (no leading slash) is an error, not a failure
    doc["expected"][0]["path"] = "p";
    CHECK_THROWS_WITH_AS(run_scenario_report(materialize_scenario(doc), Tolerances{}),
                         Contains("not a valid result path"), ValidationError);
}
