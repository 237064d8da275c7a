#include "speclab/config.hpp"

#include <string>

#include "doctest.h"

using namespace speclab;
using namespace speclab::config;

TEST_CASE("config parse: defaults, overrides, stable hash") {
    const std::string text = R"({
        "seed": 11,
        "potential": {"kind": "power", "tau": 2.0},
        "sensor": {"variant": "equidistributed", "delta": 0.2, "alpha": 0.0},
        "scan": {"lambdas": [9, 13, 17, 21], "lambda_max": 21},
        "numerics": {"n_cap": 900}
    })";
    const ExperimentConfig a = parse(text);
    CHECK(a.seed == 11);
    CHECK(a.potential.tau == 2.0);
    CHECK(a.scan.lambdas.size() == 4);
    CHECK(a.numerics.n_cap == 900);
    CHECK(a.numerics.margin == 2.0);  // default

    const ExperimentConfig b = parse(text);
    CHECK(a.hash == b.hash);
    CHECK(a.canonical == b.canonical);

    const ExperimentConfig c = parse(text, std::uint64_t{99});
    CHECK(c.seed == 99);
    CHECK(c.hash != a.hash);  // effective seed participates in the hash
}

TEST_CASE("config parse: lambda_range expansion") {
    const ExperimentConfig c = parse(R"({
        "scan": {"lambda_range": {"from": 9, "to": 21, "step": 4}}
    })");
    REQUIRE(c.scan.lambdas.size() == 4);
    CHECK(c.scan.lambdas[0] == 9.0);
    CHECK(c.scan.lambdas[3] == 21.0);
}

TEST_CASE("config validation names the offending field") {
    try {
        parse(R"({"sensor": {"variant": "equidistributed", "delta": 0.7}})");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field == "sensor.delta");
        CHECK(std::string(e.what()).find("delta must lie in (0, 1/2)") != std::string::npos);
    }

    CHECK_THROWS_AS(parse(R"({"potential": {"kind": "mystery"}})"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"numerics": {"margin": 0.5}})"), ValidationError);
    CHECK_THROWS_AS(parse("not json"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"scan": {"trials": 0}})"), ValidationError);

    // misspelled keys are rejected, not silently defaulted
    try {
        parse(R"({"scan": {"lamda_max": 12}})");
        FAIL("expected ValidationError for unknown key");
    } catch (const ValidationError& e) {
        CHECK(e.field == "scan.lamda_max");
        CHECK(std::string(e.what()).find("unknown field") != std::string::npos);
    }
    CHECK_THROWS_AS(parse(R"({"potental": {}})"), ValidationError);
}

TEST_CASE("make_potential / make_sensor cover every kind") {
    PotentialConfig pc;
    pc.kind = "two_sided";
    pc.c1 = 1.0;
    pc.tau1 = 2.0;
    pc.c2 = 3.0;
    pc.tau2 = 2.0;
    const model::PotentialSpec two = make_potential(pc);
    const double x[1] = {2.0};
    CHECK(two(std::span<const double>(x, 1)) == doctest::Approx(0.5 * (4.0 + 12.0)));

    SensorConfig sc;
    sc.variant = "full";
    bool full = false;
    make_sensor(sc, 1, &full);
    CHECK(full);

    sc.variant = "cone";
    sc.rays = "positive";
    const sensors::SensorSpec cone = make_sensor(sc, 1, &full);
    CHECK_FALSE(full);
    CHECK(cone.variant == sensors::SensorSpec::Variant::Cone);
    CHECK_FALSE(cone.ray_negative);
    CHECK(cone.ray_positive);
}
