#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "scl/coupling.hpp"
#include "scl/demo.hpp"
#include "scl/errors.hpp"
#include "scl/json_io.hpp"

using namespace scl;

namespace {
const double kNan = std::numeric_limits<double>::quiet_NaN();
}

TEST_CASE("build_profile accepts the bundled reactive matrix") {
    const auto reg = demo::example_registry();
    const auto p = build_profile(reg, {{0, demo::reactive_matrix().entries}}, 4);
    CHECK(p.max_level() == 4);
    CHECK(p.entry("perc", "plan", 0) == doctest::Approx(0.9));
    CHECK(p.has_level(0));
    CHECK_FALSE(p.has_level(1));
    // absent level reads as zero
    CHECK(p.matrix(3).entries.isZero());
}

TEST_CASE("build_profile rejects non-finite entries") {
    const auto reg = demo::example_registry();
    Eigen::MatrixXd g = demo::reactive_matrix().entries;
    g(1, 1) = kNan;
    CHECK_THROWS_AS(build_profile(reg, {{0, g}}, 4), NonFiniteEntry);
    g(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(build_profile(reg, {{0, g}}, 4), NonFiniteEntry);
    g(1, 1) = -std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(build_profile(reg, {{0, g}}, 4), NonFiniteEntry);
}

TEST_CASE("build_profile rejects out-of-range levels and bad shapes") {
    const auto reg = demo::example_registry();
    const Eigen::MatrixXd g = demo::reactive_matrix().entries;
    CHECK_THROWS_AS(build_profile(reg, {{7, g}}, 4), LevelOutOfRange);
    CHECK_THROWS_AS(build_profile(reg, {{0, Eigen::MatrixXd::Zero(2, 2)}}, 4),
                    DimensionMismatch);
    CHECK_THROWS_AS(build_profile(reg, {{0, Eigen::MatrixXd::Constant(3, 3, 11.0)}}, 4),
                    ValidationError);
}

TEST_CASE("frobenius distance on the example matrices") {
    const auto g0 = demo::reactive_matrix();
    const auto g1 = demo::deliberative_matrix();
    CHECK(frobenius_distance(g0, g0) == 0.0);
    // hand-summed squared differences: 0.98
    CHECK(frobenius_distance(g0, g1) == doctest::Approx(std::sqrt(0.98)).epsilon(1e-12));

    CouplingMatrix shifted = g0;
    shifted.entries(0, 1) += 0.5;
    CHECK(frobenius_distance(g0, shifted) == doctest::Approx(0.5).epsilon(1e-12));

    CouplingMatrix wrong{0, Eigen::MatrixXd::Zero(2, 2)};
    CHECK_THROWS_AS(frobenius_distance(g0, wrong), ShapeMismatch);
}

TEST_CASE("frobenius distance is a metric on random profiles") {
    std::mt19937_64 rng(7);
    const auto reg = testing::small_registry(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = testing::random_profile(reg, 3, rng);
        const auto b = testing::random_profile(reg, 3, rng);
        const auto c = testing::random_profile(reg, 3, rng);
        const double ab = frobenius_distance(a, b);
        const double ba = frobenius_distance(b, a);
        CHECK(ab == ba);
        CHECK(frobenius_distance(a, a) == 0.0);
        CHECK(frobenius_distance(a, c) <= ab + frobenius_distance(b, c) + 1e-12);
    }
}

TEST_CASE("profiles with different stored levels compare against zero") {
    const auto reg = demo::example_registry();
    const auto with = build_profile(reg, {{0, demo::reactive_matrix().entries}}, 2);
    const auto without = build_profile(reg, {}, 2);
    CHECK(frobenius_distance(with, without) ==
          doctest::Approx(demo::reactive_matrix().entries.norm()).epsilon(1e-12));
}

TEST_CASE("vectorize is row-major and devectorize inverts it") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 3, 4;
    const Eigen::VectorXd v = vectorize({0, m});
    CHECK(v(0) == 1);
    CHECK(v(1) == 2);
    CHECK(v(2) == 3);
    CHECK(v(3) == 4);

    std::mt19937_64 rng(11);
    for (int n = 1; n <= 8; ++n) {
        const Eigen::MatrixXd r = testing::random_matrix(n, rng);
        const CouplingMatrix back = devectorize(vectorize({2, r}), n, 2);
        CHECK(back.entries == r);
        CHECK(back.level == 2);
    }

    CHECK_THROWS_AS(devectorize(Eigen::VectorXd::Zero(5), 2, 0), LengthMismatch);
}

TEST_CASE("profile JSON round trip is exact") {
    const auto reg = demo::example_registry();
    Eigen::MatrixXd extremes(3, 3);
    extremes << 0.0, kDefaultGmax, -kDefaultGmax, //
        0.9, 0.1, 0.3,                            //
        1.0 / 3.0, 0.2, 0.4;
    const auto p = build_profile(
        reg, {{0, demo::reactive_matrix().entries}, {2, extremes}}, 4);
    const auto round = parse_profile(serialize_profile(p));
    CHECK(round == p);
    CHECK(round.matrix(2).entries == extremes);
}

TEST_CASE("profile parsing reports schema problems") {
    CHECK_THROWS_AS(parse_profile("{\"max_level\":1,\"levels\":{}}"), ParseError);
    CHECK_THROWS_AS(parse_profile("not json"), ParseError);
    // ragged matrix rows
    CHECK_THROWS_AS(
        parse_profile("{\"sectors\":[\"a\",\"b\"],\"max_level\":1,"
                      "\"levels\":{\"0\":[[1,2],[3]]}}"),
        DimensionMismatch);
    // non-default bound survives the round trip
    const auto reg = testing::small_registry(2);
    const auto p = build_profile(reg, {{0, Eigen::MatrixXd::Zero(2, 2)}}, 1, 2.5);
    CHECK(parse_profile(serialize_profile(p)).g_max() == 2.5);
}

TEST_CASE("registry validation") {
    CHECK_THROWS_AS(SectorRegistry(std::vector<std::string>{}), ValidationError);
    CHECK_THROWS_AS(SectorRegistry({"a", "a"}), ValidationError);
    CHECK_THROWS_AS(SectorRegistry({""}), ValidationError);
    CHECK_THROWS_AS(SectorRegistry({"a"}, {{"b", "planning"}}), ValidationError);
    CHECK_THROWS_AS(SectorRegistry({"a"}, {{"a", "no-such-role"}}), ValidationError);
    const SectorRegistry reg({"a", "b"}, {{"a", "perceptual"}});
    CHECK(reg.index_of("b") == 1);
    CHECK(reg.role_of("a") == "perceptual");
    CHECK_FALSE(reg.role_of("b").has_value());
    CHECK_THROWS_AS(reg.index_of("zz"), ValidationError);
}

TEST_CASE("nature tags follow the sign") {
    CHECK(nature_of(0.3) == Nature::Excitatory);
    CHECK(nature_of(-0.3) == Nature::Inhibitory);
    CHECK(nature_of(0.0) == Nature::Null);
}
