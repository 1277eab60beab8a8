#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "scl/beta.hpp"
#include "scl/demo.hpp"
#include "scl/errors.hpp"
#include "scl/json_io.hpp"

using namespace scl;

namespace {

BetaField linear_decay_1d(double rate) {
    // beta(g) = rate * g as a degree-1 polynomial
    return BetaField::tabulated({{{0.0, rate}}});
}

} // namespace

TEST_CASE("RK4 reproduces exponential decay") {
    const CouplingMatrix g0{0, Eigen::MatrixXd::Constant(1, 1, 1.0)};
    const auto traj = integrate_beta(linear_decay_1d(-0.3), g0, 0.0, 5.0, 0.01);
    CHECK(traj.k.front() == 0.0);
    CHECK(traj.k.back() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(traj.states.back()(0, 0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-6));
}

TEST_CASE("RK4 global error scales as fourth order") {
    const CouplingMatrix g0{0, Eigen::MatrixXd::Constant(1, 1, 1.0)};
    const double exact = std::exp(-1.5);
    const auto coarse = integrate_beta(linear_decay_1d(-0.3), g0, 0.0, 5.0, 0.01);
    const auto fine = integrate_beta(linear_decay_1d(-0.3), g0, 0.0, 5.0, 0.005);
    const double e1 = std::abs(coarse.states.back()(0, 0) - exact);
    const double e2 = std::abs(fine.states.back()(0, 0) - exact);
    CHECK(e1 / e2 >= 12.0);
}

TEST_CASE("zero field keeps the profile constant") {
    const CouplingMatrix g0{0, demo::reactive_matrix().entries};
    const auto zero = BetaField::tabulated(
        std::vector<std::vector<std::vector<double>>>(3, {{}, {}, {}}));
    const auto traj = integrate_beta(zero, g0, 0.0, 2.0, 0.1);
    for (const auto& s : traj.states) {
        CHECK((s - g0.entries).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("linear field from the tactical rule decays the damped entry") {
    // factor 0.5 gives dg/dk = -0.5 g; from 0.9 one unit of k lands on 0.9 e^-0.5
    const auto beta = BetaField::linear(demo::tactical_rule());
    const CouplingMatrix g0{0, demo::reactive_matrix().entries};
    const auto traj = integrate_beta(beta, g0, 0.0, 1.0, 0.001);
    CHECK(traj.states.back()(0, 1) ==
          doctest::Approx(0.9 * std::exp(-0.5)).epsilon(1e-6));
}

TEST_CASE("integration rejects bad arguments and runaway states") {
    const CouplingMatrix g0{0, Eigen::MatrixXd::Constant(1, 1, 1.0)};
    CHECK_THROWS_AS(integrate_beta(linear_decay_1d(-0.3), g0, 0.0, 5.0, 0.0), ValidationError);
    CHECK_THROWS_AS(integrate_beta(linear_decay_1d(-0.3), g0, 5.0, 5.0, 0.1), ValidationError);
    // beta(g) = g^3 from 2.0 blows up in finite k
    const auto cubic = BetaField::tabulated({{{0.0, 0.0, 0.0, 1.0}}});
    const CouplingMatrix big{0, Eigen::MatrixXd::Constant(1, 1, 2.0)};
    CHECK_THROWS_AS(integrate_beta(cubic, big, 0.0, 50.0, 0.5), NonFiniteState);
}

TEST_CASE("fixed point of a contracting linear field is zero") {
    Eigen::MatrixXd factors(2, 2);
    factors << 0.5, 0.8, 0.3, 0.6;
    const auto beta = BetaField::linear(PropagationOperator::entrywise(factors));
    std::mt19937_64 rng(23);
    const CouplingMatrix guess{0, testing::random_matrix(2, rng)};
    const auto result = find_fixed_point(beta, guess, 1e-10, 50);
    CHECK(result.converged);
    CHECK(result.profile.entries.cwiseAbs().maxCoeff() < 1e-8);
    // independent re-evaluation honours the reported tolerance
    CHECK(beta.evaluate(result.profile.entries).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("logistic-style beta finds the nonzero root") {
    // beta(g) = g - g^2, root at 1 from guess 0.8
    const auto beta = BetaField::tabulated({{{0.0, 1.0, -1.0}}});
    const CouplingMatrix guess{0, Eigen::MatrixXd::Constant(1, 1, 0.8)};
    const auto result = find_fixed_point(beta, guess, 1e-12, 50);
    CHECK(result.converged);
    CHECK(result.profile.entries(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("constant beta cannot converge") {
    const auto beta = BetaField::tabulated({{{0.7}}});
    const CouplingMatrix guess{0, Eigen::MatrixXd::Zero(1, 1)};
    const auto result = find_fixed_point(beta, guess, 1e-9, 30);
    CHECK_FALSE(result.converged);
    CHECK(result.singular_fallbacks > 0);
}

TEST_CASE("relevance classification at the tactical rule") {
    const auto beta = BetaField::linear(demo::tactical_rule());
    Eigen::MatrixXd at = Eigen::MatrixXd::Constant(3, 3, 0.5);
    const CouplingMatrix m{0, at};
    // factor 0.5 at perc->plan: beta = -0.25
    CHECK(classify_relevance(beta, m, 0, 1) == Relevance::Irrelevant);
    // factor 1.2 at refl->refl: beta = +0.1
    CHECK(classify_relevance(beta, m, 2, 2) == Relevance::Relevant);
    // factor 1.0 elsewhere: beta = 0
    CHECK(classify_relevance(beta, m, 1, 0) == Relevance::Marginal);
    // zero coupling is marginal no matter the field
    Eigen::MatrixXd zero_at = at;
    zero_at(0, 1) = 0.0;
    CHECK(classify_relevance(beta, {0, zero_at}, 0, 1) == Relevance::Marginal);
}

TEST_CASE("beta JSON forms parse") {
    const auto reg = demo::example_registry();
    const auto linear = parse_beta(
        "{\"kind\":\"linear\",\"operator\":{\"kind\":\"entrywise\","
        "\"factors\":[[1,0.5,1],[1,1,1],[1,1,1]]}}",
        reg);
    CHECK(linear.kind() == BetaField::Kind::Linear);
    const auto tab = parse_beta("{\"kind\":\"tabulated\",\"polys\":{\"perc->plan\":[0,-0.3]}}",
                                reg);
    CHECK(tab.kind() == BetaField::Kind::Tabulated);
    Eigen::MatrixXd at = Eigen::MatrixXd::Constant(3, 3, 1.0);
    CHECK(tab.evaluate(at)(0, 1) == doctest::Approx(-0.3));
    CHECK(tab.evaluate(at)(1, 0) == 0.0);
    CHECK_THROWS_AS(parse_beta("{\"kind\":\"tabulated\",\"polys\":{\"nope\":[1]}}", reg),
                    ParseError);
    CHECK_THROWS_AS(parse_operator("{\"kind\":\"spooky\"}"), ParseError);
    CHECK_THROWS_AS(parse_beta("{\"kind\":\"quadratic\"}", reg), ParseError);
}
