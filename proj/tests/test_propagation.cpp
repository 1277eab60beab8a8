#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "scl/demo.hpp"
#include "scl/errors.hpp"
#include "scl/propagation.hpp"

using namespace scl;

TEST_CASE("the tactical rule rescales exactly the four named entries") {
    const auto rule = demo::tactical_rule();
    const auto g1 = demo::deliberative_matrix();
    const auto g2 = apply_propagation(rule, g1);
    CHECK(g2.level == 2);
    CHECK(g2.entries(0, 1) == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(g2.entries(0, 2) == doctest::Approx(0.88).epsilon(1e-13));
    CHECK(g2.entries(2, 1) == doctest::Approx(0.77).epsilon(1e-13));
    CHECK(g2.entries(2, 2) == doctest::Approx(0.60).epsilon(1e-13));
    // untouched entries are copied through
    CHECK(g2.entries(0, 0) == g1.entries(0, 0));
    CHECK(g2.entries(1, 0) == g1.entries(1, 0));
    CHECK(g2.entries(1, 1) == g1.entries(1, 1));
    CHECK(g2.entries(1, 2) == g1.entries(1, 2));
    CHECK(g2.entries(2, 0) == g1.entries(2, 0));
}

TEST_CASE("identity and zero operators behave as expected") {
    const auto g1 = demo::deliberative_matrix();
    const auto id = PropagationOperator::identity(3);
    CHECK(apply_propagation(id, g1).entries == g1.entries);

    const auto zero = PropagationOperator::dense(Eigen::MatrixXd::Zero(9, 9));
    CHECK(apply_propagation(zero, g1).entries.isZero());
}

TEST_CASE("composition equals sequential application") {
    std::mt19937_64 rng(3);
    const auto g = CouplingMatrix{1, testing::random_matrix(3, rng)};
    const auto m1 = PropagationOperator::entrywise(testing::random_matrix(3, rng, 0.2, 1.4));
    const auto m2 = PropagationOperator::dense(testing::random_matrix(9, rng, -0.4, 0.4));
    const std::vector<PropagationOperator> ops = {m1, m2};
    const auto composed = compose_and_apply(ops, g);
    const auto sequential = apply_propagation(m2, apply_propagation(m1, g));
    CHECK(composed.entries == sequential.entries);
    CHECK(composed.level == 3);

    const std::vector<PropagationOperator> empty;
    CHECK(compose_and_apply(empty, g).entries == g.entries);
    CHECK(compose_and_apply(empty, g).level == 1);
}

TEST_CASE("repeated application of the tactical rule") {
    const auto rule = demo::tactical_rule();
    const auto g1 = demo::deliberative_matrix();
    const std::vector<PropagationOperator> twice = {rule, rule};
    const auto g3 = compose_and_apply(twice, g1);
    CHECK(g3.entries(0, 1) == doctest::Approx(0.125).epsilon(1e-13)); // 0.5 * 0.5^2

    // one-sector closed form: 0.5^10
    const auto half = PropagationOperator::entrywise(Eigen::MatrixXd::Constant(1, 1, 0.5));
    CouplingMatrix g{0, Eigen::MatrixXd::Constant(1, 1, 1.0)};
    const std::vector<PropagationOperator> ten(10, half);
    CHECK(compose_and_apply(ten, g).entries(0, 0) ==
          doctest::Approx(9.765625e-4).epsilon(1e-12));
}

TEST_CASE("propagation is linear") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd a = testing::random_matrix(3, rng);
        const Eigen::MatrixXd b = testing::random_matrix(3, rng);
        const double alpha = 0.7, beta = -1.3;
        const auto op = trial % 2 == 0
                            ? PropagationOperator::entrywise(testing::random_matrix(3, rng))
                            : PropagationOperator::dense(testing::random_matrix(9, rng));
        const Eigen::MatrixXd lhs =
            apply_propagation(op, {0, alpha * a + beta * b}).entries;
        const Eigen::MatrixXd rhs = alpha * apply_propagation(op, {0, a}).entries +
                                    beta * apply_propagation(op, {0, b}).entries;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("entrywise operators match their dense diagonal embedding") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto ew = PropagationOperator::entrywise(testing::random_matrix(4, rng, -2.0, 2.0));
        const auto dn = PropagationOperator::dense_from_entrywise(ew);
        const CouplingMatrix g{0, testing::random_matrix(4, rng)};
        const Eigen::MatrixXd a = apply_propagation(ew, g).entries;
        const Eigen::MatrixXd b = apply_propagation(dn, g).entries;
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("eigenmodes of the tactical rule") {
    const auto modes = eigenmodes(demo::tactical_rule());
    REQUIRE(modes.size() == 9);
    // sorted by modulus: 1.2, 1.1, 1.1, then five 1.0, then 0.5
    CHECK(modes[0].eigenvalue.real() == doctest::Approx(1.2));
    CHECK(modes[0].cls == ModeClass::Amplified);
    CHECK(modes[1].eigenvalue.real() == doctest::Approx(1.1));
    CHECK(modes[2].eigenvalue.real() == doctest::Approx(1.1));
    CHECK(modes[1].cls == ModeClass::Amplified);
    for (int i = 3; i < 8; ++i) {
        CHECK(modes[static_cast<size_t>(i)].eigenvalue.real() == doctest::Approx(1.0));
        CHECK(modes[static_cast<size_t>(i)].cls == ModeClass::Fixed);
    }
    CHECK(modes[8].eigenvalue.real() == doctest::Approx(0.5));
    CHECK(modes[8].cls == ModeClass::Damped);
    // coordinate eigenvectors have unit norm
    for (const auto& m : modes) {
        CHECK(m.eigenvector.norm() == doctest::Approx(1.0));
    }
}

TEST_CASE("eigenmodes of identity and a dense triangular toy") {
    for (const auto& m : eigenmodes(PropagationOperator::identity(2))) {
        CHECK(m.eigenvalue.real() == doctest::Approx(1.0));
        CHECK(m.cls == ModeClass::Fixed);
    }

    Eigen::MatrixXd tri(2, 2);
    tri << 0.5, 0.3, 0.0, 0.9;
    const auto modes = eigenmodes(PropagationOperator::dense(tri));
    REQUIRE(modes.size() == 2);
    CHECK(modes[0].eigenvalue.real() == doctest::Approx(0.9));
    CHECK(modes[1].eigenvalue.real() == doctest::Approx(0.5));
    CHECK(modes[0].cls == ModeClass::Damped);
    CHECK(modes[1].cls == ModeClass::Damped);
}

TEST_CASE("uniform damping converges to zero") {
    const auto half = PropagationOperator::entrywise(Eigen::MatrixXd::Constant(3, 3, 0.5));
    const auto report = check_convergence(half, demo::reactive_matrix(), 60, 1e-6);
    CHECK(report.verdict == ConvergenceVerdict::ConvergesToZero);
    CHECK(report.level <= 50);
    // trace decays geometrically from 0.9
    CHECK(report.max_abs_trace[0] == doctest::Approx(0.9));
    CHECK(report.max_abs_trace[1] == doctest::Approx(0.45));
}

TEST_CASE("unit factors stall and flag the convergence hypothesis") {
    // 14 levels keep the amplified entries below the coupling bound, so
    // the window shows a bounded sequence held up by the unit factors.
    const auto report =
        check_convergence(demo::tactical_rule(), demo::deliberative_matrix(), 14, 1e-6);
    CHECK(report.verdict == ConvergenceVerdict::Stalls);
    CHECK(report.unit_modes_excited > 0);
    CHECK(report.note.find("Coupling Convergence Hypothesis") != std::string::npos);
    REQUIRE(report.limit.has_value());
    // copied entries persist at their tactical values
    CHECK(report.limit->entries(1, 1) == doctest::Approx(0.4));
}

TEST_CASE("zero input converges at level zero; growth diverges") {
    const auto id = PropagationOperator::identity(2);
    const CouplingMatrix zero{0, Eigen::MatrixXd::Zero(2, 2)};
    const auto r0 = check_convergence(id, zero, 10, 1e-9);
    CHECK(r0.verdict == ConvergenceVerdict::ConvergesToZero);
    CHECK(r0.level == 0);

    const auto grow = PropagationOperator::entrywise(Eigen::MatrixXd::Constant(2, 2, 2.0));
    const CouplingMatrix one{0, Eigen::MatrixXd::Constant(2, 2, 1.0)};
    CHECK(check_convergence(grow, one, 50, 1e-9).verdict == ConvergenceVerdict::Diverges);
}

TEST_CASE("all-damped spectra imply convergence from any bounded start") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto op =
            PropagationOperator::entrywise(testing::random_matrix(3, rng, 0.05, 0.9));
        bool all_damped = true;
        for (const auto& m : eigenmodes(op)) {
            all_damped = all_damped && m.cls == ModeClass::Damped;
        }
        REQUIRE(all_damped);
        const CouplingMatrix g0{0, testing::random_matrix(3, rng, -kDefaultGmax, kDefaultGmax)};
        CHECK(check_convergence(op, g0, 400, 1e-6).verdict ==
              ConvergenceVerdict::ConvergesToZero);
    }
}

TEST_CASE("shape errors are reported") {
    const auto rule = demo::tactical_rule();
    CHECK_THROWS_AS(apply_propagation(rule, CouplingMatrix{0, Eigen::MatrixXd::Zero(2, 2)}),
                    ShapeMismatch);
    CHECK_THROWS_AS(PropagationOperator::entrywise(Eigen::MatrixXd::Zero(2, 3)), ShapeMismatch);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(PropagationOperator::dense(bad), NonFiniteEntry);
}
