#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "helpers.hpp"
#include "scl/errors.hpp"
#include "scl/simulator.hpp"

using namespace scl;

namespace {

std::optional<int> first_event_tick(const TraceLog& trace, const std::string& sector,
                                    int level) {
    for (const auto& e : trace.events) {
        if (e.sector == sector && e.level == level) {
            return static_cast<int>(std::lround(e.t / trace.dt));
        }
    }
    return std::nullopt;
}

std::string dump(const TraceLog& trace) {
    std::ostringstream out;
    emit_log(trace, out, true);
    return out.str();
}

} // namespace

TEST_CASE("step arithmetic follows the update rule") {
    const auto reg = testing::small_registry(1);
    const auto zero_profile = build_profile(reg, {{0, Eigen::MatrixXd::Zero(1, 1)}}, 0);
    auto ops = make_uniform_config(1, 0, 0.0, 0.0, 0.5);

    ActivationState s;
    s.t = 0;
    s.a = Eigen::MatrixXd::Constant(1, 1, 0.4);
    const auto next = step(s, zero_profile, ops, Eigen::MatrixXd::Zero(1, 1));
    CHECK(next.a(0, 0) == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(next.t == 1);

    // recurrent growth: (1 - 0.1 + 1.2) * 0.1
    const auto grow_profile =
        build_profile(reg, {{0, Eigen::MatrixXd::Constant(1, 1, 1.2)}}, 0);
    ops = make_uniform_config(1, 0, 0.0, 0.0, 0.1);
    s.a = Eigen::MatrixXd::Constant(1, 1, 0.1);
    CHECK(step(s, grow_profile, ops, Eigen::MatrixXd::Zero(1, 1)).a(0, 0) ==
          doctest::Approx(0.21).epsilon(1e-13));

    // saturating drive clamps at a_max
    s.a = Eigen::MatrixXd::Zero(1, 1);
    CHECK(step(s, zero_profile, ops, Eigen::MatrixXd::Constant(1, 1, 5.0)).a(0, 0) == 1.0);
}

TEST_CASE("logistic nonlinearity squashes the drive before clamping") {
    const auto reg = testing::small_registry(1);
    const auto profile = build_profile(reg, {{0, Eigen::MatrixXd::Zero(1, 1)}}, 0);
    auto ops = make_uniform_config(1, 0, 0.0, 0.0, 0.0);
    ops.nonlinearity = OperatorConfig::Nonlinearity::Logistic;

    ActivationState s;
    s.a = Eigen::MatrixXd::Zero(1, 1);
    // sigma(0) = 0.5
    CHECK(step(s, profile, ops, Eigen::MatrixXd::Zero(1, 1)).a(0, 0) == doctest::Approx(0.5));
    // sigma(2) for a drive of 2.0
    CHECK(step(s, profile, ops, Eigen::MatrixXd::Constant(1, 1, 2.0)).a(0, 0) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    // clamp still applies above a_max
    ops.a_max = 0.6;
    ops.event_threshold = 0.3;
    CHECK(step(s, profile, ops, Eigen::MatrixXd::Constant(1, 1, 9.0)).a(0, 0) == 0.6);
}

TEST_CASE("observation noise perturbs logged magnitudes but never the state") {
    const auto sc = make_scenario("reflex-arc");
    RunOptions quiet;
    quiet.seed = 5;
    RunOptions noisy = quiet;
    noisy.noise_std = 0.2;
    const auto a = run_scenario(sc, quiet);
    const auto b = run_scenario(sc, noisy);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (size_t t = 0; t < a.snapshots.size(); ++t) {
        CHECK(a.snapshots[t] == b.snapshots[t]);
    }
    REQUIRE(a.events.size() == b.events.size());
    bool any_differs = false;
    for (size_t i = 0; i < a.events.size(); ++i) {
        any_differs = any_differs || a.events[i].magnitude != b.events[i].magnitude;
    }
    CHECK(any_differs);
}

TEST_CASE("event magnitudes equal the crossing activation when noise is off") {
    const auto trace = run_scenario(make_scenario("reflex-arc"));
    REQUIRE_FALSE(trace.events.empty());
    for (const auto& e : trace.events) {
        const int tick = static_cast<int>(std::lround(e.t / trace.dt));
        const auto it =
            std::find(trace.sectors.begin(), trace.sectors.end(), e.sector);
        REQUIRE(it != trace.sectors.end());
        const int j = static_cast<int>(it - trace.sectors.begin());
        CHECK(e.magnitude == trace.snapshots[static_cast<size_t>(tick)](j, e.level));
    }
}

TEST_CASE("reflex arc reaches execution within three ticks") {
    const auto sc = make_scenario("reflex-arc");
    const auto trace = run_scenario(sc);
    const auto exe_tick = first_event_tick(trace, "exe", 0);
    REQUIRE(exe_tick.has_value());
    CHECK(*exe_tick <= 3);
    // percept event fires immediately after the pulse
    CHECK(first_event_tick(trace, "perc", 0) == 1);
}

TEST_CASE("deliberative cycle is strictly slower to execute than the reflex arc") {
    const auto reflex = run_scenario(make_scenario("reflex-arc"));
    const auto deliberative = run_scenario(make_scenario("deliberative-cycle"));
    const auto fast = first_event_tick(reflex, "exe", 0);
    const auto slow = first_event_tick(deliberative, "exe", 0);
    REQUIRE(fast.has_value());
    REQUIRE(slow.has_value());
    CHECK(*fast < *slow);
}

TEST_CASE("rumination grows strictly until clamp and flags runaway") {
    const auto sc = make_scenario("rumination");
    const auto trace = run_scenario(sc);
    const int refl = 2;
    bool reached_clamp = false;
    for (size_t t = 1; t + 1 < trace.snapshots.size() && !reached_clamp; ++t) {
        const double cur = trace.snapshots[t](refl, 1);
        const double next = trace.snapshots[t + 1](refl, 1);
        if (cur >= sc.ops.a_max) {
            reached_clamp = true;
        } else {
            CHECK(next > cur);
        }
    }
    CHECK(trace.runaway_flag());
    REQUIRE_FALSE(trace.runaway.empty());
    CHECK(trace.runaway.front() == std::pair<int, int>{refl, 1});
}

TEST_CASE("zero profile stays silent") {
    auto sc = make_scenario("reflex-arc");
    sc.profile = build_profile(sc.profile.registry(), {}, 1);
    sc.script.clear();
    const auto trace = run_scenario(sc);
    CHECK(trace.events.empty());
    for (const auto& snap : trace.snapshots) {
        CHECK(snap.isZero());
    }
}

TEST_CASE("activations stay inside [0, a_max] for arbitrary profiles") {
    std::mt19937_64 rng(31);
    const auto reg = testing::small_registry(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::map<int, Eigen::MatrixXd> ms;
        ms[0] = testing::random_matrix(3, rng, -3.0, 3.0);
        ms[1] = testing::random_matrix(3, rng, -3.0, 3.0);
        ScenarioConfig sc;
        sc.name = "custom";
        sc.profile = build_profile(reg, ms, 1);
        sc.ops = make_uniform_config(3, 1, 0.4, 0.4, 0.2);
        sc.script = {{0, 0, 0, 2.0}, {3, 1, 1, 1.5}};
        sc.default_ticks = 40;
        const auto trace = run_scenario(sc);
        for (const auto& snap : trace.snapshots) {
            CHECK(snap.minCoeff() >= 0.0);
            CHECK(snap.maxCoeff() <= sc.ops.a_max);
        }
    }
}

TEST_CASE("identical seeds give bit-identical traces") {
    auto sc = make_scenario("load-management");
    RunOptions opt;
    opt.seed = 77;
    opt.noise_std = 0.05;
    const auto a = run_scenario(sc, opt);
    const auto b = run_scenario(sc, opt);
    CHECK(dump(a) == dump(b));
    opt.seed = 78;
    CHECK(dump(a) != dump(run_scenario(sc, opt)));
}

TEST_CASE("monotone self-gain criterion") {
    const auto reg = testing::small_registry(1);
    auto ops = make_uniform_config(1, 0, 0.0, 0.0, 0.3);
    ops.event_threshold = 0.01;
    // (1 - 0.3) + 0.5 = 1.2 > 1: growth to clamp
    ScenarioConfig grow{"grow", "", build_profile(reg, {{0, Eigen::MatrixXd::Constant(1, 1, 0.5)}}, 0),
                        ops, {{0, 0, 0, 0.05}}, 60};
    const auto gt = run_scenario(grow);
    CHECK(gt.snapshots.back()(0, 0) == doctest::Approx(1.0));
    CHECK(gt.runaway_flag());
    // (1 - 0.3) + 0.1 = 0.8 < 1: decay to zero
    ScenarioConfig decay{"decay", "", build_profile(reg, {{0, Eigen::MatrixXd::Constant(1, 1, 0.1)}}, 0),
                         ops, {{0, 0, 0, 0.05}}, 60};
    const auto dt = run_scenario(decay);
    CHECK(dt.snapshots.back()(0, 0) < 1e-4);
    CHECK_FALSE(dt.runaway_flag());
}

TEST_CASE("load equals the sum over levels at every tick") {
    const auto trace = run_scenario(make_scenario("load-management"));
    for (const auto& snap : trace.snapshots) {
        ActivationState s;
        s.a = snap;
        const Eigen::VectorXd loads = s.loads();
        for (int j = 0; j < snap.rows(); ++j) {
            CHECK(loads(j) == doctest::Approx(snap.row(j).sum()).epsilon(1e-12));
        }
    }
}

TEST_CASE("event entries re-arm through hysteresis") {
    // one sector pulsed twice with full decay in between
    const auto reg = testing::small_registry(1);
    auto ops = make_uniform_config(1, 0, 0.0, 0.0, 0.9);
    ScenarioConfig sc{"pulses", "", build_profile(reg, {{0, Eigen::MatrixXd::Zero(1, 1)}}, 0),
                      ops, {{0, 0, 0, 0.8}, {10, 0, 0, 0.8}}, 20};
    const auto trace = run_scenario(sc);
    CHECK(trace.events.size() == 2);
}

TEST_CASE("trace round trip through JSONL") {
    const auto trace = run_scenario(make_scenario("reflex-arc"));
    REQUIRE_FALSE(trace.events.empty());
    std::ostringstream out;
    emit_log(trace, out, false);
    std::istringstream in(out.str());
    const EventLog parsed = parse_event_log(in);
    REQUIRE(parsed.size() == trace.events.size());
    for (size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i] == trace.events[i]);
    }

    // snapshot lines are skipped on ingestion
    std::ostringstream full;
    emit_log(trace, full, true);
    std::istringstream full_in(full.str());
    CHECK(parse_event_log(full_in).size() == trace.events.size());

    TraceLog empty;
    empty.sectors = {"a"};
    std::ostringstream empty_out;
    emit_log(empty, empty_out, false);
    CHECK(empty_out.str().empty());

    CHECK_THROWS_AS(emit_log(trace, "/nonexistent-dir/trace.jsonl", false), IoError);
}

TEST_CASE("event attrs survive the JSONL round trip") {
    std::istringstream in(
        "{\"t\":1.5,\"sector\":\"plan\",\"level\":0,\"kind\":\"event\","
        "\"magnitude\":0.4,\"attrs\":{\"urgency\":0.8,\"note\":\"text-skipped\"}}\n"
        "{\"t\":0.3,\"kind\":\"snapshot\",\"a\":{\"plan\":[0.2]}}\n");
    const EventLog log = parse_event_log(in);
    REQUIRE(log.size() == 1);
    CHECK(log[0].attrs.at("urgency") == 0.8);
    CHECK(log[0].attrs.count("note") == 0); // non-numeric attr values are dropped

    std::ostringstream out;
    write_event_line(out, log[0]);
    std::istringstream back(out.str());
    CHECK(parse_event_log(back).at(0) == log[0]);

    std::istringstream bad("{\"sector\":\"plan\"}\n");
    CHECK_THROWS_AS(parse_event_log(bad), ParseError);
}

TEST_CASE("unknown scenario and bad stimuli are rejected") {
    CHECK_THROWS_AS(make_scenario("no-such"), UnknownScenario);
    auto sc = make_scenario("reflex-arc");
    sc.script = {{0, 9, 0, 1.0}};
    CHECK_THROWS_AS(run_scenario(sc), ValidationError);
}
