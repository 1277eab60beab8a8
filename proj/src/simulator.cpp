#include "scl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "scl/errors.hpp"

namespace scl {

using nlohmann::json;

void OperatorConfig::validate() const {
    if (lambda_gain.size() != v_gain.size() || lambda_gain.size() != decay.rows()) {
        throw ShapeMismatch("operator config gain/decay sizes disagree");
    }
    auto check_nonneg = [](const Eigen::VectorXd& v, const char* what) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v(i)) || v(i) < 0.0) {
                throw ValidationError(std::string(what) + " must be finite and >= 0");
            }
        }
    };
    check_nonneg(lambda_gain, "lambda_gain");
    check_nonneg(v_gain, "v_gain");
    for (Eigen::Index i = 0; i < decay.rows(); ++i) {
        for (Eigen::Index k = 0; k < decay.cols(); ++k) {
            if (!(decay(i, k) >= 0.0 && decay(i, k) <= 1.0)) {
                throw ValidationError("decay must lie in [0, 1]");
            }
        }
    }
    if (!(input_gain >= 0.0) || !std::isfinite(input_gain)) {
        throw ValidationError("input_gain must be finite and >= 0");
    }
    if (!(a_max > 0.0)) {
        throw ValidationError("a_max must be positive");
    }
    if (!(event_threshold > 0.0) || !(event_threshold < a_max)) {
        throw ValidationError("event_threshold must lie in (0, a_max)");
    }
}

OperatorConfig make_uniform_config(int sector_count, int max_level, double lambda, double v,
                                   double delta) {
    OperatorConfig ops;
    ops.lambda_gain = Eigen::VectorXd::Constant(sector_count, lambda);
    ops.v_gain = Eigen::VectorXd::Constant(sector_count, v);
    ops.decay = Eigen::MatrixXd::Constant(sector_count, max_level + 1, delta);
    return ops;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

ActivationState step(const ActivationState& state, const CouplingProfile& profile,
                     const OperatorConfig& ops, const Eigen::MatrixXd& input) {
    const int n = profile.sector_count();
    const int levels = profile.max_level() + 1;
    if (state.a.rows() != n || state.a.cols() != levels) {
        throw ShapeMismatch("state shape does not match profile");
    }
    if (input.rows() != n || input.cols() != levels) {
        throw ShapeMismatch("input shape does not match profile");
    }
    if (ops.decay.rows() != n || ops.decay.cols() != levels) {
        throw ShapeMismatch("operator config shape does not match profile");
    }

    ActivationState next;
    next.t = state.t + 1;
    next.a.resize(n, levels);
    for (int k = 0; k < levels; ++k) {
        const Eigen::MatrixXd g = profile.matrix(k).entries;
        // Inflow to target j is sum_i g(i,j) * a_i, the self term included.
        const Eigen::VectorXd inflow = g.transpose() * state.a.col(k);
        for (int j = 0; j < n; ++j) {
            double net = (1.0 - ops.decay(j, k)) * state.a(j, k) + inflow(j);
            if (k > 0) {
                net += ops.lambda_gain(j) * state.a(j, k - 1);
            }
            if (k + 1 < levels) {
                net += ops.v_gain(j) * state.a(j, k + 1);
            }
            net += ops.input_gain * input(j, k);
            if (ops.nonlinearity == OperatorConfig::Nonlinearity::Logistic) {
                net = sigmoid(net);
            }
            next.a(j, k) = std::clamp(net, 0.0, ops.a_max);
        }
    }
    return next;
}

TraceLog run_scenario(const ScenarioConfig& scenario, const RunOptions& options) {
    scenario.ops.validate();
    const int n = scenario.profile.sector_count();
    const int levels = scenario.profile.max_level() + 1;
    const int ticks = options.ticks > 0 ? options.ticks : scenario.default_ticks;
    if (!(options.dt > 0.0)) {
        throw ValidationError("dt must be positive");
    }
    for (const auto& s : scenario.script) {
        if (s.tick < 0 || s.sector < 0 || s.sector >= n || s.level < 0 || s.level >= levels) {
            throw ValidationError("stimulus outside the profile's sectors/levels");
        }
        if (!std::isfinite(s.magnitude)) {
            throw ValidationError("stimulus magnitude must be finite");
        }
    }

    TraceLog trace;
    trace.dt = options.dt;
    trace.seed = options.seed;
    trace.sectors = scenario.profile.registry().labels();
    trace.level_count = levels;

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    const double theta = scenario.ops.event_threshold;
    ActivationState state;
    state.t = 0;
    state.a = Eigen::MatrixXd::Zero(n, levels);
    trace.snapshots.push_back(state.a);

    // Self-amplification per cell decides the runaway annotation.
    Eigen::MatrixXd self_gain(n, levels);
    for (int k = 0; k < levels; ++k) {
        const Eigen::MatrixXd g = scenario.profile.matrix(k).entries;
        for (int j = 0; j < n; ++j) {
            self_gain(j, k) = (1.0 - scenario.ops.decay(j, k)) + g(j, j);
        }
    }

    std::vector<std::vector<bool>> armed(static_cast<size_t>(n),
                                         std::vector<bool>(static_cast<size_t>(levels), true));
    std::vector<std::vector<bool>> flagged(static_cast<size_t>(n),
                                           std::vector<bool>(static_cast<size_t>(levels), false));

    for (int t = 0; t < ticks; ++t) {
        Eigen::MatrixXd input = Eigen::MatrixXd::Zero(n, levels);
        for (const auto& s : scenario.script) {
            if (s.tick == t) {
                input(s.sector, s.level) += s.magnitude;
            }
        }
        ActivationState next = step(state, scenario.profile, scenario.ops, input);

        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < levels; ++k) {
                const double prev = state.a(j, k);
                const double cur = next.a(j, k);
                if (armed[j][k] && prev < theta && cur >= theta) {
                    InteractionEvent e;
                    e.t = (t + 1) * options.dt;
                    e.sector = trace.sectors[static_cast<size_t>(j)];
                    e.level = k;
                    e.kind = "event";
                    e.magnitude = cur;
                    if (options.noise_std > 0.0) {
                        e.magnitude += options.noise_std * noise(rng);
                    }
                    trace.events.push_back(std::move(e));
                    armed[j][k] = false;
                }
                if (!armed[j][k] && cur < theta / 2.0) {
                    armed[j][k] = true;
                }
                if (!flagged[j][k] && cur >= scenario.ops.a_max - 1e-12 &&
                    self_gain(j, k) > 1.0) {
                    flagged[j][k] = true;
                    trace.runaway.emplace_back(j, k);
                }
            }
        }
        trace.snapshots.push_back(next.a);
        state = std::move(next);
    }
    return trace;
}

namespace {

json snapshot_line(const TraceLog& trace, int tick) {
    json doc;
    doc["t"] = tick * trace.dt;
    doc["kind"] = "snapshot";
    json a = json::object();
    const Eigen::MatrixXd& snap = trace.snapshots[static_cast<size_t>(tick)];
    for (size_t j = 0; j < trace.sectors.size(); ++j) {
        json row = json::array();
        for (int k = 0; k < trace.level_count; ++k) {
            row.push_back(snap(static_cast<Eigen::Index>(j), k));
        }
        a[trace.sectors[j]] = std::move(row);
    }
    doc["a"] = std::move(a);
    return doc;
}

} // namespace

void emit_log(const TraceLog& trace, std::ostream& out, bool full) {
    size_t next_event = 0;
    if (full) {
        for (size_t tick = 0; tick < trace.snapshots.size(); ++tick) {
            const double t = static_cast<double>(tick) * trace.dt;
            out << snapshot_line(trace, static_cast<int>(tick)).dump() << '\n';
            while (next_event < trace.events.size() &&
                   trace.events[next_event].t <= t + 1e-12) {
                write_event_line(out, trace.events[next_event]);
                ++next_event;
            }
        }
    }
    for (; next_event < trace.events.size(); ++next_event) {
        write_event_line(out, trace.events[next_event]);
    }
    if (!out) {
        throw IoError("event log write failed");
    }
}

void emit_log(const TraceLog& trace, const std::string& path, bool full) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    emit_log(trace, out, full);
}

namespace {

ScenarioConfig reflex_arc() {
    SectorRegistry reg({"perc", "plan", "refl", "exe"},
                       {{"perc", "perceptual"},
                        {"plan", "planning"},
                        {"refl", "reflective"},
                        {"exe", "execution"}});
    Eigen::MatrixXd g0(4, 4);
    // perc, plan, refl rows as in the bundled three-sector example,
    // extended by an execution column driven from planning.
    g0 << 0.2, 0.9, 0.1, 0.0, //
        0.1, 0.3, 0.1, 0.9,   //
        0.0, 0.2, 0.4, 0.0,   //
        0.0, 0.0, 0.0, 0.0;
    ScenarioConfig sc;
    sc.name = "reflex-arc";
    sc.description = "Fast percept-to-action pipeline at the concrete level.";
    sc.profile = build_profile(reg, {{0, g0}}, 1);
    // decay 0.45 keeps every sector subcritical under sustained percept
    // drive while the percept-to-execution latency stays at 3 ticks
    sc.ops = make_uniform_config(4, 1, 0.0, 0.0, 0.45);
    sc.script = {{0, 0, 0, 1.0}};
    sc.default_ticks = 20;
    return sc;
}

ScenarioConfig affect_modulated_reflex() {
    SectorRegistry reg({"perc", "affect", "plan", "exe"},
                       {{"perc", "perceptual"},
                        {"affect", "affective"},
                        {"plan", "planning"},
                        {"exe", "execution"}});
    Eigen::MatrixXd g0 = Eigen::MatrixXd::Zero(4, 4);
    g0(0, 0) = 0.2;
    g0(0, 1) = 0.8; // perc -> affect
    g0(1, 2) = 0.8; // affect -> plan
    g0(2, 3) = 0.9; // plan -> exe
    ScenarioConfig sc;
    sc.name = "affect-modulated-reflex";
    sc.description = "Reactive pipeline with an affective stage biasing planning.";
    sc.profile = build_profile(reg, {{0, g0}}, 1);
    sc.ops = make_uniform_config(4, 1, 0.0, 0.0, 0.2);
    sc.script = {{0, 0, 0, 1.0}};
    sc.default_ticks = 20;
    return sc;
}

ScenarioConfig deliberative_cycle() {
    SectorRegistry reg({"perc", "plan", "refl", "exe"},
                       {{"perc", "perceptual"},
                        {"plan", "planning"},
                        {"refl", "reflective"},
                        {"exe", "execution"}});
    Eigen::MatrixXd g0 = Eigen::MatrixXd::Zero(4, 4);
    g0(0, 0) = 0.2;
    g0(0, 2) = 0.8; // perc -> refl at the concrete level
    g0(1, 3) = 0.9; // plan -> exe
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(4, 4);
    g1(2, 1) = 0.7; // refl -> plan at the tactical level
    ScenarioConfig sc;
    sc.name = "deliberative-cycle";
    sc.description = "Percept routed through tactical reflection before acting.";
    sc.profile = build_profile(reg, {{0, g0}, {1, g1}}, 1);
    sc.ops = make_uniform_config(4, 1, 0.0, 0.0, 0.2);
    sc.ops.lambda_gain(2) = 0.8; // refl abstracts upward
    sc.ops.v_gain(1) = 0.8;      // plan elaborates downward
    sc.script = {{0, 0, 0, 1.0}};
    sc.default_ticks = 30;
    return sc;
}

ScenarioConfig rumination() {
    SectorRegistry reg({"perc", "plan", "refl"},
                       {{"perc", "perceptual"}, {"plan", "planning"}, {"refl", "reflective"}});
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(3, 3);
    g1(2, 2) = 1.2; // runaway recurrent reflection
    ScenarioConfig sc;
    sc.name = "rumination";
    sc.description = "Recurrent reflective loop whose net gain exceeds one.";
    sc.profile = build_profile(reg, {{1, g1}}, 1);
    sc.ops = make_uniform_config(3, 1, 0.0, 0.0, 0.1);
    sc.script = {{0, 2, 1, 0.05}};
    sc.default_ticks = 30;
    return sc;
}

ScenarioConfig load_management() {
    SectorRegistry reg({"perc", "plan", "refl", "exe"},
                       {{"perc", "perceptual"},
                        {"plan", "planning"},
                        {"refl", "reflective"},
                        {"exe", "execution"}});
    Eigen::MatrixXd g0 = Eigen::MatrixXd::Zero(4, 4);
    g0(1, 1) = 0.5;  // sustained planning activity
    g0(1, 2) = 0.6;  // load signal into reflection
    g0(2, 1) = -0.5; // inhibitory regulation back onto planning
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(4, 4);
    g1(2, 2) = 0.3;
    ScenarioConfig sc;
    sc.name = "load-management";
    sc.description = "Reflective monitoring throttles an overactive sector.";
    sc.profile = build_profile(reg, {{0, g0}, {1, g1}}, 1);
    sc.ops = make_uniform_config(4, 1, 0.0, 0.0, 0.1);
    sc.ops.lambda_gain(2) = 0.5;
    sc.ops.v_gain(2) = 0.5;
    sc.script = {{0, 1, 0, 1.0}, {1, 1, 0, 1.0}, {2, 1, 0, 1.0}, {3, 1, 0, 1.0}, {4, 1, 0, 1.0}};
    sc.default_ticks = 40;
    return sc;
}

ScenarioConfig memory_informed_planning() {
    SectorRegistry reg({"perc", "plan", "mem", "exe"},
                       {{"perc", "perceptual"},
                        {"plan", "planning"},
                        {"mem", "memory"},
                        {"exe", "execution"}});
    Eigen::MatrixXd g0 = Eigen::MatrixXd::Zero(4, 4);
    g0(0, 0) = 0.2;
    g0(0, 1) = 0.5; // perc -> plan
    g0(1, 2) = 0.6; // plan -> mem (query)
    g0(2, 1) = 0.6; // mem -> plan (retrieval)
    g0(1, 3) = 0.8; // plan -> exe
    ScenarioConfig sc;
    sc.name = "memory-informed-planning";
    sc.description = "Planning consults memory before driving execution.";
    sc.profile = build_profile(reg, {{0, g0}}, 1);
    sc.ops = make_uniform_config(4, 1, 0.0, 0.0, 0.2);
    sc.script = {{0, 0, 0, 1.0}};
    sc.default_ticks = 25;
    return sc;
}

} // namespace

std::vector<std::string> scenario_names() {
    return {"reflex-arc",  "affect-modulated-reflex", "deliberative-cycle",
            "rumination",  "load-management",         "memory-informed-planning"};
}

ScenarioConfig make_scenario(const std::string& name) {
    if (name == "reflex-arc") {
        return reflex_arc();
    }
    if (name == "affect-modulated-reflex") {
        return affect_modulated_reflex();
    }
    if (name == "deliberative-cycle") {
        return deliberative_cycle();
    }
    if (name == "rumination") {
        return rumination();
    }
    if (name == "load-management") {
        return load_management();
    }
    if (name == "memory-informed-planning") {
        return memory_informed_planning();
    }
    throw UnknownScenario("unknown scenario \"" + name + "\"");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

EventLog generate_gated_log(const CouplingProfile& profile, int level, int trials_per_source,
                            std::uint64_t seed, const GatedEmissionOptions& options) {
    const int n = profile.sector_count();
    if (trials_per_source < 1) {
        throw ValidationError("need at least one trial per source");
    }
    if (!(options.spacing > 2.0 * options.window)) {
        throw ValidationError("trial spacing must exceed twice the response window");
    }
    const Eigen::MatrixXd g = profile.matrix(level).entries;
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> xdist(options.x_min, options.x_max);
    std::uniform_real_distribution<double> latency(0.3 * options.window, 0.9 * options.window);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    EventLog log;
    const int trials = trials_per_source * n;
    for (int m = 0; m < trials; ++m) {
        const int source = m % n;
        const double t0 = m * options.spacing;
        const double x = xdist(rng);
        // One latency per trial: simultaneous responses cannot claim
        // each other downstream.
        const double delay = latency(rng);
        log.push_back({t0, profile.registry().label(source), level, "event", x, {}});
        for (int j = 0; j < n; ++j) {
            if (j == source) {
                continue;
            }
            const double p = sigmoid(options.intercept + options.gain * g(source, j) * x);
            if (unit(rng) < p) {
                log.push_back({t0 + delay, profile.registry().label(j), level, "event",
                               options.response_magnitude, {}});
            }
        }
    }
    std::stable_sort(log.begin(), log.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    return log;
}

} // namespace scl
