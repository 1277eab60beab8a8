#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scl/coupling.hpp"
#include "scl/event_log.hpp"

namespace scl {

/// Per-sector gains and decay for the discrete activation dynamics.
///
/// lambda_gain moves activity up one level within a sector, v_gain moves
/// it down one level; decay(j, k) is the per-tick leak for sector j at
/// level k.
struct OperatorConfig {
    enum class Nonlinearity { ReluClamp, Logistic };

    Eigen::VectorXd lambda_gain;
    Eigen::VectorXd v_gain;
    Eigen::MatrixXd decay; // n x (max_level + 1)
    double input_gain = 1.0;
    Nonlinearity nonlinearity = Nonlinearity::ReluClamp;
    double a_max = 1.0;
    double event_threshold = 0.1;

    void validate() const;
};

/// Config with scalar gains broadcast over all sectors and levels.
OperatorConfig make_uniform_config(int sector_count, int max_level, double lambda, double v,
                                   double delta);

/// External input applied at one tick.
struct Stimulus {
    int tick = 0;
    int sector = 0;
    int level = 0;
    double magnitude = 0.0;
};

using StimulusScript = std::vector<Stimulus>;

/// Activations per (sector, level) at one tick.
struct ActivationState {
    int t = 0;
    Eigen::MatrixXd a; // n x (max_level + 1)

    /// Summed activation of each sector over all levels (load proxy).
    Eigen::VectorXd loads() const { return a.rowwise().sum(); }
};

/// Full record of a run: snapshots at every tick, threshold events, and
/// the (sector, level) cells that saturated while self-amplifying.
struct TraceLog {
    double dt = 0.1;
    std::uint64_t seed = 42;
    std::vector<std::string> sectors;
    int level_count = 1;
    std::vector<Eigen::MatrixXd> snapshots; // index = tick; [0] is the initial state
    EventLog events;
    std::vector<std::pair<int, int>> runaway; // (sector, level)

    bool runaway_flag() const { return !runaway.empty(); }
};

/// One synchronous update of all activations. `input` is the external
/// drive this tick (same shape as state.a).
ActivationState step(const ActivationState& state, const CouplingProfile& profile,
                     const OperatorConfig& ops, const Eigen::MatrixXd& input);

/// A packaged simulation setup.
struct ScenarioConfig {
    std::string name;
    std::string description;
    CouplingProfile profile;
    OperatorConfig ops;
    StimulusScript script;
    int default_ticks = 20;
};

/// Names of the shipped presets.
std::vector<std::string> scenario_names();

/// Build a preset by name; throws UnknownScenario.
ScenarioConfig make_scenario(const std::string& name);

struct RunOptions {
    int ticks = 0; // 0 means the scenario default
    std::uint64_t seed = 42;
    double dt = 0.1;
    double noise_std = 0.0; // observation noise on logged magnitudes only
};

/// Run a scenario deterministically. Gaussian observation noise, when
/// enabled, perturbs logged event magnitudes and never the state.
TraceLog run_scenario(const ScenarioConfig& scenario, const RunOptions& options = {});

/// Write the trace as JSONL; snapshots are included only when full=true.
void emit_log(const TraceLog& trace, std::ostream& out, bool full = false);
void emit_log(const TraceLog& trace, const std::string& path, bool full = false);

/// Synthetic event-log generator for the estimation pipeline. Each trial
/// pulses one source sector with a random magnitude x and every other
/// sector responds with probability sigmoid(intercept + gain * g * x).
/// Responses within a trial share one latency; trials are spaced so they
/// never interact.
struct GatedEmissionOptions {
    double intercept = -1.0;
    double gain = 4.0;
    double window = 0.5;       // response latency ceiling (seconds)
    double spacing = 1.5;      // seconds between trials, > 2 * window
    double x_min = 0.0;
    double x_max = 1.0;
    double response_magnitude = 0.0;
};

EventLog generate_gated_log(const CouplingProfile& profile, int level, int trials_per_source,
                            std::uint64_t seed, const GatedEmissionOptions& options = {});

} // namespace scl
