#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scl/coupling.hpp"
#include "scl/event_log.hpp"
#include "scl/propagation.hpp"

namespace scl {

/// Smallest sample a fit will accept.
inline constexpr int kMinPairs = 10;

enum class FitMode { Gated, Outcome, Parameter };

FitMode fit_mode_from_string(const std::string& s);
std::string to_string(FitMode m);

/// What to estimate: one intra-level source -> target influence, the
/// pairing window, and which features act as regressor and response.
struct EstimationSpec {
    std::string source_sector;
    std::string target_sector;
    int level = 0;
    FitMode mode = FitMode::Gated;
    double window = 0.5; // seconds
    std::string feature = "magnitude";
    std::string response_feature = "magnitude";
};

/// A stimulus with the response it claimed, if any.
struct PairedInteraction {
    InteractionEvent stimulus;
    std::optional<InteractionEvent> response;
    std::optional<double> latency;
};

/// Claim responses for stimuli inside the window. Each response goes to
/// its nearest unclaimed predecessor stimulus; stimuli left without a
/// response become negative pairs; responses with no in-window stimulus
/// are dropped.
std::vector<PairedInteraction> pair_events(const EventLog& log, const EstimationSpec& spec);

struct FitQuality {
    std::string kind; // "loglik" or "r2"
    double value = 0.0;
};

struct HoldoutResult {
    std::string metric;
    double value = 0.0;
    double p_value = 1.0;
    double accuracy = std::numeric_limits<double>::quiet_NaN(); // gated only
};

struct EstimateResult {
    double g_hat = 0.0;
    double intercept = 0.0;
    double stderr_value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int n_pairs = 0;
    FitQuality fit;
    std::optional<HoldoutResult> holdout;
    /// Gated mode with perfectly separated classes: g_hat carries the
    /// sign but its magnitude is unbounded (capped here).
    bool separated = false;
};

/// Fit one coupling from paired interactions.
///   gated     - logistic response-presence model, g is the slope
///   outcome   - least squares of the response feature on x, positive pairs
///   parameter - least squares of a named response attr on x
EstimateResult fit_coupling(const std::vector<PairedInteraction>& pairs,
                            const EstimationSpec& spec);

struct BootstrapCi {
    double lo = 0.0;
    double hi = 0.0;
    double stderr_value = 0.0;
    int valid = 0;
};

/// Nonparametric percentile bootstrap over pairs. Replicates derive their
/// own RNG stream from (seed, index), so thread count never changes the
/// result.
BootstrapCi bootstrap_ci(const std::vector<PairedInteraction>& pairs,
                         const EstimationSpec& spec, int b, std::uint64_t seed,
                         int threads = 1);

/// Fit on a train split, score on the held-out rest, and attach a
/// permutation p-value (200 label shuffles on the test side).
HoldoutResult validate_holdout(const std::vector<PairedInteraction>& pairs,
                               const EstimationSpec& spec, double split, std::uint64_t seed);

/// Context stratification: group pairs by a categorical stimulus attr
/// and fit each stratum separately. Strata that fail to fit are absent
/// from the result.
std::map<double, EstimateResult> fit_stratified(const std::vector<PairedInteraction>& pairs,
                                                const EstimationSpec& spec,
                                                const std::string& strat_attr);

/// Affine map reported by estimate_profile when anchors were provided.
struct Calibration {
    double scale = 1.0;
    double offset = 0.0;
    bool applied = false;
};

struct ProfileEstimate {
    Eigen::MatrixXd raw;        // slope per entry, NaN where absent
    Eigen::MatrixXd calibrated; // affine-adjusted copy (== raw when not applied)
    /// "" = estimated; otherwise the reason the entry is absent
    /// ("insufficient-data", "non-identifiable") or "separated".
    std::vector<std::vector<std::string>> flags;
    Calibration calibration;
    std::map<std::pair<int, int>, EstimateResult> results;

    bool available(int i, int j) const;
};

/// Run pair_events + fit_coupling for every ordered sector pair at one
/// level. Anchor entries with known true values, when given, fit the
/// affine calibration.
ProfileEstimate estimate_profile(const EventLog& log, const SectorRegistry& registry,
                                 int level, FitMode mode, double window,
                                 const std::map<std::pair<int, int>, double>& anchors = {});

enum class InferenceModel { Entrywise, DenseLsq };

struct InferredOperator {
    PropagationOperator op;
    double residual = 0.0;
    /// Entrywise ratios whose source entry was (near) zero.
    std::vector<std::pair<int, int>> undefined_ratios;
};

/// Recover the propagation rule linking two adjacent-level matrices.
/// Dense least squares needs at least n^2 independent pairs overall;
/// extra (gk, gk1) pairs supplement the primary one.
InferredOperator infer_propagation(
    const CouplingMatrix& gk, const CouplingMatrix& gk1, InferenceModel model,
    const std::vector<std::pair<CouplingMatrix, CouplingMatrix>>& extra_pairs = {});

struct DeviationEntry {
    int source = 0;
    int target = 0;
    double abs_diff = 0.0;
};

struct DiagnosticReport {
    CouplingMatrix predicted;
    CouplingMatrix actual;
    double deviation = 0.0;
    double tau = 0.0;
    bool alert = false;
    std::vector<DeviationEntry> worst_entries; // top 3 by |diff|
};

/// Propagate gk through the operator and compare against the measured
/// next-level matrix. alert is exactly (deviation > tau).
DiagnosticReport predict_and_diagnose(const PropagationOperator& op, const CouplingMatrix& gk,
                                      const CouplingMatrix& actual, double tau);

/// Same comparison when the prediction is already in hand.
DiagnosticReport diagnose_profiles(const CouplingMatrix& predicted,
                                   const CouplingMatrix& actual, double tau);

} // namespace scl
