#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scl/coupling.hpp"
#include "scl/simulator.hpp"

namespace scl {

/// One level of the profile read as a weighted digraph. Edges exist
/// where |g| >= theta and g != 0.
struct InfluenceGraph {
    int level = 0;
    double theta = 0.0;
    std::vector<std::string> labels;
    std::vector<std::vector<bool>> adjacency;
    Eigen::MatrixXd weights;
};

InfluenceGraph build_influence_graph(const CouplingProfile& profile, int level, double theta);

/// Graphviz rendering of an influence graph.
void write_dot(const InfluenceGraph& graph, std::ostream& out);

struct PathStep {
    enum class Kind { Intra, Abstraction, Elaboration };
    Kind kind = Kind::Intra;
    int from_sector = 0;
    int to_sector = 0;
    int from_level = 0;
    int to_level = 0;
    double weight = 0.0;
};

/// A chain of intra-level edges, possibly bridged across adjacent levels
/// by abstraction/elaboration hops. gain is the product of |weights|.
struct Pathway {
    std::vector<PathStep> steps;
    double gain = 1.0;
};

/// All simple directed paths at one level whose edges all meet theta,
/// with at most max_len edges, sorted by gain descending.
std::vector<Pathway> trace_pathways(const CouplingProfile& profile, int level, double theta,
                                    int max_len);

enum class LoopClass { Damped, Neutral, Explosive };

struct Loop {
    Pathway cycle; // steps close back onto the first node
    LoopClass cls = LoopClass::Damped;
};

struct LoopReport {
    double theta = 0.0;
    bool multi_level = false;
    std::vector<Loop> loops; // sorted by gain descending
};

/// Enumerate simple cycles. Intra-level mode scans every stored level;
/// multi-level mode additionally bridges (sector, k) <-> (sector, k+1)
/// with the configured abstraction/elaboration gains (1.0 when no
/// config is given).
LoopReport find_loops(const CouplingProfile& profile,
                      const std::optional<OperatorConfig>& ops, double theta,
                      bool multi_level);

std::string to_string(LoopClass c);

/// Quantitative anchors for the style rules; defaults reproduce the
/// bundled example labels.
struct StyleThresholds {
    double reactive_edge = 0.7;      // perceptual->planning at level 0
    double reactive_refl_mean = 0.5; // max mean of reflective couplings
    double deliberative_edge = 0.6;  // perc->refl and refl->plan at k >= 1
    double inert_max = 0.05;
    double delta_default = 0.1; // decay assumed by the rumination rule
};

struct StyleEvidence {
    std::string rule;
    std::vector<std::string> entries;
    std::vector<double> values;
};

struct StyleReport {
    std::vector<std::string> labels; // subset of reactive/deliberative/ruminative-risk/inert
    std::vector<StyleEvidence> evidence;
    std::vector<std::string> notices; // rules skipped for missing roles
};

/// Rule-based style labels; labels may co-occur and each carries its
/// supporting entries. Rules needing absent roles are skipped with a
/// notice.
StyleReport classify_style(const CouplingProfile& profile, const StyleThresholds& thresholds = {});

struct ProfileEdit {
    std::string source;
    std::string target;
    int level = 0;
    double value = 0.0;
};

/// Apply entry edits and report the Frobenius distance to the original.
std::pair<CouplingProfile, double> perturb_profile(const CouplingProfile& profile,
                                                   const std::vector<ProfileEdit>& edits);

} // namespace scl
