#include "scl/analysis.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <cmath>
#include <ostream>
#include <sstream>

#include "scl/errors.hpp"

namespace scl {

namespace {

constexpr double kNeutralTol = 1e-9;

bool edge_present(double g, double theta) { return g != 0.0 && std::abs(g) >= theta; }

} // namespace

InfluenceGraph build_influence_graph(const CouplingProfile& profile, int level, double theta) {
    if (theta < 0.0) {
        throw ValidationError("theta must be non-negative");
    }
    const int n = profile.sector_count();
    InfluenceGraph g;
    g.level = level;
    g.theta = theta;
    g.labels = profile.registry().labels();
    g.weights = profile.matrix(level).entries;
    g.adjacency.assign(static_cast<size_t>(n), std::vector<bool>(static_cast<size_t>(n), false));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            g.adjacency[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                edge_present(g.weights(i, j), theta);
        }
    }
    return g;
}

void write_dot(const InfluenceGraph& graph, std::ostream& out) {
    out << "digraph influence {\n";
    out << "  label=\"level " << graph.level << ", theta " << graph.theta << "\";\n";
    for (const auto& l : graph.labels) {
        out << "  \"" << l << "\";\n";
    }
    const int n = static_cast<int>(graph.labels.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (graph.adjacency[static_cast<size_t>(i)][static_cast<size_t>(j)]) {
                out << "  \"" << graph.labels[static_cast<size_t>(i)] << "\" -> \""
                    << graph.labels[static_cast<size_t>(j)] << "\" [label=\""
                    << graph.weights(i, j) << "\"];\n";
            }
        }
    }
    out << "}\n";
}

std::vector<Pathway> trace_pathways(const CouplingProfile& profile, int level, double theta,
                                    int max_len) {
    if (max_len < 1) {
        throw ValidationError("max_len must be at least 1");
    }
    const InfluenceGraph graph = build_influence_graph(profile, level, theta);
    const int n = static_cast<int>(graph.labels.size());

    std::vector<Pathway> out;
    std::vector<int> path;
    std::vector<bool> on_path(static_cast<size_t>(n), false);

    auto emit = [&]() {
        Pathway p;
        p.gain = 1.0;
        for (size_t s = 0; s + 1 < path.size(); ++s) {
            const double w = graph.weights(path[s], path[s + 1]);
            p.steps.push_back({PathStep::Kind::Intra, path[s], path[s + 1], level, level, w});
            p.gain *= std::abs(w);
        }
        out.push_back(std::move(p));
    };

    std::function<void(int)> dfs = [&](int node) {
        if (static_cast<int>(path.size()) - 1 >= max_len) {
            return;
        }
        for (int next = 0; next < n; ++next) {
            if (on_path[static_cast<size_t>(next)] ||
                !graph.adjacency[static_cast<size_t>(node)][static_cast<size_t>(next)]) {
                continue;
            }
            path.push_back(next);
            on_path[static_cast<size_t>(next)] = true;
            emit();
            dfs(next);
            on_path[static_cast<size_t>(next)] = false;
            path.pop_back();
        }
    };

    for (int start = 0; start < n; ++start) {
        path = {start};
        on_path.assign(static_cast<size_t>(n), false);
        on_path[static_cast<size_t>(start)] = true;
        dfs(start);
    }

    std::stable_sort(out.begin(), out.end(),
                     [](const Pathway& a, const Pathway& b) { return a.gain > b.gain; });
    return out;
}

namespace {

/// A node of the (possibly multi-level) loop graph.
struct LoopNode {
    int sector;
    int level;
};

struct LoopEdge {
    PathStep::Kind kind;
    double weight;
};

/// Simple-cycle enumeration: every cycle is discovered exactly once,
/// rooted at its smallest node id.
std::vector<std::vector<int>> simple_cycles(const std::vector<std::vector<int>>& adj) {
    const int v = static_cast<int>(adj.size());
    std::vector<std::vector<int>> cycles;
    std::vector<int> path;
    std::vector<bool> on_path(static_cast<size_t>(v), false);

    std::function<void(int, int)> dfs = [&](int root, int node) {
        for (int next : adj[static_cast<size_t>(node)]) {
            if (next == root) {
                cycles.push_back(path);
            } else if (next > root && !on_path[static_cast<size_t>(next)]) {
                path.push_back(next);
                on_path[static_cast<size_t>(next)] = true;
                dfs(root, next);
                on_path[static_cast<size_t>(next)] = false;
                path.pop_back();
            }
        }
    };

    for (int root = 0; root < v; ++root) {
        path = {root};
        on_path.assign(static_cast<size_t>(v), false);
        on_path[static_cast<size_t>(root)] = true;
        dfs(root, root);
    }
    return cycles;
}

} // namespace

LoopReport find_loops(const CouplingProfile& profile, const std::optional<OperatorConfig>& ops,
                      double theta, bool multi_level) {
    if (theta < 0.0) {
        throw ValidationError("theta must be non-negative");
    }
    const int n = profile.sector_count();
    if (ops && (ops->lambda_gain.size() != n || ops->v_gain.size() != n)) {
        throw ShapeMismatch("operator config and profile sector counts differ");
    }
    LoopReport report;
    report.theta = theta;
    report.multi_level = multi_level;

    // Node ids: level * n + sector. Intra-level mode uses stored levels
    // only; bridges span every adjacent level pair up to max_level.
    std::vector<int> levels;
    int node_count = 0;
    auto node_id = [&](int sector, int level) { return level * n + sector; };

    std::map<std::pair<int, int>, LoopEdge> edges; // (from, to) -> edge
    if (multi_level) {
        node_count = n * (profile.max_level() + 1);
        for (int k = 0; k <= profile.max_level(); ++k) {
            const Eigen::MatrixXd g = profile.matrix(k).entries;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (edge_present(g(i, j), theta)) {
                        edges[{node_id(i, k), node_id(j, k)}] = {PathStep::Kind::Intra, g(i, j)};
                    }
                }
            }
        }
        for (int k = 0; k < profile.max_level(); ++k) {
            for (int s = 0; s < n; ++s) {
                const double lambda = ops ? ops->lambda_gain(s) : 1.0;
                const double v = ops ? ops->v_gain(s) : 1.0;
                if (lambda != 0.0) {
                    edges[{node_id(s, k), node_id(s, k + 1)}] = {PathStep::Kind::Abstraction,
                                                                 lambda};
                }
                if (v != 0.0) {
                    edges[{node_id(s, k + 1), node_id(s, k)}] = {PathStep::Kind::Elaboration, v};
                }
            }
        }
    } else {
        levels = profile.levels();
        int max_stored = -1;
        for (int k : levels) {
            max_stored = std::max(max_stored, k);
        }
        node_count = n * (max_stored + 1);
        for (int k : levels) {
            const Eigen::MatrixXd g = profile.matrix(k).entries;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (edge_present(g(i, j), theta)) {
                        edges[{node_id(i, k), node_id(j, k)}] = {PathStep::Kind::Intra, g(i, j)};
                    }
                }
            }
        }
    }

    std::vector<std::vector<int>> adj(static_cast<size_t>(std::max(node_count, 0)));
    for (const auto& [key, edge] : edges) {
        adj[static_cast<size_t>(key.first)].push_back(key.second);
    }

    for (const auto& cycle : simple_cycles(adj)) {
        Loop loop;
        loop.cycle.gain = 1.0;
        for (size_t s = 0; s < cycle.size(); ++s) {
            const int from = cycle[s];
            const int to = cycle[(s + 1) % cycle.size()];
            const LoopEdge& e = edges.at({from, to});
            loop.cycle.steps.push_back({e.kind, from % n, to % n, from / n, to / n, e.weight});
            loop.cycle.gain *= std::abs(e.weight);
        }
        if (loop.cycle.gain > 1.0 + kNeutralTol) {
            loop.cls = LoopClass::Explosive;
        } else if (loop.cycle.gain < 1.0 - kNeutralTol) {
            loop.cls = LoopClass::Damped;
        } else {
            loop.cls = LoopClass::Neutral;
        }
        report.loops.push_back(std::move(loop));
    }

    std::stable_sort(report.loops.begin(), report.loops.end(),
                     [](const Loop& a, const Loop& b) { return a.cycle.gain > b.cycle.gain; });
    return report;
}

std::string to_string(LoopClass c) {
    switch (c) {
    case LoopClass::Damped:
        return "damped";
    case LoopClass::Neutral:
        return "neutral";
    case LoopClass::Explosive:
        return "explosive";
    }
    return "?";
}

namespace {

std::string entry_name(const SectorRegistry& reg, int i, int j, int level) {
    return reg.label(i) + "->" + reg.label(j) + "@" + std::to_string(level);
}

} // namespace

StyleReport classify_style(const CouplingProfile& profile, const StyleThresholds& thresholds) {
    const SectorRegistry& reg = profile.registry();
    const int n = reg.size();
    StyleReport report;

    const std::vector<int> perc = reg.sectors_with_role("perceptual");
    const std::vector<int> plan = reg.sectors_with_role("planning");
    const std::vector<int> refl = reg.sectors_with_role("reflective");
    const bool have_roles = !perc.empty() && !plan.empty() && !refl.empty();
    if (!have_roles) {
        report.notices.push_back(
            "reactive/deliberative rules skipped: registry lacks perceptual, planning or "
            "reflective roles");
    }

    if (have_roles) {
        const Eigen::MatrixXd g0 = profile.matrix(0).entries;

        // Strength of the direct percept-to-plan shortcut at the bottom level.
        double best_edge = -std::numeric_limits<double>::infinity();
        int best_p = perc[0], best_l = plan[0];
        for (int p : perc) {
            for (int l : plan) {
                if (g0(p, l) > best_edge) {
                    best_edge = g0(p, l);
                    best_p = p;
                    best_l = l;
                }
            }
        }
        // Mean strength of reflective involvement, self-couplings excluded.
        double sum = 0.0;
        int count = 0;
        for (int r : refl) {
            for (int x = 0; x < n; ++x) {
                if (x == r) {
                    continue;
                }
                sum += std::abs(g0(x, r));
                sum += std::abs(g0(r, x));
                count += 2;
            }
        }
        const double refl_mean = count > 0 ? sum / count : 0.0;
        if (best_edge >= thresholds.reactive_edge && refl_mean <= thresholds.reactive_refl_mean) {
            report.labels.push_back("reactive");
            report.evidence.push_back({"reactive",
                                       {entry_name(reg, best_p, best_l, 0), "refl-coupling-mean"},
                                       {best_edge, refl_mean}});
        }

        for (int k : profile.levels()) {
            if (k < 1) {
                continue;
            }
            const Eigen::MatrixXd gk = profile.matrix(k).entries;
            bool found = false;
            for (int r : refl) {
                for (int p : perc) {
                    for (int l : plan) {
                        if (gk(p, r) >= thresholds.deliberative_edge &&
                            gk(r, l) >= thresholds.deliberative_edge) {
                            report.labels.push_back("deliberative");
                            report.evidence.push_back({"deliberative",
                                                       {entry_name(reg, p, r, k),
                                                        entry_name(reg, r, l, k)},
                                                       {gk(p, r), gk(r, l)}});
                            found = true;
                            break;
                        }
                    }
                    if (found) {
                        break;
                    }
                }
                if (found) {
                    break;
                }
            }
            if (found) {
                break;
            }
        }
    }

    {
        StyleEvidence ev{"ruminative-risk", {}, {}};
        for (int k : profile.levels()) {
            const Eigen::MatrixXd gk = profile.matrix(k).entries;
            for (int j = 0; j < n; ++j) {
                const double growth = (1.0 - thresholds.delta_default) + gk(j, j);
                if (growth > 1.0) {
                    ev.entries.push_back(entry_name(reg, j, j, k));
                    ev.values.push_back(growth);
                }
            }
        }
        if (!ev.entries.empty()) {
            report.labels.push_back("ruminative-risk");
            report.evidence.push_back(std::move(ev));
        }
    }

    {
        double max_abs = 0.0;
        for (int k : profile.levels()) {
            max_abs = std::max(max_abs, profile.matrix(k).entries.cwiseAbs().maxCoeff());
        }
        if (max_abs < thresholds.inert_max) {
            report.labels.push_back("inert");
            report.evidence.push_back({"inert", {"max|g|"}, {max_abs}});
        }
    }

    return report;
}

std::pair<CouplingProfile, double> perturb_profile(const CouplingProfile& profile,
                                                   const std::vector<ProfileEdit>& edits) {
    std::map<int, Eigen::MatrixXd> matrices;
    for (int k : profile.levels()) {
        matrices[k] = profile.matrix(k).entries;
    }
    const int n = profile.sector_count();
    for (const auto& e : edits) {
        const int i = profile.registry().index_of(e.source);
        const int j = profile.registry().index_of(e.target);
        if (e.level < 0 || e.level > profile.max_level()) {
            throw ValidationError("edit level " + std::to_string(e.level) + " outside [0, " +
                                  std::to_string(profile.max_level()) + "]");
        }
        if (!std::isfinite(e.value) || std::abs(e.value) > profile.g_max()) {
            throw ValidationError("edit value for " + e.source + "->" + e.target +
                                  " violates the coupling bound " +
                                  std::to_string(profile.g_max()));
        }
        auto it = matrices.find(e.level);
        if (it == matrices.end()) {
            it = matrices.emplace(e.level, Eigen::MatrixXd::Zero(n, n)).first;
        }
        it->second(i, j) = e.value;
    }
    CouplingProfile edited =
        build_profile(profile.registry(), matrices, profile.max_level(), profile.g_max());
    return {edited, frobenius_distance(profile, edited)};
}

} // namespace scl
