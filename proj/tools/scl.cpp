// Command-line front end: every subcommand is a thin adapter over the
// library operations. Exit codes: 0 ok, 1 validation error, 2 numerical
// failure, 3 diagnostic alert.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "scl/analysis.hpp"
#include "scl/beta.hpp"
#include "scl/demo.hpp"
#include "scl/errors.hpp"
#include "scl/estimation.hpp"
#include "scl/json_io.hpp"
#include "scl/logging.hpp"
#include "scl/propagation.hpp"
#include "scl/simulator.hpp"

using nlohmann::json;
using namespace scl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitAlert = 3;

void print_matrix(std::ostream& out, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& labels) {
    out << std::setw(8) << "";
    for (const auto& l : labels) {
        out << ' ' << std::setw(10) << l;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << std::setw(8) << labels[static_cast<size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << ' ' << std::setw(10) << std::setprecision(6) << m(i, j);
        }
        out << '\n';
    }
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_out(const std::optional<std::string>& path, const json& doc) {
    if (path) {
        write_text_file(*path, doc.dump(2) + "\n");
    }
}

CouplingProfile load_profile(const std::string& path) {
    scl::log(LogLevel::Debug, "loading profile " + path);
    return profile_from_json(load_json_file(path));
}

/// Matrix selection from a profile file: an explicit level, or the only
/// stored one.
CouplingMatrix select_matrix(const CouplingProfile& p, std::optional<int> level,
                             const std::string& what) {
    if (level) {
        return p.matrix(*level);
    }
    const auto levels = p.levels();
    if (levels.size() != 1) {
        throw ValidationError(what + ": profile stores " + std::to_string(levels.size()) +
                              " levels; pick one with --level");
    }
    return p.matrix(levels.front());
}

Eigen::VectorXd vector_from_json(const json& doc, const SectorRegistry& reg,
                                 const std::string& field, double fallback) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(reg.size(), fallback);
    if (!doc.contains(field)) {
        return v;
    }
    if (doc[field].is_number()) {
        v.setConstant(doc[field].get<double>());
    } else if (doc[field].is_object()) {
        for (const auto& [label, value] : doc[field].items()) {
            v(reg.index_of(label)) = value.get<double>();
        }
    } else {
        throw ParseError("\"" + field + "\" must be a number or a sector->number object");
    }
    return v;
}

OperatorConfig ops_from_json(const json& doc, const CouplingProfile& profile) {
    const SectorRegistry& reg = profile.registry();
    const int levels = profile.max_level() + 1;
    OperatorConfig ops = make_uniform_config(reg.size(), profile.max_level(), 0.0, 0.0, 0.1);
    ops.lambda_gain = vector_from_json(doc, reg, "lambda_gain", 0.0);
    ops.v_gain = vector_from_json(doc, reg, "v_gain", 0.0);
    if (doc.contains("decay")) {
        if (doc["decay"].is_number()) {
            ops.decay.setConstant(doc["decay"].get<double>());
        } else if (doc["decay"].is_object()) {
            for (const auto& [label, value] : doc["decay"].items()) {
                const int i = reg.index_of(label);
                if (value.is_number()) {
                    ops.decay.row(i).setConstant(value.get<double>());
                } else if (value.is_array()) {
                    if (static_cast<int>(value.size()) != levels) {
                        throw ParseError("decay for \"" + label + "\" needs " +
                                         std::to_string(levels) + " per-level values");
                    }
                    for (int k = 0; k < levels; ++k) {
                        ops.decay(i, k) = value[static_cast<size_t>(k)].get<double>();
                    }
                } else {
                    throw ParseError("decay values must be numbers or arrays");
                }
            }
        } else {
            throw ParseError("\"decay\" must be a number or a sector map");
        }
    }
    if (doc.contains("input_gain")) {
        ops.input_gain = doc["input_gain"].get<double>();
    }
    if (doc.contains("nonlinearity")) {
        const std::string nl = doc["nonlinearity"].get<std::string>();
        if (nl == "relu_clamp") {
            ops.nonlinearity = OperatorConfig::Nonlinearity::ReluClamp;
        } else if (nl == "logistic") {
            ops.nonlinearity = OperatorConfig::Nonlinearity::Logistic;
        } else {
            throw ParseError("unknown nonlinearity \"" + nl + "\"");
        }
    }
    if (doc.contains("a_max")) {
        ops.a_max = doc["a_max"].get<double>();
    }
    if (doc.contains("event_threshold")) {
        ops.event_threshold = doc["event_threshold"].get<double>();
    }
    ops.validate();
    return ops;
}

StimulusScript script_from_json(const json& doc, const SectorRegistry& reg) {
    if (!doc.is_array()) {
        throw ParseError("stimulus script must be an array");
    }
    StimulusScript script;
    for (const auto& s : doc) {
        Stimulus st;
        st.tick = s.at("tick").get<int>();
        st.sector = reg.index_of(s.at("sector").get<std::string>());
        st.level = s.value("level", 0);
        st.magnitude = s.at("magnitude").get<double>();
        script.push_back(st);
    }
    return script;
}

json style_json(const StyleReport& report) {
    json doc;
    doc["labels"] = report.labels;
    json evidence = json::array();
    for (const auto& e : report.evidence) {
        evidence.push_back({{"rule", e.rule}, {"entries", e.entries}, {"values", e.values}});
    }
    doc["evidence"] = std::move(evidence);
    doc["notices"] = report.notices;
    return doc;
}

json modes_json(const std::vector<ModeClassification>& modes) {
    json arr = json::array();
    for (const auto& m : modes) {
        arr.push_back({{"re", m.eigenvalue.real()},
                       {"im", m.eigenvalue.imag()},
                       {"modulus", std::abs(m.eigenvalue)},
                       {"class", to_string(m.cls)},
                       {"oscillatory", m.oscillatory}});
    }
    return arr;
}

json estimate_json(const EstimateResult& r) {
    json doc;
    doc["g_hat"] = r.g_hat;
    doc["intercept"] = r.intercept;
    doc["stderr"] = r.stderr_value;
    doc["ci95"] = {r.ci_lo, r.ci_hi};
    doc["n_pairs"] = r.n_pairs;
    doc["fit"] = {{"kind", r.fit.kind}, {"value", r.fit.value}};
    doc["separated"] = r.separated;
    if (r.holdout) {
        doc["holdout"] = {{"metric", r.holdout->metric},
                          {"value", r.holdout->value},
                          {"p_value", r.holdout->p_value}};
        if (std::isfinite(r.holdout->accuracy)) {
            doc["holdout"]["accuracy"] = r.holdout->accuracy;
        }
    }
    return doc;
}

json diagnostic_json(const DiagnosticReport& report, const std::vector<std::string>& labels) {
    json doc;
    doc["deviation"] = report.deviation;
    doc["tau"] = report.tau;
    doc["alert"] = report.alert;
    doc["predicted"] = matrix_json(report.predicted.entries);
    doc["actual"] = matrix_json(report.actual.entries);
    json worst = json::array();
    for (const auto& w : report.worst_entries) {
        worst.push_back({{"source", labels[static_cast<size_t>(w.source)]},
                         {"target", labels[static_cast<size_t>(w.target)]},
                         {"abs_diff", w.abs_diff}});
    }
    doc["worst_entries"] = std::move(worst);
    return doc;
}

int cmd_demo(const std::optional<std::string>& out_path) {
    const auto report = demo::run();
    const auto reg = demo::example_registry();
    const auto labels = reg.labels();

    std::cout << "Worked example: three-sector cybersecurity agent\n\n";
    std::cout << "Concrete profile G(0) (reactive):\n";
    print_matrix(std::cout, demo::reactive_matrix().entries, labels);
    std::cout << "\nTactical profile G(1) (deliberative):\n";
    print_matrix(std::cout, demo::deliberative_matrix().entries, labels);
    std::cout << "\nPredicted strategic profile G(2):\n";
    print_matrix(std::cout, report.predicted, labels);
    std::cout << "\nRescaled entries: perc->plan " << report.predicted(0, 1) << ", perc->refl "
              << report.predicted(0, 2) << ", refl->plan " << report.predicted(2, 1)
              << ", refl->refl " << report.predicted(2, 2) << "\n";

    std::cout << "\nPropagation modes:\n";
    for (const auto& m : report.modes) {
        std::cout << "  lambda = " << std::setprecision(6) << m.eigenvalue.real() << "  ["
                  << to_string(m.cls) << "]\n";
    }
    auto label_line = [](const char* name, const StyleReport& style) {
        std::cout << name << " style: ";
        for (size_t i = 0; i < style.labels.size(); ++i) {
            std::cout << (i ? ", " : "") << style.labels[i];
        }
        std::cout << '\n';
    };
    label_line("Concrete profile", report.concrete_style);
    label_line("Tactical profile", report.tactical_style);

    if (out_path) {
        json doc;
        doc["predicted"] = matrix_json(report.predicted);
        doc["rescaled"] = {{"perc->plan", report.predicted(0, 1)},
                           {"perc->refl", report.predicted(0, 2)},
                           {"refl->plan", report.predicted(2, 1)},
                           {"refl->refl", report.predicted(2, 2)}};
        doc["modes"] = modes_json(report.modes);
        doc["concrete_style"] = style_json(report.concrete_style);
        doc["tactical_style"] = style_json(report.tactical_style);
        doc["ok"] = report.ok();
        write_out(out_path, doc);
    }

    if (!report.ok()) {
        std::cout << "\nCHECK FAILED:\n";
        for (const auto& m : report.mismatches) {
            std::cout << "  " << m << '\n';
        }
        if (!report.modes_ok) {
            std::cout << "  eigenmode classification mismatch\n";
        }
        if (!report.styles_ok) {
            std::cout << "  style classification mismatch\n";
        }
        return kExitNumerical;
    }
    std::cout << "\nAll checks passed.\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sectoral coupling toolkit: model, simulate, estimate and diagnose "
                 "intra-level coupling profiles"};
    app.require_subcommand(1);

    std::optional<std::string> out_path;
    app.add_option("--out", out_path, "Write a machine-readable JSON report here");
    std::uint64_t seed = 42;
    app.add_option("--seed", seed, "Seed for every random choice");
    int threads = 1;
    app.add_option("--threads", threads, "Worker threads for resampling loops");

    // ---- propagate ----
    auto* propagate = app.add_subcommand("propagate", "Apply a propagation rule across levels");
    std::string profile_path, operator_path;
    int from_level = 0, to_level = 1;
    propagate->add_option("--profile", profile_path, "Profile JSON")->required();
    propagate->add_option("--operator", operator_path, "Operator JSON")->required();
    propagate->add_option("--from", from_level, "Source level")->required();
    propagate->add_option("--to", to_level, "Target level")->required();

    // ---- eigen ----
    auto* eigen_cmd = app.add_subcommand("eigen", "Classify the modes of a propagation rule");
    std::string eigen_operator;
    double mode_tol = 1e-9;
    eigen_cmd->add_option("--operator", eigen_operator, "Operator JSON")->required();
    eigen_cmd->add_option("--tol", mode_tol, "Half-width of the |lambda|=1 band");

    // ---- converge ----
    auto* converge = app.add_subcommand("converge", "Iterate a rule and classify the tail");
    std::string conv_profile, conv_operator;
    int conv_level = 0, conv_max_levels = 200;
    double conv_eps = 1e-3, conv_gmax = kDefaultGmax;
    converge->add_option("--profile", conv_profile)->required();
    converge->add_option("--operator", conv_operator)->required();
    converge->add_option("--level", conv_level, "Starting level");
    converge->add_option("--max-levels", conv_max_levels);
    converge->add_option("--eps", conv_eps);
    converge->add_option("--g-max", conv_gmax);

    // ---- flow ----
    auto* flow = app.add_subcommand("flow", "Integrate the continuous coupling flow");
    std::string flow_profile, flow_beta;
    int flow_level = 0;
    double flow_from = 0.0, flow_to = 1.0, flow_step = 0.01;
    flow->add_option("--profile", flow_profile)->required();
    flow->add_option("--beta", flow_beta, "Beta JSON")->required();
    flow->add_option("--level", flow_level);
    flow->add_option("--from", flow_from);
    flow->add_option("--to", flow_to);
    flow->add_option("--step", flow_step);

    // ---- fixpoint ----
    auto* fixpoint = app.add_subcommand("fixpoint", "Solve beta(G) = 0");
    std::string fix_profile, fix_beta;
    int fix_level = 0, fix_max_iter = 100;
    double fix_tol = 1e-10;
    fixpoint->add_option("--profile", fix_profile)->required();
    fixpoint->add_option("--beta", fix_beta)->required();
    fixpoint->add_option("--level", fix_level);
    fixpoint->add_option("--tol", fix_tol);
    fixpoint->add_option("--max-iter", fix_max_iter);

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "Run the activation dynamics");
    std::string sim_scenario;
    std::string sim_profile, sim_ops, sim_script;
    int sim_ticks = 0, gated_trials = 0, gated_level = 0;
    double sim_dt = 0.1, sim_noise = 0.0;
    bool sim_full = false;
    simulate->add_option("--scenario", sim_scenario, "Preset name");
    simulate->add_option("--profile", sim_profile, "Profile JSON (preset override)");
    simulate->add_option("--ops", sim_ops, "Operator config JSON");
    simulate->add_option("--script", sim_script, "Stimulus script JSON");
    simulate->add_option("--ticks", sim_ticks);
    simulate->add_option("--dt", sim_dt, "Seconds per tick");
    simulate->add_option("--noise-std", sim_noise, "Observation noise on logged magnitudes");
    simulate->add_flag("--full", sim_full, "Include per-tick snapshots in the log");
    simulate->add_option("--gated-trials", gated_trials,
                         "Emit a synthetic gated log with this many trials per source");
    simulate->add_option("--level", gated_level, "Level for the synthetic gated log");

    // ---- estimate ----
    auto* estimate = app.add_subcommand("estimate", "Fit couplings from an event log");
    std::string est_log, est_source, est_target, est_mode = "gated";
    std::string est_feature = "magnitude", est_response = "magnitude";
    std::string est_registry_from, est_anchors;
    int est_level = 0, est_bootstrap = 1000;
    double est_window = 0.5, est_holdout = 0.0;
    bool est_all_pairs = false;
    estimate->add_option("--log", est_log, "JSONL event log")->required();
    estimate->add_option("--source", est_source);
    estimate->add_option("--target", est_target);
    estimate->add_option("--level", est_level);
    estimate->add_option("--mode", est_mode, "gated|outcome|parameter");
    estimate->add_option("--window", est_window, "Pairing window (seconds)");
    estimate->add_option("--feature", est_feature, "Regressor feature");
    estimate->add_option("--response-feature", est_response, "Response feature");
    estimate->add_option("--bootstrap", est_bootstrap,
                         "Bootstrap replicates (default 1000, 0 = off)");
    estimate->add_option("--holdout", est_holdout, "Held-out fraction (0 = off)");
    estimate->add_flag("--all-pairs", est_all_pairs, "Estimate every ordered sector pair");
    estimate->add_option("--registry-from", est_registry_from,
                         "Profile JSON supplying the registry for --all-pairs");
    estimate->add_option("--anchors", est_anchors,
                         "JSON object {\"src->tgt\": true_value} for calibration");
    std::string est_stratify;
    estimate->add_option("--stratify-by", est_stratify,
                         "Fit separately per value of this stimulus attr");

    // ---- infer-m ----
    auto* infer = app.add_subcommand("infer-m", "Recover the propagation rule between levels");
    std::string infer_profile, infer_pairs, infer_model = "entrywise";
    int infer_from = 0, infer_to = 1;
    infer->add_option("--profile", infer_profile)->required();
    infer->add_option("--from", infer_from);
    infer->add_option("--to", infer_to);
    infer->add_option("--model", infer_model, "entrywise|dense-lsq");
    infer->add_option("--pairs", infer_pairs, "Extra (gk, gk1) matrix pairs JSON");

    // ---- diagnose ----
    auto* diagnose = app.add_subcommand("diagnose", "Compare predicted vs measured profiles");
    std::string diag_predicted, diag_actual, diag_operator, diag_profile;
    std::optional<int> diag_level;
    double diag_tau = 0.1;
    diagnose->add_option("--predicted", diag_predicted, "Predicted profile JSON");
    diagnose->add_option("--operator", diag_operator, "Operator JSON (with --profile)");
    diagnose->add_option("--profile", diag_profile, "Level-k profile JSON (with --operator)");
    diagnose->add_option("--level", diag_level, "Level to compare");
    diagnose->add_option("--actual", diag_actual, "Measured profile JSON")->required();
    diagnose->add_option("--tau", diag_tau, "Alert threshold")->required();

    // ---- analyze ----
    auto* analyze = app.add_subcommand("analyze", "Pathways, loops and style labels");
    std::string an_profile, an_dot, an_ops;
    int an_level = 0, an_max_len = 4;
    double an_theta = 0.3;
    bool an_multi = false;
    analyze->add_option("--profile", an_profile)->required();
    analyze->add_option("--level", an_level);
    analyze->add_option("--theta", an_theta, "Edge threshold");
    analyze->add_option("--max-len", an_max_len, "Longest pathway (edges)");
    analyze->add_flag("--multi-level", an_multi, "Bridge loops across levels");
    analyze->add_option("--ops", an_ops, "Operator config JSON for bridge gains");
    analyze->add_option("--dot", an_dot, "Write the influence graph as DOT");
    std::string an_style_config;
    analyze->add_option("--style-config", an_style_config,
                        "JSON overriding the style rule thresholds");

    // ---- perturb ----
    auto* perturb = app.add_subcommand("perturb", "Edit couplings and measure the shift");
    std::string pert_profile;
    std::vector<std::string> pert_edits;
    perturb->add_option("--profile", pert_profile)->required();
    perturb->add_option("--edit", pert_edits, "src->tgt@level=value (repeatable)")->required();

    // ---- demo ----
    auto* demo_cmd = app.add_subcommand("demo", "Reproduce the worked cybersecurity example");
    std::string demo_which = "paper-example";
    demo_cmd->add_option("which", demo_which, "Example name (paper-example)");

    // global flags (--out, --seed, --threads) may follow the subcommand
    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*propagate) {
            const auto profile = load_profile(profile_path);
            const auto op = operator_from_json(load_json_file(operator_path));
            if (to_level <= from_level) {
                throw ValidationError("--to must exceed --from");
            }
            CouplingMatrix cur = profile.matrix(from_level);
            for (int k = from_level; k < to_level; ++k) {
                cur = apply_propagation(op, cur);
            }
            std::cout << "Predicted profile at level " << to_level << ":\n";
            print_matrix(std::cout, cur.entries, profile.registry().labels());
            const auto predicted = build_profile(
                profile.registry(), {{to_level, cur.entries}},
                std::max(profile.max_level(), to_level), profile.g_max());
            write_out(out_path, profile_to_json(predicted));
            return kExitOk;
        }

        if (*eigen_cmd) {
            const auto op = operator_from_json(load_json_file(eigen_operator));
            const auto modes = eigenmodes(op, mode_tol);
            std::cout << "modulus    class      oscillatory\n";
            for (const auto& m : modes) {
                std::cout << std::setw(7) << std::setprecision(6) << std::abs(m.eigenvalue)
                          << "    " << std::setw(9) << to_string(m.cls) << "  "
                          << (m.oscillatory ? "yes" : "no") << '\n';
            }
            write_out(out_path, json{{"modes", modes_json(modes)}});
            return kExitOk;
        }

        if (*converge) {
            const auto profile = load_profile(conv_profile);
            const auto op = operator_from_json(load_json_file(conv_operator));
            const auto report = check_convergence(op, profile.matrix(conv_level),
                                                  conv_max_levels, conv_eps, conv_gmax);
            std::cout << "verdict: " << to_string(report.verdict) << " (level " << report.level
                      << ")\n"
                      << report.note << '\n';
            std::cout << "max|entry| per level:";
            for (double v : report.max_abs_trace) {
                std::cout << ' ' << std::setprecision(4) << v;
            }
            std::cout << '\n';
            json doc{{"verdict", to_string(report.verdict)},
                     {"level", report.level},
                     {"trace", report.max_abs_trace},
                     {"unit_modes_excited", report.unit_modes_excited},
                     {"note", report.note}};
            if (report.limit) {
                doc["limit"] = matrix_json(report.limit->entries);
            }
            write_out(out_path, doc);
            return kExitOk;
        }

        if (*flow) {
            const auto profile = load_profile(flow_profile);
            const auto beta = beta_from_json(load_json_file(flow_beta), profile.registry());
            const auto traj =
                integrate_beta(beta, profile.matrix(flow_level), flow_from, flow_to, flow_step);
            std::cout << "integrated " << traj.k.size() << " samples from k=" << flow_from
                      << " to k=" << flow_to << "\nfinal state:\n";
            print_matrix(std::cout, traj.states.back(), profile.registry().labels());
            json doc;
            doc["k"] = traj.k;
            json states = json::array();
            for (const auto& s : traj.states) {
                states.push_back(matrix_json(s));
            }
            doc["states"] = std::move(states);
            write_out(out_path, doc);
            return kExitOk;
        }

        if (*fixpoint) {
            const auto profile = load_profile(fix_profile);
            const auto beta = beta_from_json(load_json_file(fix_beta), profile.registry());
            const auto result =
                find_fixed_point(beta, profile.matrix(fix_level), fix_tol, fix_max_iter);
            std::cout << (result.converged ? "converged" : "did not converge") << " after "
                      << result.iterations << " iterations, residual " << result.residual
                      << '\n';
            print_matrix(std::cout, result.profile.entries, profile.registry().labels());
            write_out(out_path, json{{"converged", result.converged},
                                     {"iterations", result.iterations},
                                     {"residual", result.residual},
                                     {"singular_fallbacks", result.singular_fallbacks},
                                     {"profile", matrix_json(result.profile.entries)}});
            return result.converged ? kExitOk : kExitNumerical;
        }

        if (*simulate) {
            ScenarioConfig sc;
            if (!sim_scenario.empty()) {
                sc = make_scenario(sim_scenario);
            } else if (sim_profile.empty()) {
                throw ValidationError("simulate needs --scenario or --profile");
            } else {
                sc.name = "custom";
                sc.default_ticks = 100;
            }
            if (!sim_profile.empty()) {
                sc.profile = load_profile(sim_profile);
                const int n = sc.profile.sector_count();
                const int levels = sc.profile.max_level() + 1;
                if (sim_scenario.empty()) {
                    sc.ops = make_uniform_config(n, sc.profile.max_level(), 0.0, 0.0, 0.1);
                } else if (sc.ops.decay.rows() != n || sc.ops.decay.cols() != levels) {
                    scl::log(LogLevel::Warn,
                             "profile shape differs from the preset; falling back to uniform "
                             "operator defaults and an empty script");
                    sc.ops = make_uniform_config(n, sc.profile.max_level(), 0.0, 0.0, 0.2);
                    sc.script.clear();
                }
            }
            if (gated_trials > 0) {
                const EventLog log =
                    generate_gated_log(sc.profile, gated_level, gated_trials, seed);
                if (!out_path) {
                    throw ValidationError("--gated-trials needs --out for the JSONL log");
                }
                std::ofstream out(*out_path);
                if (!out) {
                    throw IoError("cannot write " + *out_path);
                }
                for (const auto& e : log) {
                    write_event_line(out, e);
                }
                std::cout << "wrote " << log.size() << " synthetic events to " << *out_path
                          << '\n';
                return kExitOk;
            }
            if (!sim_ops.empty()) {
                sc.ops = ops_from_json(load_json_file(sim_ops), sc.profile);
            }
            if (!sim_script.empty()) {
                sc.script = script_from_json(load_json_file(sim_script), sc.profile.registry());
            }
            RunOptions opt;
            opt.ticks = sim_ticks;
            opt.seed = seed;
            opt.dt = sim_dt;
            opt.noise_std = sim_noise;
            const TraceLog trace = run_scenario(sc, opt);
            std::cout << "ran " << (trace.snapshots.size() - 1) << " ticks, " << trace.events.size()
                      << " events, runaway=" << (trace.runaway_flag() ? "yes" : "no") << '\n';
            if (out_path) {
                emit_log(trace, *out_path, sim_full);
                std::cout << "trace written to " << *out_path << '\n';
            }
            return kExitOk;
        }

        if (*estimate) {
            const EventLog log = load_event_log(est_log);
            const FitMode mode = fit_mode_from_string(est_mode);
            if (est_all_pairs) {
                SectorRegistry reg = [&] {
                    if (!est_registry_from.empty()) {
                        return load_profile(est_registry_from).registry();
                    }
                    std::set<std::string> labels;
                    for (const auto& e : log) {
                        labels.insert(e.sector);
                    }
                    return SectorRegistry(
                        std::vector<std::string>(labels.begin(), labels.end()));
                }();
                std::map<std::pair<int, int>, double> anchors;
                if (!est_anchors.empty()) {
                    const json doc = load_json_file(est_anchors);
                    for (const auto& [key, value] : doc.items()) {
                        const auto arrow = key.find("->");
                        if (arrow == std::string::npos) {
                            throw ParseError("anchor key \"" + key +
                                             "\" must look like src->tgt");
                        }
                        anchors[{reg.index_of(key.substr(0, arrow)),
                                 reg.index_of(key.substr(arrow + 2))}] = value.get<double>();
                    }
                }
                const auto est =
                    estimate_profile(log, reg, est_level, mode, est_window, anchors);
                std::cout << "estimated profile at level " << est_level << " ("
                          << to_string(mode) << "):\n";
                print_matrix(std::cout, est.calibrated, reg.labels());
                json flags = json::object();
                Eigen::MatrixXd usable = est.calibrated;
                for (int i = 0; i < reg.size(); ++i) {
                    for (int j = 0; j < reg.size(); ++j) {
                        const auto& f = est.flags[static_cast<size_t>(i)][static_cast<size_t>(j)];
                        if (!f.empty()) {
                            flags[reg.label(i) + "->" + reg.label(j)] = f;
                        }
                        if (!est.available(i, j)) {
                            usable(i, j) = 0.0; // absent entry; see flags
                        }
                    }
                }
                std::cout << "flagged entries: " << flags.size() << '\n';
                // profile document plus the flags map and calibration extras
                json doc;
                doc["sectors"] = reg.labels();
                doc["max_level"] = est_level;
                doc["levels"] = {{std::to_string(est_level), matrix_json(usable)}};
                doc["flags"] = std::move(flags);
                doc["raw"] = matrix_json(est.raw);
                doc["calibration"] = {{"scale", est.calibration.scale},
                                      {"offset", est.calibration.offset},
                                      {"applied", est.calibration.applied}};
                write_out(out_path, doc);
                return kExitOk;
            }
            if (est_source.empty() || est_target.empty()) {
                throw ValidationError("estimate needs --source and --target (or --all-pairs)");
            }
            EstimationSpec spec;
            spec.source_sector = est_source;
            spec.target_sector = est_target;
            spec.level = est_level;
            spec.mode = mode;
            spec.window = est_window;
            spec.feature = est_feature;
            spec.response_feature = est_response;
            const auto pairs = pair_events(log, spec);
            scl::log(LogLevel::Info, "paired " + std::to_string(pairs.size()) + " stimuli for " +
                                         est_source + "->" + est_target);
            if (!est_stratify.empty()) {
                const auto strata = fit_stratified(pairs, spec, est_stratify);
                json doc = json::object();
                for (const auto& [value, r] : strata) {
                    std::cout << est_stratify << "=" << value << ": g_hat = " << r.g_hat
                              << "  n = " << r.n_pairs << '\n';
                    doc[std::to_string(value)] = estimate_json(r);
                }
                write_out(out_path, doc);
                return kExitOk;
            }
            EstimateResult result = fit_coupling(pairs, spec);
            if (est_bootstrap > 0) {
                const auto ci = bootstrap_ci(pairs, spec, est_bootstrap, seed, threads);
                // the reported interval always contains the point estimate
                result.ci_lo = std::min(ci.lo, result.g_hat);
                result.ci_hi = std::max(ci.hi, result.g_hat);
                result.stderr_value = ci.stderr_value;
            }
            if (est_holdout > 0.0) {
                result.holdout = validate_holdout(pairs, spec, est_holdout, seed);
            }
            std::cout << est_source << "->" << est_target << "@" << est_level << " ["
                      << to_string(mode) << "]: g_hat = " << result.g_hat << "  ci95 = ["
                      << result.ci_lo << ", " << result.ci_hi << "]  n = " << result.n_pairs
                      << (result.separated ? "  (separated)" : "") << '\n';
            if (result.holdout) {
                std::cout << "holdout " << result.holdout->metric << " = "
                          << result.holdout->value << ", p = " << result.holdout->p_value
                          << '\n';
            }
            write_out(out_path, estimate_json(result));
            return kExitOk;
        }

        if (*infer) {
            const auto profile = load_profile(infer_profile);
            const CouplingMatrix gk = profile.matrix(infer_from);
            const CouplingMatrix gk1 = profile.matrix(infer_to);
            std::vector<std::pair<CouplingMatrix, CouplingMatrix>> extra;
            if (!infer_pairs.empty()) {
                const json doc = load_json_file(infer_pairs);
                if (!doc.is_array()) {
                    throw ParseError("--pairs must be a JSON array");
                }
                for (const auto& p : doc) {
                    const auto a = profile_from_json(
                        json{{"sectors", json(profile.registry().labels())},
                             {"max_level", 0},
                             {"levels", {{"0", p.at("gk")}}}});
                    const auto b = profile_from_json(
                        json{{"sectors", json(profile.registry().labels())},
                             {"max_level", 0},
                             {"levels", {{"0", p.at("gk1")}}}});
                    extra.emplace_back(a.matrix(0), b.matrix(0));
                }
            }
            const InferenceModel model = infer_model == "dense-lsq" ? InferenceModel::DenseLsq
                                         : infer_model == "entrywise"
                                             ? InferenceModel::Entrywise
                                             : throw ValidationError("unknown model \"" +
                                                                     infer_model + "\"");
            const auto inferred = infer_propagation(gk, gk1, model, extra);
            std::cout << "residual = " << inferred.residual << '\n';
            if (inferred.op.kind() == PropagationOperator::Kind::Entrywise) {
                std::cout << "entrywise factors:\n";
                print_matrix(std::cout, inferred.op.factors(), profile.registry().labels());
                if (!inferred.undefined_ratios.empty()) {
                    std::cout << "undefined ratios:";
                    for (const auto& [i, j] : inferred.undefined_ratios) {
                        std::cout << ' ' << profile.registry().label(i) << "->"
                                  << profile.registry().label(j);
                    }
                    std::cout << '\n';
                }
            }
            json doc = operator_to_json(inferred.op);
            doc["residual"] = inferred.residual;
            json undefined = json::array();
            for (const auto& [i, j] : inferred.undefined_ratios) {
                undefined.push_back(profile.registry().label(i) + "->" +
                                    profile.registry().label(j));
            }
            doc["undefined_ratios"] = std::move(undefined);
            write_out(out_path, doc);
            return kExitOk;
        }

        if (*diagnose) {
            const auto actual_profile = load_profile(diag_actual);
            CouplingMatrix predicted{0, Eigen::MatrixXd()};
            CouplingMatrix actual{0, Eigen::MatrixXd()};
            if (!diag_predicted.empty()) {
                const auto predicted_profile = load_profile(diag_predicted);
                predicted = select_matrix(predicted_profile, diag_level, "--predicted");
                actual = select_matrix(actual_profile, diag_level, "--actual");
            } else if (!diag_operator.empty() && !diag_profile.empty()) {
                const auto base = load_profile(diag_profile);
                const int level = diag_level.value_or(0);
                const auto op = operator_from_json(load_json_file(diag_operator));
                predicted = apply_propagation(op, base.matrix(level));
                actual = actual_profile.matrix(level + 1);
            } else {
                throw ValidationError(
                    "diagnose needs --predicted or the --operator/--profile pair");
            }
            const auto report = diagnose_profiles(predicted, actual, diag_tau);
            std::cout << "deviation = " << report.deviation << " (tau " << report.tau << ") -> "
                      << (report.alert ? "ALERT" : "consistent") << '\n';
            for (const auto& w : report.worst_entries) {
                std::cout << "  " << actual_profile.registry().label(w.source) << "->"
                          << actual_profile.registry().label(w.target) << "  |diff| = "
                          << w.abs_diff << '\n';
            }
            write_out(out_path, diagnostic_json(report, actual_profile.registry().labels()));
            return report.alert ? kExitAlert : kExitOk;
        }

        if (*analyze) {
            const auto profile = load_profile(an_profile);
            const auto paths = trace_pathways(profile, an_level, an_theta, an_max_len);
            std::optional<OperatorConfig> ops;
            if (!an_ops.empty()) {
                ops = ops_from_json(load_json_file(an_ops), profile);
            }
            const auto loops = find_loops(profile, ops, an_theta, an_multi);
            StyleThresholds thresholds;
            if (!an_style_config.empty()) {
                const json cfg = load_json_file(an_style_config);
                thresholds.reactive_edge = cfg.value("reactive_edge", thresholds.reactive_edge);
                thresholds.reactive_refl_mean =
                    cfg.value("reactive_refl_mean", thresholds.reactive_refl_mean);
                thresholds.deliberative_edge =
                    cfg.value("deliberative_edge", thresholds.deliberative_edge);
                thresholds.inert_max = cfg.value("inert_max", thresholds.inert_max);
                thresholds.delta_default = cfg.value("delta_default", thresholds.delta_default);
            }
            const auto style = classify_style(profile, thresholds);

            std::cout << "pathways (level " << an_level << ", theta " << an_theta << "): "
                      << paths.size() << '\n';
            for (size_t i = 0; i < std::min<size_t>(paths.size(), 10); ++i) {
                std::cout << "  ";
                for (size_t s = 0; s < paths[i].steps.size(); ++s) {
                    const auto& st = paths[i].steps[s];
                    if (s == 0) {
                        std::cout << profile.registry().label(st.from_sector);
                    }
                    std::cout << " -> " << profile.registry().label(st.to_sector);
                }
                std::cout << "  (gain " << paths[i].gain << ")\n";
            }
            std::cout << "loops: " << loops.loops.size() << '\n';
            for (const auto& loop : loops.loops) {
                std::cout << "  ";
                for (const auto& st : loop.cycle.steps) {
                    std::cout << profile.registry().label(st.from_sector) << "@"
                              << st.from_level << " -> ";
                }
                const auto& first = loop.cycle.steps.front();
                std::cout << profile.registry().label(first.from_sector) << "@"
                          << first.from_level << "  gain " << loop.cycle.gain << " ["
                          << to_string(loop.cls) << "]\n";
            }
            std::cout << "style:";
            for (const auto& l : style.labels) {
                std::cout << ' ' << l;
            }
            std::cout << '\n';

            if (!an_dot.empty()) {
                std::ofstream dot(an_dot);
                if (!dot) {
                    throw IoError("cannot write " + an_dot);
                }
                write_dot(build_influence_graph(profile, an_level, an_theta), dot);
            }
            json doc;
            json jpaths = json::array();
            for (const auto& p : paths) {
                json steps = json::array();
                for (const auto& st : p.steps) {
                    steps.push_back({{"from", profile.registry().label(st.from_sector)},
                                     {"to", profile.registry().label(st.to_sector)},
                                     {"weight", st.weight}});
                }
                jpaths.push_back({{"steps", std::move(steps)}, {"gain", p.gain}});
            }
            doc["pathways"] = std::move(jpaths);
            json jloops = json::array();
            for (const auto& loop : loops.loops) {
                json steps = json::array();
                for (const auto& st : loop.cycle.steps) {
                    steps.push_back({{"from", profile.registry().label(st.from_sector)},
                                     {"from_level", st.from_level},
                                     {"to", profile.registry().label(st.to_sector)},
                                     {"to_level", st.to_level},
                                     {"weight", st.weight},
                                     {"kind", st.kind == PathStep::Kind::Intra ? "intra"
                                              : st.kind == PathStep::Kind::Abstraction
                                                  ? "abstraction"
                                                  : "elaboration"}});
                }
                jloops.push_back({{"steps", std::move(steps)},
                                  {"gain", loop.cycle.gain},
                                  {"class", to_string(loop.cls)}});
            }
            doc["loops"] = std::move(jloops);
            doc["style"] = style_json(style);
            write_out(out_path, doc);
            return kExitOk;
        }

        if (*perturb) {
            const auto profile = load_profile(pert_profile);
            std::vector<ProfileEdit> edits;
            for (const auto& text : pert_edits) {
                // src->tgt@level=value
                const auto arrow = text.find("->");
                const auto at = text.find('@', arrow == std::string::npos ? 0 : arrow);
                const auto eq = text.find('=', at == std::string::npos ? 0 : at);
                if (arrow == std::string::npos || at == std::string::npos ||
                    eq == std::string::npos) {
                    throw ValidationError("bad edit \"" + text +
                                          "\", expected src->tgt@level=value");
                }
                ProfileEdit e;
                e.source = text.substr(0, arrow);
                e.target = text.substr(arrow + 2, at - arrow - 2);
                e.level = std::stoi(text.substr(at + 1, eq - at - 1));
                e.value = std::stod(text.substr(eq + 1));
                edits.push_back(std::move(e));
            }
            const auto [edited, distance] = perturb_profile(profile, edits);
            std::cout << "applied " << edits.size() << " edit(s), Frobenius distance "
                      << distance << '\n';
            if (out_path) {
                json doc = profile_to_json(edited);
                doc["distance_from_original"] = distance;
                write_out(out_path, doc);
            }
            return kExitOk;
        }

        if (*demo_cmd) {
            if (demo_which != "paper-example") {
                throw ValidationError("unknown demo \"" + demo_which + "\"");
            }
            return cmd_demo(out_path);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}
