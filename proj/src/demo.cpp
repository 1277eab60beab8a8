#include "scl/demo.hpp"

#include <algorithm>
#include <cmath>

namespace scl::demo {

SectorRegistry example_registry() {
    return SectorRegistry({"perc", "plan", "refl"},
                          {{"perc", "perceptual"}, {"plan", "planning"}, {"refl", "reflective"}});
}

CouplingMatrix reactive_matrix() {
    Eigen::MatrixXd g(3, 3);
    g << 0.2, 0.9, 0.1, //
        0.1, 0.3, 0.1,  //
        0.0, 0.2, 0.4;
    return {0, g};
}

CouplingMatrix deliberative_matrix() {
    Eigen::MatrixXd g(3, 3);
    g << 0.2, 0.5, 0.8, //
        0.2, 0.4, 0.3,  //
        0.1, 0.7, 0.5;
    return {1, g};
}

PropagationOperator tactical_rule() {
    Eigen::MatrixXd f = Eigen::MatrixXd::Ones(3, 3);
    f(0, 1) = 0.5; // perc -> plan damped
    f(0, 2) = 1.1; // perc -> refl amplified
    f(2, 1) = 1.1; // refl -> plan amplified
    f(2, 2) = 1.2; // refl -> refl amplified
    return PropagationOperator::entrywise(f);
}

Eigen::MatrixXd expected_strategic() {
    Eigen::MatrixXd g(3, 3);
    g << 0.2, 0.25, 0.88, //
        0.2, 0.4, 0.3,    //
        0.1, 0.77, 0.60;
    return g;
}

Report run(const CouplingMatrix& g0, const CouplingMatrix& g1, const PropagationOperator& rule) {
    constexpr double kTol = 1e-12;
    Report report;

    auto check_fixture = [&](const Eigen::MatrixXd& got, const Eigen::MatrixXd& want,
                             const char* name) {
        if (got.rows() != want.rows() || got.cols() != want.cols() ||
            (got - want).cwiseAbs().maxCoeff() > kTol) {
            report.mismatches.push_back(std::string(name) + " fixture was tampered with");
            return false;
        }
        return true;
    };
    report.fixtures_ok = check_fixture(g0.entries, reactive_matrix().entries, "concrete");
    report.fixtures_ok =
        check_fixture(g1.entries, deliberative_matrix().entries, "tactical") &&
        report.fixtures_ok;
    report.fixtures_ok =
        check_fixture(rule.factors(), tactical_rule().factors(), "rule") && report.fixtures_ok;

    const CouplingMatrix predicted = apply_propagation(rule, g1);
    report.predicted = predicted.entries;

    const Eigen::MatrixXd expected = expected_strategic();
    report.values_ok = true;
    const SectorRegistry reg = example_registry();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (std::abs(predicted.entries(i, j) - expected(i, j)) > kTol) {
                report.values_ok = false;
                report.mismatches.push_back(reg.label(i) + "->" + reg.label(j) + ": got " +
                                            std::to_string(predicted.entries(i, j)) +
                                            ", expected " + std::to_string(expected(i, j)));
            }
        }
    }

    report.modes = eigenmodes(rule);
    int amplified = 0, damped = 0, fixed = 0;
    bool values_match = true;
    std::vector<double> amp_values;
    for (const auto& m : report.modes) {
        switch (m.cls) {
        case ModeClass::Amplified:
            ++amplified;
            amp_values.push_back(m.eigenvalue.real());
            break;
        case ModeClass::Damped:
            ++damped;
            values_match = values_match && std::abs(m.eigenvalue.real() - 0.5) < kTol;
            break;
        case ModeClass::Fixed:
            ++fixed;
            break;
        }
    }
    std::sort(amp_values.begin(), amp_values.end());
    values_match = values_match && amp_values.size() == 3 &&
                   std::abs(amp_values[0] - 1.1) < kTol && std::abs(amp_values[1] - 1.1) < kTol &&
                   std::abs(amp_values[2] - 1.2) < kTol;
    report.modes_ok = amplified == 3 && damped == 1 && fixed == 5 && values_match;

    const CouplingProfile concrete = build_profile(reg, {{0, g0.entries}}, 2);
    const CouplingProfile tactical = build_profile(reg, {{1, g1.entries}}, 2);
    report.concrete_style = classify_style(concrete);
    report.tactical_style = classify_style(tactical);
    auto has = [](const StyleReport& r, const char* label) {
        return std::find(r.labels.begin(), r.labels.end(), label) != r.labels.end();
    };
    report.styles_ok = has(report.concrete_style, "reactive") &&
                       !has(report.concrete_style, "deliberative") &&
                       has(report.tactical_style, "deliberative") &&
                       !has(report.tactical_style, "reactive");
    return report;
}

Report run() { return run(reactive_matrix(), deliberative_matrix(), tactical_rule()); }

} // namespace scl::demo
