#pragma once

#include <string>
#include <vector>

#include "scl/analysis.hpp"
#include "scl/coupling.hpp"
#include "scl/propagation.hpp"

namespace scl::demo {

/// Bundled three-sector cybersecurity-agent example: a reactive concrete
/// profile, a deliberative tactical profile, and the entrywise rule that
/// links them.
SectorRegistry example_registry();
CouplingMatrix reactive_matrix();     // level 0
CouplingMatrix deliberative_matrix(); // level 1
PropagationOperator tactical_rule();
Eigen::MatrixXd expected_strategic(); // predicted level-2 matrix

struct Report {
    Eigen::MatrixXd predicted;
    /// Inputs match the bundled matrices and rule.
    bool fixtures_ok = false;
    bool values_ok = false;
    std::vector<std::string> mismatches;
    std::vector<ModeClassification> modes;
    bool modes_ok = false;
    StyleReport concrete_style;
    StyleReport tactical_style;
    bool styles_ok = false;

    bool ok() const { return fixtures_ok && values_ok && modes_ok && styles_ok; }
};

/// Propagate the tactical matrix one level, check the four rescaled
/// entries and the copied rest, classify the rule's modes and both
/// profiles' styles.
Report run(const CouplingMatrix& g0, const CouplingMatrix& g1, const PropagationOperator& rule);
Report run();

} // namespace scl::demo
