#pragma once

#include <Eigen/Dense>
#include <vector>

#include "scl/coupling.hpp"
#include "scl/propagation.hpp"

namespace scl {

/// Rate of change of each coupling with the (continuous) abstraction
/// level. Linear fields derive from a propagation operator as M - I;
/// tabulated fields hold one polynomial per entry, evaluated on that
/// entry alone, with coefficients stored in ascending degree.
class BetaField {
  public:
    enum class Kind { Linear, Tabulated };

    static BetaField linear(PropagationOperator op);
    /// polys[i][j] are the coefficients for entry (i, j); an empty list
    /// means that entry does not flow.
    static BetaField tabulated(std::vector<std::vector<std::vector<double>>> polys);

    Kind kind() const { return kind_; }
    const PropagationOperator& op() const { return op_; }
    const std::vector<std::vector<std::vector<double>>>& polys() const { return polys_; }

    /// Evaluate the field entrywise at g.
    Eigen::MatrixXd evaluate(const Eigen::MatrixXd& g) const;

  private:
    explicit BetaField(PropagationOperator op);
    explicit BetaField(std::vector<std::vector<std::vector<double>>> polys);

    Kind kind_;
    PropagationOperator op_;
    std::vector<std::vector<std::vector<double>>> polys_;
};

/// Sampled flow of a profile over a continuous level range.
struct FlowTrajectory {
    std::vector<double> k;
    std::vector<Eigen::MatrixXd> states;
};

/// Classical fourth-order Runge-Kutta on dG/dk = beta(G). The trajectory
/// contains both endpoints; a shortened final step lands exactly on k1.
/// Throws NonFiniteState when an entry leaves the finite range.
FlowTrajectory integrate_beta(const BetaField& beta, const CouplingMatrix& g0, double k0,
                              double k1, double step);

struct FixedPointResult {
    CouplingMatrix profile;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Damped-Newton steps that fell back to plain fixed-point iteration
    /// because the finite-difference Jacobian was singular.
    int singular_fallbacks = 0;
};

/// Damped Newton on beta(G) = 0 with a finite-difference Jacobian.
/// Never throws for non-convergence: the result carries converged=false.
FixedPointResult find_fixed_point(const BetaField& beta, const CouplingMatrix& guess,
                                  double tol = 1e-10, int max_iter = 100);

enum class Relevance { Relevant, Irrelevant, Marginal };

/// Fate of one coupling under the flow: growing in magnitude (relevant),
/// shrinking (irrelevant) or neither (marginal). Zero entries are always
/// marginal.
Relevance classify_relevance(const BetaField& beta, const CouplingMatrix& at, int source,
                             int target, double tol = 1e-9);

std::string to_string(Relevance r);

} // namespace scl
