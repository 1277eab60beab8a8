#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scl/coupling.hpp"

namespace scl {

/// Linear map taking the level-k profile to the effective level-(k+1) one.
///
/// Entrywise operators scale each coupling by its own factor; dense
/// operators act on the row-major vectorized matrix. A dense matrix may
/// have any square size m, but applying it requires m == n^2.
class PropagationOperator {
  public:
    enum class Kind { Entrywise, Dense };

    static PropagationOperator entrywise(Eigen::MatrixXd factors);
    static PropagationOperator dense(Eigen::MatrixXd matrix);

    /// Dense embedding of an entrywise operator (diagonal matrix).
    static PropagationOperator dense_from_entrywise(const PropagationOperator& op);

    static PropagationOperator identity(int sector_count);

    Kind kind() const { return kind_; }
    /// Entrywise factor table; only valid for Kind::Entrywise.
    const Eigen::MatrixXd& factors() const { return payload_; }
    /// Dense matrix; only valid for Kind::Dense.
    const Eigen::MatrixXd& matrix() const { return payload_; }

    /// Dimension of the vectorized profiles this operator acts upon.
    int vec_dim() const;

  private:
    PropagationOperator(Kind kind, Eigen::MatrixXd payload)
        : kind_(kind), payload_(std::move(payload)) {}

    Kind kind_;
    Eigen::MatrixXd payload_;
};

enum class ModeClass { Amplified, Damped, Fixed };

/// One eigenmode of a propagation operator. The eigenvector has unit
/// 2-norm; oscillatory marks a nonzero imaginary part.
struct ModeClassification {
    std::complex<double> eigenvalue;
    Eigen::VectorXcd eigenvector;
    ModeClass cls = ModeClass::Fixed;
    bool oscillatory = false;
};

/// Apply one propagation step; the result sits one level higher.
CouplingMatrix apply_propagation(const PropagationOperator& op, const CouplingMatrix& g);

/// Apply a sequence of operators left to right. Empty list returns the
/// input unchanged.
CouplingMatrix compose_and_apply(std::span<const PropagationOperator> ops,
                                 const CouplingMatrix& g);

/// All modes sorted by |lambda| descending. `tol` is the half-width of
/// the band treated as |lambda| == 1.
std::vector<ModeClassification> eigenmodes(const PropagationOperator& op, double tol = 1e-9);

enum class ConvergenceVerdict { ConvergesToZero, Stalls, Diverges };

struct ConvergenceReport {
    ConvergenceVerdict verdict = ConvergenceVerdict::Stalls;
    /// max|entry| at levels 0, 1, ... up to the level where iteration stopped.
    std::vector<double> max_abs_trace;
    /// Level at which the verdict was decided.
    int level = 0;
    /// Final matrix when the sequence stalls (the putative limit profile).
    std::optional<CouplingMatrix> limit;
    /// Unit-modulus modes with nonzero overlap against the start profile.
    int unit_modes_excited = 0;
    std::string note;
};

/// Iterate g under op for up to max_levels steps and classify the tail
/// behaviour. Crossing g_max in magnitude means divergence; a bounded
/// sequence that never falls below eps stalls.
ConvergenceReport check_convergence(const PropagationOperator& op, const CouplingMatrix& g0,
                                    int max_levels, double eps, double g_max = kDefaultGmax);

std::string to_string(ModeClass c);
std::string to_string(ConvergenceVerdict v);

} // namespace scl
